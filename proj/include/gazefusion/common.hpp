#pragma once

#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace gf {

// All errors surface as gf::Error with a human-readable message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

std::string strf(const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 1, 2)))
#endif
    ;

#define GF_CHECK(cond, ...)                        \
  do {                                             \
    if (!(cond)) throw ::gf::Error(::gf::strf(__VA_ARGS__)); \
  } while (0)

// FNV-1a, used for stream derivation and input digests.
uint64_t fnv1a(const void* data, size_t n, uint64_t seed = 1469598103934665603ull);
uint64_t fnv1a_str(const std::string& s, uint64_t seed = 1469598103934665603ull);

// splitmix64; used to turn (seed, tag) pairs into generator seeds.
uint64_t splitmix64(uint64_t x);

// Deterministic random stream. Distributions are implemented here rather
// than taken from <random> so that the generated sequences do not depend on
// the standard library build.
class Rng {
 public:
  explicit Rng(uint64_t seed);
  // Derives an independent stream from (seed, tag). Same inputs, same stream.
  Rng(uint64_t seed, const std::string& tag);

  uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  int uniform_int(int n);                // {0, ..., n-1}
  double normal();                       // standard normal, Box-Muller
  double normal(double mean, double stddev);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string state_string() const;
  void restore_state(const std::string& s);

 private:
  // xoshiro256** core
  uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline bool is_finite(double x) { return std::isfinite(x); }

}  // namespace gf
