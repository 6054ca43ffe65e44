#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "gazefusion/autograd.hpp"
#include "gazefusion/common.hpp"

namespace gftest {

inline gf::Tensor random_tensor(std::vector<int> shape, gf::Rng& rng, double scale = 1.0) {
  gf::Tensor t(std::move(shape));
  for (auto& v : t.v) v = scale * rng.normal();
  return t;
}

inline bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

inline double max_abs_diff(const gf::Tensor& a, const gf::Tensor& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::fabs(a.v[static_cast<size_t>(i)] - b.v[static_cast<size_t>(i)]));
  return m;
}

// Central-difference gradient check. `fwd` rebuilds the graph from the given
// leaves and returns the scalar loss node. Returns the worst relative error
// over `per_leaf` sampled entries of each leaf.
inline double finite_diff_rel_err(const std::function<gf::Value()>& fwd,
                                  const std::vector<gf::Value>& leaves, int per_leaf,
                                  gf::Rng& pick, double eps = 1e-6) {
  gf::Value loss = fwd();
  for (const auto& l : leaves)
    if (!l->grad.v.empty()) std::fill(l->grad.v.begin(), l->grad.v.end(), 0.0);
  gf::backward(loss);

  double worst = 0.0;
  for (const auto& leaf : leaves) {
    for (int s = 0; s < per_leaf; ++s) {
      const int64_t idx = pick.uniform_int(static_cast<int>(leaf->val.numel()));
      const double analytic =
          leaf->grad.v.empty() ? 0.0 : leaf->grad.v[static_cast<size_t>(idx)];
      const double orig = leaf->val.v[static_cast<size_t>(idx)];
      leaf->val.v[static_cast<size_t>(idx)] = orig + eps;
      const double up = fwd()->val.v[0];
      leaf->val.v[static_cast<size_t>(idx)] = orig - eps;
      const double dn = fwd()->val.v[0];
      leaf->val.v[static_cast<size_t>(idx)] = orig;
      const double numeric = (up - dn) / (2.0 * eps);
      const double denom = std::max({1e-8, std::fabs(numeric), std::fabs(analytic)});
      worst = std::max(worst, std::fabs(numeric - analytic) / denom);
    }
  }
  return worst;
}

}  // namespace gftest
