#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "gazefusion/common.hpp"

namespace gf {

// Dense row-major tensor of doubles. Rank is the shape length; shape {} is
// not used, scalars are shape {1}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(numel_of(shape), 0.0) {}
  Tensor(std::vector<int> s, double fill)
      : shape(std::move(s)), v(numel_of(shape), fill) {}

  static Tensor scalar(double x) {
    Tensor t({1});
    t.v[0] = x;
    return t;
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      GF_CHECK(d > 0, "tensor dims must be positive, got %d", d);
      n *= d;
    }
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(v.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  double& at(int i) { return v[static_cast<size_t>(i)]; }
  double at(int i) const { return v[static_cast<size_t>(i)]; }
  // [c][y][x] for rank-3, [y][x] for rank-2
  double& at(int a, int b) { return v[static_cast<size_t>(a) * shape[1] + b]; }
  double at(int a, int b) const { return v[static_cast<size_t>(a) * shape[1] + b]; }
  double& at(int a, int b, int c) {
    return v[(static_cast<size_t>(a) * shape[1] + b) * shape[2] + c];
  }
  double at(int a, int b, int c) const {
    return v[(static_cast<size_t>(a) * shape[1] + b) * shape[2] + c];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
  double max_value() const {
    double m = v.empty() ? 0.0 : v[0];
    for (double x : v)
      if (x > m) m = x;
    return m;
  }
  int64_t argmax_rowmajor() const {
    int64_t best = 0;
    for (int64_t i = 1; i < numel(); ++i)
      if (v[static_cast<size_t>(i)] > v[static_cast<size_t>(best)]) best = i;
    return best;
  }
};

// C[M x N] += A[M x K] * B[K x N], all row-major.
void gemm_nn(int M, int N, int K, const double* A, const double* B, double* C);
// C[M x N] += A[M x K] * B[N x K]^T
void gemm_nt(int M, int N, int K, const double* A, const double* B, double* C);
// C[M x N] += A[K x M]^T * B[K x N]
void gemm_tn(int M, int N, int K, const double* A, const double* B, double* C);

struct Conv2dSpec {
  int in_ch = 0, out_ch = 0;
  int kernel = 3, stride = 1, pad = 0;
  int out_size(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
};

struct ConvT2dSpec {
  int in_ch = 0, out_ch = 0;
  int kernel = 3, stride = 1, pad = 0;
  int out_size(int in) const { return (in - 1) * stride + kernel - 2 * pad; }
};

// x: [ic, h, w], w: [oc, ic*k*k], b: [oc] (may be null), out: [oc, oh, ow].
// When scale != nullptr it holds per-patch-element factors with the same
// layout as the im2col buffer ([ic*k*k, oh*ow]); used by the depth-aware
// convolution variant.
void conv2d_forward(const Conv2dSpec& cs, const Tensor& x, const Tensor& w,
                    const Tensor* b, Tensor& out, const Tensor* scale = nullptr);
void conv2d_backward(const Conv2dSpec& cs, const Tensor& x, const Tensor& w,
                     const Tensor& gout, Tensor* gx, Tensor* gw, Tensor* gb,
                     const Tensor* scale = nullptr);

// w: [ic, oc*k*k] laid out so the transposed conv is a plain col2im of w^T x.
void convt2d_forward(const ConvT2dSpec& cs, const Tensor& x, const Tensor& w,
                     const Tensor* b, Tensor& out);
void convt2d_backward(const ConvT2dSpec& cs, const Tensor& x, const Tensor& w,
                      const Tensor& gout, Tensor* gx, Tensor* gw, Tensor* gb);

void maxpool2d_forward(int kernel, int stride, int pad, const Tensor& x, Tensor& out,
                       std::vector<int>& argmax);
void maxpool2d_backward(const Tensor& gout, const std::vector<int>& argmax, Tensor& gx);

// Number of worker threads used by the GEMM-backed kernels. Results are
// bit-identical for any thread count: every output element has exactly one
// writer and a fixed accumulation order.
void set_num_threads(int n);
int num_threads();

}  // namespace gf
