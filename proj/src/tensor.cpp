#include "gazefusion/tensor.hpp"

#include <algorithm>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gf {

static int g_threads = 1;

void set_num_threads(int n) { g_threads = std::max(1, n); }
int num_threads() { return g_threads; }

#ifdef _OPENMP
#define GF_PARALLEL_FOR _Pragma("omp parallel for schedule(static) num_threads(g_threads)")
#else
#define GF_PARALLEL_FOR
#endif

void gemm_nn(int M, int N, int K, const double* A, const double* B, double* C) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(g_threads) if (g_threads > 1 && M > 1)
#endif
  for (int i = 0; i < M; ++i) {
    double* c = C + static_cast<size_t>(i) * N;
    const double* a = A + static_cast<size_t>(i) * K;
    for (int k = 0; k < K; ++k) {
      const double aik = a[k];
      const double* b = B + static_cast<size_t>(k) * N;
      for (int j = 0; j < N; ++j) c[j] += aik * b[j];
    }
  }
}

void gemm_nt(int M, int N, int K, const double* A, const double* B, double* C) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(g_threads) if (g_threads > 1 && M > 1)
#endif
  for (int i = 0; i < M; ++i) {
    const double* a = A + static_cast<size_t>(i) * K;
    double* c = C + static_cast<size_t>(i) * N;
    for (int j = 0; j < N; ++j) {
      const double* b = B + static_cast<size_t>(j) * K;
      double acc = 0.0;
      for (int k = 0; k < K; ++k) acc += a[k] * b[k];
      c[j] += acc;
    }
  }
}

void gemm_tn(int M, int N, int K, const double* A, const double* B, double* C) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(g_threads) if (g_threads > 1 && M > 1)
#endif
  for (int i = 0; i < M; ++i) {
    double* c = C + static_cast<size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      const double aki = A[static_cast<size_t>(k) * M + i];
      const double* b = B + static_cast<size_t>(k) * N;
      for (int j = 0; j < N; ++j) c[j] += aki * b[j];
    }
  }
}

// im2col: col[ic*k*k][oh*ow]; out-of-bounds taps contribute zero.
static void im2col(const Conv2dSpec& cs, const Tensor& x, int h, int w, int oh, int ow,
                   std::vector<double>& col) {
  const int k = cs.kernel;
  col.assign(static_cast<size_t>(cs.in_ch) * k * k * oh * ow, 0.0);
  const int N = oh * ow;
  for (int ic = 0; ic < cs.in_ch; ++ic) {
    const double* xp = x.v.data() + static_cast<size_t>(ic) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* cp = col.data() + (static_cast<size_t>(ic) * k * k + ky * k + kx) * N;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * cs.stride + ky - cs.pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * cs.stride + kx - cs.pad;
            if (ix < 0 || ix >= w) continue;
            cp[oy * ow + ox] = xp[iy * w + ix];
          }
        }
      }
    }
  }
}

static void col2im(const Conv2dSpec& cs, const std::vector<double>& col, int h, int w,
                   int oh, int ow, Tensor& x) {
  const int k = cs.kernel;
  const int N = oh * ow;
  for (int ic = 0; ic < cs.in_ch; ++ic) {
    double* xp = x.v.data() + static_cast<size_t>(ic) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* cp = col.data() + (static_cast<size_t>(ic) * k * k + ky * k + kx) * N;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * cs.stride + ky - cs.pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * cs.stride + kx - cs.pad;
            if (ix < 0 || ix >= w) continue;
            xp[iy * w + ix] += cp[oy * ow + ox];
          }
        }
      }
    }
  }
}

static void apply_scale(std::vector<double>& col, const Tensor& scale) {
  GF_CHECK(scale.numel() == static_cast<int64_t>(col.size()),
           "conv scale buffer shape mismatch");
  for (size_t i = 0; i < col.size(); ++i) col[i] *= scale.v[i];
}

void conv2d_forward(const Conv2dSpec& cs, const Tensor& x, const Tensor& w,
                    const Tensor* b, Tensor& out, const Tensor* scale) {
  GF_CHECK(x.rank() == 3 && x.dim(0) == cs.in_ch, "conv2d: bad input shape");
  const int h = x.dim(1), wd = x.dim(2);
  const int oh = cs.out_size(h), ow = cs.out_size(wd);
  GF_CHECK(oh > 0 && ow > 0, "conv2d: output collapsed to zero");
  out = Tensor({cs.out_ch, oh, ow});

  std::vector<double> col;
  im2col(cs, x, h, wd, oh, ow, col);
  if (scale) apply_scale(col, *scale);

  const int K = cs.in_ch * cs.kernel * cs.kernel;
  const int N = oh * ow;
  gemm_nn(cs.out_ch, N, K, w.v.data(), col.data(), out.v.data());
  if (b) {
    for (int oc = 0; oc < cs.out_ch; ++oc) {
      double* op = out.v.data() + static_cast<size_t>(oc) * N;
      const double bias = b->v[static_cast<size_t>(oc)];
      for (int i = 0; i < N; ++i) op[i] += bias;
    }
  }
}

void conv2d_backward(const Conv2dSpec& cs, const Tensor& x, const Tensor& w,
                     const Tensor& gout, Tensor* gx, Tensor* gw, Tensor* gb,
                     const Tensor* scale) {
  const int h = x.dim(1), wd = x.dim(2);
  const int oh = gout.dim(1), ow = gout.dim(2);
  const int K = cs.in_ch * cs.kernel * cs.kernel;
  const int N = oh * ow;

  std::vector<double> col;
  if (gw) {
    im2col(cs, x, h, wd, oh, ow, col);
    if (scale) apply_scale(col, *scale);
    // gw[oc][K] += gout[oc][N] * col[K][N]^T
    gemm_nt(cs.out_ch, K, N, gout.v.data(), col.data(), gw->v.data());
  }
  if (gb) {
    for (int oc = 0; oc < cs.out_ch; ++oc) {
      const double* gp = gout.v.data() + static_cast<size_t>(oc) * N;
      double acc = 0.0;
      for (int i = 0; i < N; ++i) acc += gp[i];
      gb->v[static_cast<size_t>(oc)] += acc;
    }
  }
  if (gx) {
    // gcol[K][N] = w[oc][K]^T * gout[oc][N]
    std::vector<double> gcol(static_cast<size_t>(K) * N, 0.0);
    gemm_tn(K, N, cs.out_ch, w.v.data(), gout.v.data(), gcol.data());
    if (scale) {
      for (size_t i = 0; i < gcol.size(); ++i) gcol[i] *= scale->v[i];
    }
    Tensor acc({cs.in_ch, h, wd});
    col2im(cs, gcol, h, wd, oh, ow, acc);
    for (int64_t i = 0; i < acc.numel(); ++i) gx->v[static_cast<size_t>(i)] += acc.v[static_cast<size_t>(i)];
  }
}

// Transposed conv as the adjoint of a strided conv: forward scatters, so we
// compute gcol = w^T x and col2im it with an equivalent Conv2dSpec.
void convt2d_forward(const ConvT2dSpec& cs, const Tensor& x, const Tensor& w,
                     const Tensor* b, Tensor& out) {
  GF_CHECK(x.rank() == 3 && x.dim(0) == cs.in_ch, "convt2d: bad input shape");
  const int h = x.dim(1), wd = x.dim(2);
  const int oh = cs.out_size(h), ow = cs.out_size(wd);
  GF_CHECK(oh > 0 && ow > 0, "convt2d: output collapsed to zero");
  out = Tensor({cs.out_ch, oh, ow});

  const int K = cs.out_ch * cs.kernel * cs.kernel;
  const int N = h * wd;
  // gcol[K][N] = w[ic][K]^T * x[ic][N]
  std::vector<double> col(static_cast<size_t>(K) * N, 0.0);
  gemm_tn(K, N, cs.in_ch, w.v.data(), x.v.data(), col.data());

  Conv2dSpec rev{cs.out_ch, cs.in_ch, cs.kernel, cs.stride, cs.pad};
  col2im(rev, col, oh, ow, h, wd, out);
  if (b) {
    for (int oc = 0; oc < cs.out_ch; ++oc) {
      double* op = out.v.data() + static_cast<size_t>(oc) * oh * ow;
      const double bias = b->v[static_cast<size_t>(oc)];
      for (int i = 0; i < oh * ow; ++i) op[i] += bias;
    }
  }
}

void convt2d_backward(const ConvT2dSpec& cs, const Tensor& x, const Tensor& w,
                      const Tensor& gout, Tensor* gx, Tensor* gw, Tensor* gb) {
  const int h = x.dim(1), wd = x.dim(2);
  const int oh = gout.dim(1), ow = gout.dim(2);
  const int K = cs.out_ch * cs.kernel * cs.kernel;
  const int N = h * wd;

  Conv2dSpec rev{cs.out_ch, cs.in_ch, cs.kernel, cs.stride, cs.pad};
  std::vector<double> gcol;
  if (gx || gw) {
    gcol.resize(static_cast<size_t>(K) * N);
    std::fill(gcol.begin(), gcol.end(), 0.0);
    im2col(rev, gout, oh, ow, h, wd, gcol);
  }
  if (gx) {
    // gx[ic][N] += w[ic][K] * gcol[K][N]
    gemm_nn(cs.in_ch, N, K, w.v.data(), gcol.data(), gx->v.data());
  }
  if (gw) {
    // gw[ic][K] += x[ic][N] * gcol[K][N]^T
    gemm_nt(cs.in_ch, K, N, x.v.data(), gcol.data(), gw->v.data());
  }
  if (gb) {
    for (int oc = 0; oc < cs.out_ch; ++oc) {
      const double* gp = gout.v.data() + static_cast<size_t>(oc) * oh * ow;
      double acc = 0.0;
      for (int i = 0; i < oh * ow; ++i) acc += gp[i];
      gb->v[static_cast<size_t>(oc)] += acc;
    }
  }
}

void maxpool2d_forward(int kernel, int stride, int pad, const Tensor& x, Tensor& out,
                       std::vector<int>& argmax) {
  const int C = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = (h + 2 * pad - kernel) / stride + 1;
  const int ow = (w + 2 * pad - kernel) / stride + 1;
  out = Tensor({C, oh, ow});
  argmax.assign(static_cast<size_t>(C) * oh * ow, -1);
  for (int c = 0; c < C; ++c) {
    const double* xp = x.v.data() + static_cast<size_t>(c) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double best = -1e300;
        int best_idx = -1;
        for (int ky = 0; ky < kernel; ++ky) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < kernel; ++kx) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= w) continue;
            if (xp[iy * w + ix] > best) {
              best = xp[iy * w + ix];
              best_idx = iy * w + ix;
            }
          }
        }
        const size_t oi = (static_cast<size_t>(c) * oh + oy) * ow + ox;
        out.v[oi] = best;
        argmax[oi] = best_idx;
      }
    }
  }
}

void maxpool2d_backward(const Tensor& gout, const std::vector<int>& argmax, Tensor& gx) {
  const int C = gout.dim(0);
  const int64_t plane = gx.numel() / C;
  const int64_t oplane = gout.numel() / C;
  for (int c = 0; c < C; ++c) {
    for (int64_t i = 0; i < oplane; ++i) {
      const size_t oi = static_cast<size_t>(c) * oplane + i;
      const int src = argmax[oi];
      if (src >= 0) gx.v[static_cast<size_t>(c) * plane + src] += gout.v[oi];
    }
  }
}

}  // namespace gf
