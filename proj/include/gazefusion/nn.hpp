#pragma once

#include "gazefusion/autograd.hpp"
#include "gazefusion/common.hpp"

namespace gf {

struct ParamRef {
  std::string name;
  Value node;
};
using ParamList = std::vector<ParamRef>;

struct Conv2dLayer {
  Conv2dSpec spec;
  Value w;  // [oc, ic*k*k]
  Value b;  // [oc]

  Conv2dLayer() = default;
  Conv2dLayer(int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng,
              double weight_scale = 1.0);
  Value forward(const Value& x, const Value& patch_scale = nullptr) const {
    return conv2d(x, w, b, spec.stride, spec.pad, patch_scale);
  }
  void collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".w", w});
    out.push_back({prefix + ".b", b});
  }
};

struct ConvT2dLayer {
  ConvT2dSpec spec;
  Value w;  // [ic, oc*k*k]
  Value b;  // [oc]

  ConvT2dLayer() = default;
  ConvT2dLayer(int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng);
  Value forward(const Value& x) const {
    return conv_transpose2d(x, w, b, spec.kernel, spec.stride, spec.pad);
  }
  void collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".w", w});
    out.push_back({prefix + ".b", b});
  }
};

struct LinearLayer {
  Value w;  // [out, in]
  Value b;  // [out]

  LinearLayer() = default;
  LinearLayer(int in_f, int out_f, Rng& rng, double weight_scale = 1.0);
  Value forward(const Value& x) const { return linear(x, w, b); }
  void collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".w", w});
    out.push_back({prefix + ".b", b});
  }
};

// Adam-style and SGD-with-momentum updates over a fixed parameter list.
enum class OptimizerKind { adam_like, sgd_momentum };

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, ParamList params);

  void step();
  void zero_grad();
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  const ParamList& params() const { return params_; }
  OptimizerKind kind() const { return kind_; }

  // state accessors for checkpointing
  int64_t step_count() const { return t_; }
  const std::vector<Tensor>& moment1() const { return m_; }
  const std::vector<Tensor>& moment2() const { return v_; }
  void restore_state(int64_t t, std::vector<Tensor> m, std::vector<Tensor> v);

 private:
  OptimizerKind kind_;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  double momentum_ = 0.9;
  ParamList params_;
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
};

}  // namespace gf
