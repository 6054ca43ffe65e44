#include "gazefusion/nn.hpp"

#include <cmath>

namespace gf {

static Tensor he_init(std::vector<int> shape, int fan_in, Rng& rng, double scale) {
  Tensor t(std::move(shape));
  const double stddev = scale * std::sqrt(2.0 / std::max(1, fan_in));
  for (auto& v : t.v) v = rng.normal(0.0, stddev);
  return t;
}

Conv2dLayer::Conv2dLayer(int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng,
                         double weight_scale)
    : spec{in_ch, out_ch, kernel, stride, pad} {
  const int fan_in = in_ch * kernel * kernel;
  w = make_param(he_init({out_ch, fan_in}, fan_in, rng, weight_scale));
  b = make_param(Tensor({out_ch}));
}

ConvT2dLayer::ConvT2dLayer(int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng)
    : spec{in_ch, out_ch, kernel, stride, pad} {
  // fan-in per output position is ic * (k/stride)^2 taps on average
  const int taps = std::max(1, (kernel / std::max(1, stride)) * (kernel / std::max(1, stride)));
  w = make_param(he_init({in_ch, out_ch * kernel * kernel}, in_ch * taps, rng, 1.0));
  b = make_param(Tensor({out_ch}));
}

LinearLayer::LinearLayer(int in_f, int out_f, Rng& rng, double weight_scale) {
  w = make_param(he_init({out_f, in_f}, in_f, rng, weight_scale));
  b = make_param(Tensor({out_f}));
}

Optimizer::Optimizer(OptimizerKind kind, double lr, ParamList params)
    : kind_(kind), lr_(lr), params_(std::move(params)) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.node->val.shape);
    v_.emplace_back(p.node->val.shape);
  }
}

void Optimizer::step() {
  ++t_;
  for (size_t i = 0; i < params_.size(); ++i) {
    Node& n = *params_[i].node;
    if (n.grad.v.empty()) continue;  // parameter untouched this step
    if (kind_ == OptimizerKind::adam_like) {
      const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
      for (int64_t j = 0; j < n.val.numel(); ++j) {
        const size_t jj = static_cast<size_t>(j);
        const double g = n.grad.v[jj];
        m_[i].v[jj] = beta1_ * m_[i].v[jj] + (1.0 - beta1_) * g;
        v_[i].v[jj] = beta2_ * v_[i].v[jj] + (1.0 - beta2_) * g * g;
        const double mh = m_[i].v[jj] / bc1;
        const double vh = v_[i].v[jj] / bc2;
        n.val.v[jj] -= lr_ * mh / (std::sqrt(vh) + eps_);
      }
    } else {
      for (int64_t j = 0; j < n.val.numel(); ++j) {
        const size_t jj = static_cast<size_t>(j);
        m_[i].v[jj] = momentum_ * m_[i].v[jj] + n.grad.v[jj];
        n.val.v[jj] -= lr_ * m_[i].v[jj];
      }
    }
  }
}

void Optimizer::zero_grad() {
  for (auto& p : params_) {
    if (!p.node->grad.v.empty())
      std::fill(p.node->grad.v.begin(), p.node->grad.v.end(), 0.0);
  }
}

void Optimizer::restore_state(int64_t t, std::vector<Tensor> m, std::vector<Tensor> v) {
  GF_CHECK(m.size() == params_.size() && v.size() == params_.size(),
           "optimizer state size mismatch");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace gf
