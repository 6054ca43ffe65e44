#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gazefusion/tensor.hpp"

namespace gf {

// Reverse-mode autodiff over Tensor. A fresh graph is built per forward pass;
// parameters are long-lived leaf nodes whose gradients accumulate until the
// optimizer clears them.
struct Node;
using Value = std::shared_ptr<Node>;

struct Node {
  Tensor val;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<Value> parents;
  std::function<void(Node&)> backward_fn;

  void accumulate(const Tensor& g);
  void ensure_grad();
};

Value make_constant(Tensor t);
Value make_param(Tensor t);

// Runs reverse-mode accumulation from a scalar root (seeds d(root)/d(root)=1).
void backward(const Value& root);

Value conv2d(const Value& x, const Value& w, const Value& b, int stride, int pad,
             const Value& patch_scale = nullptr);
// w layout [ic, oc*k*k]; kernel passed explicitly since oc*k*k is ambiguous.
Value conv_transpose2d(const Value& x, const Value& w, const Value& b, int kernel,
                       int stride, int pad);
Value maxpool2d(const Value& x, int kernel, int stride, int pad);
Value linear(const Value& x, const Value& w, const Value& b);
Value relu(const Value& x);
Value leaky_relu(const Value& x, double slope = 0.01);
Value sigmoid(const Value& x);
Value softmax(const Value& x);
Value global_avg_pool(const Value& x);
Value reshape(const Value& x, std::vector<int> shape);
Value concat_channels(const std::vector<Value>& xs);
Value add(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
// out[c,i,j] = e[c,i,j] * attn[i,j]
Value mul_spatial(const Value& e, const Value& attn);
Value scale(const Value& x, double c);
Value add_const(const Value& x, double c);
Value expv(const Value& x);
// Identity forward; multiplies the incoming gradient by -lambda on the way back.
Value grad_reverse(const Value& x, double lambda);
Value mse_loss(const Value& pred, const Tensor& target);
Value bce_with_logit(const Value& logit, double label);

}  // namespace gf
