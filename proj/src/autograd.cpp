#include "gazefusion/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace gf {

void Node::ensure_grad() {
  if (grad.v.empty()) grad = Tensor(val.shape);
}

void Node::accumulate(const Tensor& g) {
  ensure_grad();
  GF_CHECK(g.numel() == grad.numel(), "gradient shape mismatch");
  for (int64_t i = 0; i < g.numel(); ++i) grad.v[static_cast<size_t>(i)] += g.v[static_cast<size_t>(i)];
}

Value make_constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->val = std::move(t);
  n->requires_grad = false;
  return n;
}

Value make_param(Tensor t) {
  auto n = std::make_shared<Node>();
  n->val = std::move(t);
  n->requires_grad = true;
  return n;
}

static bool any_requires(const std::vector<Value>& parents) {
  for (const auto& p : parents)
    if (p && p->requires_grad) return true;
  return false;
}

static Value make_op(Tensor val, std::vector<Value> parents,
                     std::function<void(Node&)> bw) {
  auto n = std::make_shared<Node>();
  n->val = std::move(val);
  n->parents = std::move(parents);
  n->requires_grad = any_requires(n->parents);
  if (n->requires_grad) n->backward_fn = std::move(bw);
  return n;
}

void backward(const Value& root) {
  GF_CHECK(root->val.numel() == 1, "backward() root must be scalar");
  // topological order by iterative DFS
  std::vector<Node*> order;
  std::vector<std::pair<Node*, size_t>> stack;
  std::unordered_set<Node*> visited;
  stack.push_back({root.get(), 0});
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (p && p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad();
  root->grad.v[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.v.empty()) n->backward_fn(*n);
  }
}

Value conv2d(const Value& x, const Value& w, const Value& b, int stride, int pad,
             const Value& patch_scale) {
  const int k = static_cast<int>(std::lround(
      std::sqrt(static_cast<double>(w->val.dim(1)) / x->val.dim(0))));
  Conv2dSpec cs{x->val.dim(0), w->val.dim(0), k, stride, pad};
  GF_CHECK(cs.in_ch * k * k == w->val.dim(1), "conv2d: weight/input channel mismatch");
  Tensor out;
  const Tensor* sc = patch_scale ? &patch_scale->val : nullptr;
  conv2d_forward(cs, x->val, w->val, b ? &b->val : nullptr, out, sc);
  std::vector<Value> parents{x, w, b, patch_scale};
  return make_op(std::move(out), std::move(parents), [cs](Node& n) {
    const Value& x = n.parents[0];
    const Value& w = n.parents[1];
    const Value& b = n.parents[2];
    const Value& s = n.parents[3];
    Tensor* gx = nullptr;
    if (x->requires_grad) {
      x->ensure_grad();
      gx = &x->grad;
    }
    Tensor* gw = nullptr;
    if (w->requires_grad) {
      w->ensure_grad();
      gw = &w->grad;
    }
    Tensor* gb = nullptr;
    if (b && b->requires_grad) {
      b->ensure_grad();
      gb = &b->grad;
    }
    conv2d_backward(cs, x->val, w->val, n.grad, gx, gw, gb, s ? &s->val : nullptr);
  });
}

Value conv_transpose2d(const Value& x, const Value& w, const Value& b, int kernel,
                       int stride, int pad) {
  GF_CHECK(w->val.dim(0) == x->val.dim(0), "conv_transpose2d: weight/input channel mismatch");
  GF_CHECK(w->val.dim(1) % (kernel * kernel) == 0, "conv_transpose2d: bad weight layout");
  ConvT2dSpec cs{x->val.dim(0), w->val.dim(1) / (kernel * kernel), kernel, stride, pad};
  Tensor out;
  convt2d_forward(cs, x->val, w->val, b ? &b->val : nullptr, out);
  return make_op(std::move(out), {x, w, b}, [cs](Node& n) {
    const Value& x = n.parents[0];
    const Value& w = n.parents[1];
    const Value& b = n.parents[2];
    Tensor* gx = nullptr;
    if (x->requires_grad) {
      x->ensure_grad();
      gx = &x->grad;
    }
    Tensor* gw = nullptr;
    if (w->requires_grad) {
      w->ensure_grad();
      gw = &w->grad;
    }
    Tensor* gb = nullptr;
    if (b && b->requires_grad) {
      b->ensure_grad();
      gb = &b->grad;
    }
    convt2d_backward(cs, x->val, w->val, n.grad, gx, gw, gb);
  });
}

Value maxpool2d(const Value& x, int kernel, int stride, int pad) {
  Tensor out;
  auto argmax = std::make_shared<std::vector<int>>();
  maxpool2d_forward(kernel, stride, pad, x->val, out, *argmax);
  return make_op(std::move(out), {x}, [argmax](Node& n) {
    const Value& x = n.parents[0];
    if (!x->requires_grad) return;
    x->ensure_grad();
    maxpool2d_backward(n.grad, *argmax, x->grad);
  });
}

Value linear(const Value& x, const Value& w, const Value& b) {
  const int out_f = w->val.dim(0), in_f = w->val.dim(1);
  GF_CHECK(x->val.numel() == in_f, "linear: input size %lld != %d",
           static_cast<long long>(x->val.numel()), in_f);
  Tensor out({out_f});
  for (int o = 0; o < out_f; ++o) {
    double acc = b ? b->val.v[static_cast<size_t>(o)] : 0.0;
    const double* wp = w->val.v.data() + static_cast<size_t>(o) * in_f;
    for (int i = 0; i < in_f; ++i) acc += wp[i] * x->val.v[static_cast<size_t>(i)];
    out.v[static_cast<size_t>(o)] = acc;
  }
  return make_op(std::move(out), {x, w, b}, [out_f, in_f](Node& n) {
    const Value& x = n.parents[0];
    const Value& w = n.parents[1];
    const Value& b = n.parents[2];
    if (x->requires_grad) {
      x->ensure_grad();
      for (int i = 0; i < in_f; ++i) {
        double acc = 0.0;
        for (int o = 0; o < out_f; ++o)
          acc += w->val.v[static_cast<size_t>(o) * in_f + i] * n.grad.v[static_cast<size_t>(o)];
        x->grad.v[static_cast<size_t>(i)] += acc;
      }
    }
    if (w->requires_grad) {
      w->ensure_grad();
      for (int o = 0; o < out_f; ++o) {
        const double g = n.grad.v[static_cast<size_t>(o)];
        double* gw = w->grad.v.data() + static_cast<size_t>(o) * in_f;
        for (int i = 0; i < in_f; ++i) gw[i] += g * x->val.v[static_cast<size_t>(i)];
      }
    }
    if (b && b->requires_grad) {
      b->ensure_grad();
      for (int o = 0; o < out_f; ++o) b->grad.v[static_cast<size_t>(o)] += n.grad.v[static_cast<size_t>(o)];
    }
  });
}

Value relu(const Value& x) {
  Tensor out = x->val;
  for (auto& v : out.v) v = v > 0.0 ? v : 0.0;
  return make_op(std::move(out), {x}, [](Node& n) {
    const Value& x = n.parents[0];
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int64_t i = 0; i < n.grad.numel(); ++i) {
      const size_t ii = static_cast<size_t>(i);
      if (x->val.v[ii] > 0.0) x->grad.v[ii] += n.grad.v[ii];
    }
  });
}

Value leaky_relu(const Value& x, double slope) {
  Tensor out = x->val;
  for (auto& v : out.v) v = v > 0.0 ? v : slope * v;
  return make_op(std::move(out), {x}, [slope](Node& n) {
    const Value& x = n.parents[0];
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int64_t i = 0; i < n.grad.numel(); ++i) {
      const size_t ii = static_cast<size_t>(i);
      x->grad.v[ii] += (x->val.v[ii] > 0.0 ? 1.0 : slope) * n.grad.v[ii];
    }
  });
}

Value sigmoid(const Value& x) {
  Tensor out = x->val;
  for (auto& v : out.v) v = 1.0 / (1.0 + std::exp(-v));
  auto saved = std::make_shared<Tensor>(out);
  return make_op(std::move(out), {x}, [saved](Node& n) {
    const Value& x = n.parents[0];
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int64_t i = 0; i < n.grad.numel(); ++i) {
      const size_t ii = static_cast<size_t>(i);
      const double s = saved->v[ii];
      x->grad.v[ii] += n.grad.v[ii] * s * (1.0 - s);
    }
  });
}

Value softmax(const Value& x) {
  Tensor out = x->val;
  double mx = out.max_value();
  double sum = 0.0;
  for (auto& v : out.v) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : out.v) v /= sum;
  auto saved = std::make_shared<Tensor>(out);
  return make_op(std::move(out), {x}, [saved](Node& n) {
    const Value& x = n.parents[0];
    if (!x->requires_grad) return;
    x->ensure_grad();
    double dot = 0.0;
    for (int64_t i = 0; i < n.grad.numel(); ++i)
      dot += n.grad.v[static_cast<size_t>(i)] * saved->v[static_cast<size_t>(i)];
    for (int64_t i = 0; i < n.grad.numel(); ++i) {
      const size_t ii = static_cast<size_t>(i);
      x->grad.v[ii] += saved->v[ii] * (n.grad.v[ii] - dot);
    }
  });
}

Value global_avg_pool(const Value& x) {
  const int C = x->val.dim(0);
  const int64_t plane = x->val.numel() / C;
  Tensor out({C});
  for (int c = 0; c < C; ++c) {
    double acc = 0.0;
    const double* p = x->val.v.data() + static_cast<size_t>(c) * plane;
    for (int64_t i = 0; i < plane; ++i) acc += p[i];
    out.v[static_cast<size_t>(c)] = acc / static_cast<double>(plane);
  }
  return make_op(std::move(out), {x}, [C, plane](Node& n) {
    const Value& x = n.parents[0];
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int c = 0; c < C; ++c) {
      const double g = n.grad.v[static_cast<size_t>(c)] / static_cast<double>(plane);
      double* p = x->grad.v.data() + static_cast<size_t>(c) * plane;
      for (int64_t i = 0; i < plane; ++i) p[i] += g;
    }
  });
}

Value reshape(const Value& x, std::vector<int> shape) {
  Tensor out(shape);
  GF_CHECK(out.numel() == x->val.numel(), "reshape: element count mismatch");
  out.v = x->val.v;
  return make_op(std::move(out), {x}, [](Node& n) {
    const Value& x = n.parents[0];
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int64_t i = 0; i < n.grad.numel(); ++i)
      x->grad.v[static_cast<size_t>(i)] += n.grad.v[static_cast<size_t>(i)];
  });
}

Value concat_channels(const std::vector<Value>& xs) {
  GF_CHECK(!xs.empty(), "concat_channels: empty input");
  const int h = xs[0]->val.dim(1), w = xs[0]->val.dim(2);
  int C = 0;
  for (const auto& x : xs) {
    GF_CHECK(x->val.rank() == 3 && x->val.dim(1) == h && x->val.dim(2) == w,
             "concat_channels: spatial shape mismatch");
    C += x->val.dim(0);
  }
  Tensor out({C, h, w});
  size_t off = 0;
  for (const auto& x : xs) {
    std::copy(x->val.v.begin(), x->val.v.end(), out.v.begin() + static_cast<long>(off));
    off += x->val.v.size();
  }
  std::vector<Value> parents(xs.begin(), xs.end());
  return make_op(std::move(out), std::move(parents), [](Node& n) {
    size_t off = 0;
    for (auto& p : n.parents) {
      const size_t cnt = p->val.v.size();
      if (p->requires_grad) {
        p->ensure_grad();
        for (size_t i = 0; i < cnt; ++i) p->grad.v[i] += n.grad.v[off + i];
      }
      off += cnt;
    }
  });
}

Value add(const Value& a, const Value& b) {
  GF_CHECK(a->val.same_shape(b->val), "add: shape mismatch");
  Tensor out = a->val;
  for (int64_t i = 0; i < out.numel(); ++i) out.v[static_cast<size_t>(i)] += b->val.v[static_cast<size_t>(i)];
  return make_op(std::move(out), {a, b}, [](Node& n) {
    for (auto& p : n.parents) {
      if (!p->requires_grad) continue;
      p->accumulate(n.grad);
    }
  });
}

Value mul(const Value& a, const Value& b) {
  GF_CHECK(a->val.same_shape(b->val), "mul: shape mismatch");
  Tensor out = a->val;
  for (int64_t i = 0; i < out.numel(); ++i) out.v[static_cast<size_t>(i)] *= b->val.v[static_cast<size_t>(i)];
  return make_op(std::move(out), {a, b}, [](Node& n) {
    const Value& a = n.parents[0];
    const Value& b = n.parents[1];
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n.grad.numel(); ++i) {
        const size_t ii = static_cast<size_t>(i);
        a->grad.v[ii] += n.grad.v[ii] * b->val.v[ii];
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < n.grad.numel(); ++i) {
        const size_t ii = static_cast<size_t>(i);
        b->grad.v[ii] += n.grad.v[ii] * a->val.v[ii];
      }
    }
  });
}

Value mul_spatial(const Value& e, const Value& attn) {
  GF_CHECK(e->val.rank() == 3 && attn->val.rank() == 2, "mul_spatial: bad ranks");
  GF_CHECK(e->val.dim(1) == attn->val.dim(0) && e->val.dim(2) == attn->val.dim(1),
           "mul_spatial: spatial shape mismatch (%dx%d vs %dx%d)", e->val.dim(1),
           e->val.dim(2), attn->val.dim(0), attn->val.dim(1));
  const int C = e->val.dim(0);
  const int64_t plane = attn->val.numel();
  Tensor out = e->val;
  for (int c = 0; c < C; ++c) {
    double* p = out.v.data() + static_cast<size_t>(c) * plane;
    for (int64_t i = 0; i < plane; ++i) p[i] *= attn->val.v[static_cast<size_t>(i)];
  }
  return make_op(std::move(out), {e, attn}, [C, plane](Node& n) {
    const Value& e = n.parents[0];
    const Value& attn = n.parents[1];
    if (e->requires_grad) {
      e->ensure_grad();
      for (int c = 0; c < C; ++c) {
        const double* g = n.grad.v.data() + static_cast<size_t>(c) * plane;
        double* ge = e->grad.v.data() + static_cast<size_t>(c) * plane;
        for (int64_t i = 0; i < plane; ++i) ge[i] += g[i] * attn->val.v[static_cast<size_t>(i)];
      }
    }
    if (attn->requires_grad) {
      attn->ensure_grad();
      for (int c = 0; c < C; ++c) {
        const double* g = n.grad.v.data() + static_cast<size_t>(c) * plane;
        const double* ev = e->val.v.data() + static_cast<size_t>(c) * plane;
        for (int64_t i = 0; i < plane; ++i) attn->grad.v[static_cast<size_t>(i)] += g[i] * ev[i];
      }
    }
  });
}

Value scale(const Value& x, double c) {
  Tensor out = x->val;
  for (auto& v : out.v) v *= c;
  return make_op(std::move(out), {x}, [c](Node& n) {
    const Value& x = n.parents[0];
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int64_t i = 0; i < n.grad.numel(); ++i)
      x->grad.v[static_cast<size_t>(i)] += c * n.grad.v[static_cast<size_t>(i)];
  });
}

Value add_const(const Value& x, double c) {
  Tensor out = x->val;
  for (auto& v : out.v) v += c;
  return make_op(std::move(out), {x}, [](Node& n) {
    const Value& x = n.parents[0];
    if (!x->requires_grad) return;
    x->accumulate(n.grad);
  });
}

Value expv(const Value& x) {
  Tensor out = x->val;
  for (auto& v : out.v) v = std::exp(v);
  auto saved = std::make_shared<Tensor>(out);
  return make_op(std::move(out), {x}, [saved](Node& n) {
    const Value& x = n.parents[0];
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int64_t i = 0; i < n.grad.numel(); ++i) {
      const size_t ii = static_cast<size_t>(i);
      x->grad.v[ii] += n.grad.v[ii] * saved->v[ii];
    }
  });
}

Value grad_reverse(const Value& x, double lambda) {
  Tensor out = x->val;  // identity forward, bit-exact
  return make_op(std::move(out), {x}, [lambda](Node& n) {
    const Value& x = n.parents[0];
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int64_t i = 0; i < n.grad.numel(); ++i)
      x->grad.v[static_cast<size_t>(i)] += -lambda * n.grad.v[static_cast<size_t>(i)];
  });
}

Value mse_loss(const Value& pred, const Tensor& target) {
  GF_CHECK(pred->val.same_shape(target), "mse_loss: shape mismatch");
  const int64_t n_el = pred->val.numel();
  double acc = 0.0;
  for (int64_t i = 0; i < n_el; ++i) {
    const double d = pred->val.v[static_cast<size_t>(i)] - target.v[static_cast<size_t>(i)];
    acc += d * d;
  }
  Tensor out = Tensor::scalar(acc / static_cast<double>(n_el));
  auto tgt = std::make_shared<Tensor>(target);
  return make_op(std::move(out), {pred}, [tgt, n_el](Node& n) {
    const Value& pred = n.parents[0];
    if (!pred->requires_grad) return;
    pred->ensure_grad();
    const double g = n.grad.v[0] * 2.0 / static_cast<double>(n_el);
    for (int64_t i = 0; i < n_el; ++i) {
      const size_t ii = static_cast<size_t>(i);
      pred->grad.v[ii] += g * (pred->val.v[ii] - tgt->v[ii]);
    }
  });
}

// loss = max(z,0) - z*y + log(1 + exp(-|z|)); stable for large |z|
Value bce_with_logit(const Value& logit, double label) {
  GF_CHECK(logit->val.numel() == 1, "bce_with_logit expects scalar logit");
  const double z = logit->val.v[0];
  const double loss = std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::fabs(z)));
  return make_op(Tensor::scalar(loss), {logit}, [label](Node& n) {
    const Value& logit = n.parents[0];
    if (!logit->requires_grad) return;
    logit->ensure_grad();
    const double z = logit->val.v[0];
    const double p = 1.0 / (1.0 + std::exp(-z));
    logit->grad.v[0] += n.grad.v[0] * (p - label);
  });
}

}  // namespace gf
