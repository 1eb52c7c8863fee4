// Copyright 2026 The HTD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode automatic differentiation over dense tensors.
//
// A Var wraps a graph node. Ops record a backward closure only when at least
// one operand requires a gradient, so evaluating with frozen parameters (the
// EMA teacher, inference) builds no graph at all. Parameters enter a graph
// through a ParamBinding; gradients reach a parameter's grad buffer only when
// the binding is trainable.

#ifndef HTD_CORE_AUTOGRAD_HPP_
#define HTD_CORE_AUTOGRAD_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <unordered_set>
#include <utility>
#include <vector>

#include "htd/core/params.hpp"
#include "htd/core/tensor.hpp"

namespace htd::ag {

template <class S>
struct Node {
  Tensor<S> value;
  Tensor<S> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Tensor<S>&)> backward_fn;
  Tensor<S>* grad_sink = nullptr;

  Tensor<S>& grad_buffer() {
    if (grad.size() != value.size()) grad = Tensor<S>(value.shape());
    return grad;
  }
};

template <class S>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<S>> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor<S>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  int dim(int axis) const { return node_->value.dim(axis); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  S item() const { return node_->value[0]; }
  Node<S>* node() const { return node_.get(); }
  const std::shared_ptr<Node<S>>& shared() const { return node_; }

 private:
  std::shared_ptr<Node<S>> node_;
};

template <class S>
Var<S> constant(Tensor<S> value) {
  auto n = std::make_shared<Node<S>>();
  n->value = std::move(value);
  return Var<S>(std::move(n));
}

/// Leaf whose gradient is tracked but not routed to any parameter.
template <class S>
Var<S> variable(Tensor<S> value) {
  auto n = std::make_shared<Node<S>>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Var<S>(std::move(n));
}

namespace detail {

template <class S, class F>
Var<S> make_op(Tensor<S> value, std::vector<Var<S>> parents, F&& backward) {
  auto n = std::make_shared<Node<S>>();
  n->value = std::move(value);
  bool rg = false;
  for (const auto& p : parents) rg = rg || p.requires_grad();
  if (rg) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (const auto& p : parents)
      if (p.requires_grad()) n->parents.push_back(p.shared());
    n->backward_fn = std::forward<F>(backward);
  }
  return Var<S>(std::move(n));
}

// Grad buffer of an operand, or nullptr when it does not need one.
template <class S>
Tensor<S>* sink(const Var<S>& v) {
  return v.requires_grad() ? &v.node()->grad_buffer() : nullptr;
}

}  // namespace detail

/// Binds a ParameterSet into graphs. One leaf node per parameter is cached so
/// repeated use inside a forward pass shares a single gradient accumulator.
template <class S>
class ParamBinding {
 public:
  explicit ParamBinding(ParameterSet<S>& set) : set_(&set), mutable_set_(&set), trainable_(true) {
    cache_.resize(set.size());
  }
  explicit ParamBinding(const ParameterSet<S>& set) : set_(&set), trainable_(false) {
    cache_.resize(set.size());
  }

  Var<S> operator()(ParamId id) const {
    auto& slot = cache_.at(id);
    if (!slot.defined()) {
      auto n = std::make_shared<Node<S>>();
      n->value = (*set_)[id].value;
      if (trainable_) {
        n->requires_grad = true;
        n->grad_sink = &(*mutable_set_)[id].grad;
      }
      slot = Var<S>(std::move(n));
    }
    return slot;
  }

  bool trainable() const { return trainable_; }
  const ParameterSet<S>& set() const { return *set_; }

 private:
  const ParameterSet<S>* set_;
  ParameterSet<S>* mutable_set_ = nullptr;
  bool trainable_;
  mutable std::vector<Var<S>> cache_;
};

/// Backpropagates d(root)/d(root) = seed (default 1) through the graph and
/// accumulates into bound parameter grads.
template <class S>
void backward(const Var<S>& root, S seed = S(1)) {
  if (!root.requires_grad()) return;
  std::vector<Node<S>*> order;
  std::unordered_set<Node<S>*> seen;
  std::vector<std::pair<Node<S>*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<S>* p = node->parents[next++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->grad_buffer().fill(seed);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<S>* n = *it;
    if (n->grad.size() != n->value.size()) continue;  // no gradient reached this node
    if (n->backward_fn) n->backward_fn(n->grad);
    if (n->grad_sink) {
      auto& dst = *n->grad_sink;
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n->grad[i];
    }
  }
}

// ---------------------------------------------------------------------------
// Elementwise

template <class S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  check_shape(a.shape() == b.shape(), "add: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor<S> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return detail::make_op<S>(std::move(out), {a, b}, [a, b](const Tensor<S>& g) {
    if (auto* ga = detail::sink(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (auto* gb = detail::sink(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i];
  });
}

template <class S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  check_shape(a.shape() == b.shape(), "sub: shape mismatch");
  Tensor<S> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return detail::make_op<S>(std::move(out), {a, b}, [a, b](const Tensor<S>& g) {
    if (auto* ga = detail::sink(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (auto* gb = detail::sink(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

template <class S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  check_shape(a.shape() == b.shape(), "mul: shape mismatch");
  Tensor<S> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return detail::make_op<S>(std::move(out), {a, b}, [a, b](const Tensor<S>& g) {
    if (auto* ga = detail::sink(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * b.value()[i];
    if (auto* gb = detail::sink(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * a.value()[i];
  });
}

template <class S>
Var<S> scale(const Var<S>& a, S s) {
  Tensor<S> out = a.value();
  for (auto& v : out.values()) v *= s;
  return detail::make_op<S>(std::move(out), {a}, [a, s](const Tensor<S>& g) {
    if (auto* ga = detail::sink(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * s;
  });
}

/// a + b where b's shape equals the trailing dims of a.
template <class S>
Var<S> add_broadcast(const Var<S>& a, const Var<S>& b) {
  const std::size_t inner = b.size();
  check_shape(inner > 0 && a.size() % inner == 0 && a.shape().size() >= b.shape().size() &&
                  std::equal(b.shape().rbegin(), b.shape().rend(), a.shape().rbegin()),
              "add_broadcast: " + shape_string(b.shape()) + " is not a suffix of " + shape_string(a.shape()));
  Tensor<S> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i % inner];
  return detail::make_op<S>(std::move(out), {a, b}, [a, b, inner](const Tensor<S>& g) {
    if (auto* ga = detail::sink(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (auto* gb = detail::sink(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i % inner] += g[i];
  });
}

template <class S>
Var<S> gelu(const Var<S>& x) {
  // tanh approximation; smooth everywhere, which keeps finite-difference checks clean.
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double k = 0.044715;
  Tensor<S> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.value()[i];
    out[i] = static_cast<S>(0.5 * v * (1.0 + std::tanh(c * (v + k * v * v * v))));
  }
  return detail::make_op<S>(std::move(out), {x}, [x](const Tensor<S>& g) {
    auto* gx = detail::sink(x);
    if (!gx) return;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = x.value()[i];
      const double t = std::tanh(c * (v + k * v * v * v));
      const double d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * c * (1.0 + 3.0 * k * v * v);
      (*gx)[i] += static_cast<S>(g[i] * d);
    }
  });
}

// ---------------------------------------------------------------------------
// Shape manipulation

template <class S>
Var<S> reshape(const Var<S>& x, Shape shape) {
  Tensor<S> out = x.value().reshaped(std::move(shape));
  return detail::make_op<S>(std::move(out), {x}, [x](const Tensor<S>& g) {
    if (auto* gx = detail::sink(x))
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
  });
}

/// Swaps the last two axes.
template <class S>
Var<S> transpose_last2(const Var<S>& x) {
  const int r = x.value().rank();
  check_shape(r >= 2, "transpose_last2 needs rank >= 2");
  const int m = x.dim(-2), n = x.dim(-1);
  const std::size_t batch = x.size() / (static_cast<std::size_t>(m) * n);
  Shape shape = x.shape();
  std::swap(shape[r - 2], shape[r - 1]);
  Tensor<S> out(shape);
  for (std::size_t b = 0; b < batch; ++b) {
    const S* src = x.value().data() + b * m * n;
    S* dst = out.data() + b * m * n;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
  }
  return detail::make_op<S>(std::move(out), {x}, [x, batch, m, n](const Tensor<S>& g) {
    auto* gx = detail::sink(x);
    if (!gx) return;
    for (std::size_t b = 0; b < batch; ++b) {
      const S* src = g.data() + b * m * n;
      S* dst = gx->data() + b * m * n;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) dst[i * n + j] += src[j * m + i];
    }
  });
}

namespace detail {
inline std::pair<std::size_t, std::size_t> outer_inner(const Shape& s, int axis) {
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  return {outer, inner};
}
}  // namespace detail

template <class S>
Var<S> concat(const std::vector<Var<S>>& parts, int axis) {
  check_shape(!parts.empty(), "concat of nothing");
  const int r = parts[0].value().rank();
  if (axis < 0) axis += r;
  Shape shape = parts[0].shape();
  int total = 0;
  for (const auto& p : parts) {
    check_shape(p.value().rank() == r, "concat: rank mismatch");
    for (int i = 0; i < r; ++i)
      if (i != axis) check_shape(p.shape()[i] == shape[i], "concat: shape mismatch off-axis");
    total += p.shape()[axis];
  }
  shape[axis] = total;
  const auto [outer, inner] = detail::outer_inner(shape, axis);
  Tensor<S> out(shape);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t chunk = static_cast<std::size_t>(p.shape()[axis]) * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(p.value().data() + o * chunk, chunk, out.data() + o * total * inner + offset);
    offset += chunk;
  }
  return detail::make_op<S>(std::move(out), parts, [parts, axis, outer, inner, total](const Tensor<S>& g) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t chunk = static_cast<std::size_t>(p.shape()[axis]) * inner;
      if (auto* gp = detail::sink(p)) {
        for (std::size_t o = 0; o < outer; ++o) {
          const S* src = g.data() + o * total * inner + off;
          S* dst = gp->data() + o * chunk;
          for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      }
      off += chunk;
    }
  });
}

template <class S>
Var<S> slice(const Var<S>& x, int axis, int start, int length) {
  const int r = x.value().rank();
  if (axis < 0) axis += r;
  check_shape(axis >= 0 && axis < r && start >= 0 && length >= 0 && start + length <= x.shape()[axis],
              "slice out of range");
  Shape shape = x.shape();
  const int full = shape[axis];
  shape[axis] = length;
  const auto [outer, inner] = detail::outer_inner(shape, axis);
  Tensor<S> out(shape);
  const std::size_t chunk = static_cast<std::size_t>(length) * inner;
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(x.value().data() + o * full * inner + start * inner, chunk, out.data() + o * chunk);
  return detail::make_op<S>(std::move(out), {x}, [x, outer, inner, full, start, chunk](const Tensor<S>& g) {
    auto* gx = detail::sink(x);
    if (!gx) return;
    for (std::size_t o = 0; o < outer; ++o) {
      S* dst = gx->data() + o * full * inner + start * inner;
      const S* src = g.data() + o * chunk;
      for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
    }
  });
}

/// Stacks `count` copies of x along a new leading axis.
template <class S>
Var<S> repeat_batch(const Var<S>& x, int count) {
  Shape shape = x.shape();
  shape.insert(shape.begin(), count);
  Tensor<S> out(shape);
  const std::size_t n = x.size();
  for (int b = 0; b < count; ++b) std::copy_n(x.value().data(), n, out.data() + b * n);
  return detail::make_op<S>(std::move(out), {x}, [x, count, n](const Tensor<S>& g) {
    auto* gx = detail::sink(x);
    if (!gx) return;
    for (int b = 0; b < count; ++b)
      for (std::size_t i = 0; i < n; ++i) (*gx)[i] += g[b * n + i];
  });
}

/// [B, L, H*D] -> [B*H, L, D]
template <class S>
Var<S> split_heads(const Var<S>& x, int heads) {
  check_shape(x.value().rank() == 3 && x.dim(2) % heads == 0, "split_heads: bad shape");
  const int B = x.dim(0), L = x.dim(1), D = x.dim(2) / heads;
  Tensor<S> out({B * heads, L, D});
  for (int b = 0; b < B; ++b)
    for (int l = 0; l < L; ++l)
      for (int h = 0; h < heads; ++h)
        std::copy_n(x.value().data() + ((b * L + l) * heads + h) * D, D,
                    out.data() + ((b * heads + h) * L + l) * D);
  return detail::make_op<S>(std::move(out), {x}, [x, B, L, D, heads](const Tensor<S>& g) {
    auto* gx = detail::sink(x);
    if (!gx) return;
    for (int b = 0; b < B; ++b)
      for (int l = 0; l < L; ++l)
        for (int h = 0; h < heads; ++h) {
          const S* src = g.data() + ((b * heads + h) * L + l) * D;
          S* dst = gx->data() + ((b * L + l) * heads + h) * D;
          for (int d = 0; d < D; ++d) dst[d] += src[d];
        }
  });
}

/// [B*H, L, D] -> [B, L, H*D]
template <class S>
Var<S> merge_heads(const Var<S>& x, int heads) {
  check_shape(x.value().rank() == 3 && x.dim(0) % heads == 0, "merge_heads: bad shape");
  const int B = x.dim(0) / heads, L = x.dim(1), D = x.dim(2);
  Tensor<S> out({B, L, heads * D});
  for (int b = 0; b < B; ++b)
    for (int h = 0; h < heads; ++h)
      for (int l = 0; l < L; ++l)
        std::copy_n(x.value().data() + ((b * heads + h) * L + l) * D, D,
                    out.data() + ((b * L + l) * heads + h) * D);
  return detail::make_op<S>(std::move(out), {x}, [x, B, L, D, heads](const Tensor<S>& g) {
    auto* gx = detail::sink(x);
    if (!gx) return;
    for (int b = 0; b < B; ++b)
      for (int h = 0; h < heads; ++h)
        for (int l = 0; l < L; ++l) {
          const S* src = g.data() + ((b * L + l) * heads + h) * D;
          S* dst = gx->data() + ((b * heads + h) * L + l) * D;
          for (int d = 0; d < D; ++d) dst[d] += src[d];
        }
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

/// y = x W + b over the last axis; x [..., in], W [in, out], b [out] or undefined.
template <class S>
Var<S> linear(const Var<S>& x, const Var<S>& w, const Var<S>& b) {
  check_shape(w.value().rank() == 2, "linear: weight must be 2-D");
  const int in = w.dim(0), outd = w.dim(1);
  check_shape(x.dim(-1) == in, "linear: input width " + std::to_string(x.dim(-1)) + " vs weight " +
                                   shape_string(w.shape()));
  if (b.defined()) check_shape(b.size() == static_cast<std::size_t>(outd), "linear: bias width");
  const std::size_t rows = x.size() / in;
  Shape shape = x.shape();
  shape.back() = outd;
  Tensor<S> out(shape);
  const S* X = x.value().data();
  const S* W = w.value().data();
  S* Y = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    S* y = Y + r * outd;
    if (b.defined()) std::copy_n(b.value().data(), outd, y);
    for (int i = 0; i < in; ++i) {
      const S xv = X[r * in + i];
      const S* wrow = W + static_cast<std::size_t>(i) * outd;
      for (int o = 0; o < outd; ++o) y[o] += xv * wrow[o];
    }
  }
  std::vector<Var<S>> parents{x, w};
  if (b.defined()) parents.push_back(b);
  return detail::make_op<S>(std::move(out), parents, [x, w, b, rows, in, outd](const Tensor<S>& g) {
    const S* G = g.data();
    if (auto* gx = detail::sink(x)) {
      const S* W = w.value().data();
      for (std::size_t r = 0; r < rows; ++r)
        for (int i = 0; i < in; ++i) {
          const S* wrow = W + static_cast<std::size_t>(i) * outd;
          const S* grow = G + r * outd;
          S acc = 0;
          for (int o = 0; o < outd; ++o) acc += grow[o] * wrow[o];
          (*gx)[r * in + i] += acc;
        }
    }
    if (auto* gw = detail::sink(w)) {
      const S* X = x.value().data();
      for (std::size_t r = 0; r < rows; ++r)
        for (int i = 0; i < in; ++i) {
          const S xv = X[r * in + i];
          S* dst = gw->data() + static_cast<std::size_t>(i) * outd;
          const S* grow = G + r * outd;
          for (int o = 0; o < outd; ++o) dst[o] += xv * grow[o];
        }
    }
    if (b.defined()) {
      if (auto* gb = detail::sink(b))
        for (std::size_t r = 0; r < rows; ++r)
          for (int o = 0; o < outd; ++o) (*gb)[o] += G[r * outd + o];
    }
  });
}

/// Batched matmul: a [B, M, K] times b [B, K, N] (or b [B, N, K] when trans_b).
template <class S>
Var<S> bmm(const Var<S>& a, const Var<S>& b, bool trans_b = false) {
  check_shape(a.value().rank() == 3 && b.value().rank() == 3 && a.dim(0) == b.dim(0), "bmm: bad ranks");
  const int B = a.dim(0), M = a.dim(1), K = a.dim(2);
  const int N = trans_b ? b.dim(1) : b.dim(2);
  check_shape((trans_b ? b.dim(2) : b.dim(1)) == K, "bmm: inner dims differ");
  Tensor<S> out({B, M, N});
  for (int bi = 0; bi < B; ++bi) {
    const S* A = a.value().data() + static_cast<std::size_t>(bi) * M * K;
    const S* Bm = b.value().data() + static_cast<std::size_t>(bi) * K * N;
    S* C = out.data() + static_cast<std::size_t>(bi) * M * N;
    for (int m = 0; m < M; ++m) {
      if (trans_b) {
        for (int n = 0; n < N; ++n) {
          S acc = 0;
          for (int k = 0; k < K; ++k) acc += A[m * K + k] * Bm[n * K + k];
          C[m * N + n] = acc;
        }
      } else {
        for (int k = 0; k < K; ++k) {
          const S av = A[m * K + k];
          for (int n = 0; n < N; ++n) C[m * N + n] += av * Bm[k * N + n];
        }
      }
    }
  }
  return detail::make_op<S>(std::move(out), {a, b}, [a, b, B, M, K, N, trans_b](const Tensor<S>& g) {
    auto* ga = detail::sink(a);
    auto* gb = detail::sink(b);
    for (int bi = 0; bi < B; ++bi) {
      const S* A = a.value().data() + static_cast<std::size_t>(bi) * M * K;
      const S* Bm = b.value().data() + static_cast<std::size_t>(bi) * K * N;
      const S* G = g.data() + static_cast<std::size_t>(bi) * M * N;
      if (ga) {
        S* dA = ga->data() + static_cast<std::size_t>(bi) * M * K;
        for (int m = 0; m < M; ++m) {
          if (trans_b) {
            for (int n = 0; n < N; ++n) {
              const S gv = G[m * N + n];
              for (int k = 0; k < K; ++k) dA[m * K + k] += gv * Bm[n * K + k];
            }
          } else {
            for (int k = 0; k < K; ++k) {
              S acc = 0;
              for (int n = 0; n < N; ++n) acc += G[m * N + n] * Bm[k * N + n];
              dA[m * K + k] += acc;
            }
          }
        }
      }
      if (gb) {
        S* dB = gb->data() + static_cast<std::size_t>(bi) * K * N;
        for (int m = 0; m < M; ++m) {
          if (trans_b) {
            for (int n = 0; n < N; ++n) {
              const S gv = G[m * N + n];
              for (int k = 0; k < K; ++k) dB[n * K + k] += gv * A[m * K + k];
            }
          } else {
            for (int k = 0; k < K; ++k) {
              const S av = A[m * K + k];
              for (int n = 0; n < N; ++n) dB[k * N + n] += av * G[m * N + n];
            }
          }
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Normalization

template <class S>
Var<S> softmax_last(const Var<S>& x) {
  const int n = x.dim(-1);
  const std::size_t rows = x.size() / n;
  Tensor<S> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const S* src = x.value().data() + r * n;
    S* dst = out.data() + r * n;
    S mx = src[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, src[i]);
    S total = 0;
    for (int i = 0; i < n; ++i) total += (dst[i] = std::exp(src[i] - mx));
    for (int i = 0; i < n; ++i) dst[i] /= total;
  }
  auto result = detail::make_op<S>(std::move(out), {x}, nullptr);
  if (result.requires_grad()) {
    Node<S>* self = result.node();  // output values are needed by the backward pass
    result.node()->backward_fn = [x, self, n, rows](const Tensor<S>& g) {
      auto* gx = detail::sink(x);
      if (!gx) return;
      for (std::size_t r = 0; r < rows; ++r) {
        const S* y = self->value.data() + r * n;
        const S* gr = g.data() + r * n;
        S dot = 0;
        for (int i = 0; i < n; ++i) dot += gr[i] * y[i];
        for (int i = 0; i < n; ++i) (*gx)[r * n + i] += y[i] * (gr[i] - dot);
      }
    };
  }
  return result;
}

template <class S>
Var<S> layer_norm(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta, S eps = S(1e-5)) {
  const int n = x.dim(-1);
  check_shape(gamma.size() == static_cast<std::size_t>(n) && beta.size() == static_cast<std::size_t>(n),
              "layer_norm: affine width");
  const std::size_t rows = x.size() / n;
  Tensor<S> out(x.shape());
  std::vector<S> xhat(x.size());
  std::vector<S> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const S* src = x.value().data() + r * n;
    S mean = 0;
    for (int i = 0; i < n; ++i) mean += src[i];
    mean /= n;
    S var = 0;
    for (int i = 0; i < n; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= n;
    const S is = S(1) / std::sqrt(var + eps);
    inv_std[r] = is;
    for (int i = 0; i < n; ++i) {
      xhat[r * n + i] = (src[i] - mean) * is;
      out[r * n + i] = xhat[r * n + i] * gamma.value()[i] + beta.value()[i];
    }
  }
  return detail::make_op<S>(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, n, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](const Tensor<S>& g) {
        auto* gx = detail::sink(x);
        auto* gg = detail::sink(gamma);
        auto* gbeta = detail::sink(beta);
        for (std::size_t r = 0; r < rows; ++r) {
          const S* gr = g.data() + r * n;
          const S* xh = xhat.data() + r * n;
          if (gg)
            for (int i = 0; i < n; ++i) (*gg)[i] += gr[i] * xh[i];
          if (gbeta)
            for (int i = 0; i < n; ++i) (*gbeta)[i] += gr[i];
          if (gx) {
            S sum_dy = 0, sum_dy_xh = 0;
            for (int i = 0; i < n; ++i) {
              const S dy = gr[i] * gamma.value()[i];
              sum_dy += dy;
              sum_dy_xh += dy * xh[i];
            }
            for (int i = 0; i < n; ++i) {
              const S dy = gr[i] * gamma.value()[i];
              (*gx)[r * n + i] += inv_std[r] * (dy - sum_dy / n - xh[i] * sum_dy_xh / n);
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Convolution and pooling (NCHW)

/// x [N, C, H, W], w [O, C, k, k], b [O]; square kernel, symmetric zero padding.
template <class S>
Var<S> conv2d(const Var<S>& x, const Var<S>& w, const Var<S>& b, int stride, int pad) {
  check_shape(x.value().rank() == 4 && w.value().rank() == 4, "conv2d: expects NCHW input and OCkk weight");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int O = w.dim(0), k = w.dim(2);
  check_shape(w.dim(1) == C && w.dim(3) == k, "conv2d: weight " + shape_string(w.shape()) +
                                                  " incompatible with input " + shape_string(x.shape()));
  const int Ho = (H + 2 * pad - k) / stride + 1;
  const int Wo = (W + 2 * pad - k) / stride + 1;
  check_shape(Ho > 0 && Wo > 0, "conv2d: input smaller than kernel");
  const int ckk = C * k * k;
  const int hw = Ho * Wo;
  // im2col index table shared by forward and backward; -1 marks padding.
  std::vector<int> cols_index(static_cast<std::size_t>(ckk) * hw);
  for (int c = 0; c < C; ++c)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        const int row = (c * k + ki) * k + kj;
        for (int oy = 0; oy < Ho; ++oy)
          for (int ox = 0; ox < Wo; ++ox) {
            const int iy = oy * stride - pad + ki, ix = ox * stride - pad + kj;
            cols_index[static_cast<std::size_t>(row) * hw + oy * Wo + ox] =
                (iy >= 0 && iy < H && ix >= 0 && ix < W) ? (c * H + iy) * W + ix : -1;
          }
      }
  Tensor<S> out({N, O, Ho, Wo});
  std::vector<S> cols(static_cast<std::size_t>(ckk) * hw);
  const S* Wt = w.value().data();
  for (int nidx = 0; nidx < N; ++nidx) {
    const S* X = x.value().data() + static_cast<std::size_t>(nidx) * C * H * W;
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = cols_index[i] >= 0 ? X[cols_index[i]] : S(0);
    S* Y = out.data() + static_cast<std::size_t>(nidx) * O * hw;
    for (int o = 0; o < O; ++o) {
      S* y = Y + static_cast<std::size_t>(o) * hw;
      if (b.defined()) std::fill_n(y, hw, b.value()[o]);
      for (int r = 0; r < ckk; ++r) {
        const S wv = Wt[static_cast<std::size_t>(o) * ckk + r];
        const S* col = cols.data() + static_cast<std::size_t>(r) * hw;
        for (int p = 0; p < hw; ++p) y[p] += wv * col[p];
      }
    }
  }
  std::vector<Var<S>> parents{x, w};
  if (b.defined()) parents.push_back(b);
  return detail::make_op<S>(
      std::move(out), parents,
      [x, w, b, N, C, H, W, O, ckk, hw, cols_index = std::move(cols_index)](const Tensor<S>& g) {
        auto* gx = detail::sink(x);
        auto* gw = detail::sink(w);
        Tensor<S>* gb = b.defined() ? detail::sink(b) : nullptr;
        std::vector<S> cols(static_cast<std::size_t>(ckk) * hw);
        std::vector<S> dcols(static_cast<std::size_t>(ckk) * hw);
        const S* Wt = w.value().data();
        for (int nidx = 0; nidx < N; ++nidx) {
          const S* G = g.data() + static_cast<std::size_t>(nidx) * O * hw;
          if (gb)
            for (int o = 0; o < O; ++o)
              for (int p = 0; p < hw; ++p) (*gb)[o] += G[static_cast<std::size_t>(o) * hw + p];
          if (gw) {
            const S* X = x.value().data() + static_cast<std::size_t>(nidx) * C * H * W;
            for (std::size_t i = 0; i < cols.size(); ++i)
              cols[i] = cols_index[i] >= 0 ? X[cols_index[i]] : S(0);
            for (int o = 0; o < O; ++o) {
              const S* go = G + static_cast<std::size_t>(o) * hw;
              for (int r = 0; r < ckk; ++r) {
                const S* col = cols.data() + static_cast<std::size_t>(r) * hw;
                S acc = 0;
                for (int p = 0; p < hw; ++p) acc += go[p] * col[p];
                (*gw)[static_cast<std::size_t>(o) * ckk + r] += acc;
              }
            }
          }
          if (gx) {
            std::fill(dcols.begin(), dcols.end(), S(0));
            for (int o = 0; o < O; ++o) {
              const S* go = G + static_cast<std::size_t>(o) * hw;
              for (int r = 0; r < ckk; ++r) {
                const S wv = Wt[static_cast<std::size_t>(o) * ckk + r];
                S* dc = dcols.data() + static_cast<std::size_t>(r) * hw;
                for (int p = 0; p < hw; ++p) dc[p] += wv * go[p];
              }
            }
            S* dX = gx->data() + static_cast<std::size_t>(nidx) * C * H * W;
            for (std::size_t i = 0; i < dcols.size(); ++i)
              if (cols_index[i] >= 0) dX[cols_index[i]] += dcols[i];
          }
        }
      });
}

/// Adaptive average pooling with PyTorch bin boundaries:
/// bin i covers [floor(i*H/out), ceil((i+1)*H/out)).
template <class S>
Var<S> adaptive_avg_pool2d(const Var<S>& x, int out_h, int out_w) {
  check_shape(x.value().rank() == 4, "adaptive_avg_pool2d: expects NCHW");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  struct Bin {
    int y0, y1, x0, x1;
  };
  std::vector<Bin> bins;
  for (int i = 0; i < out_h; ++i)
    for (int j = 0; j < out_w; ++j)
      bins.push_back({(i * H) / out_h, ((i + 1) * H + out_h - 1) / out_h, (j * W) / out_w,
                      ((j + 1) * W + out_w - 1) / out_w});
  Tensor<S> out({N, C, out_h, out_w});
  const std::size_t planes = static_cast<std::size_t>(N) * C;
  for (std::size_t p = 0; p < planes; ++p) {
    const S* X = x.value().data() + p * H * W;
    for (std::size_t q = 0; q < bins.size(); ++q) {
      const Bin& bn = bins[q];
      S acc = 0;
      for (int yy = bn.y0; yy < bn.y1; ++yy)
        for (int xx = bn.x0; xx < bn.x1; ++xx) acc += X[yy * W + xx];
      out[p * bins.size() + q] = acc / static_cast<S>((bn.y1 - bn.y0) * (bn.x1 - bn.x0));
    }
  }
  return detail::make_op<S>(std::move(out), {x}, [x, bins, planes, H, W](const Tensor<S>& g) {
    auto* gx = detail::sink(x);
    if (!gx) return;
    for (std::size_t p = 0; p < planes; ++p) {
      S* dX = gx->data() + p * H * W;
      for (std::size_t q = 0; q < bins.size(); ++q) {
        const Bin& bn = bins[q];
        const S v = g[p * bins.size() + q] / static_cast<S>((bn.y1 - bn.y0) * (bn.x1 - bn.x0));
        for (int yy = bn.y0; yy < bn.y1; ++yy)
          for (int xx = bn.x0; xx < bn.x1; ++xx) dX[yy * W + xx] += v;
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions and losses

template <class S>
Var<S> sum_all(const Var<S>& x) {
  Tensor<S> out(Shape{});
  out[0] = sum(x.value());
  return detail::make_op<S>(std::move(out), {x}, [x](const Tensor<S>& g) {
    if (auto* gx = detail::sink(x))
      for (auto& v : gx->values()) v += g[0];
  });
}

template <class S>
Var<S> mean_all(const Var<S>& x) {
  return scale(sum_all(x), S(1) / static_cast<S>(x.size()));
}

/// Smooth L1 with transition delta: r^2/(2 delta) if |r| <= delta, else |r| - delta/2.
template <class S>
S huber(S r, S delta) {
  const S a = std::abs(r);
  return a <= delta ? r * r / (S(2) * delta) : a - delta / S(2);
}

template <class S>
S huber_derivative(S r, S delta) {
  const S a = std::abs(r);
  if (a <= delta) return r / delta;
  return r > 0 ? S(1) : S(-1);
}

/// Mean Huber over all elements of pred - target.
template <class S>
Var<S> huber_mean(const Var<S>& pred, const Var<S>& target, S delta) {
  check_shape(pred.shape() == target.shape(), "huber: prediction " + shape_string(pred.shape()) +
                                                  " vs target " + shape_string(target.shape()));
  const std::size_t n = pred.size();
  check_shape(n > 0, "huber: empty input");
  Tensor<S> out(Shape{});
  S acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += huber(pred.value()[i] - target.value()[i], delta);
  out[0] = acc / static_cast<S>(n);
  return detail::make_op<S>(std::move(out), {pred, target}, [pred, target, delta, n](const Tensor<S>& g) {
    auto* gp = detail::sink(pred);
    auto* gt = detail::sink(target);
    const S s = g[0] / static_cast<S>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const S d = s * huber_derivative(pred.value()[i] - target.value()[i], delta);
      if (gp) (*gp)[i] += d;
      if (gt) (*gt)[i] -= d;
    }
  });
}

/// Mean over rows (last axis = feature) of 1 - cos(p, t), with eps added to both norms.
template <class S>
Var<S> cosine_distance_mean(const Var<S>& pred, const Var<S>& target, S eps) {
  check_shape(pred.shape() == target.shape(), "cosine: shape mismatch");
  const int d = pred.dim(-1);
  const std::size_t rows = pred.size() / d;
  check_shape(rows > 0, "cosine: empty input");
  std::vector<S> np(rows), nt(rows), dots(rows);
  S acc = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const S* p = pred.value().data() + r * d;
    const S* t = target.value().data() + r * d;
    S pp = 0, tt = 0, pt = 0;
    for (int i = 0; i < d; ++i) {
      pp += p[i] * p[i];
      tt += t[i] * t[i];
      pt += p[i] * t[i];
    }
    np[r] = std::sqrt(pp);
    nt[r] = std::sqrt(tt);
    dots[r] = pt;
    acc += S(1) - pt / ((np[r] + eps) * (nt[r] + eps));
  }
  Tensor<S> out(Shape{});
  out[0] = acc / static_cast<S>(rows);
  return detail::make_op<S>(
      std::move(out), {pred, target},
      [pred, target, d, rows, eps, np = std::move(np), nt = std::move(nt), dots = std::move(dots)](
          const Tensor<S>& g) {
        auto* gp = detail::sink(pred);
        auto* gt = detail::sink(target);
        const S s = -g[0] / static_cast<S>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          const S* p = pred.value().data() + r * d;
          const S* t = target.value().data() + r * d;
          const S a = np[r] + eps, b = nt[r] + eps;
          const S c = dots[r] / (a * b);
          // d/dp [p.t / ((|p|+eps)(|t|+eps))] = t/(ab) - c * p / (|p| a)
          if (gp) {
            const S pcoef = np[r] > 0 ? c / (np[r] * a) : S(0);
            for (int i = 0; i < d; ++i) (*gp)[r * d + i] += s * (t[i] / (a * b) - pcoef * p[i]);
          }
          if (gt) {
            const S tcoef = nt[r] > 0 ? c / (nt[r] * b) : S(0);
            for (int i = 0; i < d; ++i) (*gt)[r * d + i] += s * (p[i] / (a * b) - tcoef * t[i]);
          }
        }
      });
}

/// Mean over rows of huber(|p| - |t|, delta).
template <class S>
Var<S> norm_huber_mean(const Var<S>& pred, const Var<S>& target, S delta) {
  check_shape(pred.shape() == target.shape(), "norm huber: shape mismatch");
  const int d = pred.dim(-1);
  const std::size_t rows = pred.size() / d;
  check_shape(rows > 0, "norm huber: empty input");
  std::vector<S> np(rows), nt(rows);
  S acc = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const S* p = pred.value().data() + r * d;
    const S* t = target.value().data() + r * d;
    S pp = 0, tt = 0;
    for (int i = 0; i < d; ++i) {
      pp += p[i] * p[i];
      tt += t[i] * t[i];
    }
    np[r] = std::sqrt(pp);
    nt[r] = std::sqrt(tt);
    acc += huber(np[r] - nt[r], delta);
  }
  Tensor<S> out(Shape{});
  out[0] = acc / static_cast<S>(rows);
  return detail::make_op<S>(
      std::move(out), {pred, target},
      [pred, target, d, rows, delta, np = std::move(np), nt = std::move(nt)](const Tensor<S>& g) {
        auto* gp = detail::sink(pred);
        auto* gt = detail::sink(target);
        const S s = g[0] / static_cast<S>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          const S h = s * huber_derivative(np[r] - nt[r], delta);
          const S* p = pred.value().data() + r * d;
          const S* t = target.value().data() + r * d;
          if (gp && np[r] > 0)
            for (int i = 0; i < d; ++i) (*gp)[r * d + i] += h * p[i] / np[r];
          if (gt && nt[r] > 0)
            for (int i = 0; i < d; ++i) (*gt)[r * d + i] -= h * t[i] / nt[r];
        }
      });
}

}  // namespace htd::ag

#endif  // HTD_CORE_AUTOGRAD_HPP_
