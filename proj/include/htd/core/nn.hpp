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

#ifndef HTD_CORE_NN_HPP_
#define HTD_CORE_NN_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "htd/core/autograd.hpp"
#include "htd/core/params.hpp"
#include "htd/core/rng.hpp"

namespace htd::nn {

using ag::ParamBinding;
using ag::Var;

struct Linear {
  ParamId weight = 0;
  ParamId bias = 0;
  int in = 0;
  int out = 0;

  template <class S>
  static Linear create(ParameterSet<S>& ps, const std::string& name, int in, int out, Rng& rng) {
    Linear l;
    l.in = in;
    l.out = out;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    l.weight = ps.add_uniform(name + ".weight", {in, out}, bound, rng);
    l.bias = ps.add_uniform(name + ".bias", {out}, bound, rng);
    return l;
  }

  template <class S>
  Var<S> operator()(const ParamBinding<S>& p, const Var<S>& x) const {
    return ag::linear(x, p(weight), p(bias));
  }
};

struct LayerNorm {
  ParamId gamma = 0;
  ParamId beta = 0;

  template <class S>
  static LayerNorm create(ParameterSet<S>& ps, const std::string& name, int width) {
    LayerNorm ln;
    ln.gamma = ps.add_constant(name + ".gamma", {width}, S(1));
    ln.beta = ps.add_constant(name + ".beta", {width}, S(0));
    return ln;
  }

  template <class S>
  Var<S> operator()(const ParamBinding<S>& p, const Var<S>& x) const {
    return ag::layer_norm(x, p(gamma), p(beta));
  }
};

/// Two-layer perceptron with GELU between the layers.
struct Mlp {
  Linear first;
  Linear second;

  template <class S>
  static Mlp create(ParameterSet<S>& ps, const std::string& name, int in, int hidden, int out, Rng& rng) {
    return {Linear::create(ps, name + ".fc1", in, hidden, rng), Linear::create(ps, name + ".fc2", hidden, out, rng)};
  }

  template <class S>
  Var<S> operator()(const ParamBinding<S>& p, const Var<S>& x) const {
    return second(p, ag::gelu(first(p, x)));
  }
};

/// Multi-head scaled dot-product attention; inputs are [B, L, d].
struct MultiHeadAttention {
  Linear q, k, v, o;
  int heads = 1;
  int width = 0;

  template <class S>
  static MultiHeadAttention create(ParameterSet<S>& ps, const std::string& name, int width, int heads, Rng& rng) {
    if (heads < 1 || width % heads != 0)
      throw std::invalid_argument(name + ": width " + std::to_string(width) + " not divisible by heads " +
                                  std::to_string(heads));
    MultiHeadAttention m;
    m.heads = heads;
    m.width = width;
    m.q = Linear::create(ps, name + ".q", width, width, rng);
    m.k = Linear::create(ps, name + ".k", width, width, rng);
    m.v = Linear::create(ps, name + ".v", width, width, rng);
    m.o = Linear::create(ps, name + ".o", width, width, rng);
    return m;
  }

  template <class S>
  Var<S> operator()(const ParamBinding<S>& p, const Var<S>& query, const Var<S>& context) const {
    const int dh = width / heads;
    auto Q = ag::split_heads(q(p, query), heads);
    auto K = ag::split_heads(k(p, context), heads);
    auto V = ag::split_heads(v(p, context), heads);
    auto scores = ag::scale(ag::bmm(Q, K, true), S(1) / std::sqrt(static_cast<S>(dh)));
    auto attn = ag::softmax_last(scores);
    return o(p, ag::merge_heads(ag::bmm(attn, V), heads));
  }
};

/// Post-norm transformer encoder layer.
struct EncoderLayer {
  MultiHeadAttention self_attn;
  LayerNorm norm1, norm2;
  Mlp ffn;

  template <class S>
  static EncoderLayer create(ParameterSet<S>& ps, const std::string& name, int width, int heads, int ffn_width,
                             Rng& rng) {
    EncoderLayer l;
    l.self_attn = MultiHeadAttention::create(ps, name + ".self_attn", width, heads, rng);
    l.norm1 = LayerNorm::create(ps, name + ".norm1", width);
    l.ffn = Mlp::create(ps, name + ".ffn", width, ffn_width, width, rng);
    l.norm2 = LayerNorm::create(ps, name + ".norm2", width);
    return l;
  }

  template <class S>
  Var<S> operator()(const ParamBinding<S>& p, const Var<S>& x) const {
    auto h = norm1(p, ag::add(x, self_attn(p, x, x)));
    return norm2(p, ag::add(h, ffn(p, h)));
  }
};

/// Post-norm transformer decoder layer: self-attention, cross-attention, feed-forward.
struct DecoderLayer {
  MultiHeadAttention self_attn, cross_attn;
  LayerNorm norm1, norm2, norm3;
  Mlp ffn;

  template <class S>
  static DecoderLayer create(ParameterSet<S>& ps, const std::string& name, int width, int heads, int ffn_width,
                             Rng& rng) {
    DecoderLayer l;
    l.self_attn = MultiHeadAttention::create(ps, name + ".self_attn", width, heads, rng);
    l.norm1 = LayerNorm::create(ps, name + ".norm1", width);
    l.cross_attn = MultiHeadAttention::create(ps, name + ".cross_attn", width, heads, rng);
    l.norm2 = LayerNorm::create(ps, name + ".norm2", width);
    l.ffn = Mlp::create(ps, name + ".ffn", width, ffn_width, width, rng);
    l.norm3 = LayerNorm::create(ps, name + ".norm3", width);
    return l;
  }

  template <class S>
  Var<S> operator()(const ParamBinding<S>& p, const Var<S>& x, const Var<S>& memory) const {
    auto h = norm1(p, ag::add(x, self_attn(p, x, x)));
    h = norm2(p, ag::add(h, cross_attn(p, h, memory)));
    return norm3(p, ag::add(h, ffn(p, h)));
  }
};

/// A fixed set of learnable query tokens cross-attending to a feature sequence.
/// No positional signal enters the features, so the readout is invariant to
/// permutations of the sequence.
struct QueryReadout {
  ParamId queries = 0;
  MultiHeadAttention attn;
  LayerNorm norm;
  int count = 0;

  template <class S>
  static QueryReadout create(ParameterSet<S>& ps, const std::string& name, int count, int width, int heads,
                             Rng& rng) {
    QueryReadout r;
    r.count = count;
    r.queries = ps.add_normal(name + ".queries", {count, width}, 1.0, rng);
    r.attn = MultiHeadAttention::create(ps, name + ".attn", width, heads, rng);
    r.norm = LayerNorm::create(ps, name + ".norm", width);
    return r;
  }

  /// features [B, L, d] -> [B, count, d]
  template <class S>
  Var<S> operator()(const ParamBinding<S>& p, const Var<S>& features) const {
    auto q = ag::repeat_batch(p(queries), features.dim(0));
    return norm(p, ag::add(q, attn(p, q, features)));
  }
};

struct Conv2d {
  ParamId weight = 0;
  ParamId bias = 0;
  int stride = 1;
  int pad = 1;

  template <class S>
  static Conv2d create(ParameterSet<S>& ps, const std::string& name, int in_ch, int out_ch, int kernel, int stride,
                       int pad, Rng& rng) {
    Conv2d c;
    c.stride = stride;
    c.pad = pad;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * kernel * kernel));
    c.weight = ps.add_uniform(name + ".weight", {out_ch, in_ch, kernel, kernel}, bound, rng);
    c.bias = ps.add_uniform(name + ".bias", {out_ch}, bound, rng);
    return c;
  }

  template <class S>
  Var<S> operator()(const ParamBinding<S>& p, const Var<S>& x) const {
    return ag::conv2d(x, p(weight), p(bias), stride, pad);
  }
};

/// Sinusoidal position table [length, width].
template <class S>
Tensor<S> sinusoidal_positions(int length, int width) {
  Tensor<S> t({length, width});
  for (int pos = 0; pos < length; ++pos)
    for (int i = 0; i < width; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / width);
      t[pos * width + i] = static_cast<S>(i % 2 == 0 ? std::sin(pos * freq) : std::cos(pos * freq));
    }
  return t;
}

}  // namespace htd::nn

#endif  // HTD_CORE_NN_HPP_
