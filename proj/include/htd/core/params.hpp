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

#ifndef HTD_CORE_PARAMS_HPP_
#define HTD_CORE_PARAMS_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "htd/core/rng.hpp"
#include "htd/core/tensor.hpp"

namespace htd {

using ParamId = std::size_t;

template <class S>
struct Parameter {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;
};

/// Ordered registry of named trainable tensors. Modules keep ParamIds, never
/// pointers, so a set can be copied (teacher snapshot, eval copy) freely.
template <class S>
class ParameterSet {
 public:
  ParamId add(const std::string& name, Tensor<S> value) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    Tensor<S> grad(value.shape());
    params_.push_back({name, std::move(value), std::move(grad)});
    index_.emplace(name, params_.size() - 1);
    return params_.size() - 1;
  }

  ParamId add_uniform(const std::string& name, Shape shape, double bound, Rng& rng) {
    Tensor<S> t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<S>(rng.uniform(-bound, bound));
    return add(name, std::move(t));
  }

  ParamId add_normal(const std::string& name, Shape shape, double stddev, Rng& rng) {
    Tensor<S> t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<S>(rng.normal(0.0, stddev));
    return add(name, std::move(t));
  }

  ParamId add_constant(const std::string& name, Shape shape, S fill) {
    return add(name, Tensor<S>(std::move(shape), fill));
  }

  std::size_t size() const { return params_.size(); }
  Parameter<S>& operator[](ParamId id) { return params_.at(id); }
  const Parameter<S>& operator[](ParamId id) const { return params_.at(id); }

  ParamId id(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
  }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.fill(S(0));
  }

  double grad_squared_norm() const {
    double acc = 0;
    for (const auto& p : params_)
      for (S g : p.grad.values()) acc += static_cast<double>(g) * static_cast<double>(g);
    return acc;
  }

  /// True when both sets register the same names with the same shapes, in order.
  bool same_layout(const ParameterSet& other) const {
    if (params_.size() != other.params_.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].name != other.params_[i].name) return false;
      if (params_[i].value.shape() != other.params_[i].value.shape()) return false;
    }
    return true;
  }

  /// Copy with every value converted to T; gradients start at zero.
  template <class T>
  ParameterSet<T> cast() const {
    ParameterSet<T> out;
    for (const auto& p : params_) out.add(p.name, p.value.template cast<T>());
    return out;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter<S>> params_;
  std::unordered_map<std::string, ParamId> index_;
};

}  // namespace htd

#endif  // HTD_CORE_PARAMS_HPP_
