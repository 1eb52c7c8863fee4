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

// Central finite-difference oracle for gradient tests. Independent of the
// autograd backward closures: it only evaluates forward values.

#ifndef HTD_TESTS_GRADCHECK_HPP_
#define HTD_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "htd/core/autograd.hpp"
#include "htd/core/params.hpp"
#include "htd/core/rng.hpp"

namespace htd::testing {

struct GradCheckResult {
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::size_t checked = 0;
};

inline double rel_error(double analytic, double numeric, double floor = 1e-5) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Checks d loss / d leaves for an expression over freestanding leaves.
inline GradCheckResult check_leaf_gradients(
    std::vector<Tensor<double>> inputs,
    const std::function<ag::Var<double>(const std::vector<ag::Var<double>>&)>& fn, double step = 1e-6) {
  std::vector<ag::Var<double>> leaves;
  for (auto& t : inputs) leaves.push_back(ag::variable(t));
  auto loss = fn(leaves);
  ag::backward(loss);
  GradCheckResult res;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto& analytic = leaves[k].node()->grad_buffer();
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      auto plus = inputs;
      auto minus = inputs;
      plus[k][i] += step;
      minus[k][i] -= step;
      auto eval = [&](const std::vector<Tensor<double>>& in) {
        std::vector<ag::Var<double>> c;
        for (const auto& t : in) c.push_back(ag::constant(t));
        return fn(c).item();
      };
      const double numeric = (eval(plus) - eval(minus)) / (2 * step);
      res.max_rel_error = std::max(res.max_rel_error, rel_error(analytic[i], numeric));
      res.max_abs_error = std::max(res.max_abs_error, std::abs(analytic[i] - numeric));
      ++res.checked;
    }
  }
  return res;
}

/// Checks d loss / d params for a loss closure over a ParameterSet. At most
/// `max_per_param` entries of each parameter tensor are probed (chosen by rng).
inline GradCheckResult check_param_gradients(ParameterSet<double>& params,
                                             const std::function<double(bool)>& loss_and_maybe_backward,
                                             std::size_t max_per_param, Rng& rng, double step = 1e-6) {
  params.zero_grad();
  loss_and_maybe_backward(true);
  GradCheckResult res;
  for (auto& p : params) {
    const std::size_t n = p.value.size();
    std::vector<std::size_t> picks;
    if (n <= max_per_param) {
      for (std::size_t i = 0; i < n; ++i) picks.push_back(i);
    } else {
      for (std::size_t i = 0; i < max_per_param; ++i) picks.push_back(rng.index(n));
    }
    for (std::size_t i : picks) {
      const double orig = p.value[i];
      p.value[i] = orig + step;
      const double up = loss_and_maybe_backward(false);
      p.value[i] = orig - step;
      const double down = loss_and_maybe_backward(false);
      p.value[i] = orig;
      const double numeric = (up - down) / (2 * step);
      res.max_rel_error = std::max(res.max_rel_error, rel_error(p.grad[i], numeric));
      if (std::getenv("HTD_GRADCHECK_VERBOSE") && rel_error(p.grad[i], numeric) > 1e-3)
        std::fprintf(stderr, "%s[%zu] analytic %g numeric %g\n", p.name.c_str(), i, double(p.grad[i]), numeric);
      res.max_abs_error = std::max(res.max_abs_error, std::abs(p.grad[i] - numeric));
      ++res.checked;
    }
  }
  return res;
}

inline Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.normal(0.0, scale);
  return t;
}

}  // namespace htd::testing

#endif  // HTD_TESTS_GRADCHECK_HPP_
