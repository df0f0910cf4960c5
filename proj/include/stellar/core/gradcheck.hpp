// Copyright 2026-present the stellar project
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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stellar/core/rng.hpp"
#include "stellar/core/tensor.hpp"

namespace stellar::core {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int coords_checked = 0;
};

// Central finite differences against an analytic gradient, on a random
// subsample of at least `min_coords` coordinates (all of them when fewer
// exist). `eval` is called as eval(grads_or_null) and returns the loss; when
// grads_or_null is non-null it must be filled with one gradient tensor per
// entry of `params`, shape-aligned. Relative error uses
// max(|analytic|, |numeric|, 1e-8) as denominator.
template <typename Eval>
GradCheckResult grad_check(const std::vector<Tensor<double>*>& params,
                           Eval&& eval, double epsilon,
                           int min_coords = 50, std::uint64_t seed = 17) {
  if (epsilon <= 0) throw std::invalid_argument("grad_check: epsilon <= 0");
  std::vector<Tensor<double>> grads;
  const double base = eval(&grads);
  (void)base;
  if (grads.size() != params.size())
    throw std::invalid_argument("grad_check: gradient count mismatch");

  std::vector<std::pair<int, std::int64_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::int64_t i = 0; i < params[p]->size(); ++i)
      coords.push_back({static_cast<int>(p), i});

  RngStream rng(seed, 0xC0FFEE);
  // Fisher-Yates prefix shuffle for the sample.
  const int want = std::min<std::int64_t>(
      static_cast<std::int64_t>(coords.size()), min_coords);
  for (int i = 0; i < want; ++i) {
    const int j = i + rng.uniform_int(static_cast<int>(coords.size()) - i);
    std::swap(coords[i], coords[j]);
  }

  GradCheckResult res;
  for (int c = 0; c < want; ++c) {
    const auto [p, i] = coords[c];
    double& x = (*params[p])[i];
    const double saved = x;
    x = saved + epsilon;
    const double fp = eval(nullptr);
    x = saved - epsilon;
    const double fm = eval(nullptr);
    x = saved;
    const double numeric = (fp - fm) / (2.0 * epsilon);
    const double analytic = grads[p][i];
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    const double rel = std::abs(numeric - analytic) / denom;
    if (rel > res.max_rel_err) res.max_rel_err = rel;
    ++res.coords_checked;
  }
  return res;
}

}  // namespace stellar::core
