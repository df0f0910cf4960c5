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

// Shared oracles for the solver tests. Deliberately naive and independent
// of the library implementation paths they check.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "stellar/core/rng.hpp"
#include "stellar/core/tensor.hpp"

namespace testutil {

using stellar::core::RngStream;
using stellar::core::Shape;
using stellar::core::TensorD;

// Exhaustive minimum-cost assignment; returns sigma and fills best_cost.
// Ties resolved to the lexicographically smallest permutation.
inline std::vector<int> brute_force_assignment(const TensorD& cost,
                                               double* best_cost = nullptr) {
  const int n = cost.rows();
  std::vector<int> perm(n), best(n);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double bestc = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += cost.at(i, perm[i]);
    if (c < bestc - 1e-15) {
      bestc = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (best_cost) *best_cost = bestc;
  return best;
}

// Hand-run alternating rescaling: exp((x - rowmax)/tau), then `iters` rounds
// of column-to-N/K and row-to-1 scaling, then a final row renormalization.
// Plain nested loops, sequential summation.
inline TensorD sinkhorn_oracle(const TensorD& logits, double tau, int iters) {
  const int n = logits.rows(), k = logits.cols();
  TensorD m = TensorD::zeros(Shape::of(n, k));
  for (int i = 0; i < n; ++i) {
    double mx = logits.at(i, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, logits.at(i, j));
    for (int j = 0; j < k; ++j) m.at(i, j) = std::exp((logits.at(i, j) - mx) / tau);
  }
  const double col_target = static_cast<double>(n) / k;
  for (int t = 0; t < iters; ++t) {
    for (int j = 0; j < k; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += m.at(i, j);
      for (int i = 0; i < n; ++i) m.at(i, j) *= col_target / s;
    }
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < k; ++j) s += m.at(i, j);
      for (int j = 0; j < k; ++j) m.at(i, j) /= s;
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += m.at(i, j);
    for (int j = 0; j < k; ++j) m.at(i, j) /= s;
  }
  return m;
}

// Random instance with a planted unique optimum: the planted permutation's
// entries are cheap, everything else is dearer by at least `gap`.
struct PlantedInstance {
  TensorD cost;
  std::vector<int> sigma;
};

inline PlantedInstance planted_assignment(int r, double gap, RngStream& rng) {
  PlantedInstance inst;
  inst.cost = TensorD::zeros(Shape::of(r, r));
  inst.sigma.resize(r);
  std::iota(inst.sigma.begin(), inst.sigma.end(), 0);
  for (int i = r - 1; i > 0; --i)
    std::swap(inst.sigma[i], inst.sigma[rng.uniform_int(i + 1)]);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      inst.cost.at(i, j) = (j == inst.sigma[i])
                               ? rng.uniform(0.0, 0.05)
                               : rng.uniform(0.05 + gap, 0.05 + gap + 1.0);
  return inst;
}

}  // namespace testutil
