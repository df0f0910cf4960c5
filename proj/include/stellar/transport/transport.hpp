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

#include <vector>

#include "stellar/core/tensor.hpp"

namespace stellar::transport {

using core::TensorD;

// Row-stochastic soft assignments of N tokens over K prototypes, together
// with the softmax temperature that produced them.
struct AssignmentMatrix {
  TensorD values;      // N x K, rows sum to 1
  double temperature = 1.0;
};

// Balanced assignment targets. `values` is row-stochastic after the final
// row renormalization; `pre_renorm_col_dev` records how far the underlying
// plan's column sums were from N/K before that renormalization (the
// balancing convergence error).
struct BalancedTargets {
  TensorD values;  // N x K
  double pre_renorm_col_dev = 0.0;
};

// Entropic transport plan between two r-token sets with uniform marginals
// 1/r. Gradients never flow through a plan; it only selects indices.
struct TransportPlan {
  TensorD values;  // r x r
  double epsilon = 0.0;
  int iterations_used = 0;
  bool converged = false;
};

// sigma[j'] = index of the matched global-view token for transformed-view
// token j'.
struct Matching {
  std::vector<int> sigma;
  bool is_permutation() const;
};

// Balanced targets over exp(logits/temperature): `iters` rounds of
// column-then-row rescaling (columns toward N/K, rows toward 1) followed by
// a final row renormalization. Per-row max is subtracted before
// exponentiation. Throws std::invalid_argument on non-finite logits.
BalancedTargets sinkhorn_knopp(const TensorD& logits, double temperature,
                               int iters);

// Scale-relative default for the entropic regularizer: 0.05 * mean cost
// (floored at a tiny positive value for all-zero costs).
double default_epsilon(const TensorD& cost);

// Sinkhorn fixed point of the entropic transport problem with uniform 1/r
// marginals. Stops when both marginal deviations fall below `tol` or after
// `max_iters` rounds (then converged=false). Throws on epsilon <= 0 or bad
// cost matrices.
TransportPlan entropic_ot_plan(const TensorD& cost, double epsilon,
                               int max_iters = 200, double tol = 1e-6);

// Per-row argmax of the plan, ties broken toward the lowest index.
Matching extract_matching(const TransportPlan& plan);

// Lockstep batched matcher: all instances run the Sinkhorn rounds together
// with SIMD lanes striding the batch dimension, until every instance meets
// `tol` or `max_iters` is reached. Produces the same matchings as running
// entropic_ot_plan + extract_matching per instance.
std::vector<Matching> batched_entropic_matching(
    const std::vector<TensorD>& costs, const std::vector<double>& epsilons,
    int max_iters = 200, double tol = 1e-6);

// Exact minimum-cost perfect matching (Jonker-Volgenant shortest augmenting
// paths). Ties are resolved to the lexicographically smallest optimal
// permutation. Throws on non-square or non-finite input.
Matching hungarian(const TensorD& cost);

double matching_cost(const TensorD& cost, const Matching& m);

// cost[i][j] = ||a_i - b_j||_2 between two token sets (rows).
TensorD pairwise_l2_cost(const TensorD& a, const TensorD& b);

}  // namespace stellar::transport
