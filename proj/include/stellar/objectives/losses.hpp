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

#include <string>

#include "stellar/core/graph.hpp"
#include "stellar/core/tensor.hpp"
#include "stellar/transport/transport.hpp"

namespace stellar::objectives {

using transport::AssignmentMatrix;
using transport::BalancedTargets;
using transport::Matching;

// Term weights of the total objective. CLS terms and the spreading
// regularizer default below the three main terms.
struct LossWeights {
  double recon = 1.0;
  double cluster = 1.0;
  double align = 1.0;
  double cluster_cls = 0.5;
  double align_cls = 0.5;
  double koleo = 0.1;

  void validate() const;
};

struct LossBreakdown {
  double recon = 0.0;
  double cluster = 0.0;
  double align = 0.0;
  double cluster_cls = 0.0;
  double align_cls = 0.0;
  double koleo = 0.0;
  double total = 0.0;
};

// --------------------------------------------------------------------------
// Value-level operations (double precision). These are thin wrappers over
// the same formulas the graph builders below use in training.
// --------------------------------------------------------------------------

// Mean squared error over pixels.
double recon_loss(const core::TensorD& decoded, const core::TensorD& target);

// Inner products of projected-and-normalized tokens with unit-norm
// prototypes. `projected` must already be the projector output h(s) BEFORE
// normalization; rows are normalized here (epsilon-stabilized).
core::TensorD prototype_logits(const core::TensorD& projected,
                               const core::TensorD& prototypes_unit);

// Row-wise softmax with temperature.
AssignmentMatrix soft_assign(const core::TensorD& logits, double temperature);

// -(1/N) sum_ik targets_ik log(assignments_ik), log floored at 1e-12.
double cluster_loss(const BalancedTargets& targets,
                    const AssignmentMatrix& assignments);

// -(1/r) sum_j' sum_k targets_{sigma(j'),k} log(assignments_{j',k}).
double align_loss(const BalancedTargets& global_targets,
                  const AssignmentMatrix& view_assignments,
                  const Matching& matching);

// Cluster and align specialized to the CLS token (single row, no matching).
// Returns {cluster_cls, align_cls}.
std::pair<double, double> cls_cluster_and_align(
    const BalancedTargets& cls_targets, const AssignmentMatrix& cls_assign,
    const AssignmentMatrix& cls_view_assign);

// Nearest-neighbor spreading penalty on row-normalized tokens.
double koleo_loss(const core::TensorD& tokens);

// Weighted sum; throws std::runtime_error naming the term if any component
// is non-finite.
LossBreakdown total_objective(double recon, double cluster, double align,
                              double cluster_cls, double align_cls,
                              double koleo, const LossWeights& w);

// --------------------------------------------------------------------------
// Graph builders (differentiable path). Targets are plain tensors: they are
// gradient-stopped by construction.
// --------------------------------------------------------------------------

template <typename T>
typename core::Graph<T>::Ref recon_loss_g(core::Graph<T>& g, int decoded,
                                          const core::Tensor<T>& target) {
  return g.mse(decoded, target);
}

// logits = normalize(project(tokens)) . prototypes^T. `project` maps a token
// matrix ref to the projector output ref; prototypes must be unit rows.
template <typename T, typename ProjectFn>
int prototype_logits_g(core::Graph<T>& g, int tokens, ProjectFn&& project,
                       int prototypes_unit) {
  const int h = g.l2_normalize_rows(project(tokens), T(1e-8));
  return g.matmul_nt(h, prototypes_unit);
}

template <typename T>
int soft_assign_g(core::Graph<T>& g, int logits, T temperature) {
  return g.softmax_rows(logits, temperature);
}

// Cross-entropy of row-stochastic constant targets against log-softmax of
// logits at temperature tau, averaged over rows.
template <typename T>
int cross_entropy_g(core::Graph<T>& g, const core::Tensor<T>& targets,
                    int logits, T tau) {
  const int rows = targets.rows();
  const int logq = g.log_softmax_rows(logits, tau);
  return g.weighted_sum(logq, targets, T(-1) / T(rows));
}

template <typename T>
int cluster_loss_g(core::Graph<T>& g, const core::Tensor<T>& targets,
                   int logits, T tau) {
  return cross_entropy_g(g, targets, logits, tau);
}

// Reorders the global targets by the matching, then applies the same
// cross-entropy as the cluster path.
template <typename T>
core::Tensor<T> gather_targets(const core::Tensor<T>& targets,
                               const Matching& m) {
  const int r = static_cast<int>(m.sigma.size());
  core::Tensor<T> out = core::Tensor<T>::zeros(core::Shape::of(r, targets.cols()));
  for (int j = 0; j < r; ++j) {
    const int src = m.sigma[j];
    if (src < 0 || src >= targets.rows())
      throw std::invalid_argument("align_loss: matching index out of range");
    for (int k = 0; k < targets.cols(); ++k) out.at(j, k) = targets.at(src, k);
  }
  return out;
}

template <typename T>
int align_loss_g(core::Graph<T>& g, const core::Tensor<T>& global_targets,
                 int view_logits, T tau, const Matching& m) {
  return cross_entropy_g(g, gather_targets(global_targets, m), view_logits, tau);
}

template <typename T>
int koleo_loss_g(core::Graph<T>& g, int tokens) {
  return g.koleo(tokens, T(1e-8));
}

}  // namespace stellar::objectives
