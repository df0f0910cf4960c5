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

#include "stellar/objectives/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace stellar::objectives {

using core::Shape;
using core::TensorD;

void LossWeights::validate() const {
  const double ws[6] = {recon, cluster, align, cluster_cls, align_cls, koleo};
  bool any = false;
  for (double w : ws) {
    if (w < 0.0 || !std::isfinite(w))
      throw std::invalid_argument("loss weights must be nonnegative");
    any = any || w > 0.0;
  }
  if (!any) throw std::invalid_argument("at least one loss weight must be > 0");
}

double recon_loss(const TensorD& decoded, const TensorD& target) {
  if (decoded.shape() != target.shape())
    throw std::invalid_argument("recon_loss: shape mismatch " +
                                decoded.shape().str() + " vs " +
                                target.shape().str());
  double acc = 0.0;
  for (std::int64_t i = 0; i < decoded.size(); ++i) {
    const double d = decoded[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(decoded.size());
}

TensorD prototype_logits(const TensorD& projected,
                         const TensorD& prototypes_unit) {
  if (projected.cols() != prototypes_unit.cols())
    throw std::invalid_argument("prototype_logits: width mismatch");
  core::Graph<double> g(true);
  const int h = g.l2_normalize_rows(g.constant(projected), 1e-8);
  const int out = g.matmul_nt(h, g.constant(prototypes_unit));
  return g.value(out).clone();
}

AssignmentMatrix soft_assign(const TensorD& logits, double temperature) {
  if (temperature <= 0.0)
    throw std::invalid_argument("soft_assign: temperature must be > 0");
  core::Graph<double> g(true);
  const int out = g.softmax_rows(g.constant(logits), temperature);
  return AssignmentMatrix{g.value(out).clone(), temperature};
}

namespace {

// Shared row cross-entropy: -(1/rows) sum w_ik log(max(q_ik, 1e-12)).
double ce_rows(const TensorD& weights, const TensorD& q) {
  if (weights.shape() != q.shape())
    throw std::invalid_argument("cross-entropy: shape mismatch");
  double acc = 0.0;
  for (std::int64_t i = 0; i < q.size(); ++i)
    acc -= weights[i] * std::log(std::max(q[i], 1e-12));
  return acc / weights.rows();
}

}  // namespace

double cluster_loss(const BalancedTargets& targets,
                    const AssignmentMatrix& assignments) {
  return ce_rows(targets.values, assignments.values);
}

double align_loss(const BalancedTargets& global_targets,
                  const AssignmentMatrix& view_assignments,
                  const Matching& matching) {
  if (static_cast<int>(matching.sigma.size()) != view_assignments.values.rows())
    throw std::invalid_argument("align_loss: matching length mismatch");
  const TensorD reordered =
      gather_targets<double>(global_targets.values, matching);
  return ce_rows(reordered, view_assignments.values);
}

std::pair<double, double> cls_cluster_and_align(
    const BalancedTargets& cls_targets, const AssignmentMatrix& cls_assign,
    const AssignmentMatrix& cls_view_assign) {
  const double cluster = ce_rows(cls_targets.values, cls_assign.values);
  Matching ident;
  ident.sigma.resize(cls_view_assign.values.rows());
  for (std::size_t i = 0; i < ident.sigma.size(); ++i)
    ident.sigma[i] = static_cast<int>(i);
  const double align = align_loss(cls_targets, cls_view_assign, ident);
  return {cluster, align};
}

double koleo_loss(const TensorD& tokens) {
  core::Graph<double> g(true);
  const int out = g.koleo(g.constant(tokens), 1e-8);
  return g.value(out)[0];
}

LossBreakdown total_objective(double recon, double cluster, double align,
                              double cluster_cls, double align_cls,
                              double koleo, const LossWeights& w) {
  w.validate();
  const struct {
    const char* name;
    double value;
  } terms[] = {{"recon", recon},         {"cluster", cluster},
               {"align", align},         {"cluster_cls", cluster_cls},
               {"align_cls", align_cls}, {"koleo", koleo}};
  for (const auto& t : terms)
    if (!std::isfinite(t.value))
      throw std::runtime_error(
          std::string("total_objective: non-finite term ") + t.name);
  LossBreakdown b;
  b.recon = recon;
  b.cluster = cluster;
  b.align = align;
  b.cluster_cls = cluster_cls;
  b.align_cls = align_cls;
  b.koleo = koleo;
  b.total = w.recon * recon + w.cluster * cluster + w.align * align +
            w.cluster_cls * cluster_cls + w.align_cls * align_cls +
            w.koleo * koleo;
  return b;
}

}  // namespace stellar::objectives
