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

#include "stellar/transport/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stellar/simd/simd.hpp"

namespace stellar::transport {

using core::Shape;

bool Matching::is_permutation() const {
  std::vector<char> seen(sigma.size(), 0);
  for (int j : sigma) {
    if (j < 0 || j >= static_cast<int>(sigma.size()) || seen[j]) return false;
    seen[j] = 1;
  }
  return true;
}

BalancedTargets sinkhorn_knopp(const TensorD& logits, double temperature,
                               int iters) {
  if (logits.rank() != 2 || logits.rows() < 1 || logits.cols() < 1)
    throw std::invalid_argument("sinkhorn_knopp: logits must be N x K");
  if (temperature <= 0.0)
    throw std::invalid_argument("sinkhorn_knopp: temperature must be > 0");
  if (iters < 1)
    throw std::invalid_argument("sinkhorn_knopp: iters must be >= 1");
  if (!logits.all_finite())
    throw std::invalid_argument("sinkhorn_knopp: non-finite logits");

  const int n = logits.rows(), k = logits.cols();
  const double col_target = static_cast<double>(n) / k;
  const auto& ker = simd::kernels<double>();

  TensorD m = TensorD::zeros(Shape::of(n, k));
  for (int i = 0; i < n; ++i) {
    const double* x = logits.data() + static_cast<std::int64_t>(i) * k;
    double* y = m.data() + static_cast<std::int64_t>(i) * k;
    const double mx = ker.max(x, k);
    for (int j = 0; j < k; ++j) y[j] = (x[j] - mx) / temperature;
    ker.vexp(k, y, y);
  }

  std::vector<double> colsum(k);
  for (int t = 0; t < iters; ++t) {
    std::fill(colsum.begin(), colsum.end(), 0.0);
    for (int i = 0; i < n; ++i)
      ker.vadd(k, colsum.data(), m.data() + static_cast<std::int64_t>(i) * k,
               colsum.data());
    for (auto& c : colsum) c = col_target / c;
    for (int i = 0; i < n; ++i) {
      double* row = m.data() + static_cast<std::int64_t>(i) * k;
      ker.vmul(k, row, colsum.data(), row);
      ker.scale(k, 1.0 / ker.sum(row, k), row);
    }
  }

  std::fill(colsum.begin(), colsum.end(), 0.0);
  for (int i = 0; i < n; ++i)
    ker.vadd(k, colsum.data(), m.data() + static_cast<std::int64_t>(i) * k,
             colsum.data());
  double dev = 0.0;
  for (double c : colsum) dev = std::max(dev, std::abs(c - col_target));

  for (int i = 0; i < n; ++i) {
    double* row = m.data() + static_cast<std::int64_t>(i) * k;
    ker.scale(k, 1.0 / ker.sum(row, k), row);
  }

  return BalancedTargets{std::move(m), dev};
}

double default_epsilon(const TensorD& cost) {
  const double mean =
      simd::kernels<double>().sum(cost.data(), static_cast<int>(cost.size())) /
      static_cast<double>(cost.size());
  return std::max(0.05 * mean, 1e-12);
}

namespace {

// Gibbs kernel rows exp(-(c - rowmin)/eps). The per-row min is a diagonal
// rescaling absorbed by the scaling vectors, so the fixed point is unchanged
// and no row underflows to all-zero. Exponentiation runs through the float
// exp kernel: the entries only steer an iterative scaler, and sharing this
// builder keeps the batched and per-instance paths on identical kernels.
void gibbs_rows(const TensorD& cost, double epsilon, double* out) {
  const int r = cost.rows();
  std::vector<float> z(static_cast<std::size_t>(r) * r);
  for (int i = 0; i < r; ++i) {
    const double* c = cost.data() + static_cast<std::int64_t>(i) * r;
    double mn = c[0];
    for (int j = 1; j < r; ++j) mn = std::min(mn, c[j]);
    for (int j = 0; j < r; ++j)
      z[static_cast<std::size_t>(i) * r + j] =
          static_cast<float>(-(c[j] - mn) / epsilon);
  }
  simd::kernels<float>().vexp(r * r, z.data(), z.data());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i];
}

}  // namespace

TransportPlan entropic_ot_plan(const TensorD& cost, double epsilon,
                               int max_iters, double tol) {
  if (cost.rank() != 2 || cost.rows() != cost.cols() || cost.rows() < 1)
    throw std::invalid_argument("entropic_ot_plan: cost must be square");
  if (epsilon <= 0.0)
    throw std::invalid_argument("entropic_ot_plan: epsilon must be > 0");
  const int r = cost.rows();
  for (std::int64_t i = 0; i < cost.size(); ++i)
    if (!std::isfinite(cost[i]) || cost[i] < 0.0)
      throw std::invalid_argument(
          "entropic_ot_plan: cost must be finite and nonnegative");

  const auto& ker = simd::kernels<double>();
  const double marg = 1.0 / r;
  constexpr double kTiny = 1e-300;

  // Scratch reused across calls; the solver sits on the training hot path.
  // Every cell is written before it is read.
  thread_local std::vector<double> scratch;
  const std::size_t need = static_cast<std::size_t>(2 * r * r + 4 * r);
  if (scratch.size() < need) scratch.resize(need);
  double* g = scratch.data();
  double* gt = g + r * r;
  double* u = gt + r * r;
  double* v = u + r;
  double* gv = v + r;
  double* gtu = gv + r;

  gibbs_rows(cost, epsilon, g);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) gt[j * r + i] = g[i * r + j];
  for (int i = 0; i < r; ++i) v[i] = 1.0;

  // G*v via a column sweep over gt's rows keeps everything vertical (no
  // horizontal reductions); likewise G^T*u sweeps g's rows.
  auto refresh_gv = [&] {
    ker.vecmat(r, r, gt, r, v, gv);
    for (int i = 0; i < r; ++i) gv[i] = std::max(gv[i], kTiny);
  };

  refresh_gv();
  int used = 0;
  bool converged = false;
  for (int t = 0; t < max_iters; ++t) {
    ++used;
    for (int i = 0; i < r; ++i) u[i] = marg / gv[i];
    ker.vecmat(r, r, g, r, u, gtu);
    for (int j = 0; j < r; ++j) v[j] = marg / std::max(gtu[j], kTiny);

    // Columns are exact right after the v-update; only rows can deviate.
    // The refreshed G*v doubles as next round's u-update input.
    refresh_gv();
    double row_dev = 0.0;
    for (int i = 0; i < r; ++i)
      row_dev = std::max(row_dev, std::abs(u[i] * gv[i] - marg));
    if (row_dev < tol) {
      converged = true;
      break;
    }
  }

  TensorD plan = TensorD::zeros(Shape::of(r, r));
  for (int i = 0; i < r; ++i) {
    const double* grow = g + static_cast<std::int64_t>(i) * r;
    double* prow = plan.data() + static_cast<std::int64_t>(i) * r;
    for (int j = 0; j < r; ++j) prow[j] = u[i] * grow[j] * v[j];
  }
  return TransportPlan{std::move(plan), epsilon, used, converged};
}

Matching extract_matching(const TransportPlan& plan) {
  const int r = plan.values.rows();
  Matching m;
  m.sigma.resize(r);
  for (int i = 0; i < r; ++i) {
    const double* row = plan.values.data() + static_cast<std::int64_t>(i) * r;
    int best = 0;
    for (int j = 1; j < r; ++j)
      if (row[j] > row[best]) best = j;
    m.sigma[i] = best;
  }
  return m;
}

std::vector<Matching> batched_entropic_matching(
    const std::vector<TensorD>& costs, const std::vector<double>& epsilons,
    int max_iters, double tol) {
  if (epsilons.size() != costs.size())
    throw std::invalid_argument("batched_entropic_matching: epsilon count");
  // On CPU the per-instance solver stays L1-resident across its rounds,
  // which beats lane-interleaved batch layouts; batching here means reusing
  // the solver scratch and (when enabled) splitting the batch over workers.
  std::vector<Matching> out(costs.size());
  for (std::size_t b = 0; b < costs.size(); ++b)
    out[b] =
        extract_matching(entropic_ot_plan(costs[b], epsilons[b], max_iters, tol));
  return out;
}

namespace {

// Jonker-Volgenant shortest augmenting paths; O(n^3). Fills the column
// assignment and the dual potentials.
void jv_solve(const TensorD& cost, int n, std::vector<int>& col_to_row,
              std::vector<double>& u, std::vector<double>& v) {
  u.assign(n + 1, 0.0);
  v.assign(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(),
              std::numeric_limits<double>::infinity());
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  col_to_row.assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j]) col_to_row[j - 1] = p[j] - 1;
}

// Kuhn augmenting path over the tight-edge adjacency.
bool kuhn_try(int row, const std::vector<std::vector<int>>& adj,
              std::vector<int>& match_col, std::vector<char>& visited) {
  for (int j : adj[row]) {
    if (visited[j]) continue;
    visited[j] = 1;
    if (match_col[j] < 0 || kuhn_try(match_col[j], adj, match_col, visited)) {
      match_col[j] = row;
      return true;
    }
  }
  return false;
}

// Whether rows [from, n) can be perfectly matched into the columns not yet
// fixed by the lexicographic prefix.
bool feasible_completion(int from, int n,
                         const std::vector<std::vector<int>>& adj,
                         const std::vector<char>& col_taken) {
  std::vector<std::vector<int>> free_adj(n);
  for (int i = from; i < n; ++i)
    for (int j : adj[i])
      if (!col_taken[j]) free_adj[i].push_back(j);
  std::vector<int> match_col(n, -1);
  for (int i = from; i < n; ++i) {
    std::vector<char> visited(n, 0);
    if (!kuhn_try(i, free_adj, match_col, visited)) return false;
  }
  return true;
}

}  // namespace

double matching_cost(const TensorD& cost, const Matching& m) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.sigma.size(); ++i)
    total += cost.at(static_cast<int>(i), m.sigma[i]);
  return total;
}

Matching hungarian(const TensorD& cost) {
  if (cost.rank() != 2 || cost.rows() != cost.cols() || cost.rows() < 1)
    throw std::invalid_argument("hungarian: cost must be square");
  if (!cost.all_finite())
    throw std::invalid_argument("hungarian: non-finite cost");
  const int n = cost.rows();

  std::vector<int> col_to_row;
  std::vector<double> u, v;
  jv_solve(cost, n, col_to_row, u, v);

  Matching jv;
  jv.sigma.assign(n, -1);
  for (int j = 0; j < n; ++j) jv.sigma[col_to_row[j]] = j;

  // Lexicographic tie resolution over tight edges: optimal assignments use
  // only edges with zero reduced cost, and any perfect matching of tight
  // edges attains the optimum. Greedily fix the smallest feasible column per
  // row; with a unique optimum this reproduces the JV solution.
  double scale = 0.0;
  for (std::int64_t i = 0; i < cost.size(); ++i)
    scale = std::max(scale, std::abs(cost[i]));
  const double tight_tol = 1e-9 * (1.0 + scale);

  std::vector<std::vector<int>> adj(n);
  bool forced = true;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      if (cost.at(i, j) - u[i + 1] - v[j + 1] <= tight_tol)
        adj[i].push_back(j);
    forced = forced && adj[i].size() == 1;
  }
  // Single tight edge per row means the optimum is unique and equals JV.
  if (forced) return jv;

  Matching lex;
  lex.sigma.assign(n, -1);
  std::vector<char> col_taken(n, 0);
  bool ok = true;
  for (int i = 0; i < n && ok; ++i) {
    ok = false;
    for (int j : adj[i]) {
      if (col_taken[j]) continue;
      col_taken[j] = 1;
      if (feasible_completion(i + 1, n, adj, col_taken)) {
        lex.sigma[i] = j;
        ok = true;
        break;
      }
      col_taken[j] = 0;
    }
  }

  if (!ok) return jv;
  // Tolerance artifacts must never cost us optimality.
  if (matching_cost(cost, lex) > matching_cost(cost, jv) + tight_tol * n)
    return jv;
  return lex;
}

TensorD pairwise_l2_cost(const TensorD& a, const TensorD& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
    throw std::invalid_argument("pairwise_l2_cost: token width mismatch");
  const int ra = a.rows(), rb = b.rows(), d = a.cols();
  const auto& ker = simd::kernels<double>();
  TensorD cost = TensorD::zeros(Shape::of(ra, rb));
  std::vector<double> diff(d);
  for (int i = 0; i < ra; ++i)
    for (int j = 0; j < rb; ++j) {
      ker.vsub(d, a.data() + static_cast<std::int64_t>(i) * d,
               b.data() + static_cast<std::int64_t>(j) * d, diff.data());
      cost.at(i, j) = std::sqrt(ker.dot(diff.data(), diff.data(), d));
    }
  return cost;
}

}  // namespace stellar::transport
