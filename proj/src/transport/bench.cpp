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

#include "stellar/transport/bench.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "stellar/core/parallel.hpp"
#include "stellar/core/rng.hpp"
#include "stellar/core/tensor.hpp"
#include "stellar/transport/transport.hpp"

namespace stellar::transport {

using core::RngStream;
using core::Shape;
using core::TensorD;
using Clock = std::chrono::steady_clock;

namespace {

TensorD random_tokens(int r, int d, RngStream& rng) {
  TensorD t = TensorD::zeros(Shape::of(r, d));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  sd = 0.0;
  for (double x : xs) sd += (x - mean) * (x - mean);
  sd = xs.size() > 1 ? std::sqrt(sd / (xs.size() - 1)) : 0.0;
}

}  // namespace

std::vector<BenchRow> bench_matching(const std::vector<int>& batch_sizes,
                                     int r, int repeats, std::uint64_t seed) {
  for (int b : batch_sizes)
    if (b < 1) throw std::invalid_argument("bench_matching: batch size < 1");
  if (r < 1 || repeats < 1)
    throw std::invalid_argument("bench_matching: r and repeats must be >= 1");

  // Correctness cross-check before timing: on a well-separated cost both
  // solvers must recover the planted permutation.
  {
    RngStream rng(seed, 0xC0DE);
    const int rc = std::max(2, r);
    TensorD cost = TensorD::zeros(Shape::of(rc, rc));
    std::vector<int> planted(rc);
    for (int i = 0; i < rc; ++i) planted[i] = (i + 1) % rc;
    for (int i = 0; i < rc; ++i)
      for (int j = 0; j < rc; ++j)
        cost.at(i, j) = (j == planted[i]) ? rng.uniform(0.0, 0.05)
                                          : rng.uniform(1.0, 2.0);
    const Matching hm = hungarian(cost);
    const Matching sm =
        extract_matching(entropic_ot_plan(cost, default_epsilon(cost)));
    if (hm.sigma != planted || sm.sigma != planted)
      throw std::runtime_error(
          "bench_matching: solver cross-check failed on separated costs");
  }

  const int d = 16;
  std::vector<BenchRow> rows;
  for (int batch : batch_sizes) {
    std::vector<TensorD> costs;
    std::vector<double> epsilons;
    costs.reserve(batch);
    for (int b = 0; b < batch; ++b) {
      RngStream rng(seed, static_cast<std::uint64_t>(batch), b);
      TensorD s0 = random_tokens(r, d, rng);
      TensorD s1 = random_tokens(r, d, rng);
      costs.push_back(pairwise_l2_cost(s1, s0));
      epsilons.push_back(default_epsilon(costs.back()));
    }

    std::vector<double> sk_times(repeats), hu_times(repeats);
    bool parallel = false;
    std::vector<Matching> out(batch);
    const int workers_avail = std::min(core::max_threads(), batch);
    const int chunk = (batch + workers_avail - 1) / workers_avail;
    const int nchunks = (batch + chunk - 1) / chunk;
    for (int rep = 0; rep < repeats; ++rep) {
      auto t0 = Clock::now();
      const int workers = core::parallel_for(0, nchunks, [&](int c) {
        const int lo = c * chunk, hi = std::min(batch, lo + chunk);
        std::vector<TensorD> cs(costs.begin() + lo, costs.begin() + hi);
        std::vector<double> es(epsilons.begin() + lo, epsilons.begin() + hi);
        auto ms = batched_entropic_matching(cs, es);
        for (int b = lo; b < hi; ++b) out[b] = std::move(ms[b - lo]);
      });
      sk_times[rep] = seconds_since(t0);
      parallel = parallel || workers > 1;

      t0 = Clock::now();
      for (int b = 0; b < batch; ++b) out[b] = hungarian(costs[b]);
      hu_times[rep] = seconds_since(t0);
    }

    BenchRow sk{"sinkhorn", batch, r, repeats, 0.0, 0.0, parallel};
    mean_std(sk_times, sk.mean_seconds, sk.std_seconds);
    BenchRow hu{"hungarian", batch, r, repeats, 0.0, 0.0, false};
    mean_std(hu_times, hu.mean_seconds, hu.std_seconds);
    rows.push_back(sk);
    rows.push_back(hu);
  }
  return rows;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "method,batch_size,r,repeats,mean_seconds,std_seconds,parallel\n";
  for (const auto& row : rows)
    os << row.method << ',' << row.batch_size << ',' << row.r << ','
       << row.repeats << ',' << row.mean_seconds << ',' << row.std_seconds
       << ',' << (row.parallel ? 1 : 0) << '\n';
}

}  // namespace stellar::transport
