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

#include <cstring>
#include <sstream>

#include "doctest.h"
#include "stellar/core/rng.hpp"
#include "stellar/transport/bench.hpp"
#include "stellar/transport/transport.hpp"
#include "test_util.hpp"

using namespace stellar::transport;
using stellar::core::RngStream;
using stellar::core::Shape;
using stellar::core::TensorD;

namespace {

TensorD random_logits(int n, int k, RngStream& rng, double scale = 1.0) {
  TensorD t = TensorD::zeros(Shape::of(n, k));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

}  // namespace

TEST_CASE("sinkhorn_knopp: all-zero logits balance to uniform") {
  auto out = sinkhorn_knopp(TensorD::zeros(Shape::of(4, 2)), 1.0, 3);
  for (std::int64_t i = 0; i < out.values.size(); ++i)
    CHECK(out.values[i] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.pre_renorm_col_dev < 1e-12);
}

TEST_CASE("sinkhorn_knopp: strong diagonal logits converge to identity") {
  TensorD logits = TensorD::from(Shape::of(2, 2), {10, -10, -10, 10});
  auto out = sinkhorn_knopp(logits, 1.0, 3);
  // independent hand-run oracle
  TensorD expect = testutil::sinkhorn_oracle(logits, 1.0, 3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(out.values.at(i, j) ==
            doctest::Approx(expect.at(i, j)).epsilon(1e-10));
      CHECK(std::abs(out.values.at(i, j) - (i == j ? 1.0 : 0.0)) < 1e-4);
    }
}

TEST_CASE("sinkhorn_knopp matches the hand-run oracle on random logits") {
  RngStream rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    TensorD logits = random_logits(7, 5, rng, 2.0);
    auto out = sinkhorn_knopp(logits, 0.4, 3);
    TensorD expect = testutil::sinkhorn_oracle(logits, 0.4, 3);
    for (std::int64_t i = 0; i < logits.size(); ++i)
      CHECK(out.values[i] == doctest::Approx(expect[i]).epsilon(1e-9));
  }
}

TEST_CASE("sinkhorn_knopp: 100 iterations hit the fixed point") {
  RngStream rng(22);
  TensorD logits = random_logits(48, 16, rng, 1.5);
  auto out = sinkhorn_knopp(logits, 1.0, 100);
  CHECK(out.pre_renorm_col_dev < 1e-6);
  // rows sum to 1 after renormalization
  for (int i = 0; i < 48; ++i) {
    double s = 0.0;
    for (int j = 0; j < 16; ++j) s += out.values.at(i, j);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("sinkhorn_knopp is invariant to per-row logit shifts") {
  RngStream rng(23);
  TensorD logits = random_logits(6, 4, rng);
  TensorD shifted = logits.clone();
  for (int i = 0; i < 6; ++i) {
    const double c = rng.uniform(-5.0, 5.0);
    for (int j = 0; j < 4; ++j) shifted.at(i, j) += c;
  }
  auto a = sinkhorn_knopp(logits, 0.7, 3);
  auto b = sinkhorn_knopp(shifted, 0.7, 3);
  for (std::int64_t i = 0; i < a.values.size(); ++i)
    CHECK(std::abs(a.values[i] - b.values[i]) < 1e-10);
}

TEST_CASE("sinkhorn_knopp rejects bad inputs") {
  TensorD bad = TensorD::zeros(Shape::of(2, 2));
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sinkhorn_knopp(bad, 1.0, 3), std::invalid_argument);
  TensorD ok = TensorD::zeros(Shape::of(2, 2));
  CHECK_THROWS_AS(sinkhorn_knopp(ok, 0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(sinkhorn_knopp(ok, 1.0, 0), std::invalid_argument);
}

TEST_CASE("entropic_ot_plan: zero cost gives the uniform plan") {
  auto plan = entropic_ot_plan(TensorD::zeros(Shape::of(4, 4)), 0.1);
  CHECK(plan.converged);
  for (std::int64_t i = 0; i < plan.values.size(); ++i)
    CHECK(plan.values[i] == doctest::Approx(1.0 / 16).epsilon(1e-9));
}

TEST_CASE("entropic_ot_plan: peaked diagonal matches the Birkhoff oracle") {
  const double big = 100.0;
  TensorD cost = TensorD::constant(Shape::of(3, 3), big);
  for (int i = 0; i < 3; ++i) cost.at(i, i) = 0.0;
  auto plan = entropic_ot_plan(cost, big / 100.0);
  REQUIRE(plan.converged);
  // exact transport optimum over the Birkhoff vertices (permutations / r)
  auto sigma = testutil::brute_force_assignment(cost);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double vertex = (sigma[i] == j) ? 1.0 / 3 : 0.0;
      CHECK(std::abs(plan.values.at(i, j) - vertex) < 1e-6);
    }
}

TEST_CASE("entropic_ot_plan recovers a token permutation") {
  RngStream rng(31);
  const int r = 6, d = 8;
  TensorD base = random_logits(r, d, rng);
  std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  TensorD shuffled = TensorD::zeros(Shape::of(r, d));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < d; ++j) shuffled.at(i, j) = base.at(perm[i], j);
  // cost rows: shuffled tokens, cols: base tokens; argmax row i -> perm[i]
  TensorD cost = pairwise_l2_cost(shuffled, base);
  auto m = extract_matching(entropic_ot_plan(cost, default_epsilon(cost)));
  auto h = hungarian(cost);
  CHECK(m.sigma == perm);
  CHECK(h.sigma == perm);
  CHECK(m.is_permutation());
}

TEST_CASE("entropic_ot_plan marginals meet tolerance when converged") {
  RngStream rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 8;
    TensorD a = random_logits(r, 8, rng), b = random_logits(r, 8, rng);
    TensorD cost = pairwise_l2_cost(a, b);
    auto plan = entropic_ot_plan(cost, default_epsilon(cost), 2000, 1e-8);
    REQUIRE(plan.converged);
    CHECK(plan.iterations_used <= 2000);
    for (int i = 0; i < r; ++i) {
      double rs = 0.0, cs = 0.0;
      for (int j = 0; j < r; ++j) {
        rs += plan.values.at(i, j);
        cs += plan.values.at(j, i);
        CHECK(plan.values.at(i, j) >= 0.0);
      }
      CHECK(std::abs(rs - 1.0 / r) < 1e-8);
      CHECK(std::abs(cs - 1.0 / r) < 1e-8);
    }
  }
}

TEST_CASE("entropic_ot_plan rejects bad inputs and flags non-convergence") {
  TensorD cost = TensorD::zeros(Shape::of(3, 3));
  CHECK_THROWS_AS(entropic_ot_plan(cost, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(entropic_ot_plan(cost, -1.0), std::invalid_argument);
  TensorD rect = TensorD::zeros(Shape::of(2, 3));
  CHECK_THROWS_AS(entropic_ot_plan(rect, 0.1), std::invalid_argument);
  TensorD neg = TensorD::constant(Shape::of(2, 2), -1.0);
  CHECK_THROWS_AS(entropic_ot_plan(neg, 0.1), std::invalid_argument);

  RngStream rng(33);
  TensorD hard = TensorD::zeros(Shape::of(5, 5));
  for (std::int64_t i = 0; i < hard.size(); ++i) hard[i] = rng.uniform(0.0, 1.0);
  auto plan = entropic_ot_plan(hard, 1e-4, 1, 1e-12);
  CHECK_FALSE(plan.converged);
  CHECK(plan.iterations_used == 1);
}

TEST_CASE("extract_matching: argmax with lowest-index ties") {
  TransportPlan plan;
  plan.values = TensorD::from(Shape::of(2, 2), {0.4, 0.1, 0.1, 0.4});
  CHECK(extract_matching(plan).sigma == std::vector<int>{0, 1});
  plan.values = TensorD::from(Shape::of(2, 2), {0.1, 0.4, 0.4, 0.1});
  CHECK(extract_matching(plan).sigma == std::vector<int>{1, 0});
  plan.values = TensorD::constant(Shape::of(3, 3), 1.0 / 6);
  CHECK(extract_matching(plan).sigma == std::vector<int>{0, 0, 0});
}

TEST_CASE("hungarian: identity and 2x2 brute-force cases") {
  TensorD ident = TensorD::constant(Shape::of(4, 4), 1.0);
  for (int i = 0; i < 4; ++i) ident.at(i, i) = 0.0;
  auto m = hungarian(ident);
  CHECK(m.sigma == std::vector<int>{0, 1, 2, 3});
  CHECK(matching_cost(ident, m) == 0.0);

  TensorD c = TensorD::from(Shape::of(2, 2), {4, 1, 2, 3});
  double bf_cost = 0.0;
  auto bf = testutil::brute_force_assignment(c, &bf_cost);
  auto hm = hungarian(c);
  CHECK(hm.sigma == bf);
  CHECK(hm.sigma == std::vector<int>{1, 0});
  CHECK(matching_cost(c, hm) == doctest::Approx(3.0));
  CHECK(bf_cost == doctest::Approx(3.0));
}

TEST_CASE("hungarian equals exhaustive search on random instances") {
  RngStream rng(41);
  for (int r = 2; r <= 6; ++r) {
    for (int trial = 0; trial < 40; ++trial) {
      TensorD cost = TensorD::zeros(Shape::of(r, r));
      for (std::int64_t i = 0; i < cost.size(); ++i)
        cost[i] = rng.uniform(0.0, 1.0);
      double bf_cost = 0.0;
      auto bf = testutil::brute_force_assignment(cost, &bf_cost);
      auto hm = hungarian(cost);
      CHECK(matching_cost(cost, hm) == doctest::Approx(bf_cost).epsilon(1e-12));
      CHECK(hm.sigma == bf);
    }
  }
}

TEST_CASE("hungarian resolves ties lexicographically") {
  CHECK(hungarian(TensorD::zeros(Shape::of(3, 3))).sigma ==
        std::vector<int>{0, 1, 2});
  CHECK(hungarian(TensorD::constant(Shape::of(2, 2), 7.0)).sigma ==
        std::vector<int>{0, 1});
  // greedy-by-row would dead-end here: row 0 must skip column 0
  TensorD c = TensorD::constant(Shape::of(3, 3), 1.0);
  c.at(0, 0) = 0.0;
  c.at(0, 1) = 0.0;
  c.at(1, 0) = 0.0;
  c.at(2, 1) = 0.0;
  c.at(2, 2) = 0.0;
  auto m = hungarian(c);
  CHECK(m.sigma == std::vector<int>{1, 0, 2});
  CHECK(matching_cost(c, m) == 0.0);
}

TEST_CASE("hungarian rejects bad inputs") {
  CHECK_THROWS_AS(hungarian(TensorD::zeros(Shape::of(2, 3))),
                  std::invalid_argument);
  TensorD nan = TensorD::zeros(Shape::of(2, 2));
  nan[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(hungarian(nan), std::invalid_argument);
}

TEST_CASE("entropic matching equals hungarian on separated instances") {
  RngStream rng(55);
  const double eps = 0.01;
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = testutil::planted_assignment(16, 10.0 * eps, rng);
    auto h = hungarian(inst.cost);
    auto s = extract_matching(entropic_ot_plan(inst.cost, eps));
    CHECK(h.sigma == inst.sigma);
    CHECK(s.sigma == inst.sigma);
  }
}

TEST_CASE("solvers are pure: identical inputs give bitwise-identical output") {
  RngStream rng(66);
  TensorD logits = random_logits(9, 5, rng);
  auto t1 = sinkhorn_knopp(logits, 0.5, 3);
  auto t2 = sinkhorn_knopp(logits, 0.5, 3);
  CHECK(std::memcmp(t1.values.data(), t2.values.data(),
                    sizeof(double) * t1.values.size()) == 0);

  TensorD cost = pairwise_l2_cost(random_logits(7, 4, rng),
                                  random_logits(7, 4, rng));
  auto p1 = entropic_ot_plan(cost, 0.05);
  auto p2 = entropic_ot_plan(cost, 0.05);
  CHECK(p1.iterations_used == p2.iterations_used);
  CHECK(std::memcmp(p1.values.data(), p2.values.data(),
                    sizeof(double) * p1.values.size()) == 0);
  CHECK(extract_matching(p1).sigma == extract_matching(p2).sigma);
  CHECK(hungarian(cost).sigma == hungarian(cost).sigma);
}

TEST_CASE("batched matcher agrees with the per-instance solver") {
  RngStream rng(77);
  std::vector<TensorD> costs;
  std::vector<double> eps;
  for (int b = 0; b < 13; ++b) {
    TensorD a = random_logits(16, 12, rng), s = random_logits(16, 12, rng);
    costs.push_back(pairwise_l2_cost(a, s));
    eps.push_back(default_epsilon(costs.back()));
  }
  auto batched = batched_entropic_matching(costs, eps);
  REQUIRE(batched.size() == costs.size());
  for (std::size_t b = 0; b < costs.size(); ++b) {
    auto single = extract_matching(entropic_ot_plan(costs[b], eps[b]));
    CHECK(batched[b].sigma == single.sigma);
  }
}

TEST_CASE("pairwise_l2_cost: zero diagonal on identical ordered sets") {
  RngStream rng(67);
  TensorD s = random_logits(5, 3, rng);
  TensorD cost = pairwise_l2_cost(s, s);
  for (int i = 0; i < 5; ++i) {
    CHECK(cost.at(i, i) == 0.0);
    for (int j = 0; j < 5; ++j) CHECK(cost.at(i, j) >= 0.0);
  }
}

TEST_CASE("bench_matching emits the fixed CSV schema") {
  auto rows = bench_matching({1, 2}, 4, 2, 123);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].method == "sinkhorn");
  CHECK(rows[1].method == "hungarian");
  CHECK(rows[0].batch_size == 1);
  CHECK(rows[2].batch_size == 2);
  for (const auto& r : rows) {
    CHECK(r.mean_seconds >= 0.0);
    CHECK(r.repeats == 2);
  }
  std::ostringstream os;
  write_bench_csv(os, rows);
  const std::string text = os.str();
  CHECK(text.rfind("method,batch_size,r,repeats,mean_seconds,std_seconds,"
                   "parallel\n", 0) == 0);
  int lines = 0;
  for (char ch : text)
    if (ch == '\n') ++lines;
  CHECK(lines == 5);
}
