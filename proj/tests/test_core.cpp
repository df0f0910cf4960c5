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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "stellar/core/gradcheck.hpp"
#include "stellar/core/graph.hpp"
#include "stellar/core/rng.hpp"
#include "stellar/core/tensor.hpp"

using stellar::core::Graph;
using stellar::core::grad_check;
using stellar::core::RngStream;
using stellar::core::Shape;
using stellar::core::Tensor;
using stellar::core::TensorD;

namespace {

TensorD random_tensor(Shape s, RngStream& rng, double scale = 1.0) {
  TensorD t = TensorD::zeros(s);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

// Runs grad_check on a scalar-valued builder: build(g, leaf_refs) -> root.
template <typename Build>
double check_op(std::vector<TensorD> inputs, Build&& build,
                double eps = 1e-6) {
  std::vector<TensorD*> params;
  for (auto& t : inputs) params.push_back(&t);
  auto eval = [&](std::vector<TensorD>* grads) {
    Graph<double> g;
    std::vector<int> refs;
    for (auto& t : inputs) refs.push_back(g.leaf(t.clone()));
    int root = build(g, refs);
    if (!grads) return g.value(root)[0];
    g.backward(root);
    grads->clear();
    for (std::size_t i = 0; i < refs.size(); ++i)
      grads->push_back(g.has_grad(refs[i])
                           ? g.grad(refs[i]).clone()
                           : TensorD::zeros(inputs[i].shape()));
    return g.value(root)[0];
  };
  return grad_check(params, eval, eps, 60).max_rel_err;
}

}  // namespace

TEST_CASE("tensor basics") {
  auto t = TensorD::from(Shape::of(2, 3), {1, 2, 3, 4, 5, 6});
  CHECK(t.at(1, 2) == 6);
  auto v = t.rows_view(1, 1);
  CHECK(v.at(0, 0) == 4);
  auto r = t.reshape(Shape::of(3, 2));
  CHECK(r.at(2, 1) == 6);
  CHECK_THROWS_AS(t.reshape(Shape::of(4, 2)), std::invalid_argument);
  auto c = t.clone();
  c.at(0, 0) = 9;
  CHECK(t.at(0, 0) == 1);
}

TEST_CASE("rng streams are deterministic and independent") {
  RngStream a(3, 1, 2), b(3, 1, 2), c(3, 1, 3);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
  RngStream u(11);
  for (int i = 0; i < 1000; ++i) {
    double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("quadratic gradient is recovered to high accuracy") {
  // f(x) = sum w_i x_i^2 has exact analytic gradient 2 w_i x_i; the central
  // difference of a quadratic is exact up to roundoff.
  RngStream rng(5);
  TensorD x = TensorD::zeros(Shape::of(8));
  TensorD w = TensorD::zeros(Shape::of(8));
  for (int i = 0; i < 8; ++i) {
    x[i] = rng.uniform(0.5, 2.0);
    w[i] = rng.uniform(0.5, 2.0);
  }
  double err = check_op({x}, [&](Graph<double>& g, const std::vector<int>& r) {
    return g.weighted_sum(g.mul(r[0], r[0]), w, 1.0);
  }, 1e-5);
  CHECK(err < 1e-9);
}

TEST_CASE("elementwise and broadcast ops backpropagate") {
  RngStream rng(6);
  TensorD a = random_tensor(Shape::of(4, 5), rng);
  TensorD b = random_tensor(Shape::of(4, 5), rng);
  TensorD v = random_tensor(Shape::of(5), rng);
  TensorD w = random_tensor(Shape::of(4, 5), rng);

  CHECK(check_op({a, b}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.mul(g.add(r[0], r[1]), g.sub(r[0], r[1])), w,
                                0.5);
        }) < 1e-7);
  CHECK(check_op({a, v}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.add_rowvec(r[0], r[1]), w, 1.0);
        }) < 1e-7);
  CHECK(check_op({a}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.mean_all(g.scalar_mul(g.add_scalar(r[0], 0.3), -1.7));
        }) < 1e-7);
}

TEST_CASE("matmul variants backpropagate") {
  RngStream rng(7);
  TensorD a = random_tensor(Shape::of(3, 4), rng);
  TensorD b = random_tensor(Shape::of(4, 5), rng);
  TensorD bt = random_tensor(Shape::of(5, 4), rng);
  TensorD w = random_tensor(Shape::of(3, 5), rng);

  CHECK(check_op({a, b}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.matmul(r[0], r[1]), w, 1.0);
        }) < 1e-7);
  CHECK(check_op({a, bt}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.matmul_nt(r[0], r[1]), w, 1.0);
        }) < 1e-7);
}

TEST_CASE("shape movers backpropagate") {
  RngStream rng(8);
  TensorD a = random_tensor(Shape::of(6, 4), rng);
  TensorD b = random_tensor(Shape::of(2, 4), rng);
  TensorD w24 = random_tensor(Shape::of(2, 4), rng);
  TensorD w62 = random_tensor(Shape::of(6, 2), rng);
  TensorD w84 = random_tensor(Shape::of(8, 4), rng);
  TensorD w46 = random_tensor(Shape::of(4, 6), rng);

  CHECK(check_op({a}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.slice_rows(r[0], 2, 2), w24, 1.0);
        }) < 1e-7);
  CHECK(check_op({a}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.slice_cols(r[0], 1, 2), w62, 1.0);
        }) < 1e-7);
  CHECK(check_op({a, b}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.concat_rows({r[0], r[1]}), w84, 1.0);
        }) < 1e-7);
  CHECK(check_op({a}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.transpose(r[0]), w46, 1.0);
        }) < 1e-7);
  TensorD a2 = random_tensor(Shape::of(6, 4), rng);
  CHECK(check_op({a, a2}, [&](Graph<double>& g, const std::vector<int>& r) {
          auto c = g.concat_cols({r[0], r[1]});
          return g.mean_all(g.mul(c, c));
        }) < 1e-6);
  CHECK(check_op({a}, [&](Graph<double>& g, const std::vector<int>& r) {
          auto s = g.reshape(r[0], Shape::of(4, 6));
          return g.weighted_sum(s, w46, 1.0);
        }) < 1e-7);
}

TEST_CASE("activations and normalizations backpropagate") {
  RngStream rng(9);
  TensorD a = random_tensor(Shape::of(5, 6), rng);
  TensorD gamma = random_tensor(Shape::of(6), rng, 0.5);
  TensorD beta = random_tensor(Shape::of(6), rng, 0.5);
  TensorD w = random_tensor(Shape::of(5, 6), rng);
  for (std::int64_t i = 0; i < gamma.size(); ++i) gamma[i] += 1.0;

  CHECK(check_op({a}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.gelu(r[0]), w, 1.0);
        }) < 1e-6);
  CHECK(check_op({a}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.softmax_rows(r[0], 0.7), w, 1.0);
        }) < 1e-6);
  CHECK(check_op({a}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.log_softmax_rows(r[0], 1.3), w, 1.0);
        }) < 1e-6);
  CHECK(check_op({a, gamma, beta},
                 [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.layer_norm(r[0], r[1], r[2]), w, 1.0);
        }) < 1e-6);
  CHECK(check_op({a}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.l2_normalize_rows(r[0]), w, 1.0);
        }) < 1e-6);
  CHECK(check_op({a}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.weighted_sum(g.mean_rows(r[0]), w.rows_view(0, 1), 1.0);
        }) < 1e-7);
}

TEST_CASE("losses backpropagate") {
  RngStream rng(10);
  TensorD a = random_tensor(Shape::of(4, 4), rng);
  TensorD t = random_tensor(Shape::of(4, 4), rng);
  TensorD tok = random_tensor(Shape::of(5, 7), rng);

  CHECK(check_op({a}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.mse(r[0], t);
        }) < 1e-7);
  CHECK(check_op({tok}, [&](Graph<double>& g, const std::vector<int>& r) {
          return g.koleo(r[0]);
        }) < 1e-6);
}

TEST_CASE("image/token movers backpropagate") {
  RngStream rng(11);
  TensorD img = random_tensor(Shape::of(3, 8, 8), rng);
  TensorD tok = random_tensor(Shape::of(4, 48), rng);

  CHECK(check_op({img}, [&](Graph<double>& g, const std::vector<int>& r) {
          auto p = g.patchify(r[0], 4);
          return g.mean_all(g.mul(p, p));
        }) < 1e-5);
  CHECK(check_op({tok}, [&](Graph<double>& g, const std::vector<int>& r) {
          auto im = g.unpatchify(r[0], 3, 8, 8, 4);
          return g.mean_all(g.mul(im, im));
        }) < 1e-5);
}

TEST_CASE("clamp01 passes gradient only inside the unit interval") {
  Graph<double> g;
  auto x = g.leaf(TensorD::from(Shape::of(4), {-0.5, 0.25, 0.75, 1.5}));
  auto y = g.clamp01(x);
  auto s = g.sum_all(y);
  g.backward(s);
  const auto& gx = g.grad(x);
  CHECK(gx[0] == 0.0);
  CHECK(gx[1] == 1.0);
  CHECK(gx[2] == 1.0);
  CHECK(gx[3] == 0.0);
  CHECK(g.value(y)[0] == 0.0);
  CHECK(g.value(y)[3] == 1.0);
}

TEST_CASE("detach and constants stop gradients") {
  Graph<double> g;
  auto x = g.leaf(TensorD::constant(Shape::of(3), 2.0));
  auto d = g.detach(x);
  auto y = g.sum_all(g.mul(g.mul(x, x), d));
  g.backward(y);
  // y = sum(x^2 * stop(x)); d/dx = 2*x*stop(x) = 8 per coordinate.
  for (int i = 0; i < 3; ++i) CHECK(g.grad(x)[i] == doctest::Approx(8.0));
  CHECK_FALSE(g.needs_grad(d));
}

TEST_CASE("inference graphs never build backward closures") {
  Graph<double> g(true);
  auto x = g.leaf(TensorD::constant(Shape::of(2, 2), 1.0));
  auto y = g.mean_all(g.mul(x, x));
  CHECK_FALSE(g.needs_grad(y));
  CHECK_THROWS_AS(g.backward(y), std::invalid_argument);
}
