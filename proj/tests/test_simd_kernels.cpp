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

// Equivalence tests: every AVX2 kernel must agree with the scalar reference
// within accumulation-order tolerance.

#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "stellar/core/rng.hpp"
#include "stellar/simd/simd.hpp"

using stellar::core::RngStream;
using stellar::simd::IsaLevel;
using stellar::simd::Kernels;

namespace {

template <typename T>
std::vector<T> random_vec(int n, RngStream& rng, double lo = -2.0,
                          double hi = 2.0) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return v;
}

template <typename T>
void expect_close(const std::vector<T>& a, const std::vector<T>& b,
                  double rel_tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom =
        std::max({std::abs(double(a[i])), std::abs(double(b[i])), 1.0});
    CHECK(std::abs(double(a[i]) - double(b[i])) / denom <= rel_tol);
  }
}

template <typename T>
void gemm_case(const Kernels<T>& ref, const Kernels<T>& vec, int m, int n,
               int k, double rel_tol, uint64_t seed) {
  RngStream rng(seed, m, n, k);
  auto a = random_vec<T>(m * k, rng);
  auto bt = random_vec<T>(n * k, rng);
  auto b = random_vec<T>(k * n, rng);
  auto at = random_vec<T>(k * m, rng);
  auto c0 = random_vec<T>(m * n, rng);
  const T alpha = static_cast<T>(0.7), beta = static_cast<T>(0.3);

  auto c1 = c0, c2 = c0;
  ref.gemm_nn(m, n, k, alpha, a.data(), k, b.data(), n, beta, c1.data(), n);
  vec.gemm_nn(m, n, k, alpha, a.data(), k, b.data(), n, beta, c2.data(), n);
  expect_close(c1, c2, rel_tol);

  c1 = c0;
  c2 = c0;
  ref.gemm_nt(m, n, k, alpha, a.data(), k, bt.data(), k, beta, c1.data(), n);
  vec.gemm_nt(m, n, k, alpha, a.data(), k, bt.data(), k, beta, c2.data(), n);
  expect_close(c1, c2, rel_tol);

  c1 = c0;
  c2 = c0;
  ref.gemm_tn(m, n, k, alpha, at.data(), m, b.data(), n, beta, c1.data(), n);
  vec.gemm_tn(m, n, k, alpha, at.data(), m, b.data(), n, beta, c2.data(), n);
  expect_close(c1, c2, rel_tol);
}

template <typename T>
void run_equivalence(double gemm_tol, double exp_tol) {
  if (stellar::simd::active_isa() != IsaLevel::avx2) {
    MESSAGE("AVX2 unavailable or disabled; equivalence suite skipped");
    return;
  }
  const Kernels<T> ref = stellar::simd::detail::scalar_table<T>();
  const Kernels<T> vec = stellar::simd::detail::avx2_table<T>();

  for (auto [m, n, k] :
       {std::tuple<int, int, int>{1, 1, 1}, {3, 5, 7}, {8, 8, 8},
        {17, 33, 9}, {64, 48, 31}, {81, 128, 128}})
    gemm_case(ref, vec, m, n, k, gemm_tol, 42);

  RngStream rng(7);
  for (int n : {1, 7, 8, 9, 64, 257}) {
    auto x = random_vec<T>(n, rng);
    auto y = random_vec<T>(n, rng);

    const double d1 = ref.dot(x.data(), y.data(), n);
    const double d2 = vec.dot(x.data(), y.data(), n);
    CHECK(std::abs(d1 - d2) <= gemm_tol * std::max(1.0, std::abs(d1)));

    auto y1 = y, y2 = y;
    ref.axpy(n, T(0.37), x.data(), y1.data());
    vec.axpy(n, T(0.37), x.data(), y2.data());
    expect_close(y1, y2, gemm_tol);

    auto x1 = x, x2 = x;
    ref.scale(n, T(1.3), x1.data());
    vec.scale(n, T(1.3), x2.data());
    expect_close(x1, x2, gemm_tol);

    std::vector<T> o1(n), o2(n);
    ref.vadd(n, x.data(), y.data(), o1.data());
    vec.vadd(n, x.data(), y.data(), o2.data());
    expect_close(o1, o2, 0.0);
    ref.vsub(n, x.data(), y.data(), o1.data());
    vec.vsub(n, x.data(), y.data(), o2.data());
    expect_close(o1, o2, 0.0);
    ref.vmul(n, x.data(), y.data(), o1.data());
    vec.vmul(n, x.data(), y.data(), o2.data());
    expect_close(o1, o2, 0.0);
    auto ypos = y;
    for (auto& t : ypos) t = T(0.5) + std::abs(t);
    ref.vdiv(n, x.data(), ypos.data(), o1.data());
    vec.vdiv(n, x.data(), ypos.data(), o2.data());
    expect_close(o1, o2, gemm_tol);
    auto acc1 = x, acc2 = x;
    ref.vfma(n, x.data(), y.data(), acc1.data());
    vec.vfma(n, x.data(), y.data(), acc2.data());
    expect_close(acc1, acc2, gemm_tol);
    const int rows = 3, ld = n + 2;
    auto xr = random_vec<T>(rows * ld, rng);
    auto yr = random_vec<T>(rows * ld, rng);
    auto r1 = x, r2 = x;
    ref.vfma_rows(n, rows, xr.data(), ld, yr.data(), ld, r1.data());
    vec.vfma_rows(n, rows, xr.data(), ld, yr.data(), ld, r2.data());
    expect_close(r1, r2, gemm_tol);
    auto coeff = random_vec<T>(rows, rng);
    ref.vecmat(n, rows, xr.data(), ld, coeff.data(), r1.data());
    vec.vecmat(n, rows, xr.data(), ld, coeff.data(), r2.data());
    expect_close(r1, r2, gemm_tol);

    auto z = random_vec<T>(n, rng, -20.0, 20.0);
    ref.vexp(n, z.data(), o1.data());
    vec.vexp(n, z.data(), o2.data());
    expect_close(o1, o2, exp_tol);

    CHECK(std::abs(double(ref.sum(x.data(), n)) -
                   double(vec.sum(x.data(), n))) <= gemm_tol * n);
    CHECK(double(ref.max(x.data(), n)) == double(vec.max(x.data(), n)));
  }

  for (int n : {5, 64, 130}) {
    auto w = random_vec<T>(n, rng);
    auto g = random_vec<T>(n, rng);
    std::vector<T> m1(n, T(0.1)), v1(n, T(0.2));
    auto w1 = w, w2 = w;
    auto m2 = m1, v2 = v1;
    ref.adamw(n, w1.data(), m1.data(), v1.data(), g.data(), T(1e-3), T(0.9),
              T(0.999), T(1e-8), T(0.05), T(0.1), T(0.001));
    vec.adamw(n, w2.data(), m2.data(), v2.data(), g.data(), T(1e-3), T(0.9),
              T(0.999), T(1e-8), T(0.05), T(0.1), T(0.001));
    expect_close(w1, w2, gemm_tol);
    expect_close(m1, m2, gemm_tol);
    expect_close(v1, v2, gemm_tol);
  }
}

}  // namespace

TEST_CASE("avx2 float kernels match scalar reference") {
  run_equivalence<float>(2e-5, 4e-7);
}

TEST_CASE("avx2 double kernels match scalar reference") {
  run_equivalence<double>(1e-13, 1e-15);
}

TEST_CASE("dispatch reports a valid isa and callable table") {
  const std::string name = stellar::simd::isa_name();
  CHECK((name == "avx2" || name == "scalar"));
  const auto& k = stellar::simd::kernels<float>();
  float x[3] = {1.f, 2.f, 3.f};
  CHECK(k.sum(x, 3) == doctest::Approx(6.f));
}
