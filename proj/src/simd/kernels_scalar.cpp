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

// Portable reference kernels. Not vectorized by hand; these define the
// semantics the AVX2 variants are equivalence-tested against.

#include <cmath>

#include "stellar/simd/simd.hpp"

namespace stellar::simd::detail {

namespace {

template <typename T>
void gemm_nn_ref(int m, int n, int k, T alpha, const T* a, int lda,
                 const T* b, int ldb, T beta, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) crow[j] *= beta;
    for (int p = 0; p < k; ++p) {
      const T av = alpha * a[static_cast<std::size_t>(i) * lda + p];
      const T* brow = b + static_cast<std::size_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_nt_ref(int m, int n, int k, T alpha, const T* a, int lda,
                 const T* b, int ldb, T beta, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * lda;
    T* crow = c + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<std::size_t>(j) * ldb;
      T acc = 0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = alpha * acc + beta * crow[j];
    }
  }
}

template <typename T>
void gemm_tn_ref(int m, int n, int k, T alpha, const T* a, int lda,
                 const T* b, int ldb, T beta, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) crow[j] *= beta;
  }
  for (int p = 0; p < k; ++p) {
    const T* arow = a + static_cast<std::size_t>(p) * lda;
    const T* brow = b + static_cast<std::size_t>(p) * ldb;
    for (int i = 0; i < m; ++i) {
      const T av = alpha * arow[i];
      T* crow = c + static_cast<std::size_t>(i) * ldc;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
T dot_ref(const T* x, const T* y, int n) {
  T acc = 0;
  for (int i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename T>
void axpy_ref(int n, T a, const T* x, T* y) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void scale_ref(int n, T a, T* x) {
  for (int i = 0; i < n; ++i) x[i] *= a;
}

template <typename T>
void vadd_ref(int n, const T* x, const T* y, T* out) {
  for (int i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

template <typename T>
void vsub_ref(int n, const T* x, const T* y, T* out) {
  for (int i = 0; i < n; ++i) out[i] = x[i] - y[i];
}

template <typename T>
void vmul_ref(int n, const T* x, const T* y, T* out) {
  for (int i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

template <typename T>
void vdiv_ref(int n, const T* x, const T* y, T* out) {
  for (int i = 0; i < n; ++i) out[i] = x[i] / y[i];
}

template <typename T>
void vfma_ref(int n, const T* x, const T* y, T* out) {
  for (int i = 0; i < n; ++i) out[i] += x[i] * y[i];
}

template <typename T>
void vfma_rows_ref(int n, int rows, const T* x, int ldx, const T* y, int ldy,
                   T* out) {
  for (int r = 0; r < rows; ++r) {
    const T* xr = x + static_cast<std::size_t>(r) * ldx;
    const T* yr = y + static_cast<std::size_t>(r) * ldy;
    for (int i = 0; i < n; ++i) out[i] += xr[i] * yr[i];
  }
}

template <typename T>
void vexp_ref(int n, const T* x, T* out) {
  for (int i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

template <typename T>
void vecmat_ref(int n, int cols, const T* a, int lda, const T* x, T* out) {
  for (int i = 0; i < n; ++i) out[i] = T(0);
  for (int c = 0; c < cols; ++c) {
    const T xc = x[c];
    const T* row = a + static_cast<std::size_t>(c) * lda;
    for (int i = 0; i < n; ++i) out[i] += xc * row[i];
  }
}

template <typename T>
T sum_ref(const T* x, int n) {
  T acc = 0;
  for (int i = 0; i < n; ++i) acc += x[i];
  return acc;
}

template <typename T>
T max_ref(const T* x, int n) {
  T best = x[0];
  for (int i = 1; i < n; ++i) best = x[i] > best ? x[i] : best;
  return best;
}

template <typename T>
void adamw_ref(int n, T* w, T* m, T* v, const T* g, T lr, T b1, T b2, T eps,
               T wd, T c1, T c2) {
  for (int i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * g[i];
    v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
    const T mhat = m[i] / c1;
    const T vhat = v[i] / c2;
    w[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * w[i]);
  }
}

}  // namespace

template <typename T>
Kernels<T> scalar_table() {
  Kernels<T> t;
  t.gemm_nn = &gemm_nn_ref<T>;
  t.gemm_nt = &gemm_nt_ref<T>;
  t.gemm_tn = &gemm_tn_ref<T>;
  t.dot = &dot_ref<T>;
  t.axpy = &axpy_ref<T>;
  t.scale = &scale_ref<T>;
  t.vadd = &vadd_ref<T>;
  t.vsub = &vsub_ref<T>;
  t.vmul = &vmul_ref<T>;
  t.vdiv = &vdiv_ref<T>;
  t.vfma = &vfma_ref<T>;
  t.vfma_rows = &vfma_rows_ref<T>;
  t.vexp = &vexp_ref<T>;
  t.vecmat = &vecmat_ref<T>;
  t.sum = &sum_ref<T>;
  t.max = &max_ref<T>;
  t.adamw = &adamw_ref<T>;
  return t;
}

template Kernels<float> scalar_table<float>();
template Kernels<double> scalar_table<double>();

}  // namespace stellar::simd::detail
