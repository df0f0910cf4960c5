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

#include <cstddef>

namespace stellar::simd {

enum class IsaLevel { scalar = 0, avx2 = 1 };

// ISA selected at process start: AVX2+FMA when the CPU supports it, unless
// STELLAR_FORCE_SCALAR=1 is set in the environment.
IsaLevel active_isa();
const char* isa_name();

// Kernel table for one scalar type. All matrices are row-major with an
// explicit leading dimension (row stride).
template <typename T>
struct Kernels {
  // c[m x n] = alpha * a[m x k] * b[k x n] + beta * c
  void (*gemm_nn)(int m, int n, int k, T alpha, const T* a, int lda,
                  const T* b, int ldb, T beta, T* c, int ldc);
  // c[m x n] = alpha * a[m x k] * b[n x k]^T + beta * c
  void (*gemm_nt)(int m, int n, int k, T alpha, const T* a, int lda,
                  const T* b, int ldb, T beta, T* c, int ldc);
  // c[m x n] = alpha * a[k x m]^T * b[k x n] + beta * c
  void (*gemm_tn)(int m, int n, int k, T alpha, const T* a, int lda,
                  const T* b, int ldb, T beta, T* c, int ldc);

  T (*dot)(const T* x, const T* y, int n);
  void (*axpy)(int n, T a, const T* x, T* y);        // y += a*x
  void (*scale)(int n, T a, T* x);                   // x *= a
  void (*vadd)(int n, const T* x, const T* y, T* out);
  void (*vsub)(int n, const T* x, const T* y, T* out);
  void (*vmul)(int n, const T* x, const T* y, T* out);
  void (*vdiv)(int n, const T* x, const T* y, T* out);
  void (*vfma)(int n, const T* x, const T* y, T* out);  // out += x*y
  // out += sum over `rows` of x_row * y_row elementwise; row i of x starts
  // at x + i*ldx (y likewise).
  void (*vfma_rows)(int n, int rows, const T* x, int ldx, const T* y, int ldy,
                    T* out);
  void (*vexp)(int n, const T* x, T* out);
  // out[0..n) = sum_c x[c] * a_row_c[0..n): vector-matrix product with A
  // stored row-major (cols x n, row stride lda).
  void (*vecmat)(int n, int cols, const T* a, int lda, const T* x, T* out);
  T (*sum)(const T* x, int n);
  T (*max)(const T* x, int n);                       // n >= 1

  // Decoupled weight decay update:
  //   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
  //   w -= lr * ((m/c1) / (sqrt(v/c2) + eps) + wd*w)
  void (*adamw)(int n, T* w, T* m, T* v, const T* g, T lr, T b1, T b2,
                T eps, T wd, T c1, T c2);
};

template <typename T>
const Kernels<T>& kernels();

namespace detail {
template <typename T> Kernels<T> scalar_table();
template <typename T> Kernels<T> avx2_table();
}  // namespace detail

}  // namespace stellar::simd
