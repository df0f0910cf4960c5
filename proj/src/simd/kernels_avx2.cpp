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

// AVX2/FMA kernel variants. This translation unit is the only one compiled
// with -mavx2 -mfma; it must not be entered unless dispatch confirmed CPU
// support.

#include <immintrin.h>

#include <cmath>

#include "stellar/simd/simd.hpp"

namespace stellar::simd::detail {

namespace {

// ---------------------------------------------------------------- float ----

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  __m128 s = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, s);
  s = _mm_add_ss(s, sh);
  return _mm_cvtss_f32(s);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void gemm_nn_f32(int m, int n, int k, float alpha, const float* a, int lda,
                 const float* b, int ldb, float beta, float* c, int ldc) {
  const int n8 = n & ~7;
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * ldc;
    if (beta == 0.0f) {
      for (int j = 0; j < n; ++j) crow[j] = 0.0f;
    } else if (beta != 1.0f) {
      for (int j = 0; j < n; ++j) crow[j] *= beta;
    }
    const float* arow = a + static_cast<std::size_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      const float av = alpha * arow[p];
      if (av == 0.0f) continue;
      const __m256 va = _mm256_set1_ps(av);
      const float* brow = b + static_cast<std::size_t>(p) * ldb;
      int j = 0;
      for (; j < n8; j += 8) {
        __m256 vc = _mm256_loadu_ps(crow + j);
        vc = _mm256_fmadd_ps(va, _mm256_loadu_ps(brow + j), vc);
        _mm256_storeu_ps(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt_f32(int m, int n, int k, float alpha, const float* a, int lda,
                 const float* b, int ldb, float beta, float* c, int ldc) {
  const int k8 = k & ~7;
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * lda;
    float* crow = c + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) {
      const float* brow = b + static_cast<std::size_t>(j) * ldb;
      __m256 acc = _mm256_setzero_ps();
      int p = 0;
      for (; p < k8; p += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p),
                              _mm256_loadu_ps(brow + p), acc);
      float s = hsum(acc);
      for (; p < k; ++p) s += arow[p] * brow[p];
      crow[j] = alpha * s + (beta == 0.0f ? 0.0f : beta * crow[j]);
    }
  }
}

void gemm_tn_f32(int m, int n, int k, float alpha, const float* a, int lda,
                 const float* b, int ldb, float beta, float* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * ldc;
    if (beta == 0.0f) {
      for (int j = 0; j < n; ++j) crow[j] = 0.0f;
    } else if (beta != 1.0f) {
      for (int j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  const int n8 = n & ~7;
  for (int p = 0; p < k; ++p) {
    const float* arow = a + static_cast<std::size_t>(p) * lda;
    const float* brow = b + static_cast<std::size_t>(p) * ldb;
    for (int i = 0; i < m; ++i) {
      const float av = alpha * arow[i];
      if (av == 0.0f) continue;
      const __m256 va = _mm256_set1_ps(av);
      float* crow = c + static_cast<std::size_t>(i) * ldc;
      int j = 0;
      for (; j < n8; j += 8) {
        __m256 vc = _mm256_loadu_ps(crow + j);
        vc = _mm256_fmadd_ps(va, _mm256_loadu_ps(brow + j), vc);
        _mm256_storeu_ps(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

float dot_f32(const float* x, const float* y, int n) {
  const int n8 = n & ~7;
  __m256 acc = _mm256_setzero_ps();
  int i = 0;
  for (; i < n8; i += 8)
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
  float s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_f32(int n, float a, const float* x, float* y) {
  const int n8 = n & ~7;
  const __m256 va = _mm256_set1_ps(a);
  int i = 0;
  for (; i < n8; i += 8) {
    __m256 vy = _mm256_loadu_ps(y + i);
    vy = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vy);
    _mm256_storeu_ps(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_f32(int n, float a, float* x) {
  const int n8 = n & ~7;
  const __m256 va = _mm256_set1_ps(a);
  int i = 0;
  for (; i < n8; i += 8)
    _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void vadd_f32(int n, const float* x, const float* y, float* out) {
  const int n8 = n & ~7;
  int i = 0;
  for (; i < n8; i += 8)
    _mm256_storeu_ps(out + i,
                     _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void vsub_f32(int n, const float* x, const float* y, float* out) {
  const int n8 = n & ~7;
  int i = 0;
  for (; i < n8; i += 8)
    _mm256_storeu_ps(out + i,
                     _mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) out[i] = x[i] - y[i];
}

void vmul_f32(int n, const float* x, const float* y, float* out) {
  const int n8 = n & ~7;
  int i = 0;
  for (; i < n8; i += 8)
    _mm256_storeu_ps(out + i,
                     _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void vdiv_f32(int n, const float* x, const float* y, float* out) {
  const int n8 = n & ~7;
  int i = 0;
  for (; i < n8; i += 8)
    _mm256_storeu_ps(out + i,
                     _mm256_div_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) out[i] = x[i] / y[i];
}

void vfma_f32(int n, const float* x, const float* y, float* out) {
  const int n8 = n & ~7;
  int i = 0;
  for (; i < n8; i += 8) {
    __m256 vo = _mm256_loadu_ps(out + i);
    vo = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), vo);
    _mm256_storeu_ps(out + i, vo);
  }
  for (; i < n; ++i) out[i] += x[i] * y[i];
}

void vfma_rows_f32(int n, int rows, const float* x, int ldx, const float* y,
                   int ldy, float* out) {
  const int n8 = n & ~7;
  int i = 0;
  for (; i < n8; i += 8) {
    __m256 acc = _mm256_loadu_ps(out + i);
    for (int r = 0; r < rows; ++r)
      acc = _mm256_fmadd_ps(
          _mm256_loadu_ps(x + static_cast<std::size_t>(r) * ldx + i),
          _mm256_loadu_ps(y + static_cast<std::size_t>(r) * ldy + i), acc);
    _mm256_storeu_ps(out + i, acc);
  }
  for (; i < n; ++i)
    for (int r = 0; r < rows; ++r)
      out[i] += x[static_cast<std::size_t>(r) * ldx + i] *
                y[static_cast<std::size_t>(r) * ldy + i];
}

// Cephes-style exp: exp(x) = 2^n * exp(r) with |r| <= 0.5*ln2, degree-5
// minimax polynomial. Accurate to ~1 ulp over the float range; inputs are
// clamped so the result saturates instead of producing inf/0 surprises in
// the vector lanes.
inline __m256 exp256_ps(__m256 x) {
  const __m256 hi = _mm256_set1_ps(88.3762626647950f);
  const __m256 lo = _mm256_set1_ps(-88.3762626647949f);
  const __m256 log2e = _mm256_set1_ps(1.44269504088896341f);
  const __m256 c1 = _mm256_set1_ps(0.693359375f);
  const __m256 c2 = _mm256_set1_ps(-2.12194440e-4f);
  const __m256 half = _mm256_set1_ps(0.5f);
  const __m256 one = _mm256_set1_ps(1.0f);

  x = _mm256_min_ps(_mm256_max_ps(x, lo), hi);

  __m256 fx = _mm256_fmadd_ps(x, log2e, half);
  fx = _mm256_floor_ps(fx);
  x = _mm256_fnmadd_ps(fx, c1, x);
  x = _mm256_fnmadd_ps(fx, c2, x);

  __m256 z = _mm256_mul_ps(x, x);
  __m256 y = _mm256_set1_ps(1.9875691500e-4f);
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.3981999507e-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(8.3334519073e-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(4.1665795894e-2f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.6666665459e-1f));
  y = _mm256_fmadd_ps(y, x, half);
  y = _mm256_fmadd_ps(y, z, x);
  y = _mm256_add_ps(y, one);

  __m256i n = _mm256_cvtps_epi32(fx);
  n = _mm256_add_epi32(n, _mm256_set1_epi32(127));
  n = _mm256_slli_epi32(n, 23);
  return _mm256_mul_ps(y, _mm256_castsi256_ps(n));
}

void vexp_f32(int n, const float* x, float* out) {
  const int n8 = n & ~7;
  int i = 0;
  for (; i < n8; i += 8)
    _mm256_storeu_ps(out + i, exp256_ps(_mm256_loadu_ps(x + i)));
  for (; i < n; ++i) out[i] = std::exp(x[i]);
}

void vecmat_f32(int n, int cols, const float* a, int lda, const float* x,
                float* out) {
  int i = 0;
  for (; i + 16 <= n; i += 16) {
    __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
    for (int c = 0; c < cols; ++c) {
      const __m256 xc = _mm256_set1_ps(x[c]);
      const float* row = a + static_cast<std::size_t>(c) * lda + i;
      acc0 = _mm256_fmadd_ps(xc, _mm256_loadu_ps(row), acc0);
      acc1 = _mm256_fmadd_ps(xc, _mm256_loadu_ps(row + 8), acc1);
    }
    _mm256_storeu_ps(out + i, acc0);
    _mm256_storeu_ps(out + i + 8, acc1);
  }
  for (; i + 8 <= n; i += 8) {
    __m256 acc = _mm256_setzero_ps();
    for (int c = 0; c < cols; ++c)
      acc = _mm256_fmadd_ps(_mm256_set1_ps(x[c]),
                            _mm256_loadu_ps(a + static_cast<std::size_t>(c) * lda + i),
                            acc);
    _mm256_storeu_ps(out + i, acc);
  }
  for (; i < n; ++i) {
    float s = 0.f;
    for (int c = 0; c < cols; ++c)
      s += x[c] * a[static_cast<std::size_t>(c) * lda + i];
    out[i] = s;
  }
}

float sum_f32(const float* x, int n) {
  const int n8 = n & ~7;
  __m256 acc = _mm256_setzero_ps();
  int i = 0;
  for (; i < n8; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

float max_f32(const float* x, int n) {
  float best = x[0];
  int i = 0;
  if (n >= 8) {
    __m256 vb = _mm256_loadu_ps(x);
    const int n8 = n & ~7;
    for (i = 8; i < n8; i += 8) vb = _mm256_max_ps(vb, _mm256_loadu_ps(x + i));
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, vb);
    best = lanes[0];
    for (int l = 1; l < 8; ++l) best = lanes[l] > best ? lanes[l] : best;
  }
  for (; i < n; ++i) best = x[i] > best ? x[i] : best;
  return best;
}

void adamw_f32(int n, float* w, float* m, float* v, const float* g, float lr,
               float b1, float b2, float eps, float wd, float c1, float c2) {
  const __m256 vb1 = _mm256_set1_ps(b1);
  const __m256 vb1c = _mm256_set1_ps(1.0f - b1);
  const __m256 vb2 = _mm256_set1_ps(b2);
  const __m256 vb2c = _mm256_set1_ps(1.0f - b2);
  const __m256 vic1 = _mm256_set1_ps(1.0f / c1);
  const __m256 vic2 = _mm256_set1_ps(1.0f / c2);
  const __m256 veps = _mm256_set1_ps(eps);
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 vwd = _mm256_set1_ps(wd);
  const int n8 = n & ~7;
  int i = 0;
  for (; i < n8; i += 8) {
    __m256 vg = _mm256_loadu_ps(g + i);
    __m256 vm = _mm256_fmadd_ps(vb1c, vg, _mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)));
    __m256 vv = _mm256_fmadd_ps(vb2c, _mm256_mul_ps(vg, vg),
                                _mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)));
    _mm256_storeu_ps(m + i, vm);
    _mm256_storeu_ps(v + i, vv);
    __m256 mh = _mm256_mul_ps(vm, vic1);
    __m256 vh = _mm256_mul_ps(vv, vic2);
    __m256 den = _mm256_add_ps(_mm256_sqrt_ps(vh), veps);
    __m256 vw = _mm256_loadu_ps(w + i);
    __m256 step = _mm256_fmadd_ps(vwd, vw, _mm256_div_ps(mh, den));
    _mm256_storeu_ps(w + i, _mm256_fnmadd_ps(vlr, step, vw));
  }
  for (; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0f - b1) * g[i];
    v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
    const float mh = m[i] / c1;
    const float vh = v[i] / c2;
    w[i] -= lr * (mh / (std::sqrt(vh) + eps) + wd * w[i]);
  }
}

// --------------------------------------------------------------- double ----

void gemm_nn_f64(int m, int n, int k, double alpha, const double* a, int lda,
                 const double* b, int ldb, double beta, double* c, int ldc) {
  const int n4 = n & ~3;
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<std::size_t>(i) * ldc;
    if (beta == 0.0) {
      for (int j = 0; j < n; ++j) crow[j] = 0.0;
    } else if (beta != 1.0) {
      for (int j = 0; j < n; ++j) crow[j] *= beta;
    }
    const double* arow = a + static_cast<std::size_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      const double av = alpha * arow[p];
      if (av == 0.0) continue;
      const __m256d va = _mm256_set1_pd(av);
      const double* brow = b + static_cast<std::size_t>(p) * ldb;
      int j = 0;
      for (; j < n4; j += 4) {
        __m256d vc = _mm256_loadu_pd(crow + j);
        vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), vc);
        _mm256_storeu_pd(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt_f64(int m, int n, int k, double alpha, const double* a, int lda,
                 const double* b, int ldb, double beta, double* c, int ldc) {
  const int k4 = k & ~3;
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * lda;
    double* crow = c + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<std::size_t>(j) * ldb;
      __m256d acc = _mm256_setzero_pd();
      int p = 0;
      for (; p < k4; p += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(arow + p),
                              _mm256_loadu_pd(brow + p), acc);
      double s = hsum(acc);
      for (; p < k; ++p) s += arow[p] * brow[p];
      crow[j] = alpha * s + (beta == 0.0 ? 0.0 : beta * crow[j]);
    }
  }
}

void gemm_tn_f64(int m, int n, int k, double alpha, const double* a, int lda,
                 const double* b, int ldb, double beta, double* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<std::size_t>(i) * ldc;
    if (beta == 0.0) {
      for (int j = 0; j < n; ++j) crow[j] = 0.0;
    } else if (beta != 1.0) {
      for (int j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  const int n4 = n & ~3;
  for (int p = 0; p < k; ++p) {
    const double* arow = a + static_cast<std::size_t>(p) * lda;
    const double* brow = b + static_cast<std::size_t>(p) * ldb;
    for (int i = 0; i < m; ++i) {
      const double av = alpha * arow[i];
      if (av == 0.0) continue;
      const __m256d va = _mm256_set1_pd(av);
      double* crow = c + static_cast<std::size_t>(i) * ldc;
      int j = 0;
      for (; j < n4; j += 4) {
        __m256d vc = _mm256_loadu_pd(crow + j);
        vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), vc);
        _mm256_storeu_pd(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

double dot_f64(const double* x, const double* y, int n) {
  const int n4 = n & ~3;
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i < n4; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_f64(int n, double a, const double* x, double* y) {
  const int n4 = n & ~3;
  const __m256d va = _mm256_set1_pd(a);
  int i = 0;
  for (; i < n4; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_f64(int n, double a, double* x) {
  const int n4 = n & ~3;
  const __m256d va = _mm256_set1_pd(a);
  int i = 0;
  for (; i < n4; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void vadd_f64(int n, const double* x, const double* y, double* out) {
  const int n4 = n & ~3;
  int i = 0;
  for (; i < n4; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void vsub_f64(int n, const double* x, const double* y, double* out) {
  const int n4 = n & ~3;
  int i = 0;
  for (; i < n4; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] - y[i];
}

void vmul_f64(int n, const double* x, const double* y, double* out) {
  const int n4 = n & ~3;
  int i = 0;
  for (; i < n4; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void vfma_rows_f64(int n, int rows, const double* x, int ldx, const double* y,
                   int ldy, double* out) {
  const int n4 = n & ~3;
  int i = 0;
  for (; i < n4; i += 4) {
    __m256d acc = _mm256_loadu_pd(out + i);
    for (int r = 0; r < rows; ++r)
      acc = _mm256_fmadd_pd(
          _mm256_loadu_pd(x + static_cast<std::size_t>(r) * ldx + i),
          _mm256_loadu_pd(y + static_cast<std::size_t>(r) * ldy + i), acc);
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i)
    for (int r = 0; r < rows; ++r)
      out[i] += x[static_cast<std::size_t>(r) * ldx + i] *
                y[static_cast<std::size_t>(r) * ldy + i];
}

void vdiv_f64(int n, const double* x, const double* y, double* out) {
  const int n4 = n & ~3;
  int i = 0;
  for (; i < n4; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_div_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] / y[i];
}

void vfma_f64(int n, const double* x, const double* y, double* out) {
  const int n4 = n & ~3;
  int i = 0;
  for (; i < n4; i += 4) {
    __m256d vo = _mm256_loadu_pd(out + i);
    vo = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), vo);
    _mm256_storeu_pd(out + i, vo);
  }
  for (; i < n; ++i) out[i] += x[i] * y[i];
}

// Double-precision exp stays on libm: the call is never on a hot training
// path (training runs float32) and libm keeps the accuracy gradient checks
// need.
void vexp_f64(int n, const double* x, double* out) {
  for (int i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void vecmat_f64(int n, int cols, const double* a, int lda, const double* x,
                double* out) {
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    for (int c = 0; c < cols; ++c) {
      const __m256d xc = _mm256_set1_pd(x[c]);
      const double* row = a + static_cast<std::size_t>(c) * lda + i;
      acc0 = _mm256_fmadd_pd(xc, _mm256_loadu_pd(row), acc0);
      acc1 = _mm256_fmadd_pd(xc, _mm256_loadu_pd(row + 4), acc1);
    }
    _mm256_storeu_pd(out + i, acc0);
    _mm256_storeu_pd(out + i + 4, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (int c = 0; c < cols; ++c)
      acc = _mm256_fmadd_pd(_mm256_set1_pd(x[c]),
                            _mm256_loadu_pd(a + static_cast<std::size_t>(c) * lda + i),
                            acc);
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double s = 0.0;
    for (int c = 0; c < cols; ++c)
      s += x[c] * a[static_cast<std::size_t>(c) * lda + i];
    out[i] = s;
  }
}

double sum_f64(const double* x, int n) {
  const int n4 = n & ~3;
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i < n4; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double max_f64(const double* x, int n) {
  double best = x[0];
  int i = 0;
  if (n >= 4) {
    __m256d vb = _mm256_loadu_pd(x);
    const int n4 = n & ~3;
    for (i = 4; i < n4; i += 4) vb = _mm256_max_pd(vb, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vb);
    best = lanes[0];
    for (int l = 1; l < 4; ++l) best = lanes[l] > best ? lanes[l] : best;
  }
  for (; i < n; ++i) best = x[i] > best ? x[i] : best;
  return best;
}

void adamw_f64(int n, double* w, double* m, double* v, const double* g,
               double lr, double b1, double b2, double eps, double wd,
               double c1, double c2) {
  for (int i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double mh = m[i] / c1;
    const double vh = v[i] / c2;
    w[i] -= lr * (mh / (std::sqrt(vh) + eps) + wd * w[i]);
  }
}

}  // namespace

template <>
Kernels<float> avx2_table<float>() {
  Kernels<float> t;
  t.gemm_nn = &gemm_nn_f32;
  t.gemm_nt = &gemm_nt_f32;
  t.gemm_tn = &gemm_tn_f32;
  t.dot = &dot_f32;
  t.axpy = &axpy_f32;
  t.scale = &scale_f32;
  t.vadd = &vadd_f32;
  t.vsub = &vsub_f32;
  t.vmul = &vmul_f32;
  t.vdiv = &vdiv_f32;
  t.vfma = &vfma_f32;
  t.vfma_rows = &vfma_rows_f32;
  t.vexp = &vexp_f32;
  t.vecmat = &vecmat_f32;
  t.sum = &sum_f32;
  t.max = &max_f32;
  t.adamw = &adamw_f32;
  return t;
}

template <>
Kernels<double> avx2_table<double>() {
  Kernels<double> t;
  t.gemm_nn = &gemm_nn_f64;
  t.gemm_nt = &gemm_nt_f64;
  t.gemm_tn = &gemm_tn_f64;
  t.dot = &dot_f64;
  t.axpy = &axpy_f64;
  t.scale = &scale_f64;
  t.vadd = &vadd_f64;
  t.vsub = &vsub_f64;
  t.vmul = &vmul_f64;
  t.vdiv = &vdiv_f64;
  t.vfma = &vfma_f64;
  t.vfma_rows = &vfma_rows_f64;
  t.vexp = &vexp_f64;
  t.vecmat = &vecmat_f64;
  t.sum = &sum_f64;
  t.max = &max_f64;
  t.adamw = &adamw_f64;
  return t;
}

}  // namespace stellar::simd::detail
