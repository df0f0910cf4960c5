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

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stellar/core/tensor.hpp"
#include "stellar/simd/simd.hpp"

namespace stellar::core {

// Reverse-mode tape over Tensor<T>. Nodes are appended in evaluation order,
// which is a valid topological order, so backward() is a single reverse
// sweep. Ops never mutate inputs; values of leaves may alias external
// storage (parameters).
template <typename T>
class Graph {
 public:
  using Ref = int;

  explicit Graph(bool inference = false) : inference_(inference) {
    nodes_.reserve(256);
  }
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool inference_mode() const { return inference_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  const Tensor<T>& value(Ref r) const { return nodes_[r].val; }
  const Tensor<T>& grad(Ref r) const { return nodes_[r].grad; }
  bool has_grad(Ref r) const { return nodes_[r].grad.defined(); }
  bool needs_grad(Ref r) const { return nodes_[r].needs_grad; }

  // ----------------------------------------------------------- leaves ----

  Ref constant(Tensor<T> v) { return push(std::move(v), false, nullptr); }

  Ref leaf(Tensor<T> v) { return push(std::move(v), !inference_, nullptr); }

  // Parameter leaf: value aliases the caller's tensor; gradients are
  // harvested per-slot after backward().
  Ref param(const Tensor<T>& v, int slot) {
    Ref r = push(v, !inference_, nullptr);
    if (!inference_) param_refs_.push_back({slot, r});
    return r;
  }

  const std::vector<std::pair<int, Ref>>& param_refs() const {
    return param_refs_;
  }

  Ref detach(Ref a) { return constant(nodes_[a].val); }

  // -------------------------------------------------------- arithmetic ----

  Ref add(Ref a, Ref b) {
    check_same_shape(a, b, "add");
    Tensor<T> out = Tensor<T>::zeros(shape(a));
    simd::kernels<T>().vadd(len(a), val(a), val(b), out.data());
    return unary_or_binary(std::move(out), a, b, [](Graph& g, Ref a, Ref b, Ref y) {
      if (g.wants(a)) g.accum(a, g.gval(y));
      if (g.wants(b)) g.accum(b, g.gval(y));
    });
  }

  Ref sub(Ref a, Ref b) {
    check_same_shape(a, b, "sub");
    Tensor<T> out = Tensor<T>::zeros(shape(a));
    simd::kernels<T>().vsub(len(a), val(a), val(b), out.data());
    return unary_or_binary(std::move(out), a, b, [](Graph& g, Ref a, Ref b, Ref y) {
      if (g.wants(a)) g.accum(a, g.gval(y));
      if (g.wants(b)) g.accum_scaled(b, g.gval(y), T(-1));
    });
  }

  Ref mul(Ref a, Ref b) {
    check_same_shape(a, b, "mul");
    Tensor<T> out = Tensor<T>::zeros(shape(a));
    simd::kernels<T>().vmul(len(a), val(a), val(b), out.data());
    return unary_or_binary(std::move(out), a, b, [](Graph& g, Ref a, Ref b, Ref y) {
      const T* gy = g.gval(y);
      if (g.wants(a)) {
        g.ensure_grad(a);
        T* ga = g.nodes_[a].grad.data();
        const T* bv = g.val(b);
        for (int i = 0; i < g.len(a); ++i) ga[i] += gy[i] * bv[i];
      }
      if (g.wants(b)) {
        g.ensure_grad(b);
        T* gb = g.nodes_[b].grad.data();
        const T* av = g.val(a);
        for (int i = 0; i < g.len(b); ++i) gb[i] += gy[i] * av[i];
      }
    });
  }

  // y = a + row_vector (broadcast over rows)
  Ref add_rowvec(Ref a, Ref v) {
    const int m = shape(a).rows(), n = shape(a).cols();
    if (static_cast<std::int64_t>(n) != nodes_[v].val.size())
      throw std::invalid_argument("add_rowvec: width mismatch");
    Tensor<T> out = Tensor<T>::zeros(shape(a));
    for (int i = 0; i < m; ++i)
      simd::kernels<T>().vadd(n, val(a) + static_cast<std::int64_t>(i) * n,
                              val(v), out.data() + static_cast<std::int64_t>(i) * n);
    return unary_or_binary(std::move(out), a, v, [](Graph& g, Ref a, Ref v, Ref y) {
      const int m = g.shape(a).rows(), n = g.shape(a).cols();
      const T* gy = g.gval(y);
      if (g.wants(a)) g.accum(a, gy);
      if (g.wants(v)) {
        g.ensure_grad(v);
        T* gv = g.nodes_[v].grad.data();
        for (int i = 0; i < m; ++i)
          simd::kernels<T>().vadd(n, gv, gy + static_cast<std::int64_t>(i) * n, gv);
      }
    });
  }

  Ref scalar_mul(Ref a, T c) {
    Tensor<T> out = nodes_[a].val.clone();
    simd::kernels<T>().scale(len(a), c, out.data());
    return unary(std::move(out), a, [c](Graph& g, Ref a, Ref y) {
      g.accum_scaled(a, g.gval(y), c);
    });
  }

  Ref add_scalar(Ref a, T c) {
    Tensor<T> out = nodes_[a].val.clone();
    T* p = out.data();
    for (int i = 0; i < len(a); ++i) p[i] += c;
    return unary(std::move(out), a,
                 [](Graph& g, Ref a, Ref y) { g.accum(a, g.gval(y)); });
  }

  // ------------------------------------------------------------ matmul ----

  // y[m x n] = a[m x k] * b[k x n]
  Ref matmul(Ref a, Ref b) {
    const int m = shape(a).rows(), k = shape(a).cols();
    const int kb = shape(b).rows(), n = shape(b).cols();
    if (k != kb) throw std::invalid_argument("matmul: inner dim mismatch");
    Tensor<T> out = Tensor<T>::zeros(Shape::of(m, n));
    simd::kernels<T>().gemm_nn(m, n, k, T(1), val(a), k, val(b), n, T(0),
                               out.data(), n);
    return unary_or_binary(std::move(out), a, b, [](Graph& g, Ref a, Ref b, Ref y) {
      const int m = g.shape(a).rows(), k = g.shape(a).cols();
      const int n = g.shape(b).cols();
      const T* gy = g.gval(y);
      if (g.wants(a)) {
        g.ensure_grad(a);
        simd::kernels<T>().gemm_nt(m, k, n, T(1), gy, n, g.val(b), n, T(1),
                                   g.nodes_[a].grad.data(), k);
      }
      if (g.wants(b)) {
        g.ensure_grad(b);
        simd::kernels<T>().gemm_tn(k, n, m, T(1), g.val(a), k, gy, n, T(1),
                                   g.nodes_[b].grad.data(), n);
      }
    });
  }

  // y[m x n] = a[m x k] * b[n x k]^T
  Ref matmul_nt(Ref a, Ref b) {
    const int m = shape(a).rows(), k = shape(a).cols();
    const int n = shape(b).rows();
    if (k != shape(b).cols())
      throw std::invalid_argument("matmul_nt: inner dim mismatch");
    Tensor<T> out = Tensor<T>::zeros(Shape::of(m, n));
    simd::kernels<T>().gemm_nt(m, n, k, T(1), val(a), k, val(b), k, T(0),
                               out.data(), n);
    return unary_or_binary(std::move(out), a, b, [](Graph& g, Ref a, Ref b, Ref y) {
      const int m = g.shape(a).rows(), k = g.shape(a).cols();
      const int n = g.shape(b).rows();
      const T* gy = g.gval(y);
      if (g.wants(a)) {
        g.ensure_grad(a);
        simd::kernels<T>().gemm_nn(m, k, n, T(1), gy, n, g.val(b), k, T(1),
                                   g.nodes_[a].grad.data(), k);
      }
      if (g.wants(b)) {
        g.ensure_grad(b);
        simd::kernels<T>().gemm_tn(n, k, m, T(1), gy, n, g.val(a), k, T(1),
                                   g.nodes_[b].grad.data(), k);
      }
    });
  }

  // ------------------------------------------------------ shape movers ----

  Ref slice_rows(Ref a, int r0, int count) {
    Tensor<T> out = nodes_[a].val.rows_view(r0, count);
    return unary(std::move(out), a, [r0, count](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      Tensor<T> region = g.nodes_[a].grad.rows_view(r0, count);
      simd::kernels<T>().vadd(static_cast<int>(region.size()), region.data(),
                              g.gval(y), region.data());
    });
  }

  Ref slice_cols(Ref a, int c0, int width) {
    const int m = shape(a).rows(), n = shape(a).cols();
    if (c0 < 0 || width < 0 || c0 + width > n)
      throw std::invalid_argument("slice_cols: bad range");
    Tensor<T> out = Tensor<T>::zeros(Shape::of(m, width));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < width; ++j) out.at(i, j) = at(a, i, c0 + j);
    return unary(std::move(out), a, [c0, width](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const int m = g.shape(a).rows();
      const T* gy = g.gval(y);
      Tensor<T>& ga = g.nodes_[a].grad;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < width; ++j)
          ga.at(i, c0 + j) += gy[static_cast<std::int64_t>(i) * width + j];
    });
  }

  Ref concat_rows(const std::vector<Ref>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
    const int n = shape(parts[0]).cols();
    int m = 0;
    for (Ref p : parts) {
      if (shape(p).cols() != n)
        throw std::invalid_argument("concat_rows: width mismatch");
      m += shape(p).rows();
    }
    Tensor<T> out = Tensor<T>::zeros(Shape::of(m, n));
    int row = 0;
    for (Ref p : parts) {
      const int pr = shape(p).rows();
      T* dst = out.data() + static_cast<std::int64_t>(row) * n;
      const T* src = val(p);
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(pr) * n; ++i)
        dst[i] = src[i];
      row += pr;
    }
    bool ng = false;
    for (Ref p : parts) ng |= nodes_[p].needs_grad;
    Ref y = push(std::move(out), ng, nullptr);
    if (ng) {
      std::vector<Ref> ps = parts;
      nodes_[y].back = [ps, y](Graph& g) {
        const int n = g.shape(y).cols();
        const T* gy = g.gval(y);
        int row = 0;
        for (Ref p : ps) {
          const int pr = g.shape(p).rows();
          if (g.wants(p)) {
            g.ensure_grad(p);
            simd::kernels<T>().vadd(pr * n, g.nodes_[p].grad.data(),
                                    gy + static_cast<std::int64_t>(row) * n,
                                    g.nodes_[p].grad.data());
          }
          row += pr;
        }
      };
    }
    return y;
  }

  Ref concat_cols(const std::vector<Ref>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
    const int m = shape(parts[0]).rows();
    int n = 0;
    for (Ref p : parts) {
      if (shape(p).rows() != m)
        throw std::invalid_argument("concat_cols: height mismatch");
      n += shape(p).cols();
    }
    Tensor<T> out = Tensor<T>::zeros(Shape::of(m, n));
    int col = 0;
    for (Ref p : parts) {
      const int pc = shape(p).cols();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < pc; ++j) out.at(i, col + j) = at(p, i, j);
      col += pc;
    }
    bool ng = false;
    for (Ref p : parts) ng |= nodes_[p].needs_grad;
    Ref y = push(std::move(out), ng, nullptr);
    if (ng) {
      std::vector<Ref> ps = parts;
      nodes_[y].back = [ps, y](Graph& g) {
        const int m = g.shape(y).rows();
        const int n = g.shape(y).cols();
        const T* gy = g.gval(y);
        int col = 0;
        for (Ref p : ps) {
          const int pc = g.shape(p).cols();
          if (g.wants(p)) {
            g.ensure_grad(p);
            Tensor<T>& gp = g.nodes_[p].grad;
            for (int i = 0; i < m; ++i)
              for (int j = 0; j < pc; ++j)
                gp.at(i, j) += gy[static_cast<std::int64_t>(i) * n + col + j];
          }
          col += pc;
        }
      };
    }
    return y;
  }

  Ref gather_rows(Ref a, const std::vector<int>& idx) {
    const int n = shape(a).cols();
    for (int i : idx)
      if (i < 0 || i >= shape(a).rows())
        throw std::invalid_argument("gather_rows: index out of range");
    Tensor<T> out = Tensor<T>::zeros(Shape::of(static_cast<int>(idx.size()), n));
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (int j = 0; j < n; ++j)
        out.at(static_cast<int>(k), j) = at(a, idx[k], j);
    return unary(std::move(out), a, [idx](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const int n = g.shape(a).cols();
      const T* gy = g.gval(y);
      Tensor<T>& ga = g.nodes_[a].grad;
      for (std::size_t k = 0; k < idx.size(); ++k)
        for (int j = 0; j < n; ++j)
          ga.at(idx[k], j) += gy[k * n + j];
    });
  }

  Ref transpose(Ref a) {
    const int m = shape(a).rows(), n = shape(a).cols();
    Tensor<T> out = Tensor<T>::zeros(Shape::of(n, m));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out.at(j, i) = at(a, i, j);
    return unary(std::move(out), a, [](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const int m = g.shape(a).rows(), n = g.shape(a).cols();
      const Tensor<T>& gy = g.nodes_[y].grad;
      Tensor<T>& ga = g.nodes_[a].grad;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) ga.at(i, j) += gy.at(j, i);
    });
  }

  Ref reshape(Ref a, Shape s) {
    Tensor<T> out = nodes_[a].val.reshape(s);
    return unary(std::move(out), a, [](Graph& g, Ref a, Ref y) {
      g.accum(a, g.gval(y));
    });
  }

  // ------------------------------------------------------- activations ----

  Ref gelu(Ref a) {
    Tensor<T> out = Tensor<T>::zeros(shape(a));
    const T* x = val(a);
    T* y = out.data();
    for (int i = 0; i < len(a); ++i) y[i] = gelu_fwd(x[i]);
    return unary(std::move(out), a, [](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const T* x = g.val(a);
      const T* gy = g.gval(y);
      T* ga = g.nodes_[a].grad.data();
      for (int i = 0; i < g.len(a); ++i) ga[i] += gy[i] * gelu_bwd(x[i]);
    });
  }

  Ref clamp01(Ref a) {
    Tensor<T> out = Tensor<T>::zeros(shape(a));
    const T* x = val(a);
    T* y = out.data();
    for (int i = 0; i < len(a); ++i)
      y[i] = x[i] < T(0) ? T(0) : (x[i] > T(1) ? T(1) : x[i]);
    return unary(std::move(out), a, [](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const T* x = g.val(a);
      const T* gy = g.gval(y);
      T* ga = g.nodes_[a].grad.data();
      for (int i = 0; i < g.len(a); ++i)
        if (x[i] >= T(0) && x[i] <= T(1)) ga[i] += gy[i];
    });
  }

  // Row-wise softmax of a/temperature, max-subtracted before exponentiation.
  Ref softmax_rows(Ref a, T temperature) {
    const int m = shape(a).rows(), n = shape(a).cols();
    Tensor<T> out = Tensor<T>::zeros(shape(a));
    const auto& ker = simd::kernels<T>();
    for (int i = 0; i < m; ++i) {
      const T* x = val(a) + static_cast<std::int64_t>(i) * n;
      T* y = out.data() + static_cast<std::int64_t>(i) * n;
      T mx = ker.max(x, n);
      for (int j = 0; j < n; ++j) y[j] = (x[j] - mx) / temperature;
      ker.vexp(n, y, y);
      T s = ker.sum(y, n);
      ker.scale(n, T(1) / s, y);
    }
    return unary(std::move(out), a, [temperature](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const int m = g.shape(a).rows(), n = g.shape(a).cols();
      const T* yv = g.val(y);
      const T* gy = g.gval(y);
      T* ga = g.nodes_[a].grad.data();
      for (int i = 0; i < m; ++i) {
        const std::int64_t o = static_cast<std::int64_t>(i) * n;
        T dotv = simd::kernels<T>().dot(gy + o, yv + o, n);
        for (int j = 0; j < n; ++j)
          ga[o + j] += yv[o + j] * (gy[o + j] - dotv) / temperature;
      }
    });
  }

  Ref log_softmax_rows(Ref a, T temperature) {
    const int m = shape(a).rows(), n = shape(a).cols();
    Tensor<T> out = Tensor<T>::zeros(shape(a));
    const auto& ker = simd::kernels<T>();
    std::vector<T> ex(n);
    for (int i = 0; i < m; ++i) {
      const T* x = val(a) + static_cast<std::int64_t>(i) * n;
      T* y = out.data() + static_cast<std::int64_t>(i) * n;
      T mx = ker.max(x, n);
      for (int j = 0; j < n; ++j) y[j] = (x[j] - mx) / temperature;
      ker.vexp(n, y, ex.data());
      T lse = std::log(ker.sum(ex.data(), n));
      for (int j = 0; j < n; ++j) y[j] -= lse;
    }
    return unary(std::move(out), a, [temperature](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const int m = g.shape(a).rows(), n = g.shape(a).cols();
      const T* yv = g.val(y);
      const T* gy = g.gval(y);
      T* ga = g.nodes_[a].grad.data();
      for (int i = 0; i < m; ++i) {
        const std::int64_t o = static_cast<std::int64_t>(i) * n;
        T gsum = simd::kernels<T>().sum(gy + o, n);
        for (int j = 0; j < n; ++j)
          ga[o + j] += (gy[o + j] - std::exp(yv[o + j]) * gsum) / temperature;
      }
    });
  }

  // Per-row layer normalization with affine parameters.
  Ref layer_norm(Ref x, Ref gamma, Ref beta, T eps = T(1e-5)) {
    const int m = shape(x).rows(), n = shape(x).cols();
    if (nodes_[gamma].val.size() != n || nodes_[beta].val.size() != n)
      throw std::invalid_argument("layer_norm: affine width mismatch");
    Tensor<T> out = Tensor<T>::zeros(shape(x));
    Tensor<T> xhat = Tensor<T>::zeros(shape(x));
    Tensor<T> inv_sigma = Tensor<T>::zeros(Shape::of(m));
    const T* gv = val(gamma);
    const T* bv = val(beta);
    for (int i = 0; i < m; ++i) {
      const T* xr = val(x) + static_cast<std::int64_t>(i) * n;
      T mu = simd::kernels<T>().sum(xr, n) / T(n);
      T var = 0;
      for (int j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
      var /= T(n);
      T is = T(1) / std::sqrt(var + eps);
      inv_sigma[i] = is;
      T* xh = xhat.data() + static_cast<std::int64_t>(i) * n;
      T* yr = out.data() + static_cast<std::int64_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        xh[j] = (xr[j] - mu) * is;
        yr[j] = gv[j] * xh[j] + bv[j];
      }
    }
    bool ng = nodes_[x].needs_grad || nodes_[gamma].needs_grad ||
              nodes_[beta].needs_grad;
    Ref y = push(std::move(out), ng, nullptr);
    if (ng) {
      nodes_[y].back = [x, gamma, beta, y, xhat, inv_sigma](Graph& g) {
        const int m = g.shape(x).rows(), n = g.shape(x).cols();
        const T* gy = g.gval(y);
        const T* gv = g.val(gamma);
        if (g.wants(beta)) {
          g.ensure_grad(beta);
          T* gb = g.nodes_[beta].grad.data();
          for (int i = 0; i < m; ++i)
            simd::kernels<T>().vadd(n, gb, gy + static_cast<std::int64_t>(i) * n, gb);
        }
        if (g.wants(gamma)) {
          g.ensure_grad(gamma);
          T* gg = g.nodes_[gamma].grad.data();
          for (int i = 0; i < m; ++i) {
            const std::int64_t o = static_cast<std::int64_t>(i) * n;
            for (int j = 0; j < n; ++j) gg[j] += gy[o + j] * xhat[o + j];
          }
        }
        if (g.wants(x)) {
          g.ensure_grad(x);
          T* gx = g.nodes_[x].grad.data();
          for (int i = 0; i < m; ++i) {
            const std::int64_t o = static_cast<std::int64_t>(i) * n;
            T mean_d = 0, mean_dx = 0;
            for (int j = 0; j < n; ++j) {
              const T d = gy[o + j] * gv[j];
              mean_d += d;
              mean_dx += d * xhat[o + j];
            }
            mean_d /= T(n);
            mean_dx /= T(n);
            const T is = inv_sigma[i];
            for (int j = 0; j < n; ++j) {
              const T d = gy[o + j] * gv[j];
              gx[o + j] += (d - mean_d - xhat[o + j] * mean_dx) * is;
            }
          }
        }
      };
    }
    return y;
  }

  // Rows scaled to (near) unit norm: y_i = x_i / (||x_i|| + eps).
  Ref l2_normalize_rows(Ref a, T eps = T(1e-8)) {
    const int m = shape(a).rows(), n = shape(a).cols();
    Tensor<T> out = Tensor<T>::zeros(shape(a));
    Tensor<T> norms = Tensor<T>::zeros(Shape::of(m));
    for (int i = 0; i < m; ++i) {
      const T* x = val(a) + static_cast<std::int64_t>(i) * n;
      T nrm = std::sqrt(simd::kernels<T>().dot(x, x, n));
      norms[i] = nrm;
      T* y = out.data() + static_cast<std::int64_t>(i) * n;
      const T inv = T(1) / (nrm + eps);
      for (int j = 0; j < n; ++j) y[j] = x[j] * inv;
    }
    return unary(std::move(out), a, [norms, eps](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const int m = g.shape(a).rows(), n = g.shape(a).cols();
      const T* xv = g.val(a);
      const T* gy = g.gval(y);
      T* ga = g.nodes_[a].grad.data();
      for (int i = 0; i < m; ++i) {
        const std::int64_t o = static_cast<std::int64_t>(i) * n;
        const T nrm = norms[i];
        const T s = nrm + eps;
        const T xd = simd::kernels<T>().dot(xv + o, gy + o, n);
        const T coeff = xd / (std::max(nrm, T(1e-30)) * s * s);
        for (int j = 0; j < n; ++j)
          ga[o + j] += gy[o + j] / s - xv[o + j] * coeff;
      }
    });
  }

  // ---------------------------------------------------------- reducers ----

  Ref sum_all(Ref a) {
    Tensor<T> out = Tensor<T>::constant(Shape::of(1),
                                        simd::kernels<T>().sum(val(a), len(a)));
    return unary(std::move(out), a, [](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const T gy = g.gval(y)[0];
      T* ga = g.nodes_[a].grad.data();
      for (int i = 0; i < g.len(a); ++i) ga[i] += gy;
    });
  }

  Ref mean_all(Ref a) {
    const T inv = T(1) / T(len(a));
    Tensor<T> out = Tensor<T>::constant(
        Shape::of(1), simd::kernels<T>().sum(val(a), len(a)) * inv);
    return unary(std::move(out), a, [inv](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const T gy = g.gval(y)[0] * inv;
      T* ga = g.nodes_[a].grad.data();
      for (int i = 0; i < g.len(a); ++i) ga[i] += gy;
    });
  }

  Ref mean_rows(Ref a) {
    const int m = shape(a).rows(), n = shape(a).cols();
    Tensor<T> out = Tensor<T>::zeros(Shape::of(1, n));
    for (int i = 0; i < m; ++i)
      simd::kernels<T>().vadd(n, out.data(),
                              val(a) + static_cast<std::int64_t>(i) * n,
                              out.data());
    simd::kernels<T>().scale(n, T(1) / T(m), out.data());
    return unary(std::move(out), a, [](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const int m = g.shape(a).rows(), n = g.shape(a).cols();
      const T* gy = g.gval(y);
      T* ga = g.nodes_[a].grad.data();
      const T inv = T(1) / T(m);
      for (int i = 0; i < m; ++i)
        simd::kernels<T>().axpy(n, inv, gy, ga + static_cast<std::int64_t>(i) * n);
    });
  }

  // ------------------------------------------------------------ losses ----

  // Mean squared error against a constant target.
  Ref mse(Ref pred, const Tensor<T>& target) {
    if (shape(pred) != target.shape())
      throw std::invalid_argument("mse: shape mismatch " +
                                  shape(pred).str() + " vs " +
                                  target.shape().str());
    const int n = len(pred);
    const T* p = val(pred);
    const T* t = target.data();
    T acc = 0;
    for (int i = 0; i < n; ++i) acc += (p[i] - t[i]) * (p[i] - t[i]);
    Tensor<T> out = Tensor<T>::constant(Shape::of(1), acc / T(n));
    return unary(std::move(out), pred, [target](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const int n = g.len(a);
      const T c = g.gval(y)[0] * T(2) / T(n);
      const T* p = g.val(a);
      const T* t = target.data();
      T* ga = g.nodes_[a].grad.data();
      for (int i = 0; i < n; ++i) ga[i] += c * (p[i] - t[i]);
    });
  }

  // scale * sum_ij(weights_ij * logp_ij) with constant weights; the building
  // block for cross-entropy against gradient-stopped targets.
  Ref weighted_sum(Ref logp, const Tensor<T>& weights, T scale) {
    if (shape(logp) != weights.shape())
      throw std::invalid_argument("weighted_sum: shape mismatch");
    const T acc =
        simd::kernels<T>().dot(val(logp), weights.data(), len(logp));
    Tensor<T> out = Tensor<T>::constant(Shape::of(1), scale * acc);
    return unary(std::move(out), logp, [weights, scale](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const T c = g.gval(y)[0] * scale;
      simd::kernels<T>().axpy(g.len(a), c, weights.data(),
                              g.nodes_[a].grad.data());
    });
  }

  // Nearest-neighbor spreading penalty on row-normalized tokens:
  //   loss = -(1/r) * sum_j log(0.5 * max(min_{j'!=j} ||xbar_j - xbar_j'||, floor))
  Ref koleo(Ref tokens, T floor = T(1e-8)) {
    const int r = shape(tokens).rows(), d = shape(tokens).cols();
    if (r < 2) throw std::invalid_argument("koleo: needs at least 2 tokens");
    Tensor<T> xbar = Tensor<T>::zeros(shape(tokens));
    Tensor<T> norms = Tensor<T>::zeros(Shape::of(r));
    for (int i = 0; i < r; ++i) {
      const T* x = val(tokens) + static_cast<std::int64_t>(i) * d;
      T nrm = std::sqrt(simd::kernels<T>().dot(x, x, d));
      if (nrm <= T(0))
        throw std::invalid_argument("koleo: zero token");
      norms[i] = nrm;
      T* y = xbar.data() + static_cast<std::int64_t>(i) * d;
      for (int j = 0; j < d; ++j) y[j] = x[j] / nrm;
    }
    std::vector<int> nnidx(r, -1);
    std::vector<T> nndist(r, T(0));
    T loss = 0;
    for (int i = 0; i < r; ++i) {
      T best = T(0);
      int bj = -1;
      for (int j = 0; j < r; ++j) {
        if (j == i) continue;
        std::vector<T> diff(d);
        simd::kernels<T>().vsub(d, xbar.data() + static_cast<std::int64_t>(i) * d,
                                xbar.data() + static_cast<std::int64_t>(j) * d,
                                diff.data());
        T dist = std::sqrt(simd::kernels<T>().dot(diff.data(), diff.data(), d));
        if (bj < 0 || dist < best) {
          best = dist;
          bj = j;
        }
      }
      nnidx[i] = bj;
      nndist[i] = best;
      loss += -std::log(T(0.5) * std::max(best, floor));
    }
    Tensor<T> out = Tensor<T>::constant(Shape::of(1), loss / T(r));
    return unary(std::move(out), tokens,
                 [xbar, norms, nnidx, nndist, floor](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const int r = g.shape(a).rows(), d = g.shape(a).cols();
      const T gy = g.gval(y)[0];
      // d loss / d xbar
      Tensor<T> gxbar = Tensor<T>::zeros(Shape::of(r, d));
      for (int i = 0; i < r; ++i) {
        const T m = nndist[i];
        if (m <= floor || m <= T(0)) continue;  // clamped region or duplicate
        const int j = nnidx[i];
        const T coeff = gy * (-T(1) / T(r)) / m;  // d(-log(m/2))/dm = -1/m
        const T* xi = xbar.data() + static_cast<std::int64_t>(i) * d;
        const T* xj = xbar.data() + static_cast<std::int64_t>(j) * d;
        T* gi = gxbar.data() + static_cast<std::int64_t>(i) * d;
        T* gj = gxbar.data() + static_cast<std::int64_t>(j) * d;
        for (int k = 0; k < d; ++k) {
          const T dir = (xi[k] - xj[k]) / m;
          gi[k] += coeff * dir;
          gj[k] -= coeff * dir;
        }
      }
      // through the row normalization: dx = (dxbar - xbar*(xbar . dxbar))/n
      T* ga = g.nodes_[a].grad.data();
      for (int i = 0; i < r; ++i) {
        const std::int64_t o = static_cast<std::int64_t>(i) * d;
        const T* xb = xbar.data() + o;
        const T* gxb = gxbar.data() + o;
        const T proj = simd::kernels<T>().dot(xb, gxb, d);
        const T inv = T(1) / norms[i];
        for (int k = 0; k < d; ++k)
          ga[o + k] += (gxb[k] - xb[k] * proj) * inv;
      }
    });
  }

  // ------------------------------------------------------ image <-> seq ----

  // (c, h, w) image to (n, c*p*p) patch tokens, grid scanned row-major.
  Ref patchify(Ref img, int patch) {
    const int c = shape(img).d[0], h = shape(img).d[1], w = shape(img).d[2];
    if (h % patch != 0 || w % patch != 0)
      throw std::invalid_argument("patchify: size not divisible by patch");
    const int gh = h / patch, gw = w / patch;
    const int n = gh * gw, pd = c * patch * patch;
    Tensor<T> out = Tensor<T>::zeros(Shape::of(n, pd));
    const T* src = val(img);
    for (int gy = 0; gy < gh; ++gy)
      for (int gx = 0; gx < gw; ++gx) {
        T* tok = out.data() + static_cast<std::int64_t>(gy * gw + gx) * pd;
        int f = 0;
        for (int ch = 0; ch < c; ++ch)
          for (int py = 0; py < patch; ++py)
            for (int px = 0; px < patch; ++px)
              tok[f++] = src[(static_cast<std::int64_t>(ch) * h +
                              (gy * patch + py)) * w + gx * patch + px];
      }
    return unary(std::move(out), img, [patch](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const int c = g.shape(a).d[0], h = g.shape(a).d[1], w = g.shape(a).d[2];
      const int gh = h / patch, gw = w / patch, pd = c * patch * patch;
      const T* gy = g.gval(y);
      T* ga = g.nodes_[a].grad.data();
      for (int ty = 0; ty < gh; ++ty)
        for (int tx = 0; tx < gw; ++tx) {
          const T* tok = gy + static_cast<std::int64_t>(ty * gw + tx) * pd;
          int f = 0;
          for (int ch = 0; ch < c; ++ch)
            for (int py = 0; py < patch; ++py)
              for (int px = 0; px < patch; ++px)
                ga[(static_cast<std::int64_t>(ch) * h + (ty * patch + py)) * w +
                   tx * patch + px] += tok[f++];
        }
    });
  }

  // Inverse of patchify.
  Ref unpatchify(Ref tokens, int channels, int h, int w, int patch) {
    const int gh = h / patch, gw = w / patch;
    const int pd = channels * patch * patch;
    if (shape(tokens).rows() != gh * gw || shape(tokens).cols() != pd)
      throw std::invalid_argument("unpatchify: token shape mismatch");
    Tensor<T> out = Tensor<T>::zeros(Shape::of(channels, h, w));
    const T* src = val(tokens);
    T* dst = out.data();
    for (int gy = 0; gy < gh; ++gy)
      for (int gx = 0; gx < gw; ++gx) {
        const T* tok = src + static_cast<std::int64_t>(gy * gw + gx) * pd;
        int f = 0;
        for (int ch = 0; ch < channels; ++ch)
          for (int py = 0; py < patch; ++py)
            for (int px = 0; px < patch; ++px)
              dst[(static_cast<std::int64_t>(ch) * h + (gy * patch + py)) * w +
                  gx * patch + px] = tok[f++];
      }
    return unary(std::move(out), tokens,
                 [channels, h, w, patch](Graph& g, Ref a, Ref y) {
      g.ensure_grad(a);
      const int gh = h / patch, gw = w / patch, pd = channels * patch * patch;
      const T* gy = g.gval(y);
      T* ga = g.nodes_[a].grad.data();
      for (int ty = 0; ty < gh; ++ty)
        for (int tx = 0; tx < gw; ++tx) {
          T* tok = ga + static_cast<std::int64_t>(ty * gw + tx) * pd;
          int f = 0;
          for (int ch = 0; ch < channels; ++ch)
            for (int py = 0; py < patch; ++py)
              for (int px = 0; px < patch; ++px)
                tok[f++] += gy[(static_cast<std::int64_t>(ch) * h +
                                (ty * patch + py)) * w + tx * patch + px];
        }
    });
  }

  // ---------------------------------------------------------- backward ----

  void backward(Ref root) {
    if (nodes_[root].val.size() != 1)
      throw std::invalid_argument("backward: root must be scalar");
    if (!nodes_[root].needs_grad)
      throw std::invalid_argument("backward: root does not require grad");
    ensure_grad(root);
    nodes_[root].grad[0] = T(1);
    for (int i = root; i >= 0; --i) {
      Node& nd = nodes_[i];
      if (nd.grad.defined() && nd.back) nd.back(*this);
    }
  }

 private:
  struct Node {
    Tensor<T> val;
    Tensor<T> grad;
    bool needs_grad = false;
    std::function<void(Graph&)> back;
  };

  static T gelu_fwd(T x) {
    const T k = T(0.7978845608028654);  // sqrt(2/pi)
    const T u = k * (x + T(0.044715) * x * x * x);
    return T(0.5) * x * (T(1) + std::tanh(u));
  }
  static T gelu_bwd(T x) {
    const T k = T(0.7978845608028654);
    const T u = k * (x + T(0.044715) * x * x * x);
    const T t = std::tanh(u);
    const T du = k * (T(1) + T(3) * T(0.044715) * x * x);
    return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * du;
  }

  Ref push(Tensor<T> v, bool needs_grad, std::function<void(Graph&)> back) {
    Node nd;
    nd.val = std::move(v);
    nd.needs_grad = needs_grad;
    nd.back = std::move(back);
    nodes_.push_back(std::move(nd));
    return static_cast<Ref>(nodes_.size() - 1);
  }

  template <typename F>
  Ref unary(Tensor<T> out, Ref a, F&& f) {
    const bool ng = nodes_[a].needs_grad;
    Ref y = push(std::move(out), ng, nullptr);
    if (ng)
      nodes_[y].back = [a, y, f = std::forward<F>(f)](Graph& g) { f(g, a, y); };
    return y;
  }

  template <typename F>
  Ref unary_or_binary(Tensor<T> out, Ref a, Ref b, F&& f) {
    const bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
    Ref y = push(std::move(out), ng, nullptr);
    if (ng)
      nodes_[y].back = [a, b, y, f = std::forward<F>(f)](Graph& g) {
        f(g, a, b, y);
      };
    return y;
  }

  bool wants(Ref r) const { return nodes_[r].needs_grad; }

  void ensure_grad(Ref r) {
    if (!nodes_[r].grad.defined())
      nodes_[r].grad = Tensor<T>::zeros(nodes_[r].val.shape());
  }

  void accum(Ref r, const T* src) {
    ensure_grad(r);
    T* dst = nodes_[r].grad.data();
    simd::kernels<T>().vadd(len(r), dst, src, dst);
  }
  void accum_scaled(Ref r, const T* src, T c) {
    ensure_grad(r);
    simd::kernels<T>().axpy(len(r), c, src, nodes_[r].grad.data());
  }

  const Shape& shape(Ref r) const { return nodes_[r].val.shape(); }
  int len(Ref r) const { return static_cast<int>(nodes_[r].val.size()); }
  const T* val(Ref r) const { return nodes_[r].val.data(); }
  const T* gval(Ref r) const { return nodes_[r].grad.data(); }
  T at(Ref r, int i, int j) const { return nodes_[r].val.at(i, j); }

  void check_same_shape(Ref a, Ref b, const char* op) const {
    if (shape(a) != shape(b))
      throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                  shape(a).str() + " vs " + shape(b).str());
  }

  std::vector<Node> nodes_;
  std::vector<std::pair<int, Ref>> param_refs_;
  bool inference_;
};

using GraphF = Graph<float>;
using GraphD = Graph<double>;

}  // namespace stellar::core
