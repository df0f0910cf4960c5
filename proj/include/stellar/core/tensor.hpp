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
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace stellar::core {

// Dense row-major shape, rank 1..3.
struct Shape {
  int d[3] = {1, 1, 1};
  int rank = 0;

  static Shape of(int a) { return Shape{{a, 1, 1}, 1}; }
  static Shape of(int a, int b) { return Shape{{a, b, 1}, 2}; }
  static Shape of(int a, int b, int c) { return Shape{{a, b, c}, 3}; }

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (int i = 0; i < rank; ++i) n *= d[i];
    return n;
  }
  int rows() const { return d[0]; }
  int cols() const { return rank >= 2 ? d[1] : 1; }

  bool operator==(const Shape& o) const {
    if (rank != o.rank) return false;
    for (int i = 0; i < rank; ++i)
      if (d[i] != o.d[i]) return false;
    return true;
  }
  bool operator!=(const Shape& o) const { return !(*this == o); }

  std::string str() const {
    std::string s = "[";
    for (int i = 0; i < rank; ++i) {
      if (i) s += "x";
      s += std::to_string(d[i]);
    }
    return s + "]";
  }
};

// Contiguous tensor over a shared buffer. Copies are shallow (shared
// storage); ops never mutate their inputs, so sharing is safe. Use clone()
// for an independent buffer.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape s) {
    Tensor t;
    t.shape_ = s;
    t.buf_ = std::make_shared<std::vector<T>>(s.numel(), T(0));
    return t;
  }
  static Tensor constant(Shape s, T v) {
    Tensor t = zeros(s);
    for (auto& x : *t.buf_) x = v;
    return t;
  }
  static Tensor from(Shape s, std::vector<T> values) {
    if (static_cast<std::int64_t>(values.size()) != s.numel())
      throw std::invalid_argument("tensor: value count does not match shape " +
                                  s.str());
    Tensor t;
    t.shape_ = s;
    t.buf_ = std::make_shared<std::vector<T>>(std::move(values));
    return t;
  }

  bool defined() const { return buf_ != nullptr; }
  const Shape& shape() const { return shape_; }
  int rank() const { return shape_.rank; }
  int dim(int i) const { return shape_.d[i]; }
  int rows() const { return shape_.rows(); }
  int cols() const { return shape_.cols(); }
  std::int64_t size() const { return shape_.numel(); }

  T* data() { return buf_->data() + off_; }
  const T* data() const { return buf_->data() + off_; }

  T& operator[](std::int64_t i) { return data()[i]; }
  const T& operator[](std::int64_t i) const { return data()[i]; }
  T& at(int i, int j) { return data()[static_cast<std::int64_t>(i) * cols() + j]; }
  const T& at(int i, int j) const {
    return data()[static_cast<std::int64_t>(i) * cols() + j];
  }

  // Contiguous row-range view (rank-2 tensors).
  Tensor rows_view(int r0, int count) const {
    if (rank() != 2 || r0 < 0 || count < 0 || r0 + count > rows())
      throw std::invalid_argument("rows_view: bad range");
    Tensor t;
    t.buf_ = buf_;
    t.off_ = off_ + static_cast<std::int64_t>(r0) * cols();
    t.shape_ = Shape::of(count, cols());
    return t;
  }

  Tensor reshape(Shape s) const {
    if (s.numel() != size())
      throw std::invalid_argument("reshape: numel mismatch " + shape_.str() +
                                  " -> " + s.str());
    Tensor t = *this;
    t.shape_ = s;
    return t;
  }

  Tensor clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.buf_ = std::make_shared<std::vector<T>>(data(), data() + size());
    return t;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> t = Tensor<U>::zeros(shape_);
    const T* src = data();
    U* dst = t.data();
    for (std::int64_t i = 0; i < size(); ++i) dst[i] = static_cast<U>(src[i]);
    return t;
  }

  bool all_finite() const {
    const T* p = data();
    for (std::int64_t i = 0; i < size(); ++i)
      if (!std::isfinite(p[i])) return false;
    return true;
  }

 private:
  template <typename U>
  friend class Tensor;

  std::shared_ptr<std::vector<T>> buf_;
  std::int64_t off_ = 0;
  Shape shape_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace stellar::core
