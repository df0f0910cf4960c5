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

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "stellar/core/graph.hpp"
#include "stellar/core/rng.hpp"
#include "stellar/core/tensor.hpp"

namespace stellar::model {

// Named parameter registry. Slot order is the registration order, shared by
// student/teacher copies and the optimizer state.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    core::Tensor<T> value;
    bool decay = false;  // participates in weight decay
  };

  int add(const std::string& name, core::Shape shape, bool decay) {
    if (index_.count(name))
      throw std::invalid_argument("param already registered: " + name);
    index_[name] = static_cast<int>(entries_.size());
    entries_.push_back({name, core::Tensor<T>::zeros(shape), decay});
    return static_cast<int>(entries_.size()) - 1;
  }

  int slot(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw std::invalid_argument("unknown param: " + name);
    return it->second;
  }

  int size() const { return static_cast<int>(entries_.size()); }
  Entry& entry(int slot) { return entries_[slot]; }
  const Entry& entry(int slot) const { return entries_[slot]; }
  core::Tensor<T>& value(int slot) { return entries_[slot].value; }
  const core::Tensor<T>& value(int slot) const { return entries_[slot].value; }
  core::Tensor<T>& value(const std::string& name) { return value(slot(name)); }
  const core::Tensor<T>& value(const std::string& name) const {
    return value(slot(name));
  }

  std::int64_t num_scalars() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  // Deep copy (teacher shadow).
  ParamStore clone() const {
    ParamStore out;
    out.index_ = index_;
    out.entries_.reserve(entries_.size());
    for (const auto& e : entries_)
      out.entries_.push_back({e.name, e.value.clone(), e.decay});
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

// Per-graph binding of parameter slots to leaf refs, deduplicated so a slot
// used by several views contributes one leaf whose gradient accumulates.
template <typename T>
class Binder {
 public:
  Binder(core::Graph<T>& g, const ParamStore<T>& store)
      : g_(g), store_(store), cache_(store.size(), -1) {}

  core::Graph<T>& graph() { return g_; }
  const ParamStore<T>& store() const { return store_; }

  int operator()(int slot) {
    if (cache_[slot] < 0) cache_[slot] = g_.param(store_.value(slot), slot);
    return cache_[slot];
  }
  int operator()(const std::string& name) { return (*this)(store_.slot(name)); }

 private:
  core::Graph<T>& g_;
  const ParamStore<T>& store_;
  std::vector<int> cache_;
};

// teacher <- momentum * teacher + (1 - momentum) * student, elementwise over
// every registered parameter. momentum in [0, 1].
template <typename T>
void ema_update(ParamStore<T>& teacher, const ParamStore<T>& student,
                double momentum) {
  if (momentum < 0.0 || momentum > 1.0)
    throw std::invalid_argument("ema_update: momentum must be in [0, 1]");
  if (teacher.size() != student.size())
    throw std::invalid_argument("ema_update: store size mismatch");
  const T m = static_cast<T>(momentum);
  for (int s = 0; s < teacher.size(); ++s) {
    core::Tensor<T>& tv = teacher.value(s);
    const core::Tensor<T>& sv = student.value(s);
    if (tv.shape() != sv.shape())
      throw std::invalid_argument("ema_update: shape mismatch at " +
                                  teacher.entry(s).name);
    T* t = tv.data();
    const T* u = sv.data();
    for (std::int64_t i = 0; i < tv.size(); ++i)
      t[i] = m * t[i] + (T(1) - m) * u[i];
  }
}

}  // namespace stellar::model
