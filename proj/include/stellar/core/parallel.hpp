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

#include <cstdlib>
#include <thread>
#include <vector>

namespace stellar::core {

// Worker cap. STELLAR_THREADS overrides hardware_concurrency;
// STELLAR_DETERMINISTIC=1 serializes execution entirely. Work items write
// disjoint slots and reductions happen in index order afterwards, so results
// are identical either way; the env switches only trade speed.
inline int max_threads() {
  if (const char* d = std::getenv("STELLAR_DETERMINISTIC");
      d && d[0] == '1')
    return 1;
  if (const char* t = std::getenv("STELLAR_THREADS")) {
    const int n = std::atoi(t);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [begin, end) across up to max_threads() workers.
// Returns the number of workers used.
template <typename Fn>
int parallel_for(int begin, int end, Fn&& fn) {
  const int count = end - begin;
  const int workers = std::min(max_threads(), count);
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return 1;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = begin + w; i < end; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
  return workers;
}

}  // namespace stellar::core
