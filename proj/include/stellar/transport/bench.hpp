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

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace stellar::transport {

struct BenchRow {
  std::string method;  // "sinkhorn" | "hungarian"
  int batch_size = 0;
  int r = 0;
  int repeats = 0;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
  bool parallel = false;
};

// Wall-time of batched entropic matching vs. per-instance Hungarian on
// identical random cost batches (costs are pairwise distances between random
// token sets). Two rows per batch size. Includes a correctness cross-check
// on a well-separated instance before timing.
std::vector<BenchRow> bench_matching(const std::vector<int>& batch_sizes,
                                     int r, int repeats,
                                     std::uint64_t seed = 0);

// CSV, field order fixed:
// method,batch_size,r,repeats,mean_seconds,std_seconds,parallel
void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);

}  // namespace stellar::transport
