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

#include <string>
#include <vector>

#include "stellar/core/tensor.hpp"

namespace stellar::io {

struct NamedTensor {
  std::string name;
  core::TensorF tensor;
};

// Little-endian container: magic "STLR", format version u32, then repeated
// records (name length u32, UTF-8 name, rank u32, dims u32 x rank, row-major
// f32 payload), closed by a CRC32 of all preceding bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path,
                     const std::vector<NamedTensor>& tensors);

// Throws std::runtime_error on missing file, truncation, bad magic/version,
// or CRC mismatch.
std::vector<NamedTensor> load_checkpoint(const std::string& path);

}  // namespace stellar::io
