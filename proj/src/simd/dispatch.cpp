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

#include <cstdlib>
#include <cstring>

#include "stellar/simd/simd.hpp"

namespace stellar::simd {

namespace {

bool env_forces_scalar() {
  const char* v = std::getenv("STELLAR_FORCE_SCALAR");
  return v != nullptr && std::strcmp(v, "0") != 0 && v[0] != '\0';
}

IsaLevel detect() {
  if (env_forces_scalar()) return IsaLevel::scalar;
#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return IsaLevel::avx2;
#endif
  return IsaLevel::scalar;
}

}  // namespace

IsaLevel active_isa() {
  static const IsaLevel level = detect();
  return level;
}

const char* isa_name() {
  return active_isa() == IsaLevel::avx2 ? "avx2" : "scalar";
}

template <typename T>
const Kernels<T>& kernels() {
  static const Kernels<T> table = active_isa() == IsaLevel::avx2
                                      ? detail::avx2_table<T>()
                                      : detail::scalar_table<T>();
  return table;
}

template const Kernels<float>& kernels<float>();
template const Kernels<double>& kernels<double>();

}  // namespace stellar::simd
