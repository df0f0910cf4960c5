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

#include <map>
#include <string>

namespace stellar::io {

// Flat `key = value` text, UTF-8, '#' starts a comment. Duplicate keys are
// errors.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Typed access helpers used by config consumers. A consumed key is erased;
// whatever remains afterwards is unknown and must be reported.
class ConfigReader {
 public:
  explicit ConfigReader(std::map<std::string, std::string> kv)
      : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  std::string take_string(const std::string& key, const std::string& fallback);
  double take_double(const std::string& key, double fallback);
  int take_int(const std::string& key, int fallback);
  std::uint64_t take_u64(const std::string& key, std::uint64_t fallback);
  bool take_bool(const std::string& key, bool fallback);

  // Throws std::invalid_argument listing leftover keys, if any.
  void finish(const std::string& context) const;

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace stellar::io
