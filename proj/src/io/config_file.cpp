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

#include "stellar/io/config_file.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stellar::io {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: missing '=' on line " +
                                  std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: empty key on line " +
                                  std::to_string(lineno));
    if (kv.count(key))
      throw std::invalid_argument("config: duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

std::string ConfigReader::take_string(const std::string& key,
                                      const std::string& fallback) {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::string v = it->second;
  kv_.erase(it);
  return v;
}

double ConfigReader::take_double(const std::string& key, double fallback) {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(it->second, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for '" + key + "'");
  }
  if (pos != it->second.size())
    throw std::invalid_argument("config: bad number for '" + key + "'");
  kv_.erase(it);
  return v;
}

int ConfigReader::take_int(const std::string& key, int fallback) {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::size_t pos = 0;
  long v;
  try {
    v = std::stol(it->second, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for '" + key + "'");
  }
  if (pos != it->second.size())
    throw std::invalid_argument("config: bad integer for '" + key + "'");
  kv_.erase(it);
  return static_cast<int>(v);
}

std::uint64_t ConfigReader::take_u64(const std::string& key,
                                     std::uint64_t fallback) {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::size_t pos = 0;
  unsigned long long v;
  try {
    v = std::stoull(it->second, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for '" + key + "'");
  }
  if (pos != it->second.size())
    throw std::invalid_argument("config: bad integer for '" + key + "'");
  kv_.erase(it);
  return v;
}

bool ConfigReader::take_bool(const std::string& key, bool fallback) {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string v = it->second;
  kv_.erase(it);
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "'");
}

void ConfigReader::finish(const std::string& context) const {
  if (kv_.empty()) return;
  std::string msg = context + ": unknown key(s):";
  for (const auto& [k, _] : kv_) msg += " '" + k + "'";
  throw std::invalid_argument(msg);
}

}  // namespace stellar::io
