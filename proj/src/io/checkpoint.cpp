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

#include "stellar/io/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace stellar::io {

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
  char b[4];
  b[0] = static_cast<char>(v & 0xFF);
  b[1] = static_cast<char>((v >> 8) & 0xFF);
  b[2] = static_cast<char>((v >> 16) & 0xFF);
  b[3] = static_cast<char>((v >> 24) & 0xFF);
  buf.append(b, 4);
}

std::uint32_t get_u32(const std::string& buf, std::size_t& off) {
  if (off + 4 > buf.size())
    throw std::runtime_error("checkpoint: truncated file");
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + off);
  off += 4;
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t crc_of(const std::string& buf, std::size_t len) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(buf.data()),
              static_cast<uInt>(len)));
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<NamedTensor>& tensors) {
  std::string buf;
  buf.append("STLR", 4);
  put_u32(buf, kCheckpointVersion);
  for (const auto& nt : tensors) {
    put_u32(buf, static_cast<std::uint32_t>(nt.name.size()));
    buf.append(nt.name);
    const auto& s = nt.tensor.shape();
    put_u32(buf, static_cast<std::uint32_t>(s.rank));
    for (int i = 0; i < s.rank; ++i)
      put_u32(buf, static_cast<std::uint32_t>(s.d[i]));
    static_assert(sizeof(float) == 4);
    const std::size_t bytes = static_cast<std::size_t>(nt.tensor.size()) * 4;
    const std::size_t at = buf.size();
    buf.resize(at + bytes);
    std::memcpy(buf.data() + at, nt.tensor.data(), bytes);
  }
  put_u32(buf, crc_of(buf, buf.size()));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(is)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 12) throw std::runtime_error("checkpoint: truncated file");

  std::size_t off = buf.size() - 4;
  const std::uint32_t stored = get_u32(buf, off);
  if (stored != crc_of(buf, buf.size() - 4))
    throw std::runtime_error("checkpoint: CRC mismatch in " + path);

  off = 0;
  if (buf.compare(0, 4, "STLR") != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  off = 4;
  const std::uint32_t version = get_u32(buf, off);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));

  std::vector<NamedTensor> out;
  const std::size_t end = buf.size() - 4;
  while (off < end) {
    const std::uint32_t name_len = get_u32(buf, off);
    if (off + name_len > end)
      throw std::runtime_error("checkpoint: truncated name");
    std::string name(buf, off, name_len);
    off += name_len;
    const std::uint32_t rank = get_u32(buf, off);
    if (rank < 1 || rank > 3)
      throw std::runtime_error("checkpoint: unsupported rank for " + name);
    core::Shape shape;
    shape.rank = static_cast<int>(rank);
    std::int64_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      shape.d[i] = static_cast<int>(get_u32(buf, off));
      numel *= shape.d[i];
    }
    const std::size_t bytes = static_cast<std::size_t>(numel) * 4;
    if (off + bytes > end)
      throw std::runtime_error("checkpoint: truncated payload for " + name);
    core::TensorF t = core::TensorF::zeros(shape);
    std::memcpy(t.data(), buf.data() + off, bytes);
    off += bytes;
    out.push_back({std::move(name), std::move(t)});
  }
  return out;
}

}  // namespace stellar::io
