/* Copyright 2026 The orf Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "orf/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace orf {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

const Tensor& Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : entries)
    if (n == name) return t;
  throw CheckpointError("checkpoint has no entry '" + name + "'");
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& e : entries)
    if (e.first == name) return true;
  return false;
}

namespace {

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof v);
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::size_t end) : bytes_(b), end_(end) {}
  template <typename T>
  T pod() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  void raw(void* out, std::size_t n) {
    if (n > end_ - pos_) throw CheckpointError("checkpoint is truncated");
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(0L, data, static_cast<uInt>(n)));
}

std::string hex(std::uint64_t v) {
  std::ostringstream ss;
  ss << "0x" << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw("ORFC", 4);
  w.pod<std::uint32_t>(Checkpoint::kVersion);
  w.pod<std::uint64_t>(ckpt.config_digest);
  w.pod<std::uint64_t>(ckpt.step);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(ckpt.meta.size()));
  w.raw(ckpt.meta.data(), ckpt.meta.size());
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& [name, t] : ckpt.entries) {
    if (t.dtype() != DType::kF32)
      throw CheckpointError("checkpoint entry '" + name + "' is not 32-bit");
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.pod<std::uint64_t>(d);
    const auto values = t.data<float>();
    w.raw(values.data(), values.size_bytes());
  }
  w.pod<std::uint32_t>(crc32_of(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 + 4 + 8 + 8 + 4 + 4 + 4) throw CheckpointError("checkpoint is truncated");
  if (std::memcmp(bytes.data(), "ORFC", 4) != 0) throw CheckpointError("not a checkpoint (bad magic)");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  Reader r(bytes, body);
  char magic[4];
  r.raw(magic, 4);
  const auto version = r.pod<std::uint32_t>();
  if (version != Checkpoint::kVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  // Checked after the version so old files get the clearer message, but
  // before any length field is trusted.
  if (crc32_of(bytes.data(), body) != stored)
    throw CheckpointError("checkpoint is corrupt (CRC mismatch)");
  Checkpoint c;
  c.config_digest = r.pod<std::uint64_t>();
  c.step = r.pod<std::uint64_t>();
  c.meta.resize(r.pod<std::uint32_t>());
  r.raw(c.meta.data(), c.meta.size());
  const auto count = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.pod<std::uint32_t>(), '\0');
    r.raw(name.data(), name.size());
    const auto rank = r.pod<std::uint32_t>();
    if (rank > 8) throw CheckpointError("checkpoint entry '" + name + "' has rank " + std::to_string(rank));
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = r.pod<std::uint64_t>();
      n *= d;
    }
    if (n * 4 > r.remaining()) throw CheckpointError("checkpoint is truncated");
    Tensor t = Tensor::zeros(shape, DType::kF32);
    auto out = t.mutable_data<float>();
    r.raw(out.data(), out.size_bytes());
    c.entries.emplace_back(std::move(name), std::move(t));
  }
  if (r.remaining() != 0) throw CheckpointError("checkpoint has trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw CheckpointError("cannot write " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CheckpointError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_digest, bool force) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Checkpoint c = decode_checkpoint(bytes);
  if (expected_digest && *expected_digest != c.config_digest && !force)
    throw CheckpointError("checkpoint config digest " + hex(c.config_digest) +
                          " does not match the current config digest " + hex(*expected_digest) +
                          "; pass --force to load anyway");
  return c;
}

}  // namespace orf
