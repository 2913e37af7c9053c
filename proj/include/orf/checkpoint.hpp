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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "orf/tensor.hpp"

namespace orf {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File layout, little-endian:
//   "ORFC" | u32 version | u64 config digest | u64 step
//   | u32 meta length | meta JSON bytes
//   | u32 entry count | per entry: u32 name length, name, u32 rank,
//     u64 extents..., f32 values...
//   | u32 CRC32 of everything before it.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t config_digest = 0;
  std::uint64_t step = 0;
  std::string meta;  // JSON object: stage, seeds, optimizer step counts
  std::vector<std::pair<std::string, Tensor>> entries;

  const Tensor& find(const std::string& name) const;
  bool contains(const std::string& name) const;
};

// Tensors must be 32-bit.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
// Throws CheckpointError on bad magic, version, length or CRC.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// With expected_digest set, refuses a mismatching file unless `force`.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_digest = std::nullopt,
                           bool force = false);

}  // namespace orf
