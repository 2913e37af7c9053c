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


#include <filesystem>
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "helpers.hpp"
#include "orf/checkpoint.hpp"

using namespace orf;
using namespace orf::testing;

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Checkpoint sample_checkpoint() {
  Rng rng(21);
  Checkpoint c;
  c.config_digest = 0x0123456789ABCDEFull;
  c.step = 4242;
  c.meta = R"({"stage":"fine","seed":7})";
  c.entries.emplace_back("model.a", random_tensor(rng, {3, 4}, -2, 2, DType::kF32));
  c.entries.emplace_back("model.b", random_tensor(rng, {5}, -2, 2, DType::kF32));
  c.entries.emplace_back("adam.m.a", random_tensor(rng, {2, 1, 3}, -2, 2, DType::kF32));
  c.entries.emplace_back("empty", Tensor::zeros({0}, DType::kF32));
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "orf_ckpt_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("encode and decode round-trip every field bit-exactly") {
    const Checkpoint c = sample_checkpoint();
    const Checkpoint d = decode_checkpoint(encode_checkpoint(c));
    CHECK(d.config_digest == c.config_digest);
    CHECK(d.step == c.step);
    CHECK(d.meta == c.meta);
    REQUIRE(d.entries.size() == c.entries.size());
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
      CHECK(d.entries[i].first == c.entries[i].first);
      CHECK(d.entries[i].second.shape() == c.entries[i].second.shape());
      for (std::size_t k = 0; k < c.entries[i].second.numel(); ++k)
        CHECK(d.entries[i].second.at(k) == c.entries[i].second.at(k));
    }
    CHECK(d.contains("model.b"));
    CHECK_FALSE(d.contains("model.c"));
    CHECK(d.find("model.b").numel() == 5);
    CHECK_THROWS(d.find("model.c"));
  }

  TEST_CASE("file starts with the magic bytes") {
    const auto bytes = encode_checkpoint(sample_checkpoint());
    REQUIRE(bytes.size() > 8);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "ORFC");
  }

  TEST_CASE("save, load, save produces byte-identical files") {
    const auto p1 = scratch("a.ckpt"), p2 = scratch("b.ckpt");
    save_checkpoint(p1, sample_checkpoint());
    save_checkpoint(p2, load_checkpoint(p1));
    CHECK(read_bytes(p1) == read_bytes(p2));
    CHECK_FALSE(std::filesystem::exists(p1.string() + ".tmp"));
  }

  TEST_CASE("digest mismatch is refused with both digests named, unless forced") {
    const auto p = scratch("digest.ckpt");
    save_checkpoint(p, sample_checkpoint());
    CHECK_NOTHROW(load_checkpoint(p, 0x0123456789ABCDEFull));
    try {
      load_checkpoint(p, 0x42ull);
      FAIL("expected a refusal");
    } catch (const CheckpointError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("0123456789abcdef") != std::string::npos);
      CHECK(msg.find("42") != std::string::npos);
    }
    CHECK(load_checkpoint(p, 0x42ull, true).step == 4242);
  }

  TEST_CASE("truncation, bit flips and bad magic raise corruption errors") {
    const auto bytes = encode_checkpoint(sample_checkpoint());
    for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{20}, bytes.size() / 2,
                          bytes.size() - 1}) {
      const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + n);
      CHECK_THROWS_AS(decode_checkpoint(cut), CheckpointError);
    }
    auto flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x10;
    CHECK_THROWS_AS(decode_checkpoint(flipped), CheckpointError);
    auto magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(magic), CheckpointError);
    auto longer = bytes;
    longer.push_back(0);
    CHECK_THROWS_AS(decode_checkpoint(longer), CheckpointError);
  }

  TEST_CASE("truncated file on disk is a corruption error") {
    const auto p = scratch("trunc.ckpt");
    save_checkpoint(p, sample_checkpoint());
    std::filesystem::resize_file(p, std::filesystem::file_size(p) - 7);
    CHECK_THROWS_AS(load_checkpoint(p), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint(scratch("missing.ckpt")), CheckpointError);
  }

  TEST_CASE("64-bit tensors are refused") {
    Checkpoint c;
    c.entries.emplace_back("x", Tensor::zeros({2}, DType::kF64));
    CHECK_THROWS_AS(encode_checkpoint(c), CheckpointError);
  }
}
