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


#include <string>

#include "doctest.h"
#include "orf/config.hpp"

using namespace orf;

TEST_SUITE("config") {
  TEST_CASE("dump re-parses to an identical effective config") {
    Config c;
    c.seed = 17;
    c.threads = 3;
    c.scenegen.num_scenes = 12;
    c.scenegen.shapes = {"box"};
    c.model.frame.world_scale = 5.5;
    c.train.disc_adam.beta2 = 0.95;
    c.train.weights.percept = 0.5;
    c.eval.seeds = {4, 5};
    const std::string text = dump_config(c);
    const Config back = parse_config(text);
    CHECK(dump_config(back) == text);
    CHECK(back.seed == 17);
    CHECK(back.model.frame.world_scale == 5.5);
    CHECK(back.train.disc_adam.beta2 == 0.95);
    CHECK(back.eval.seeds == std::vector<std::uint64_t>{4, 5});
  }

  TEST_CASE("defaults fill missing keys") {
    const Config c = parse_config(R"({"train": {"coarse_steps": 5}})");
    CHECK(c.train.coarse_steps == 5);
    CHECK(c.train.lr == 3e-4);
    CHECK(c.train.disc_lr == 1e-3);
    CHECK(c.train.model_adam.beta1 == 0.9);
    CHECK(c.train.model_adam.beta2 == 0.999);
    CHECK(c.train.disc_adam.beta1 == 0.0);
    CHECK(c.train.disc_adam.beta2 == 0.9);
    CHECK(c.model.num_slots == 4);
    CHECK(c.model.slot_dim == 32);
    CHECK(dump_config(parse_config("{}")) == dump_config(Config{}));
  }

  TEST_CASE("unknown keys are rejected with their dotted path") {
    try {
      parse_config(R"({"train": {"weights": {"percpt": 1}}})");
      FAIL("expected rejection");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("train.weights.percpt") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), ConfigError);
  }

  TEST_CASE("type errors and malformed text are rejected") {
    CHECK_THROWS_AS(parse_config(R"({"seed": "seven"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"num_slots": -1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_config("[]"), ConfigError);
  }

  TEST_CASE("config digest tracks model and training fields only") {
    Config a, b;
    CHECK(config_digest(a.model, a.train) == config_digest(b.model, b.train));
    b.eval.samples = 3;
    b.scenegen.num_scenes = 9;
    CHECK(config_digest(a.model, a.train) == config_digest(b.model, b.train));
    b.train.lr = 1e-3;
    CHECK(config_digest(a.model, a.train) != config_digest(b.model, b.train));
  }

  TEST_CASE("the global seed is the training seed") {
    const Config c = parse_config(R"({"seed": 9})");
    CHECK(c.train.seed == 9);
    CHECK_THROWS_AS(parse_config(R"({"train": {"seed": 3}})"), ConfigError);
    Config a = c, b = c;
    b.train.seed = 10;
    CHECK(config_digest(a.model, a.train) != config_digest(b.model, b.train));
  }
}
