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

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "orf/model.hpp"
#include "orf/renderer.hpp"

namespace orf {

class EditError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Edit {
  enum class Kind { kMove, kRemove, kSwapBackground };
  Kind kind = Kind::kMove;
  std::size_t slot = 0;  // foreground slot, 0-based
  Vec3 offset;           // world units, kMove
  Tensor background;     // [1 x D], kSwapBackground
};

struct EditPlan {
  std::vector<Edit> edits;
};

// An edited scene: the latents (background possibly swapped) plus the
// query-time moves and removals.
struct EditedScene {
  SlotSet slots;
  SlotEdits edits;
};

// Moves of one slot accumulate. Throws EditError on an out-of-range slot,
// a background latent of the wrong shape, or more than one swap.
EditedScene apply_edits(const SlotSet& slots, const EditPlan& plan);

// {"edits": [{"op": "move", "slot": 1, "offset": [x, y, z]},
//            {"op": "remove", "slot": 0},
//            {"op": "swap_background"}]}
// Swap entries take their latent from `swap_background`, which the caller
// infers from another scene; it must be defined when the plan has one.
EditPlan parse_edit_plan(const nlohmann::json& j, const Tensor& swap_background = {});
bool plan_needs_background(const nlohmann::json& j);

struct SlotSelection {
  std::size_t slot = 0;  // foreground slot, 0-based
  double iou = 0;
  std::vector<double> ious;
  bool ambiguous = false;  // best IoU shared by several slots (or all zero)
};

// Binarizes each foreground density map at half its maximum and returns the
// slot with the largest IoU against `mask`; ties go to the lowest index.
// Throws EditError when every foreground map is zero.
SlotSelection select_slot_by_mask(const DensityMaps& maps, std::span<const bool> mask);

}  // namespace orf
