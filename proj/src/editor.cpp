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

#include "orf/editor.hpp"

#include <algorithm>

namespace orf {

EditedScene apply_edits(const SlotSet& slots, const EditPlan& plan) {
  const std::size_t k = slots.num_foreground();
  EditedScene out{slots, {std::vector<Vec3>(k), std::vector<bool>(k, false)}};
  bool swapped = false;
  for (const Edit& e : plan.edits) {
    if (e.kind != Edit::Kind::kSwapBackground && e.slot >= k)
      throw EditError("edit refers to slot " + std::to_string(e.slot) + " but the scene has " +
                      std::to_string(k) + " foreground slots");
    switch (e.kind) {
      case Edit::Kind::kMove:
        out.edits.offsets[e.slot] = out.edits.offsets[e.slot] + e.offset;
        break;
      case Edit::Kind::kRemove:
        out.edits.removed[e.slot] = true;
        break;
      case Edit::Kind::kSwapBackground:
        if (swapped) throw EditError("edit plan swaps the background more than once");
        if (!e.background.defined() || e.background.shape() != slots.background.shape())
          throw EditError("background swap needs a latent of shape " +
                          shape_str(slots.background.shape()));
        out.slots.background = e.background.detach();
        swapped = true;
        break;
    }
  }
  return out;
}

bool plan_needs_background(const nlohmann::json& j) {
  if (!j.contains("edits")) return false;
  for (const auto& e : j.at("edits"))
    if (e.value("op", "") == "swap_background") return true;
  return false;
}

EditPlan parse_edit_plan(const nlohmann::json& j, const Tensor& swap_background) {
  if (!j.is_object() || !j.contains("edits") || !j.at("edits").is_array())
    throw EditError("edit plan must be an object with an \"edits\" array");
  EditPlan plan;
  for (const auto& e : j.at("edits")) {
    const std::string op = e.value("op", "");
    Edit edit;
    try {
      if (op == "move") {
        edit.kind = Edit::Kind::kMove;
        edit.slot = e.at("slot").get<std::size_t>();
        const auto o = e.at("offset").get<std::vector<double>>();
        if (o.size() != 3) throw EditError("move offset needs 3 components");
        edit.offset = {o[0], o[1], o[2]};
      } else if (op == "remove") {
        edit.kind = Edit::Kind::kRemove;
        edit.slot = e.at("slot").get<std::size_t>();
      } else if (op == "swap_background") {
        edit.kind = Edit::Kind::kSwapBackground;
        edit.background = swap_background;
      } else {
        throw EditError("unknown edit op '" + op + "'");
      }
    } catch (const nlohmann::json::exception& ex) {
      throw EditError(std::string("malformed edit: ") + ex.what());
    }
    plan.edits.push_back(std::move(edit));
  }
  return plan;
}

SlotSelection select_slot_by_mask(const DensityMaps& maps, std::span<const bool> mask) {
  const std::size_t n = maps.height * maps.width;
  if (mask.size() != n) throw EditError("selection mask and density maps differ in size");
  if (maps.components < 2) throw EditError("no foreground slots to select from");
  SlotSelection sel;
  bool any = false;
  for (std::size_t c = 1; c < maps.components; ++c) {
    const double* d = maps.maps.data() + c * n;
    const double peak = *std::max_element(d, d + n);
    any |= peak > 0;
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool on = peak > 0 && d[i] >= 0.5 * peak;
      inter += on && mask[i];
      uni += on || mask[i];
    }
    sel.ious.push_back(uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0);
  }
  if (!any) throw EditError("no object found: every foreground density map is zero");
  sel.slot = static_cast<std::size_t>(std::max_element(sel.ious.begin(), sel.ious.end()) - sel.ious.begin());
  sel.iou = sel.ious[sel.slot];
  sel.ambiguous = std::count(sel.ious.begin(), sel.ious.end(), sel.iou) > 1;
  return sel;
}

}  // namespace orf
