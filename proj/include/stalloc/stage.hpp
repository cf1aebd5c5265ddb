/* Copyright 2026 The stalloc Authors. All Rights Reserved.

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

#include <compare>
#include <cstddef>
#include <vector>

#include "stalloc/latent.hpp"

namespace stalloc {

/// One denoising stage: compression ratios on the 0.05 grid plus its step count.
struct Stage {
  GridRatio spatial;
  GridRatio temporal;
  std::size_t steps = 1;

  GridShape grid(const GridShape& base) const { return apply_ratios(base, spatial, temporal); }
  bool is_full() const noexcept { return spatial == GridRatio::one() && temporal == GridRatio::one(); }

  friend auto operator<=>(const Stage&, const Stage&) = default;
  friend bool operator==(const Stage&, const Stage&) = default;
};

/// Ordered stage list. The last stage is the full-resolution refinement.
/// Comparison is lexicographic over stages, which is the canonical order.
struct Action {
  std::vector<Stage> stages;

  std::size_t total_steps() const noexcept {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.steps;
    return n;
  }

  friend auto operator<=>(const Action&, const Action&) = default;
  friend bool operator==(const Action&, const Action&) = default;
};

/// Full-resolution grid plus the total step budget N of the sampling chain.
struct BaseGrid {
  GridShape grid;
  std::size_t steps = 1;

  friend bool operator==(const BaseGrid&, const BaseGrid&) = default;
};

}  // namespace stalloc
