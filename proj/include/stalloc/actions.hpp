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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stalloc/demand.hpp"
#include "stalloc/error.hpp"
#include "stalloc/stage.hpp"

namespace stalloc {

struct BudgetSpec {
  double target_density = 0.5;
  double tolerance = 0.05;
  /// Weight of the spatial term in the matcher; the temporal term gets 1 - lambda.
  double lambda = 0.5;

  void validate() const {
    if (!(target_density > 0.0 && target_density <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "target density must lie in (0, 1]");
    }
    if (!(tolerance >= 0.0) || !(target_density - tolerance > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "tolerance must be >= 0 with D - tolerance > 0");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "lambda must lie in [0, 1]");
    }
  }
};

/// Candidate ratio values for the compressed stages, ascending.
struct RatioGrid {
  std::vector<GridRatio> values;

  /// Every multiple of 0.05 in (0, 1].
  static RatioGrid fine() {
    RatioGrid g;
    for (int u = 1; u <= GridRatio::kDenominator; ++u) g.values.push_back(GridRatio::from_units(u));
    return g;
  }

  /// Multiples of 0.1.
  static RatioGrid coarse() {
    RatioGrid g;
    for (int u = 2; u <= GridRatio::kDenominator; u += 2) g.values.push_back(GridRatio::from_units(u));
    return g;
  }

  static RatioGrid of(std::vector<GridRatio> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return RatioGrid{std::move(values)};
  }
};

struct Gains {
  double spatial = 1.0;
  double temporal = 1.0;
};

// ---------------------------------------------------------------------------
// Density

/// Sum over stages of (integer grid tokens) * steps. The optional sketch
/// prelude is charged like any other stage.
inline std::uint64_t token_steps(std::span<const Stage> stages, const GridShape& base,
                                 const std::optional<Stage>& sketch = std::nullopt) {
  std::uint64_t acc = 0;
  if (sketch) acc += static_cast<std::uint64_t>(sketch->grid(base).tokens()) * sketch->steps;
  for (const Stage& s : stages) acc += static_cast<std::uint64_t>(s.grid(base).tokens()) * s.steps;
  return acc;
}

/// rho(a): token-steps of the schedule relative to full-resolution sampling for
/// all base.steps steps.
inline double density(const Action& action, const BaseGrid& base,
                      const std::optional<Stage>& sketch = std::nullopt) {
  const auto full = static_cast<std::uint64_t>(base.grid.tokens()) * base.steps;
  return static_cast<double>(token_steps(action.stages, base.grid, sketch)) /
         static_cast<double>(full);
}

// ---------------------------------------------------------------------------
// Enumeration

/// Steps left for the action once the sketch prelude is paid for.
inline std::size_t action_steps(const BaseGrid& base, const std::optional<Stage>& sketch) {
  const std::size_t used = sketch ? sketch->steps : 0;
  if (used >= base.steps) {
    throw Error(ErrorCode::kInvalidStepSplit, "sketch steps leave no steps for the action");
  }
  return base.steps - used;
}

/// 60% of the steps go to the compressed stages (shared evenly, remainder to
/// the earliest), 40% to the refinement stage. Every stage gets at least one.
inline std::vector<std::size_t> default_step_split(std::size_t stage_count, std::size_t steps) {
  if (stage_count == 0 || steps < stage_count) {
    throw Error(ErrorCode::kInvalidStepSplit,
                "cannot split " + std::to_string(steps) + " steps over " +
                    std::to_string(stage_count) + " stages");
  }
  if (stage_count == 1) return {steps};
  const std::size_t compressed_stages = stage_count - 1;
  std::size_t compressed = (12 * steps + 10) / 20;  // round(0.6 * steps)
  compressed = std::clamp(compressed, compressed_stages, steps - 1);
  std::vector<std::size_t> split(stage_count);
  for (std::size_t i = 0; i < compressed_stages; ++i) {
    split[i] = compressed / compressed_stages + (i < compressed % compressed_stages ? 1 : 0);
  }
  split.back() = steps - compressed;
  return split;
}

/// Cartesian product of the ratio grid over stages 1..L-1; the final stage is
/// pinned to (1, 1). Result is sorted and duplicate-free.
inline std::vector<Action> enumerate_actions(const BaseGrid& base, std::size_t stage_count,
                                             std::span<const std::size_t> step_split,
                                             const RatioGrid& grid = RatioGrid::fine(),
                                             const std::optional<Stage>& sketch = std::nullopt) {
  if (stage_count < 2) throw Error(ErrorCode::kInvalidStepSplit, "stage count must be >= 2");
  if (step_split.size() != stage_count) {
    throw Error(ErrorCode::kInvalidStepSplit, "step split length must equal the stage count");
  }
  std::size_t sum = 0;
  for (std::size_t n : step_split) {
    if (n == 0) throw Error(ErrorCode::kInvalidStepSplit, "every stage needs at least one step");
    sum += n;
  }
  if (sum != action_steps(base, sketch)) {
    throw Error(ErrorCode::kInvalidStepSplit,
                "step split sums to " + std::to_string(sum) + ", expected " +
                    std::to_string(action_steps(base, sketch)));
  }
  if (grid.values.empty()) throw Error(ErrorCode::kInvalidArgument, "ratio grid is empty");

  const std::size_t free_stages = stage_count - 1;
  const std::size_t per_stage = grid.values.size() * grid.values.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < free_stages; ++i) total *= per_stage;

  std::vector<Action> actions;
  actions.reserve(total);
  std::vector<std::size_t> digits(free_stages, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Action a;
    a.stages.reserve(stage_count);
    for (std::size_t i = 0; i < free_stages; ++i) {
      const std::size_t d = digits[i];
      a.stages.push_back({grid.values[d / grid.values.size()],
                          grid.values[d % grid.values.size()], step_split[i]});
    }
    a.stages.push_back({GridRatio::one(), GridRatio::one(), step_split.back()});
    actions.push_back(std::move(a));
    for (std::size_t i = free_stages; i-- > 0;) {
      if (++digits[i] < per_stage) break;
      digits[i] = 0;
    }
  }
  std::sort(actions.begin(), actions.end());
  actions.erase(std::unique(actions.begin(), actions.end()), actions.end());
  return actions;
}

// ---------------------------------------------------------------------------
// Budget filter

/// Keeps actions with |rho - D| <= tolerance, in input order.
inline std::vector<Action> filter_by_budget(std::span<const Action> actions, const BudgetSpec& spec,
                                            const BaseGrid& base,
                                            const std::optional<Stage>& sketch = std::nullopt) {
  if (actions.empty()) throw Error(ErrorCode::kEmptyInput, "no candidate actions");
  std::vector<Action> kept;
  double nearest = 0.0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (const Action& a : actions) {
    const double rho = density(a, base, sketch);
    const double gap = std::abs(rho - spec.target_density);
    if (gap <= spec.tolerance) kept.push_back(a);
    if (gap < best_gap) {
      best_gap = gap;
      nearest = rho;
    }
  }
  if (kept.empty()) {
    throw EmptyFeasibleSetError("no action within " + std::to_string(spec.tolerance) +
                                    " of density " + std::to_string(spec.target_density) +
                                    "; nearest achievable is " + std::to_string(nearest),
                                nearest);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Demand matching

/// Unweighted mean ratios over all stages, refinement included.
inline Gains effective_gains(const Action& action) {
  if (action.stages.empty()) throw Error(ErrorCode::kInvalidArgument, "action has no stages");
  long spatial = 0;
  long temporal = 0;
  for (const Stage& s : action.stages) {
    spatial += s.spatial.units();
    temporal += s.temporal.units();
  }
  const double scale = static_cast<double>(GridRatio::kDenominator) *
                       static_cast<double>(action.stages.size());
  return {static_cast<double>(spatial) / scale, static_cast<double>(temporal) / scale};
}

/// -lambda (g_s - m_s)^2 - (1 - lambda) (g_t - m_t)^2
inline double match_score(const Gains& g, const DemandProfile& profile, double lambda) noexcept {
  const double ds = g.spatial - profile.m_s;
  const double dt = g.temporal - profile.m_t;
  return -lambda * (ds * ds) - (1.0 - lambda) * (dt * dt);
}

/// Highest match score wins; ties go to the lower density, then to the
/// lexicographically smaller action. Independent of input order.
inline Action select_action(std::span<const Action> feasible, const DemandProfile& profile,
                            double lambda, const BaseGrid& base,
                            const std::optional<Stage>& sketch = std::nullopt) {
  if (feasible.empty()) throw Error(ErrorCode::kEmptyInput, "no feasible actions to select from");
  const Action* best = nullptr;
  double best_score = 0.0;
  double best_rho = 0.0;
  for (const Action& a : feasible) {
    const double score = match_score(effective_gains(a), profile, lambda);
    const double rho = density(a, base, sketch);
    const bool better = best == nullptr || score > best_score ||
                        (score == best_score && (rho < best_rho || (rho == best_rho && a < *best)));
    if (better) {
      best = &a;
      best_score = score;
      best_rho = rho;
    }
  }
  return *best;
}

}  // namespace stalloc
