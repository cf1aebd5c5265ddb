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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stalloc/actions.hpp"
#include "stalloc/demand.hpp"
#include "stalloc/error.hpp"
#include "stalloc/latent.hpp"
#include "stalloc/reshape.hpp"
#include "stalloc/schedule.hpp"
#include "stalloc/sketch.hpp"
#include "stalloc/stage.hpp"

namespace stalloc {

inline constexpr int kPlanFormatVersion = 1;

struct PlanTransition {
  /// Global step count completed before the switch (sketch steps included).
  std::size_t after_step = 0;
  GridShape target;
  /// 1 - after_step / N.
  double tau = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const PlanTransition&, const PlanTransition&) = default;
};

struct Speedups {
  double linear = 1.0;
  double quadratic = 1.0;
};

struct SchedulePlan {
  Action action;
  /// Preview stage run before the action; counted in the density.
  std::optional<Stage> sketch;
  BaseGrid base;
  std::vector<GridShape> stage_grids;
  std::vector<PlanTransition> transitions;
  double predicted_density = 1.0;
  Speedups predicted_speedup;
  DemandEstimate demand;
};

// ---------------------------------------------------------------------------
// Cost simulator

enum class CostMode { kLinear, kQuadratic };

struct CostModel {
  CostModel(CostMode m = CostMode::kLinear, double k1 = 1.0, std::optional<double> k2 = std::nullopt)
      : mode(m), per_token(k1), per_token_pair(k2) {}

  CostMode mode = CostMode::kLinear;
  /// Cost per token per step.
  double per_token = 1.0;
  /// Cost per token pair per step; unset means 1 / (base tokens).
  std::optional<double> per_token_pair;
};

struct CostReport {
  double cost = 0.0;
  double baseline_cost = 0.0;
  double speedup = 1.0;
};

namespace detail {

inline double stage_cost(std::size_t tokens, std::size_t steps, CostMode mode, double k1,
                         double k2) {
  const auto t = static_cast<double>(tokens);
  const auto n = static_cast<double>(steps);
  if (mode == CostMode::kLinear) return t * n * k1;
  return (t * k1 + t * t * k2) * n;
}

}  // namespace detail

/// Theoretical cost of a plan against full-resolution sampling for
/// `baseline_steps` steps (default: the plan's own N). The sketch prelude is
/// charged. Speedup is 1 / (cost / baseline) so the linear model reproduces
/// 1 / rho bit for bit when per_token == 1.
inline CostReport simulate_cost(const SchedulePlan& plan, const CostModel& model,
                                std::optional<std::size_t> baseline_steps = std::nullopt) {
  const std::size_t full_tokens = plan.base.grid.tokens();
  const double k1 = model.per_token;
  const double k2 = model.per_token_pair.value_or(1.0 / static_cast<double>(full_tokens));
  if (!(k1 > 0.0) || !(k2 > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cost constants must be positive");
  }
  CostReport report;
  // Linear mode sums integer token-steps, so the total is exact.
  if (model.mode == CostMode::kLinear) {
    const std::uint64_t ts = token_steps(plan.action.stages, plan.base.grid, plan.sketch);
    report.cost = static_cast<double>(ts) * k1;
  } else {
    if (plan.sketch) {
      report.cost += detail::stage_cost(plan.sketch->grid(plan.base.grid).tokens(),
                                        plan.sketch->steps, model.mode, k1, k2);
    }
    for (std::size_t i = 0; i < plan.action.stages.size(); ++i) {
      report.cost += detail::stage_cost(plan.stage_grids.at(i).tokens(),
                                        plan.action.stages[i].steps, model.mode, k1, k2);
    }
  }
  const std::size_t n = baseline_steps.value_or(plan.base.steps);
  if (model.mode == CostMode::kLinear) {
    report.baseline_cost = static_cast<double>(static_cast<std::uint64_t>(full_tokens) * n) * k1;
  } else {
    report.baseline_cost = detail::stage_cost(full_tokens, n, model.mode, k1, k2);
  }
  report.speedup = 1.0 / (report.cost / report.baseline_cost);
  return report;
}

// ---------------------------------------------------------------------------
// Plan construction

/// Fills grids, transitions, density and speedups for a chosen action.
/// Transition into stage l uses seed ^ l.
inline SchedulePlan resolve_plan(const Action& action, const BaseGrid& base,
                                 const std::optional<Stage>& sketch, std::uint64_t seed,
                                 const DemandEstimate& demand = {}) {
  if (action.stages.empty()) throw Error(ErrorCode::kInvalidArgument, "action has no stages");
  if (!action.stages.back().is_full()) {
    throw Error(ErrorCode::kInvalidArgument, "final stage must run at full resolution");
  }
  if (action.total_steps() != action_steps(base, sketch)) {
    throw Error(ErrorCode::kInvalidStepSplit, "action steps do not add up to the step budget");
  }
  SchedulePlan plan;
  plan.action = action;
  plan.sketch = sketch;
  plan.base = base;
  plan.demand = demand;
  std::size_t step = sketch ? sketch->steps : 0;
  for (std::size_t i = 0; i < action.stages.size(); ++i) {
    plan.stage_grids.push_back(action.stages[i].grid(base.grid));
    step += action.stages[i].steps;
    if (i + 1 < action.stages.size()) {
      plan.transitions.push_back({step, action.stages[i + 1].grid(base.grid),
                                  NoiseSchedule::tau_of_step(step, base.steps),
                                  seed ^ static_cast<std::uint64_t>(i + 1)});
    }
  }
  plan.predicted_density = density(action, base, sketch);
  plan.predicted_speedup.linear = simulate_cost(plan, CostModel(CostMode::kLinear)).speedup;
  plan.predicted_speedup.quadratic = simulate_cost(plan, CostModel(CostMode::kQuadratic)).speedup;
  return plan;
}

struct EnumerationParams {
  std::size_t stage_count = 2;
  RatioGrid grid = RatioGrid::fine();
  /// Empty selects default_step_split.
  std::vector<std::size_t> step_split;
};

using ActionSource = std::variant<EnumerationParams, std::vector<Action>>;

struct PlannerConfig {
  BudgetSpec budget;
  DemandConfig demand;
  ActionSource actions = EnumerationParams{};
  std::optional<Stage> sketch =
      Stage{GridRatio::from_units(10), GridRatio::from_units(10), 4};
  std::uint64_t seed = 0;
  /// Retry with tolerance x2 then x4 before reporting an empty feasible set.
  bool auto_widen = false;
};

inline std::vector<Action> candidate_actions(const BaseGrid& base, const PlannerConfig& cfg) {
  if (const auto* explicit_list = std::get_if<std::vector<Action>>(&cfg.actions)) {
    return *explicit_list;
  }
  const auto& params = std::get<EnumerationParams>(cfg.actions);
  const auto split = params.step_split.empty()
                         ? default_step_split(params.stage_count, action_steps(base, cfg.sketch))
                         : params.step_split;
  return enumerate_actions(base, params.stage_count, split, params.grid, cfg.sketch);
}

/// sketch -> demand -> budget filter -> demand matching -> resolved plan.
inline SchedulePlan make_plan(const LatentView& sketch_latent, const BaseGrid& base,
                              const PlannerConfig& cfg) {
  cfg.budget.validate();
  cfg.demand.validate();
  const LatentShape& s = sketch_latent.shape;
  if (s.frames < 2 || s.height < 4 || s.width < 4) {
    throw Error(ErrorCode::kDegenerateSketch, "sketch needs F >= 2 and H, W >= 4");
  }
  if (base.grid.tokens() == 0 || base.steps == 0) {
    throw Error(ErrorCode::kInvalidArgument, "base grid and steps must be positive");
  }
  const DemandEstimate demand = estimate_demand(sketch_latent, cfg.demand);
  const auto candidates = candidate_actions(base, cfg);

  BudgetSpec budget = cfg.budget;
  std::vector<Action> feasible;
  for (int attempt = 0;; ++attempt) {
    try {
      feasible = filter_by_budget(candidates, budget, base, cfg.sketch);
      break;
    } catch (const EmptyFeasibleSetError&) {
      if (!cfg.auto_widen || attempt == 2) throw;
      budget.tolerance *= 2.0;
      if (!(budget.target_density - budget.tolerance > 0.0)) throw;
    }
  }
  const Action chosen = select_action(feasible, demand.profile, budget.lambda, base, cfg.sketch);
  return resolve_plan(chosen, base, cfg.sketch, cfg.seed, demand);
}

// ---------------------------------------------------------------------------
// Execution

/// Runs the action stages with Euler steps and stage transitions. `x_init` is
/// the latent at the first stage's grid, positioned after the sketch steps.
template <DenoiserOracle Oracle>
VideoLatent execute_plan(const SchedulePlan& plan, Oracle&& oracle, const LatentView& x_init,
                         const NoiseSchedule& schedule) {
  if (schedule.num_steps() != plan.base.steps) {
    throw Error(ErrorCode::kInvalidArgument, "schedule length differs from the plan's step count");
  }
  if (plan.stage_grids.empty() || x_init.shape.grid() != plan.stage_grids.front()) {
    throw Error(ErrorCode::kShapeInconsistency, "initial latent is not at the first stage grid");
  }
  VideoLatent x = VideoLatent::from_view(x_init);
  std::size_t step = plan.sketch ? plan.sketch->steps : 0;
  const auto& stages = plan.action.stages;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    for (std::size_t n = 0; n < stages[i].steps; ++n, ++step) {
      const VideoLatent v = detail::call_oracle(oracle, x, step);
      detail::euler_step(x, v, schedule.sigma_at(step) - schedule.sigma_at(step + 1));
    }
    if (i + 1 < stages.size()) {
      const PlanTransition& tr = plan.transitions.at(i);
      x = transition(x, stages[i], stages[i + 1], plan.base.grid, tr.tau, schedule, tr.seed);
    }
  }
  if (!x.all_finite()) throw Error(ErrorCode::kNonFiniteResult, "sampling chain diverged");
  return x;
}

}  // namespace stalloc
