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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stalloc/error.hpp"
#include "stalloc/planner.hpp"

namespace stalloc {

using Json = nlohmann::json;

// Canonical text form: sorted keys, two-space indent, doubles printed with 17
// significant digits so they parse back to the same bits.
namespace detail {

inline void append_double(std::string& out, double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteResult, "cannot serialize non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

inline void dump_canonical(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + Json(it.key()).dump() + ": ";
        dump_canonical(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        dump_canonical(j[i], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float:
      append_double(out, j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace detail

inline std::string dump_canonical(const Json& j) {
  std::string out;
  detail::dump_canonical(j, out, 0);
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Field mappers

inline Json grid_to_json(const GridShape& g) {
  return {{"frames", g.frames}, {"height", g.height}, {"width", g.width}};
}

inline GridShape grid_from_json(const Json& j) {
  return {j.at("frames").get<std::size_t>(), j.at("height").get<std::size_t>(),
          j.at("width").get<std::size_t>()};
}

inline Json stage_to_json(const Stage& s) {
  return {{"r_s", s.spatial.value()}, {"r_t", s.temporal.value()}, {"steps", s.steps}};
}

inline Stage stage_from_json(const Json& j) {
  Stage s{GridRatio::from_double(j.at("r_s").get<double>()),
          GridRatio::from_double(j.at("r_t").get<double>()), j.at("steps").get<std::size_t>()};
  if (s.steps == 0) throw Error(ErrorCode::kInvalidArgument, "stage steps must be >= 1");
  return s;
}

inline Json action_to_json(const Action& a) {
  Json stages = Json::array();
  for (const Stage& s : a.stages) stages.push_back(stage_to_json(s));
  return stages;
}

inline Action action_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "an action is a non-empty array of stage objects");
  }
  Action a;
  for (const auto& s : j) a.stages.push_back(stage_from_json(s));
  if (!a.stages.back().is_full()) {
    throw Error(ErrorCode::kInvalidArgument, "final stage must have r_s = r_t = 1");
  }
  return a;
}

/// An action list is a JSON array of actions, each an array of stage objects.
inline Json action_list_to_json(const std::vector<Action>& actions) {
  Json out = Json::array();
  for (const Action& a : actions) out.push_back(action_to_json(a));
  return out;
}

inline std::vector<Action> action_list_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kInvalidArgument, "action list must be a JSON array");
  std::vector<Action> out;
  for (const auto& a : j) out.push_back(action_from_json(a));
  return out;
}

inline Json demand_to_json(const DemandEstimate& d) {
  return {{"d_s", d.profile.d_s},         {"d_t", d.profile.d_t},
          {"m_s", d.profile.m_s},         {"m_t", d.profile.m_t},
          {"raw_spatial", d.raw_spatial}, {"raw_temporal", d.raw_temporal}};
}

inline DemandEstimate demand_from_json(const Json& j) {
  DemandEstimate d;
  d.profile.d_s = j.at("d_s").get<double>();
  d.profile.d_t = j.at("d_t").get<double>();
  d.profile.m_s = j.at("m_s").get<double>();
  d.profile.m_t = j.at("m_t").get<double>();
  d.raw_spatial = j.at("raw_spatial").get<double>();
  d.raw_temporal = j.at("raw_temporal").get<double>();
  return d;
}

// ---------------------------------------------------------------------------
// Plan document

inline Json plan_to_json(const SchedulePlan& plan) {
  const Gains g = effective_gains(plan.action);
  Json base = grid_to_json(plan.base.grid);
  base["steps"] = plan.base.steps;

  Json action = {{"stages", action_to_json(plan.action)},
                 {"sketch", plan.sketch ? stage_to_json(*plan.sketch) : Json(nullptr)},
                 {"gains", {{"g_s", g.spatial}, {"g_t", g.temporal}}}};

  Json grids = Json::array();
  for (const auto& sg : plan.stage_grids) grids.push_back(grid_to_json(sg));

  Json transitions = Json::array();
  for (const auto& t : plan.transitions) {
    transitions.push_back({{"after_step", t.after_step},
                           {"target", grid_to_json(t.target)},
                           {"tau", t.tau},
                           {"seed", t.seed}});
  }

  return {{"version", kPlanFormatVersion},
          {"base", base},
          {"demand", demand_to_json(plan.demand)},
          {"action", action},
          {"stage_grids", grids},
          {"transitions", transitions},
          {"predicted_density", plan.predicted_density},
          {"predicted_speedup",
           {{"linear", plan.predicted_speedup.linear},
            {"quadratic", plan.predicted_speedup.quadratic}}}};
}

inline SchedulePlan plan_from_json(const Json& j) {
  try {
    if (j.at("version").get<int>() != kPlanFormatVersion) {
      throw Error(ErrorCode::kInvalidArgument, "unsupported plan version");
    }
    SchedulePlan plan;
    const Json& base = j.at("base");
    plan.base = {grid_from_json(base), base.at("steps").get<std::size_t>()};
    plan.demand = demand_from_json(j.at("demand"));
    const Json& action = j.at("action");
    plan.action = action_from_json(action.at("stages"));
    if (!action.at("sketch").is_null()) plan.sketch = stage_from_json(action.at("sketch"));
    for (const auto& g : j.at("stage_grids")) plan.stage_grids.push_back(grid_from_json(g));
    for (const auto& t : j.at("transitions")) {
      plan.transitions.push_back({t.at("after_step").get<std::size_t>(),
                                  grid_from_json(t.at("target")), t.at("tau").get<double>(),
                                  t.at("seed").get<std::uint64_t>()});
    }
    plan.predicted_density = j.at("predicted_density").get<double>();
    plan.predicted_speedup.linear = j.at("predicted_speedup").at("linear").get<double>();
    plan.predicted_speedup.quadratic = j.at("predicted_speedup").at("quadratic").get<double>();
    if (plan.stage_grids.size() != plan.action.stages.size() ||
        plan.transitions.size() + 1 != plan.action.stages.size()) {
      throw Error(ErrorCode::kInvalidArgument, "plan stage and transition counts disagree");
    }
    return plan;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed plan JSON: ") + e.what());
  }
}

}  // namespace stalloc
