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

// stalloc: command-line front end for the spatio-temporal compute planner.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stalloc/stalloc.hpp"

namespace {

using stalloc::Error;
using stalloc::ErrorCode;

std::vector<std::size_t> parse_dims(const std::string& text, std::size_t expected,
                                    const char* what) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(item, &pos);
      if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
      dims.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, std::string("bad ") + what + " entry '" + item + "'");
    }
  }
  if (dims.size() != expected) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " needs " + std::to_string(expected) + " comma-separated values");
  }
  return dims;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIoFailure, "short write to " + path);
}

stalloc::Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  try {
    return stalloc::Json::parse(in);
  } catch (const stalloc::Json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, path + ": " + e.what());
  }
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

// `plan --config FILE`: each key = value line becomes a leading --key=value
// argument unless the same flag is on the command line.
std::vector<std::string> expand_plan_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args.front() != "plan") return args;
  std::string file;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
  }
  if (file.empty()) return args;
  std::vector<std::string> preset;
  for (const CLI::ConfigItem& item : CLI::ConfigTOML().from_file(file)) {
    if (!item.parents.empty() || item.name.empty() || item.name == "++" || item.name == "--") continue;
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string flag = "--" + key;
    if (flag == "--config" || has_flag(args, flag)) continue;
    std::string value;
    for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
    preset.push_back(flag + "=" + value);
  }
  args.insert(args.begin() + 1, preset.begin(), preset.end());
  return args;
}

struct DemandFlags {
  double cutoff = 0.25;
  double flow_reg = 0.1;
  std::size_t flow_iterations = 50;
  std::vector<double> spatial_bounds{0.0, 0.6};
  std::vector<double> temporal_bounds{0.0, 2.0};
  double sharpness = 2.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--cutoff", cutoff, "High-pass cutoff as a fraction of Nyquist")
        ->capture_default_str();
    cmd->add_option("--flow-reg", flow_reg, "Horn-Schunck smoothness weight")->capture_default_str();
    cmd->add_option("--flow-iterations", flow_iterations, "Horn-Schunck iterations")
        ->capture_default_str();
    cmd->add_option("--spatial-bounds", spatial_bounds, "Norm bounds lo,hi for spatial energy")
        ->expected(2)
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--temporal-bounds", temporal_bounds, "Norm bounds lo,hi for flow magnitude")
        ->expected(2)
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--sharpness", sharpness, "Softmax sharpness of the allocation weights")
        ->capture_default_str();
  }

  stalloc::DemandConfig config() const {
    stalloc::DemandConfig cfg;
    cfg.highpass_cutoff = cutoff;
    cfg.flow_regularization = flow_reg;
    cfg.flow_iterations = flow_iterations;
    cfg.spatial_bounds = {spatial_bounds.at(0), spatial_bounds.at(1)};
    cfg.temporal_bounds = {temporal_bounds.at(0), temporal_bounds.at(1)};
    cfg.sharpness = sharpness;
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Content-aware spatio-temporal compute planner for video diffusion sampling"};
  app.require_subcommand(1);

  // --- plan -----------------------------------------------------------------
  auto* plan_cmd = app.add_subcommand("plan", "Select a budget-feasible schedule for a sketch");
  std::string config_path;
  plan_cmd->add_option("--config", config_path, "key=value file presetting any plan flag; flags win");
  std::string sketch_path, plan_out, actions_path, grid_name = "fine";
  std::size_t frames = 0, height = 0, width = 0, steps = 50, stages = 2;
  std::size_t sketch_steps = 4;
  double sketch_rs = 0.5, sketch_rt = 0.5;
  std::vector<std::size_t> step_split;
  stalloc::BudgetSpec budget;
  std::uint64_t seed = 0;
  bool auto_widen = false;
  DemandFlags plan_demand;
  plan_cmd->add_option("--sketch", sketch_path, "Sketch latent (LTV1)")->required();
  plan_cmd->add_option("--frames", frames, "Full-resolution latent frames")->required();
  plan_cmd->add_option("--height", height, "Full-resolution latent height")->required();
  plan_cmd->add_option("--width", width, "Full-resolution latent width")->required();
  plan_cmd->add_option("--steps", steps, "Total denoising steps N")->capture_default_str();
  plan_cmd->add_option("--budget", budget.target_density, "Target density D")->capture_default_str();
  plan_cmd->add_option("--tolerance", budget.tolerance, "Density tolerance")->capture_default_str();
  plan_cmd->add_option("--lambda", budget.lambda, "Spatial weight of the matcher")
      ->capture_default_str();
  plan_cmd->add_option("--seed", seed, "Master noise seed")->capture_default_str();
  plan_cmd->add_option("--grid", grid_name, "Ratio grid for enumeration")
      ->check(CLI::IsMember({"coarse", "fine"}))
      ->capture_default_str();
  plan_cmd->add_option("--stages", stages, "Stage count L including refinement")
      ->capture_default_str();
  plan_cmd->add_option("--step-split", step_split, "Steps per action stage (comma-separated)")
      ->delimiter(',');
  plan_cmd->add_option("--actions", actions_path, "Explicit action list (JSON) instead of a grid");
  plan_cmd->add_option("--sketch-steps", sketch_steps, "Preview steps charged to the budget (0: none)")
      ->capture_default_str();
  plan_cmd->add_option("--sketch-rs", sketch_rs, "Preview spatial ratio")->capture_default_str();
  plan_cmd->add_option("--sketch-rt", sketch_rt, "Preview temporal ratio")->capture_default_str();
  plan_cmd->add_flag("--auto-widen", auto_widen, "Double the tolerance up to 4x when infeasible");
  plan_cmd->add_option("--out", plan_out, "Output plan JSON (default stdout)");
  plan_demand.attach(plan_cmd);

  // --- simulate -------------------------------------------------------------
  auto* sim_cmd = app.add_subcommand("simulate", "Theoretical cost and speedup of a plan");
  std::string sim_plan, model_name = "linear";
  double k1 = 1.0;
  std::optional<double> k2;
  std::optional<std::size_t> baseline_steps;
  sim_cmd->add_option("--plan", sim_plan, "Plan JSON")->required();
  sim_cmd->add_option("--model", model_name, "Cost model")
      ->check(CLI::IsMember({"linear", "quadratic"}))
      ->capture_default_str();
  sim_cmd->add_option("--k1", k1, "Cost per token per step")->capture_default_str();
  sim_cmd->add_option("--k2", k2, "Cost per token pair per step (default 1/base tokens)");
  sim_cmd->add_option("--baseline-steps", baseline_steps, "Baseline step count (default plan N)");

  // --- demand ---------------------------------------------------------------
  auto* demand_cmd = app.add_subcommand("demand", "Spatial/temporal demand of a latent");
  std::string demand_path;
  DemandFlags demand_flags;
  demand_cmd->add_option("latent", demand_path, "Latent (LTV1)")->required();
  demand_flags.attach(demand_cmd);

  // --- resize ---------------------------------------------------------------
  auto* resize_cmd = app.add_subcommand("resize", "Anchor-resize a latent to a new grid");
  std::string resize_in, resize_out, resize_target;
  resize_cmd->add_option("--in", resize_in, "Input latent (LTV1)")->required();
  resize_cmd->add_option("--target", resize_target, "Target grid F,H,W")->required();
  resize_cmd->add_option("--out", resize_out, "Output latent (LTV1)")->required();

  // --- noise ----------------------------------------------------------------
  auto* noise_cmd = app.add_subcommand("noise", "Coordinate-hash Gaussian noise field");
  std::string noise_shape, noise_out;
  std::uint64_t noise_seed = 0;
  noise_cmd->add_option("--shape", noise_shape, "Latent shape C,F,H,W")->required();
  noise_cmd->add_option("--seed", noise_seed, "Seed")->required();
  noise_cmd->add_option("--out", noise_out, "Output latent (LTV1)")->required();

  // --- actions --------------------------------------------------------------
  auto* actions_cmd = app.add_subcommand("actions", "Export an enumerated action list as JSON");
  std::size_t act_steps = 50, act_stages = 2;
  std::string act_grid = "fine", act_out;
  std::vector<std::size_t> act_split;
  actions_cmd->add_option("--steps", act_steps, "Steps covered by the action")->capture_default_str();
  actions_cmd->add_option("--stages", act_stages, "Stage count L")->capture_default_str();
  actions_cmd->add_option("--step-split", act_split, "Steps per stage")->delimiter(',');
  actions_cmd->add_option("--grid", act_grid, "Ratio grid")
      ->check(CLI::IsMember({"coarse", "fine"}))
      ->capture_default_str();
  actions_cmd->add_option("--out", act_out, "Output JSON (default stdout)");

  try {
    auto args = expand_plan_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*plan_cmd) {
      const auto sketch = stalloc::load_latent(sketch_path);
      const stalloc::BaseGrid base{{frames, height, width}, steps};
      stalloc::PlannerConfig cfg;
      cfg.budget = budget;
      cfg.demand = plan_demand.config();
      cfg.seed = seed;
      cfg.auto_widen = auto_widen;
      if (sketch_steps == 0) {
        cfg.sketch.reset();
      } else {
        cfg.sketch = stalloc::Stage{stalloc::GridRatio::from_double(sketch_rs),
                                    stalloc::GridRatio::from_double(sketch_rt), sketch_steps};
      }
      if (!actions_path.empty()) {
        cfg.actions = stalloc::action_list_from_json(read_json(actions_path));
      } else {
        stalloc::EnumerationParams params;
        params.stage_count = stages;
        params.grid = grid_name == "coarse" ? stalloc::RatioGrid::coarse() : stalloc::RatioGrid::fine();
        params.step_split = step_split;
        cfg.actions = params;
      }
      const auto plan = stalloc::make_plan(sketch, base, cfg);
      write_text(plan_out, stalloc::dump_canonical(stalloc::plan_to_json(plan)));
    } else if (*sim_cmd) {
      const auto plan = stalloc::plan_from_json(read_json(sim_plan));
      stalloc::CostModel model;
      model.mode = model_name == "quadratic" ? stalloc::CostMode::kQuadratic
                                             : stalloc::CostMode::kLinear;
      model.per_token = k1;
      model.per_token_pair = k2;
      const auto report = stalloc::simulate_cost(plan, model, baseline_steps);
      write_text("", stalloc::dump_canonical({{"model", model_name},
                                              {"cost", report.cost},
                                              {"baseline_cost", report.baseline_cost},
                                              {"speedup", report.speedup}}));
    } else if (*demand_cmd) {
      const auto latent = stalloc::load_latent(demand_path);
      const auto est = stalloc::estimate_demand(latent, demand_flags.config());
      write_text("", stalloc::dump_canonical(stalloc::demand_to_json(est)));
    } else if (*resize_cmd) {
      const auto dims = parse_dims(resize_target, 3, "--target");
      const auto latent = stalloc::load_latent(resize_in);
      stalloc::save_latent(stalloc::anchor_resize(latent, {dims[0], dims[1], dims[2]}), resize_out);
    } else if (*noise_cmd) {
      const auto dims = parse_dims(noise_shape, 4, "--shape");
      stalloc::save_latent(stalloc::noise_field({dims[0], dims[1], dims[2], dims[3]}, noise_seed),
                           noise_out);
    } else if (*actions_cmd) {
      const stalloc::BaseGrid base{{1, 1, 1}, act_steps};
      const auto split =
          act_split.empty() ? stalloc::default_step_split(act_stages, act_steps) : act_split;
      const auto grid =
          act_grid == "coarse" ? stalloc::RatioGrid::coarse() : stalloc::RatioGrid::fine();
      const auto actions = stalloc::enumerate_actions(base, act_stages, split, grid);
      write_text(act_out, stalloc::dump_canonical(stalloc::action_list_to_json(actions)));
    }
  } catch (const stalloc::EmptyFeasibleSetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "hint: nearest achievable density is " << e.nearest_density()
              << "; widen --tolerance or pass --auto-widen\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
