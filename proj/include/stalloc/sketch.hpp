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

#include <concepts>
#include <cstddef>
#include <exception>
#include <functional>
#include <string>
#include <type_traits>

#include "stalloc/error.hpp"
#include "stalloc/latent.hpp"
#include "stalloc/reshape.hpp"
#include "stalloc/schedule.hpp"

namespace stalloc {

/// Anything that maps (latent, step index) to a velocity of the same shape.
/// The velocity points toward the clean sample: x_clean ~= x + sigma * v.
template <class F>
concept DenoiserOracle = std::invocable<F&, const VideoLatent&, std::size_t> &&
                         std::convertible_to<std::invoke_result_t<F&, const VideoLatent&, std::size_t>,
                                             VideoLatent>;

struct SketchConfig {
  std::size_t steps = 4;
  GridRatio spatial = GridRatio::from_units(10);
  GridRatio temporal = GridRatio::from_units(10);
  /// Extrapolation strength per step index; empty means sigma(k) of the schedule.
  std::function<double(std::size_t)> alpha;
};

/// x + alpha * v, elementwise.
inline VideoLatent extrapolate_sketch(const LatentView& x, const LatentView& v, double alpha) {
  if (x.shape != v.shape) {
    throw Error(ErrorCode::kShapeMismatch, "latent and prediction shapes differ");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be a positive finite scalar");
  }
  VideoLatent out(x.shape);
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<float>(static_cast<double>(x.data[i]) +
                                 alpha * static_cast<double>(v.data[i]));
  }
  if (!out.all_finite()) throw Error(ErrorCode::kNonFiniteResult, "extrapolated sketch overflowed");
  return out;
}

namespace detail {

template <DenoiserOracle Oracle>
VideoLatent call_oracle(Oracle& oracle, const VideoLatent& x, std::size_t step) {
  VideoLatent v;
  try {
    v = oracle(x, step);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kOracleFailure, std::string("oracle raised: ") + e.what());
  }
  if (v.shape() != x.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                "oracle returned a prediction of the wrong shape at step " + std::to_string(step));
  }
  if (!v.all_finite()) {
    throw Error(ErrorCode::kOracleFailure, "oracle returned non-finite values");
  }
  return v;
}

// x += (sigma_i - sigma_{i+1}) * v
inline void euler_step(VideoLatent& x, const VideoLatent& v, double dt) {
  auto xs = x.data();
  const auto vs = v.data();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = static_cast<float>(static_cast<double>(xs[i]) + dt * static_cast<double>(vs[i]));
  }
}

}  // namespace detail

/// Runs the cheap preview: downscale x0 to the sketch grid, take `cfg.steps`
/// Euler steps, then extrapolate a clean-latent estimate from the last
/// prediction. Returns the sketch at the sketch grid.
template <DenoiserOracle Oracle>
VideoLatent run_sketch(Oracle&& oracle, const LatentView& x0, const SketchConfig& cfg,
                       const NoiseSchedule& schedule) {
  if (cfg.steps == 0 || cfg.steps > schedule.num_steps()) {
    throw Error(ErrorCode::kInvalidArgument,
                "sketch steps must lie in [1, schedule steps], got " + std::to_string(cfg.steps));
  }
  VideoLatent x = anchor_resize(x0, apply_ratios(x0.shape.grid(), cfg.spatial, cfg.temporal));
  VideoLatent v;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    v = detail::call_oracle(oracle, x, step);
    detail::euler_step(x, v, schedule.sigma_at(step) - schedule.sigma_at(step + 1));
  }
  const std::size_t k = cfg.steps;
  v = detail::call_oracle(oracle, x, k);
  const double alpha = cfg.alpha ? cfg.alpha(k) : schedule.sigma_at(k);
  return extrapolate_sketch(x, v, alpha);
}

}  // namespace stalloc
