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
#include <string>
#include <vector>

#include "stalloc/error.hpp"

namespace stalloc {

/// Noise levels sigma at the N + 1 boundaries of an N-step sampling chain.
///
/// Step index i corresponds to the continuous timestep tau = 1 - i / N, so
/// tau = 1 is the pure-noise end. sigma(tau) interpolates linearly between
/// boundaries. Both flow-matching sigmas and DDPM-style sqrt(1 - alpha_bar)
/// tables fit this shape; the caller picks the convention.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
    if (sigmas_.size() < 2) {
      throw Error(ErrorCode::kInvalidArgument, "schedule needs at least one step");
    }
    for (std::size_t i = 0; i < sigmas_.size(); ++i) {
      if (!std::isfinite(sigmas_[i]) || sigmas_[i] < 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "sigma must be finite and nonnegative");
      }
      if (i > 0 && sigmas_[i] > sigmas_[i - 1]) {
        throw Error(ErrorCode::kInvalidArgument,
                    "sigma must be nonincreasing along the chain (step " + std::to_string(i) + ")");
      }
    }
  }

  /// Rectified-flow schedule with timestep shift: sigma = s*t / (1 + (s-1)*t).
  static NoiseSchedule flow_matching(std::size_t steps, double shift = 1.0) {
    if (steps == 0 || !(shift > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "flow_matching needs steps >= 1 and shift > 0");
    }
    std::vector<double> sigmas(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
      const double t = 1.0 - static_cast<double>(i) / static_cast<double>(steps);
      sigmas[i] = shift * t / (1.0 + (shift - 1.0) * t);
    }
    return NoiseSchedule(std::move(sigmas));
  }

  std::size_t num_steps() const noexcept { return sigmas_.size() - 1; }
  const std::vector<double>& sigmas() const noexcept { return sigmas_; }

  double sigma_at(std::size_t step) const {
    if (step > num_steps()) {
      throw Error(ErrorCode::kInvalidArgument, "step " + std::to_string(step) + " out of range");
    }
    return sigmas_[step];
  }

  double sigma(double tau) const {
    if (!(tau >= 0.0 && tau <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "tau must lie in [0, 1]");
    }
    double pos = (1.0 - tau) * static_cast<double>(num_steps());
    // Snap so that sigma(tau_of_step(i, N)) hits the table entry exactly.
    if (std::abs(pos - std::round(pos)) < 1e-9) pos = std::round(pos);
    const auto lo = std::min(static_cast<std::size_t>(pos), num_steps());
    if (lo == num_steps()) return sigmas_.back();
    const double frac = pos - static_cast<double>(lo);
    return sigmas_[lo] + frac * (sigmas_[lo + 1] - sigmas_[lo]);
  }

  static double tau_of_step(std::size_t step, std::size_t total_steps) noexcept {
    return 1.0 - static_cast<double>(step) / static_cast<double>(total_steps);
  }

 private:
  std::vector<double> sigmas_;
};

}  // namespace stalloc
