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

// End-to-end walk through the library with a toy denoiser: preview sketch,
// demand estimate, plan, then execution of the chosen schedule.

#include <cmath>
#include <cstdio>

#include "stalloc/stalloc.hpp"

int main() {
  using namespace stalloc;

  const BaseGrid base{{24, 32, 48}, 30};
  const auto schedule = NoiseSchedule::flow_matching(base.steps, 3.0);

  // A drifting stripe pattern stands in for the clean video; the toy oracle
  // pulls any latent toward it, which is what a trained flow model does.
  const auto clean_at = [](const GridShape& g) {
    VideoLatent x({4, g.frames, g.height, g.width});
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t t = 0; t < g.frames; ++t)
        for (std::size_t h = 0; h < g.height; ++h)
          for (std::size_t w = 0; w < g.width; ++w)
            x.at(c, t, h, w) = static_cast<float>(
                std::sin(0.4 * (static_cast<double>(w) * 48.0 / g.width) -
                         0.5 * (static_cast<double>(t) * 24.0 / g.frames)));
    return x;
  };
  auto oracle = [&](const VideoLatent& x, std::size_t step) {
    const VideoLatent target = clean_at(x.grid());
    const double sigma = std::max(schedule.sigma_at(step), 1e-3);
    VideoLatent v(x.shape());
    for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = (target.data()[i] - x.data()[i]) / sigma;
    return v;
  };

  const VideoLatent x0 = noise_field({4, base.grid.frames, base.grid.height, base.grid.width}, 7);
  SketchConfig sketch_cfg;
  const VideoLatent sketch = run_sketch(oracle, x0, sketch_cfg, schedule);

  PlannerConfig cfg;
  cfg.budget = {0.45, 0.05, 0.5};
  cfg.sketch = Stage{sketch_cfg.spatial, sketch_cfg.temporal, sketch_cfg.steps};
  cfg.seed = 42;
  const SchedulePlan plan = make_plan(sketch, base, cfg);

  std::printf("demand: d_s=%.3f d_t=%.3f m_s=%.3f m_t=%.3f\n", plan.demand.profile.d_s,
              plan.demand.profile.d_t, plan.demand.profile.m_s, plan.demand.profile.m_t);
  for (std::size_t i = 0; i < plan.action.stages.size(); ++i) {
    const auto& s = plan.action.stages[i];
    const auto& g = plan.stage_grids[i];
    std::printf("stage %zu: r_s=%.2f r_t=%.2f steps=%zu grid=%zux%zux%zu\n", i, s.spatial.value(),
                s.temporal.value(), s.steps, g.frames, g.height, g.width);
  }
  std::printf("density=%.4f speedup linear=%.2fx quadratic=%.2fx\n", plan.predicted_density,
              plan.predicted_speedup.linear, plan.predicted_speedup.quadratic);

  // Continue from the preview latent at the first action stage's grid.
  const VideoLatent start = anchor_resize(sketch, plan.stage_grids.front());
  const VideoLatent out = execute_plan(plan, oracle, start, schedule);
  std::printf("output grid %zux%zux%zu\n", out.shape().frames, out.shape().height,
              out.shape().width);
  return 0;
}
