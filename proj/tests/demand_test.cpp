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

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "stalloc/demand.hpp"
#include "test_util.hpp"

namespace {

using namespace stalloc;
using stalloc::testing::checkerboard_clip;
using stalloc::testing::constant_latent;
using stalloc::testing::random_latent;
using stalloc::testing::translating_bump;

// Direct O(H^2 W^2) spectrum of the raw field, no mean removal, no separable
// passes. Independent of the library's transform.
double oracle_highpass_ratio(const Field2D& f, double cutoff) {
  const auto H = static_cast<double>(f.height);
  const auto W = static_cast<double>(f.width);
  double high = 0.0, total = 0.0;
  for (std::size_t kh = 0; kh < f.height; ++kh) {
    for (std::size_t kw = 0; kw < f.width; ++kw) {
      std::complex<double> acc{};
      for (std::size_t h = 0; h < f.height; ++h)
        for (std::size_t w = 0; w < f.width; ++w) {
          const double phase = -2.0 * std::numbers::pi *
                               (static_cast<double>(kh * h) / H + static_cast<double>(kw * w) / W);
          acc += f(h, w) * std::complex<double>(std::cos(phase), std::sin(phase));
        }
      double fh = static_cast<double>(kh), fw = static_cast<double>(kw);
      if (fh > H / 2) fh -= H;
      if (fw > W / 2) fw -= W;
      fh /= H;
      fw /= W;
      const double e = std::norm(acc);
      total += e;
      if (std::hypot(fh, fw) > 0.5 * cutoff) high += e;
    }
  }
  return total > 0 ? std::sqrt(high / total) : 0.0;
}

double library_ratio(const Field2D& f, double cutoff) {
  detail::Dft2d dft(f.height, f.width);
  std::vector<std::complex<double>> work;
  return highpass_energy_ratio(f, cutoff, dft, work);
}

Field2D random_field(std::size_t H, std::size_t W, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Field2D f{H, W, std::vector<double>(H * W)};
  for (auto& v : f.values) v = n(rng) + 0.3;
  return f;
}

Field2D blurred(const Field2D& f, int passes) {
  Field2D g = f;
  for (int p = 0; p < passes; ++p) {
    Field2D next = g;
    for (std::size_t h = 0; h < g.height; ++h)
      for (std::size_t w = 0; w < g.width; ++w) {
        double acc = 0.0;
        int n = 0;
        for (int dh = -1; dh <= 1; ++dh)
          for (int dw = -1; dw <= 1; ++dw) {
            const auto hh = static_cast<long>(h) + dh;
            const auto ww = static_cast<long>(w) + dw;
            if (hh < 0 || ww < 0 || hh >= static_cast<long>(g.height) || ww >= static_cast<long>(g.width)) continue;
            acc += g(static_cast<std::size_t>(hh), static_cast<std::size_t>(ww));
            ++n;
          }
        next(h, w) = acc / n;
      }
    g = next;
  }
  return g;
}

TEST(SpatialDemand, TransformMatchesDirectSpectrum) {
  for (auto [H, W] : {std::pair<std::size_t, std::size_t>{8, 8}, {6, 10}, {5, 12}, {16, 4}, {9, 7}}) {
    for (double cutoff : {0.1, 0.25, 0.6}) {
      const Field2D f = random_field(H, W, H * 31 + W);
      EXPECT_NEAR(library_ratio(f, cutoff), oracle_highpass_ratio(f, cutoff), 1e-9)
          << H << "x" << W << " cutoff " << cutoff;
    }
  }
}

TEST(SpatialDemand, ConstantClipHasZeroEnergy) {
  const VideoLatent x = constant_latent({3, 4, 8, 12}, 5.0f);
  EXPECT_EQ(raw_spatial_demand(x), 0.0);
  EXPECT_EQ(spatial_demand(x), 0.0);
}

TEST(SpatialDemand, CheckerboardIsAllNyquist) {
  const VideoLatent x = checkerboard_clip({2, 3, 8, 8});
  EXPECT_NEAR(raw_spatial_demand(x), 1.0, 1e-12);
  EXPECT_EQ(spatial_demand(x), 1.0);
}

TEST(SpatialDemand, BlurLowersHighFrequencyRatio) {
  const Field2D noise = random_field(16, 16, 99);
  const Field2D smooth = blurred(noise, 3);
  const double r_noise = oracle_highpass_ratio(noise, 0.25);
  const double r_smooth = oracle_highpass_ratio(smooth, 0.25);
  ASSERT_LT(r_smooth, r_noise);
  EXPECT_LT(library_ratio(smooth, 0.25), library_ratio(noise, 0.25));
}

TEST(SpatialDemand, InvariantToPositiveScaling) {
  const VideoLatent x = random_latent({4, 5, 12, 20}, 3);
  const double base = raw_spatial_demand(x);
  for (float s : {1e-3f, 0.5f, 3.0f, 250.0f}) {
    VideoLatent y = x;
    for (auto& v : y.data()) v *= s;
    EXPECT_NEAR(raw_spatial_demand(y), base, 1e-6) << s;
  }
}

TEST(SpatialDemand, DegenerateGrid) {
  try {
    raw_spatial_demand(VideoLatent({1, 2, 3, 8}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateGrid);
  }
}

TEST(OpticalFlow, IdenticalFramesGiveZeroFlow) {
  const Field2D a = random_field(12, 12, 4);
  const FlowField f = optical_flow(a, a);
  for (std::size_t i = 0; i < f.dh.size(); ++i) {
    EXPECT_EQ(f.dh[i], 0.0);
    EXPECT_EQ(f.dw[i], 0.0);
  }
}

TEST(OpticalFlow, RecoversOnePixelShift) {
  const VideoLatent clip = translating_bump({1, 2, 16, 16}, 1.0, 4.0, 4.0, 7.0);
  const auto frames = frame_fields(clip);
  const FlowField f = optical_flow(frames[0], frames[1]);
  double mean_h = 0.0, mean_w = 0.0;
  for (std::size_t i = 0; i < f.dh.size(); ++i) {
    mean_h += f.dh[i];
    mean_w += f.dw[i];
  }
  mean_h /= static_cast<double>(f.dh.size());
  mean_w /= static_cast<double>(f.dw.size());
  EXPECT_NEAR(mean_w, 1.0, 0.2);
  EXPECT_NEAR(mean_h, 0.0, 0.05);
}

TEST(OpticalFlow, ReversedPairNegatesFlow) {
  const VideoLatent clip = translating_bump({1, 2, 16, 20}, 1.0, 4.0, 3.0, 8.0);
  const auto frames = frame_fields(clip);
  const FlowField fwd = optical_flow(frames[0], frames[1]);
  const FlowField bwd = optical_flow(frames[1], frames[0]);
  double fwd_w = 0.0, bwd_w = 0.0;
  for (std::size_t i = 0; i < fwd.dw.size(); ++i) {
    fwd_w += fwd.dw[i];
    bwd_w += bwd.dw[i];
  }
  EXPECT_NEAR(bwd_w, -fwd_w, 0.1 * std::abs(fwd_w));
}

TEST(OpticalFlow, ShapeMismatch) {
  try {
    optical_flow(random_field(8, 8, 1), random_field(8, 9, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(TemporalDemand, StaticClipIsZero) {
  VideoLatent x = random_latent({3, 1, 10, 10}, 8);
  VideoLatent clip({3, 5, 10, 10});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t h = 0; h < 10; ++h)
        for (std::size_t w = 0; w < 10; ++w) clip.at(c, t, h, w) = x.at(c, 0, h, w);
  EXPECT_EQ(raw_temporal_demand(clip), 0.0);
  EXPECT_EQ(temporal_demand(clip), 0.0);
}

TEST(TemporalDemand, FasterMotionHasMoreDemand) {
  const VideoLatent slow = translating_bump({2, 4, 16, 24}, 1.0, 4.0, 4.0, 7.0);
  const VideoLatent fast = translating_bump({2, 4, 16, 24}, 2.0, 4.0, 4.0, 7.0);
  EXPECT_GT(raw_temporal_demand(fast), raw_temporal_demand(slow));
}

TEST(TemporalDemand, FrameCountBoundary) {
  EXPECT_NO_THROW(raw_temporal_demand(random_latent({1, 2, 8, 8}, 1)));
  try {
    raw_temporal_demand(random_latent({1, 1, 8, 8}, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewFrames);
  }
}

TEST(AllocationWeights, ClosedFormAndSymmetry) {
  auto [ms, mt] = allocation_weights(0.3, 0.3, 5.0);
  EXPECT_EQ(ms, 0.5);
  EXPECT_EQ(mt, 0.5);
  std::tie(ms, mt) = allocation_weights(1.0, 0.0, 2.0);
  EXPECT_NEAR(ms, 0.8807970779778823, 1e-15);
  EXPECT_EQ(ms + mt, 1.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double a = u(rng), b = u(rng), alpha = 0.1 + std::abs(u(rng)) * 10;
    const auto [s1, t1] = allocation_weights(a, b, alpha);
    const auto [s2, t2] = allocation_weights(b, a, alpha);
    ASSERT_EQ(s1, t2);
    ASSERT_EQ(t1, s2);
    ASSERT_EQ(t1, 1.0 - s1);
    ASSERT_EQ(s1 + t1, 1.0);
    ASSERT_GT(s1, 0.0);
    ASSERT_LT(s1, 1.0);
  }
}

TEST(AllocationWeights, IncreasingInSpatialDemand) {
  double prev = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double ds = i / 100.0;
    const double ms = allocation_weights(ds, 0.4, 3.0).first;
    if (i > 0) {
      EXPECT_GT(ms, prev);
    }
    prev = ms;
  }
}

TEST(EstimateDemand, ProfileIsConsistent) {
  const VideoLatent clip = translating_bump({4, 6, 16, 32}, 2.0, 4.0, 4.0, 6.0);
  const DemandEstimate est = estimate_demand(clip);
  EXPECT_EQ(est.profile.d_s, DemandConfig{}.spatial_bounds.apply(est.raw_spatial));
  EXPECT_EQ(est.profile.d_t, DemandConfig{}.temporal_bounds.apply(est.raw_temporal));
  EXPECT_EQ(est.profile.m_s + est.profile.m_t, 1.0);
  EXPECT_GT(est.profile.m_t, 0.5);
}

TEST(DemandConfigTest, Validation) {
  DemandConfig cfg;
  cfg.spatial_bounds = {0.5, 0.5};
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.flow_iterations = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
