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
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "stalloc/error.hpp"
#include "stalloc/latent.hpp"
#include "stalloc/schedule.hpp"
#include "stalloc/stage.hpp"

namespace stalloc {

namespace detail {

// y(p) = x(lo) + beta * (x(hi) - x(lo)); beta == 0 means a plain copy of x(lo).
struct AxisTap {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double beta = 0.0;
};

// round(num / den) for nonnegative integers, half away from zero.
constexpr std::size_t round_div(std::size_t num, std::size_t den) noexcept {
  return (2 * num + den) / (2 * den);
}

/// Per-output taps for one axis of length `src` resized to `dst`.
///
/// Source index i sits at anchor a_i = round(i (dst-1) / (src-1)). Upscaling
/// interpolates between consecutive anchors. When downscaling several sources
/// share an anchor; target p takes the source nearest to its continuous
/// position p (src-1) / (dst-1), which is itself one of those sources.
inline std::vector<AxisTap> anchor_taps(std::size_t src, std::size_t dst) {
  std::vector<AxisTap> taps(dst);
  if (src == 1) return taps;  // broadcast
  if (src == dst) {
    for (std::size_t p = 0; p < dst; ++p) taps[p] = {p, p, 0.0};
    return taps;
  }
  if (dst < src) {
    for (std::size_t p = 0; p < dst; ++p) {
      const std::size_t j = dst == 1 ? 0 : round_div(p * (src - 1), dst - 1);
      taps[p] = {j, j, 0.0};
    }
    return taps;
  }
  std::vector<std::size_t> anchors(src);
  for (std::size_t i = 0; i < src; ++i) anchors[i] = round_div(i * (dst - 1), src - 1);
  // Upscaling keeps anchors strictly increasing with a_0 = 0 and a_{K-1} = N-1,
  // so every target position falls inside some anchor segment.
  std::size_t seg = 0;
  for (std::size_t p = 0; p < dst; ++p) {
    while (seg + 1 < src - 1 && anchors[seg + 1] <= p) ++seg;
    const std::size_t a0 = anchors[seg];
    const std::size_t a1 = anchors[seg + 1];
    if (p == a0) {
      taps[p] = {seg, seg, 0.0};
    } else if (p == a1) {
      taps[p] = {seg + 1, seg + 1, 0.0};
    } else {
      taps[p] = {seg, seg + 1, static_cast<double>(p - a0) / static_cast<double>(a1 - a0)};
    }
  }
  return taps;
}

// Resamples one axis of a 3-level (outer, axis, inner) view of a buffer.
inline std::vector<float> resample_axis(const std::vector<float>& src, std::size_t outer,
                                        std::size_t len, std::size_t inner, std::size_t new_len) {
  if (len == new_len) return src;
  const auto taps = anchor_taps(len, new_len);
  std::vector<float> out(outer * new_len * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    const float* in_block = src.data() + o * len * inner;
    float* out_block = out.data() + o * new_len * inner;
    for (std::size_t p = 0; p < new_len; ++p) {
      const AxisTap& tap = taps[p];
      const float* x0 = in_block + tap.lo * inner;
      float* y = out_block + p * inner;
      if (tap.beta == 0.0) {
        std::copy(x0, x0 + inner, y);
        continue;
      }
      const float* x1 = in_block + tap.hi * inner;
      for (std::size_t k = 0; k < inner; ++k) {
        const double a = x0[k];
        y[k] = static_cast<float>(a + tap.beta * (static_cast<double>(x1[k]) - a));
      }
    }
  }
  return out;
}

}  // namespace detail

/// Resizes a latent to `target` with the anchor rule, separably along t, h, w.
/// Channels are untouched. Equal source and target shapes give a bit-exact copy.
inline VideoLatent anchor_resize(const LatentView& latent, const GridShape& target) {
  if (target.frames == 0 || target.height == 0 || target.width == 0) {
    throw Error(ErrorCode::kInvalidArgument, "target grid dimensions must be positive");
  }
  const LatentShape& s = latent.shape;
  std::vector<float> buf(latent.data.begin(), latent.data.end());
  buf = detail::resample_axis(buf, s.channels, s.frames, s.height * s.width, target.frames);
  buf = detail::resample_axis(buf, s.channels * target.frames, s.height, s.width, target.height);
  buf = detail::resample_axis(buf, s.channels * target.frames * target.height, s.width, 1,
                              target.width);
  return VideoLatent({s.channels, target.frames, target.height, target.width}, std::move(buf));
}

// ---------------------------------------------------------------------------
// Coordinate-hash Gaussian noise.

struct NoiseCoordinate {
  std::uint32_t t = 0;
  std::uint32_t h = 0;
  std::uint32_t w = 0;
  std::uint32_t c = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::uint32_t kMaxNoiseCoordinate = 1u << 16;

namespace detail {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

/// Round r of the 64-bit finalizer: key + gamma * (r + 1), then the
/// xor-shift-multiply avalanche. All arithmetic wraps modulo 2^64.
constexpr std::uint64_t finalize64(std::uint64_t key, unsigned round) noexcept {
  std::uint64_t z = key + kGoldenGamma * (static_cast<std::uint64_t>(round) + 1);
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t pack_coordinate(const NoiseCoordinate& k) noexcept {
  return (static_cast<std::uint64_t>(k.t) | (static_cast<std::uint64_t>(k.h) << 16) |
          (static_cast<std::uint64_t>(k.w) << 32) | (static_cast<std::uint64_t>(k.c) << 48)) ^
         k.seed;
}

inline constexpr double kTwoPow53 = 9007199254740992.0;

/// u1 in (0, 1], never 0, so log(u1) stays finite.
constexpr double unit_open_low(std::uint64_t z) noexcept {
  return static_cast<double>((z >> 11) + 1) / kTwoPow53;
}

/// u2 in [0, 1).
constexpr double unit_open_high(std::uint64_t z) noexcept {
  return static_cast<double>(z >> 11) / kTwoPow53;
}

// Cosine branch of Box-Muller only.
inline double box_muller(std::uint64_t z1, std::uint64_t z2) noexcept {
  const double u1 = unit_open_low(z1);
  const double u2 = unit_open_high(z2);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline void check_coordinate(const NoiseCoordinate& k) {
  if (k.t >= kMaxNoiseCoordinate || k.h >= kMaxNoiseCoordinate || k.w >= kMaxNoiseCoordinate ||
      k.c >= kMaxNoiseCoordinate) {
    throw Error(ErrorCode::kInvalidArgument, "noise coordinates must be < 65536");
  }
}

}  // namespace detail

/// Standard-normal sample that depends only on (t, h, w, c, seed).
inline double coord_noise(const NoiseCoordinate& coord) {
  detail::check_coordinate(coord);
  const std::uint64_t key = detail::pack_coordinate(coord);
  return detail::box_muller(detail::finalize64(key, 0), detail::finalize64(key, 1));
}

/// Noise field over a latent shape, sigma = 1.
inline VideoLatent noise_field(const LatentShape& shape, std::uint64_t seed) {
  for (std::size_t d : {shape.channels, shape.frames, shape.height, shape.width}) {
    if (d > kMaxNoiseCoordinate) {
      throw Error(ErrorCode::kInvalidArgument, "latent dimension exceeds noise coordinate range");
    }
  }
  VideoLatent out(shape);
  auto data = out.data();
  std::size_t i = 0;
  for (std::uint32_t c = 0; c < shape.channels; ++c)
    for (std::uint32_t t = 0; t < shape.frames; ++t)
      for (std::uint32_t h = 0; h < shape.height; ++h)
        for (std::uint32_t w = 0; w < shape.width; ++w)
          data[i++] = static_cast<float>(coord_noise({t, h, w, c, seed}));
  return out;
}

/// x + sigma * eps_coord, elementwise.
inline VideoLatent renoise_with_sigma(const LatentView& latent, double sigma, std::uint64_t seed) {
  if (!std::isfinite(sigma)) throw Error(ErrorCode::kInvalidArgument, "sigma must be finite");
  VideoLatent out = VideoLatent::from_view(latent);
  if (sigma == 0.0) return out;
  const LatentShape& s = latent.shape;
  for (std::size_t d : {s.channels, s.frames, s.height, s.width}) {
    if (d > kMaxNoiseCoordinate) {
      throw Error(ErrorCode::kInvalidArgument, "latent dimension exceeds noise coordinate range");
    }
  }
  auto data = out.data();
  std::size_t i = 0;
  for (std::uint32_t c = 0; c < s.channels; ++c)
    for (std::uint32_t t = 0; t < s.frames; ++t)
      for (std::uint32_t h = 0; h < s.height; ++h)
        for (std::uint32_t w = 0; w < s.width; ++w, ++i)
          data[i] = static_cast<float>(static_cast<double>(data[i]) +
                                       sigma * coord_noise({t, h, w, c, seed}));
  if (!out.all_finite()) throw Error(ErrorCode::kNonFiniteResult, "renoise overflowed");
  return out;
}

inline VideoLatent renoise(const LatentView& latent, double tau, const NoiseSchedule& schedule,
                           std::uint64_t seed) {
  return renoise_with_sigma(latent, schedule.sigma(tau), seed);
}

/// Stage switch: resize to the next stage's grid, then renoise at tau.
inline VideoLatent transition(const LatentView& latent, const Stage& from, const Stage& to,
                              const GridShape& base, double tau, const NoiseSchedule& schedule,
                              std::uint64_t seed) {
  const GridShape expected = from.grid(base);
  if (latent.shape.grid() != expected) {
    throw Error(ErrorCode::kShapeInconsistency,
                "latent grid does not match the source stage applied to the base grid");
  }
  return renoise(anchor_resize(latent, to.grid(base)), tau, schedule, seed);
}

}  // namespace stalloc
