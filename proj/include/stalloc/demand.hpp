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
#include <complex>
#include <cstddef>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "stalloc/error.hpp"
#include "stalloc/fft.hpp"
#include "stalloc/latent.hpp"

namespace stalloc {

struct NormBounds {
  double lo = 0.0;
  double hi = 1.0;

  /// clamp((raw - lo) / (hi - lo), 0, 1)
  double apply(double raw) const noexcept { return std::clamp((raw - lo) / (hi - lo), 0.0, 1.0); }
};

struct DemandConfig {
  /// Fraction of the Nyquist radius; coefficients at or below it are dropped.
  double highpass_cutoff = 0.25;
  double flow_regularization = 0.1;
  std::size_t flow_iterations = 50;
  NormBounds spatial_bounds{0.0, 0.6};
  /// Latent pixels per frame.
  NormBounds temporal_bounds{0.0, 2.0};
  double sharpness = 2.0;

  void validate() const {
    if (!(highpass_cutoff > 0.0 && highpass_cutoff < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "highpass_cutoff must lie in (0, 1)");
    }
    if (!(flow_regularization > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "flow_regularization must be positive");
    }
    if (flow_iterations == 0) throw Error(ErrorCode::kInvalidArgument, "flow_iterations must be >= 1");
    if (!(spatial_bounds.lo < spatial_bounds.hi) || !(temporal_bounds.lo < temporal_bounds.hi)) {
      throw Error(ErrorCode::kInvalidArgument, "norm bounds need lo < hi");
    }
    if (!(sharpness > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sharpness must be positive");
  }
};

/// Normalized demands and the allocation weights derived from them.
/// m_s + m_t == 1 exactly.
struct DemandProfile {
  double d_s = 0.0;
  double d_t = 0.0;
  double m_s = 0.5;
  double m_t = 0.5;
};

struct DemandEstimate {
  DemandProfile profile;
  double raw_spatial = 0.0;
  double raw_temporal = 0.0;
};

/// Single-channel 2-D field, row-major.
struct Field2D {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double operator()(std::size_t h, std::size_t w) const { return values[h * width + w]; }
  double& operator()(std::size_t h, std::size_t w) { return values[h * width + w]; }
};

/// Dense flow; `dh` is the row (height) component, `dw` the column component.
struct FlowField {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> dh;
  std::vector<double> dw;

  double mean_magnitude() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < dh.size(); ++i) acc += std::hypot(dh[i], dw[i]);
    return dh.empty() ? 0.0 : acc / static_cast<double>(dh.size());
  }
};

/// Channel-mean reduction: one 2-D field per frame.
inline std::vector<Field2D> frame_fields(const LatentView& latent) {
  const LatentShape& s = latent.shape;
  const std::size_t plane = s.height * s.width;
  std::vector<Field2D> frames(s.frames, Field2D{s.height, s.width, std::vector<double>(plane, 0.0)});
  for (std::size_t c = 0; c < s.channels; ++c) {
    for (std::size_t t = 0; t < s.frames; ++t) {
      const float* src = latent.data.data() + (c * s.frames + t) * plane;
      auto& dst = frames[t].values;
      for (std::size_t i = 0; i < plane; ++i) dst[i] += src[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(s.channels);
  for (auto& f : frames)
    for (auto& v : f.values) v *= inv;
  return frames;
}

// ---------------------------------------------------------------------------
// Spatial demand

namespace detail {

// Centered frequency of DFT bin k, in cycles per sample.
inline double centered_frequency(std::size_t k, std::size_t n) noexcept {
  const auto signed_k = k <= n / 2 ? static_cast<double>(k)
                                   : static_cast<double>(k) - static_cast<double>(n);
  return signed_k / static_cast<double>(n);
}

}  // namespace detail

/// ||highpass(X)|| / ||X|| over the 2-D spectrum of one frame. Zero for a
/// zero field. The mean is removed before the transform and its DC term added
/// back analytically, so constant fields give exactly zero.
inline double highpass_energy_ratio(const Field2D& frame, double cutoff,
                                    detail::Dft2d& dft,
                                    std::vector<std::complex<double>>& work) {
  const std::size_t n = frame.values.size();
  double mean = 0.0;
  for (double v : frame.values) mean += v;
  mean /= static_cast<double>(n);

  work.resize(n);
  for (std::size_t i = 0; i < n; ++i) work[i] = {frame.values[i] - mean, 0.0};
  dft.forward(work);

  const double radius2 = (0.5 * cutoff) * (0.5 * cutoff);
  double high = 0.0;
  double total = 0.0;
  for (std::size_t kh = 0; kh < frame.height; ++kh) {
    const double fh = detail::centered_frequency(kh, frame.height);
    for (std::size_t kw = 0; kw < frame.width; ++kw) {
      std::complex<double> coeff = work[kh * frame.width + kw];
      if (kh == 0 && kw == 0) coeff += mean * static_cast<double>(n);
      const double e = std::norm(coeff);
      total += e;
      const double fw = detail::centered_frequency(kw, frame.width);
      if (fh * fh + fw * fw > radius2) high += e;
    }
  }
  return total > 0.0 ? std::sqrt(high / total) : 0.0;
}

/// Mean high-frequency ratio over frames, before normalization.
inline double raw_spatial_demand(const LatentView& sketch, const DemandConfig& cfg = {}) {
  const LatentShape& s = sketch.shape;
  if (s.height < 4 || s.width < 4) {
    throw Error(ErrorCode::kDegenerateGrid, "spatial demand needs H, W >= 4");
  }
  const auto frames = frame_fields(sketch);
  detail::Dft2d dft(s.height, s.width);
  std::vector<std::complex<double>> work;
  double acc = 0.0;
  for (const auto& f : frames) acc += highpass_energy_ratio(f, cfg.highpass_cutoff, dft, work);
  return acc / static_cast<double>(frames.size());
}

inline double spatial_demand(const LatentView& sketch, const DemandConfig& cfg = {}) {
  return cfg.spatial_bounds.apply(raw_spatial_demand(sketch, cfg));
}

// ---------------------------------------------------------------------------
// Temporal demand

/// Horn-Schunck flow from `a` to `b`. Spatial gradients are central
/// differences averaged over both frames (edges replicate), the temporal
/// gradient is b - a, and the Jacobi update runs exactly
/// `cfg.flow_iterations` times from zero flow.
inline FlowField optical_flow(const Field2D& a, const Field2D& b, const DemandConfig& cfg = {}) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorCode::kShapeMismatch, "flow frames differ in shape");
  }
  const std::size_t H = a.height;
  const std::size_t W = a.width;
  if (H < 4 || W < 4) throw Error(ErrorCode::kDegenerateGrid, "optical flow needs H, W >= 4");
  const std::size_t n = H * W;

  std::vector<double> gh(n), gw(n), gt(n), denom(n);
  for (std::size_t h = 0; h < H; ++h) {
    const std::size_t hp = std::min(h + 1, H - 1);
    const std::size_t hm = h == 0 ? 0 : h - 1;
    for (std::size_t w = 0; w < W; ++w) {
      const std::size_t wp = std::min(w + 1, W - 1);
      const std::size_t wm = w == 0 ? 0 : w - 1;
      const std::size_t i = h * W + w;
      gw[i] = 0.25 * ((a(h, wp) - a(h, wm)) + (b(h, wp) - b(h, wm)));
      gh[i] = 0.25 * ((a(hp, w) - a(hm, w)) + (b(hp, w) - b(hm, w)));
      gt[i] = b.values[i] - a.values[i];
      denom[i] = cfg.flow_regularization + gh[i] * gh[i] + gw[i] * gw[i];
    }
  }

  FlowField flow{H, W, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  std::vector<double> next_h(n), next_w(n);
  for (std::size_t iter = 0; iter < cfg.flow_iterations; ++iter) {
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t up = (h == 0 ? 0 : h - 1) * W;
      const std::size_t down = std::min(h + 1, H - 1) * W;
      const std::size_t row = h * W;
      for (std::size_t w = 0; w < W; ++w) {
        const std::size_t left = w == 0 ? 0 : w - 1;
        const std::size_t right = std::min(w + 1, W - 1);
        const std::size_t i = row + w;
        const double avg_h =
            0.25 * (flow.dh[up + w] + flow.dh[down + w] + flow.dh[row + left] + flow.dh[row + right]);
        const double avg_w =
            0.25 * (flow.dw[up + w] + flow.dw[down + w] + flow.dw[row + left] + flow.dw[row + right]);
        const double r = (gh[i] * avg_h + gw[i] * avg_w + gt[i]) / denom[i];
        next_h[i] = avg_h - gh[i] * r;
        next_w[i] = avg_w - gw[i] * r;
      }
    }
    flow.dh.swap(next_h);
    flow.dw.swap(next_w);
  }
  return flow;
}

/// Mean flow magnitude over adjacent frame pairs, before normalization.
inline double raw_temporal_demand(const LatentView& sketch, const DemandConfig& cfg = {}) {
  if (sketch.shape.frames < 2) {
    throw Error(ErrorCode::kTooFewFrames, "temporal demand needs at least two frames");
  }
  const auto frames = frame_fields(sketch);
  double acc = 0.0;
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    acc += optical_flow(frames[t], frames[t + 1], cfg).mean_magnitude();
  }
  return acc / static_cast<double>(frames.size() - 1);
}

inline double temporal_demand(const LatentView& sketch, const DemandConfig& cfg = {}) {
  return cfg.temporal_bounds.apply(raw_temporal_demand(sketch, cfg));
}

// ---------------------------------------------------------------------------
// Allocation weights

/// Two-way softmax of (alpha d_s, alpha d_t). The smaller weight is snapped so
/// that m_s + m_t == 1 and swapping the demands swaps the weights bit for bit.
inline std::pair<double, double> allocation_weights(double d_s, double d_t, double alpha) {
  if (!std::isfinite(d_s) || !std::isfinite(d_t) || !(alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "demands must be finite and alpha positive");
  }
  const double gap = alpha * std::abs(d_s - d_t);
  const double small = 1.0 / (1.0 + std::exp(gap));
  const double large = 1.0 - small;
  const double snapped = 1.0 - large;
  if (d_s <= d_t) return {snapped, large};
  return {large, snapped};
}

inline DemandEstimate estimate_demand(const LatentView& sketch, const DemandConfig& cfg = {}) {
  cfg.validate();
  DemandEstimate est;
  est.raw_spatial = raw_spatial_demand(sketch, cfg);
  est.raw_temporal = raw_temporal_demand(sketch, cfg);
  est.profile.d_s = cfg.spatial_bounds.apply(est.raw_spatial);
  est.profile.d_t = cfg.temporal_bounds.apply(est.raw_temporal);
  std::tie(est.profile.m_s, est.profile.m_t) =
      allocation_weights(est.profile.d_s, est.profile.d_t, cfg.sharpness);
  return est;
}

}  // namespace stalloc
