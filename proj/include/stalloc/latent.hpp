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
#include <array>
#include <bit>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stalloc/error.hpp"

namespace stalloc {

/// A spatio-temporal grid (frames x height x width), channel-free.
struct GridShape {
  std::size_t frames = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t tokens() const noexcept { return frames * height * width; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct LatentShape {
  std::size_t channels = 1;
  std::size_t frames = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const noexcept { return channels * frames * height * width; }
  GridShape grid() const noexcept { return {frames, height, width}; }
  friend bool operator==(const LatentShape&, const LatentShape&) = default;
};

/// Compression ratio restricted to the 0.05 grid: value() == units() / 20.
class GridRatio {
 public:
  static constexpr int kDenominator = 20;

  constexpr GridRatio() noexcept = default;

  static constexpr GridRatio from_units(int units) {
    if (units < 1 || units > kDenominator) {
      throw Error(ErrorCode::kInvalidArgument,
                  "ratio units must lie in [1, 20], got " + std::to_string(units));
    }
    GridRatio r;
    r.units_ = units;
    return r;
  }

  /// Accepts values within 1e-9 of a grid point in (0, 1].
  static GridRatio from_double(double value) {
    const double scaled = value * kDenominator;
    const double nearest = std::round(scaled);
    if (!std::isfinite(value) || std::abs(scaled - nearest) > 1e-9 * kDenominator ||
        nearest < 1.0 || nearest > kDenominator) {
      throw Error(ErrorCode::kInvalidArgument,
                  "ratio " + std::to_string(value) + " is not on the 0.05 grid in (0, 1]");
    }
    return from_units(static_cast<int>(nearest));
  }

  static constexpr GridRatio one() noexcept { return GridRatio{}; }

  constexpr int units() const noexcept { return units_; }
  constexpr double value() const noexcept {
    return static_cast<double>(units_) / kDenominator;
  }

  friend constexpr auto operator<=>(const GridRatio&, const GridRatio&) = default;

 private:
  int units_ = kDenominator;
};

namespace detail {

// round(units * n / 20), half away from zero, in exact integer arithmetic.
constexpr std::size_t scale_dim(std::size_t n, int units) noexcept {
  const auto num = 2 * static_cast<std::size_t>(units) * n + GridRatio::kDenominator;
  return num / (2 * GridRatio::kDenominator);
}

}  // namespace detail

/// Integer grid reached by compressing `shape` with the given ratios.
/// Frames clamp to >= 1; height and width clamp to >= min(4, source).
constexpr GridShape apply_ratios(const GridShape& shape, GridRatio spatial, GridRatio temporal) {
  const auto floor_hw = [](std::size_t src) { return std::min<std::size_t>(4, src); };
  GridShape out;
  out.frames = std::max<std::size_t>(1, detail::scale_dim(shape.frames, temporal.units()));
  out.height = std::max(floor_hw(shape.height), detail::scale_dim(shape.height, spatial.units()));
  out.width = std::max(floor_hw(shape.width), detail::scale_dim(shape.width, spatial.units()));
  return out;
}

/// Non-owning view over a (c, t, h, w) row-major float buffer.
struct LatentView {
  LatentShape shape;
  std::span<const float> data;

  float at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) const {
    return data[((c * shape.frames + t) * shape.height + h) * shape.width + w];
  }
};

class VideoLatent {
 public:
  VideoLatent() = default;

  explicit VideoLatent(LatentShape shape, float fill = 0.0f)
      : shape_(validated(shape)), data_(shape.size(), fill) {}

  VideoLatent(LatentShape shape, std::vector<float> data)
      : shape_(validated(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "payload holds " + std::to_string(data_.size()) + " values, shape requires " +
                      std::to_string(shape_.size()));
    }
  }

  static VideoLatent from_view(const LatentView& view) {
    return VideoLatent(view.shape, std::vector<float>(view.data.begin(), view.data.end()));
  }

  const LatentShape& shape() const noexcept { return shape_; }
  GridShape grid() const noexcept { return shape_.grid(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  std::size_t index(std::size_t c, std::size_t t, std::size_t h, std::size_t w) const noexcept {
    return ((c * shape_.frames + t) * shape_.height + h) * shape_.width + w;
  }
  float& at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) noexcept {
    return data_[index(c, t, h, w)];
  }
  float at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) const noexcept {
    return data_[index(c, t, h, w)];
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
  }

  LatentView view() const noexcept { return {shape_, data_}; }
  operator LatentView() const noexcept { return view(); }  // NOLINT(google-explicit-constructor)

  friend bool operator==(const VideoLatent&, const VideoLatent&) = default;

 private:
  static LatentShape validated(LatentShape shape) {
    if (shape.channels == 0 || shape.frames == 0 || shape.height == 0 || shape.width == 0) {
      throw Error(ErrorCode::kInvalidArgument, "latent dimensions must be positive");
    }
    return shape;
  }

  LatentShape shape_{};
  std::vector<float> data_;
};

// ---------------------------------------------------------------------------
// LTV1 container: "LTV1" magic, four u32 LE dims (C, F, H, W), then the f32 LE
// payload in (c, t, h, w) order. No padding, no footer.

inline constexpr std::array<char, 4> kLatentMagic = {'L', 'T', 'V', '1'};
inline constexpr std::size_t kLatentHeaderBytes = 20;

namespace detail {

inline std::uint32_t read_u32_le(const unsigned char* p) noexcept {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void write_u32_le(unsigned char* p, std::uint32_t v) noexcept {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
  p[2] = static_cast<unsigned char>(v >> 16);
  p[3] = static_cast<unsigned char>(v >> 24);
}

}  // namespace detail

/// Serializes a latent to the LTV1 byte layout.
inline std::vector<unsigned char> encode_latent(const LatentView& latent) {
  const auto& s = latent.shape;
  for (std::size_t d : {s.channels, s.frames, s.height, s.width}) {
    if (d > 0xFFFFFFFFu) throw Error(ErrorCode::kInvalidArgument, "dimension exceeds u32");
  }
  std::vector<unsigned char> bytes(kLatentHeaderBytes + 4 * latent.data.size());
  std::memcpy(bytes.data(), kLatentMagic.data(), 4);
  detail::write_u32_le(bytes.data() + 4, static_cast<std::uint32_t>(s.channels));
  detail::write_u32_le(bytes.data() + 8, static_cast<std::uint32_t>(s.frames));
  detail::write_u32_le(bytes.data() + 12, static_cast<std::uint32_t>(s.height));
  detail::write_u32_le(bytes.data() + 16, static_cast<std::uint32_t>(s.width));
  unsigned char* out = bytes.data() + kLatentHeaderBytes;
  for (float v : latent.data) {
    detail::write_u32_le(out, std::bit_cast<std::uint32_t>(v));
    out += 4;
  }
  return bytes;
}

inline VideoLatent decode_latent(std::span<const unsigned char> bytes) {
  if (bytes.size() < kLatentHeaderBytes ||
      std::memcmp(bytes.data(), kLatentMagic.data(), 4) != 0) {
    throw Error(ErrorCode::kMalformedHeader, "missing LTV1 magic or truncated header");
  }
  LatentShape shape;
  shape.channels = detail::read_u32_le(bytes.data() + 4);
  shape.frames = detail::read_u32_le(bytes.data() + 8);
  shape.height = detail::read_u32_le(bytes.data() + 12);
  shape.width = detail::read_u32_le(bytes.data() + 16);
  if (shape.size() == 0) {
    throw Error(ErrorCode::kMalformedHeader, "header declares a zero dimension");
  }
  const std::size_t payload = bytes.size() - kLatentHeaderBytes;
  if (payload != 4 * shape.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "header declares " + std::to_string(shape.size()) + " values, payload holds " +
                    std::to_string(payload / 4) + (payload % 4 ? " (plus a partial value)" : ""));
  }
  std::vector<float> data(shape.size());
  const unsigned char* in = bytes.data() + kLatentHeaderBytes;
  for (auto& v : data) {
    v = std::bit_cast<float>(detail::read_u32_le(in));
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinitePayload, "payload contains NaN or Inf");
    in += 4;
  }
  return VideoLatent(shape, std::move(data));
}

inline VideoLatent load_latent(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_latent(bytes);
}

inline void save_latent(const LatentView& latent, const std::filesystem::path& path) {
  const auto bytes = encode_latent(latent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "short write to " + path.string());
}

}  // namespace stalloc
