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
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace stalloc::detail {

/// In-place forward DFT of one length-n sequence. Radix-2 for powers of two,
/// otherwise a direct O(n^2) sum against a precomputed twiddle table. Latent
/// grids are small enough that the direct path stays cheap.
class Dft1d {
 public:
  explicit Dft1d(std::size_t n) : n_(n), twiddle_(n) {
    for (std::size_t k = 0; k < n; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = {std::cos(angle), std::sin(angle)};
    }
    pow2_ = n != 0 && (n & (n - 1)) == 0;
    if (!pow2_) scratch_.resize(n);
  }

  std::size_t size() const noexcept { return n_; }

  // `stride` lets columns of a row-major matrix be transformed in place.
  void forward(std::complex<double>* x, std::size_t stride = 1) {
    if (n_ <= 1) return;
    if (pow2_) {
      radix2(x, stride);
    } else {
      direct(x, stride);
    }
  }

 private:
  void radix2(std::complex<double>* x, std::size_t stride) {
    for (std::size_t i = 1, j = 0; i < n_; ++i) {
      std::size_t bit = n_ >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(x[i * stride], x[j * stride]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t step = n_ / len;
      for (std::size_t i = 0; i < n_; i += len) {
        for (std::size_t k = 0; k < len / 2; ++k) {
          const std::complex<double> u = x[(i + k) * stride];
          const std::complex<double> v = x[(i + k + len / 2) * stride] * twiddle_[k * step];
          x[(i + k) * stride] = u + v;
          x[(i + k + len / 2) * stride] = u - v;
        }
      }
    }
  }

  void direct(std::complex<double>* x, std::size_t stride) {
    for (std::size_t k = 0; k < n_; ++k) {
      std::complex<double> acc{};
      std::size_t idx = 0;
      for (std::size_t j = 0; j < n_; ++j) {
        acc += x[j * stride] * twiddle_[idx];
        idx += k;
        if (idx >= n_) idx -= n_;
      }
      scratch_[k] = acc;
    }
    for (std::size_t k = 0; k < n_; ++k) x[k * stride] = scratch_[k];
  }

  std::size_t n_;
  bool pow2_ = false;
  std::vector<std::complex<double>> twiddle_;
  std::vector<std::complex<double>> scratch_;
};

/// Row-major 2-D forward DFT (rows first, then columns).
class Dft2d {
 public:
  Dft2d(std::size_t height, std::size_t width) : rows_(width), cols_(height) {}

  void forward(std::span<std::complex<double>> field) {
    const std::size_t h = cols_.size();
    const std::size_t w = rows_.size();
    for (std::size_t r = 0; r < h; ++r) rows_.forward(field.data() + r * w, 1);
    for (std::size_t c = 0; c < w; ++c) cols_.forward(field.data() + c, w);
  }

 private:
  Dft1d rows_;
  Dft1d cols_;
};

}  // namespace stalloc::detail
