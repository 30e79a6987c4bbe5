// Copyright (c) 2026, The posegap Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "posegap/error.hpp"

namespace posegap {

/// Row-major interleaved image.
template <typename T, int Channels>
struct Image {
  static_assert(Channels >= 1 && Channels <= 4);
  using value_type = T;
  static constexpr int channels = Channels;

  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h) {
    if (w < 1 || h < 1) fail(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
    data.assign(static_cast<std::size_t>(w) * h * Channels, fill);
  }

  bool empty() const { return data.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * Channels;
  }

  T& at(int x, int y, int c = 0) { return data[index(x, y) + c]; }
  const T& at(int x, int y, int c = 0) const { return data[index(x, y) + c]; }

  std::span<T, Channels> pixel(int x, int y) { return std::span<T, Channels>(data.data() + index(x, y), Channels); }
  std::span<const T, Channels> pixel(int x, int y) const {
    return std::span<const T, Channels>(data.data() + index(x, y), Channels);
  }

  bool same_size(int w, int h) const { return width == w && height == h; }
  template <typename U, int C>
  bool same_size(const Image<U, C>& other) const { return width == other.width && height == other.height; }

  friend bool operator==(const Image&, const Image&) = default;
};

using ImageRGB = Image<std::uint8_t, 3>;
using ImageRGBA = Image<std::uint8_t, 4>;
using ImageGray = Image<std::uint8_t, 1>;
using ImageGrayF = Image<float, 1>;

using Rgb = std::array<std::uint8_t, 3>;

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

template <typename T, int C>
Image<T, C> flip_horizontal(const Image<T, C>& img) {
  Image<T, C> out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < C; ++c) out.at(img.width - 1 - x, y, c) = img.at(x, y, c);
  return out;
}

template <int C>
Image<std::uint8_t, C> crop(const Image<std::uint8_t, C>& img, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || x0 + w > img.width || y0 + h > img.height)
    fail(ErrorCode::InvalidArgument, "crop window outside image");
  Image<std::uint8_t, C> out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto* src = img.data.data() + img.index(x0, y0 + y);
    std::copy(src, src + static_cast<std::size_t>(w) * C, out.data.data() + out.index(0, y));
  }
  return out;
}

/// Bilinear sample at continuous pixel coordinates (pixel centers at i + 0.5)
/// with clamp-to-edge addressing. Writes C doubles to `out`.
template <int C>
void sample_bilinear(const Image<std::uint8_t, C>& img, double x, double y, double* out) {
  const double fx = x - 0.5;
  const double fy = y - 0.5;
  const double x0f = std::floor(fx);
  const double y0f = std::floor(fy);
  const double ax = fx - x0f;
  const double ay = fy - y0f;
  const int x0 = std::clamp(static_cast<int>(x0f), 0, img.width - 1);
  const int y0 = std::clamp(static_cast<int>(y0f), 0, img.height - 1);
  const int x1 = std::clamp(static_cast<int>(x0f) + 1, 0, img.width - 1);
  const int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, img.height - 1);
  for (int c = 0; c < C; ++c) {
    const double top = (1 - ax) * img.at(x0, y0, c) + ax * img.at(x1, y0, c);
    const double bot = (1 - ax) * img.at(x0, y1, c) + ax * img.at(x1, y1, c);
    out[c] = (1 - ay) * top + ay * bot;
  }
}

/// Bilinear resize. Downscaling by more than 2x first box-averages so crops
/// from large frames do not alias.
template <int C>
Image<std::uint8_t, C> resize(const Image<std::uint8_t, C>& img, int w, int h) {
  if (img.same_size(w, h)) return img;
  const Image<std::uint8_t, C>* src = &img;
  Image<std::uint8_t, C> reduced;
  const int fx = std::max(1, img.width / (2 * w));
  const int fy = std::max(1, img.height / (2 * h));
  if (fx > 1 || fy > 1) {
    reduced = Image<std::uint8_t, C>(img.width / fx, img.height / fy);
    for (int y = 0; y < reduced.height; ++y)
      for (int x = 0; x < reduced.width; ++x)
        for (int c = 0; c < C; ++c) {
          int sum = 0;
          for (int j = 0; j < fy; ++j)
            for (int i = 0; i < fx; ++i) sum += img.at(x * fx + i, y * fy + j, c);
          reduced.at(x, y, c) = static_cast<std::uint8_t>((sum + fx * fy / 2) / (fx * fy));
        }
    src = &reduced;
  }
  Image<std::uint8_t, C> out(w, h);
  const double sx = static_cast<double>(src->width) / w;
  const double sy = static_cast<double>(src->height) / h;
  double px[C];
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      sample_bilinear(*src, (x + 0.5) * sx, (y + 0.5) * sy, px);
      for (int c = 0; c < C; ++c) out.at(x, y, c) = clamp_u8(px[c]);
    }
  return out;
}

inline ImageRGB gray_to_rgb(const ImageGray& g) {
  ImageRGB out(g.width, g.height);
  for (std::size_t i = 0; i < g.pixel_count(); ++i)
    for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = g.data[i];
  return out;
}

inline ImageRGB drop_alpha(const ImageRGBA& img) {
  ImageRGB out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = img.data[i * 4 + c];
  return out;
}

}  // namespace posegap
