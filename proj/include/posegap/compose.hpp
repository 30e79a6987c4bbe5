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
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "posegap/annotation.hpp"
#include "posegap/asset_io.hpp"
#include "posegap/error.hpp"
#include "posegap/image.hpp"
#include "posegap/rng.hpp"

namespace posegap {

enum class PoolKind { RealPhotos, SyntheticGame };

inline std::string_view pool_kind_name(PoolKind k) {
  return k == PoolKind::RealPhotos ? "RealPhotos" : "SyntheticGame";
}

/// A directory of background images. Images are decoded on demand, so a pool
/// can be shared read-only between worker threads.
struct BackgroundPool {
  fs::path source_dir;
  std::vector<fs::path> image_paths;
  PoolKind kind = PoolKind::RealPhotos;

  bool empty() const { return image_paths.empty(); }

  /// Discovers images recursively in lexicographic order. With `verify`,
  /// every image is decoded once so broken files fail early.
  static BackgroundPool from_directory(const fs::path& dir, PoolKind kind, bool verify = true) {
    BackgroundPool pool{dir, list_images(dir), kind};
    if (pool.empty()) fail(ErrorCode::EmptyPool, "no images in " + dir.string());
    if (verify)
      for (const auto& p : pool.image_paths) (void)load_image(p);
    return pool;
  }
};

/// Resizes (preserving aspect) so both sides cover the target, then takes a
/// random crop. Deterministic in `seed`.
inline ImageRGB random_crop_cover(const ImageRGB& img, int w, int h, Rng& rng) {
  const ImageRGB* src = &img;
  ImageRGB scaled;
  if (img.width < w || img.height < h) {
    const double s = std::max(static_cast<double>(w) / img.width, static_cast<double>(h) / img.height);
    scaled = resize(img, std::max(w, static_cast<int>(std::ceil(img.width * s - 1e-9))),
                    std::max(h, static_cast<int>(std::ceil(img.height * s - 1e-9))));
    src = &scaled;
  }
  const auto x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(src->width - w + 1)));
  const auto y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(src->height - h + 1)));
  return crop(*src, x0, y0, w, h);
}

inline std::size_t pick_background_index(const BackgroundPool& pool, std::uint64_t seed, Stream stream) {
  if (pool.empty()) fail(ErrorCode::EmptyPool, "background pool is empty");
  Rng rng(seed, stream);
  return rng.below(pool.image_paths.size());
}

inline ImageRGB pick_background(const BackgroundPool& pool, int width, int height, std::uint64_t seed,
                                Stream stream = Stream::Background) {
  if (pool.empty()) fail(ErrorCode::EmptyPool, "background pool is empty");
  Rng rng(seed, stream);
  const auto idx = rng.below(pool.image_paths.size());
  return random_crop_cover(load_image(pool.image_paths[idx]), width, height, rng);
}

/// out = a/255 * fg + (1 - a/255) * bg, rounded half up.
inline ImageRGB composite(const ImageRGBA& fg, const ImageRGB& bg) {
  if (!fg.same_size(bg)) fail(ErrorCode::SizeMismatch, "foreground and background sizes differ");
  ImageRGB out(bg.width, bg.height);
  for (std::size_t i = 0; i < bg.pixel_count(); ++i) {
    const int a = fg.data[i * 4 + 3];
    for (int c = 0; c < 3; ++c) {
      const int q = a * fg.data[i * 4 + c] + (255 - a) * bg.data[i * 3 + c];
      out.data[i * 3 + c] = static_cast<std::uint8_t>((2 * q + 255) / 510);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// HSV

struct Hsv {
  double h = 0;  // degrees [0, 360)
  double s = 0;  // [0, 1]
  double v = 0;  // [0, 1]
};

inline Hsv rgb_to_hsv(const Rgb& rgb) {
  const double r = rgb[0] / 255.0, g = rgb[1] / 255.0, b = rgb[2] / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  Hsv out{0, mx > 0 ? d / mx : 0, mx};
  if (d > 0) {
    if (mx == r) out.h = 60.0 * std::fmod((g - b) / d, 6.0);
    else if (mx == g) out.h = 60.0 * ((b - r) / d + 2.0);
    else out.h = 60.0 * ((r - g) / d + 4.0);
    if (out.h < 0) out.h += 360.0;
  }
  return out;
}

inline Rgb hsv_to_rgb(const Hsv& hsv) {
  const double c = hsv.v * hsv.s;
  const double hp = hsv.h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = hsv.v - c;
  return {clamp_u8((r + m) * 255.0), clamp_u8((g + m) * 255.0), clamp_u8((b + m) * 255.0)};
}

/// Multiplies V by `exposure` and S by `saturation`, clamping both to [0, 1].
inline Hsv adjust_hsv(Hsv hsv, double exposure, double saturation) {
  hsv.v = std::clamp(hsv.v * exposure, 0.0, 1.0);
  hsv.s = std::clamp(hsv.s * saturation, 0.0, 1.0);
  return hsv;
}

inline void adjust_exposure_saturation(ImageRGB& img, double exposure, double saturation) {
  if (exposure == 1.0 && saturation == 1.0) return;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    auto* p = img.data.data() + i * 3;
    const Rgb out = hsv_to_rgb(adjust_hsv(rgb_to_hsv({p[0], p[1], p[2]}), exposure, saturation));
    std::copy(out.begin(), out.end(), p);
  }
}

// ---------------------------------------------------------------------------
// Augmentation

struct Range {
  double min = 1.0;
  double max = 1.0;

  friend bool operator==(const Range&, const Range&) = default;
};

struct AugmentParams {
  Range scale{0.75, 1.25};
  Range exposure{0.67, 1.5};
  Range saturation{0.67, 1.5};
  std::uint64_t seed = 0;

  static AugmentParams identity() { return {{1, 1}, {1, 1}, {1, 1}, 0}; }
};

inline void check_range(const Range& r, const char* what) {
  if (!(r.min > 0) || !(r.max >= r.min) || !std::isfinite(r.max))
    fail(ErrorCode::InvalidArgument, std::string(what) + " range must be positive with min <= max");
}

/// Draws the three factors in a fixed order: scale, exposure, saturation.
inline AppliedAugment draw_augment(const AugmentParams& p) {
  check_range(p.scale, "scale");
  check_range(p.exposure, "exposure");
  check_range(p.saturation, "saturation");
  Rng rng(p.seed, Stream::Augment);
  AppliedAugment a;
  a.scale = rng.uniform(p.scale.min, p.scale.max);
  a.exposure = rng.uniform(p.exposure.min, p.exposure.max);
  a.saturation = rng.uniform(p.saturation.min, p.saturation.max);
  return a;
}

inline constexpr std::uint8_t kAugmentPad = 127;

/// Scales about the frame center with bilinear resampling; uncovered pixels
/// are filled with `pad`.
template <int C>
Image<std::uint8_t, C> scale_about_center(const Image<std::uint8_t, C>& img, double s, std::uint8_t pad) {
  if (s == 1.0) return img;
  Image<std::uint8_t, C> out(img.width, img.height, pad);
  const double cx = img.width / 2.0;
  const double cy = img.height / 2.0;
  double px[C];
  for (int y = 0; y < img.height; ++y) {
    const double sy = cy + (y + 0.5 - cy) / s;
    if (sy < 0 || sy > img.height) continue;
    for (int x = 0; x < img.width; ++x) {
      const double sx = cx + (x + 0.5 - cx) / s;
      if (sx < 0 || sx > img.width) continue;
      sample_bilinear(img, sx, sy, px);
      for (int c = 0; c < C; ++c) out.at(x, y, c) = clamp_u8(px[c]);
    }
  }
  return out;
}

/// Applies drawn factors to an image only.
inline ImageRGB apply_augment(const ImageRGB& img, const AppliedAugment& a) {
  ImageRGB out = scale_about_center(img, a.scale, kAugmentPad);
  adjust_exposure_saturation(out, a.exposure, a.saturation);
  return out;
}

/// Maps an annotation through the image scaling: 2D points follow
/// x' = c + s (x - c) about the frame center; the pose translation z is
/// divided by s. The latter is exact for points at the object center's depth
/// when the principal point is the frame center, and approximate elsewhere.
inline Annotation apply_augment(const Annotation& ann, const AppliedAugment& a) {
  Annotation out = ann;
  if (a.scale != 1.0) {
    const Vec2 c(ann.width / 2.0, ann.height / 2.0);
    for (auto& p : out.control_points.points) p = c + a.scale * (p - c);
    out.pose.translation.z() /= a.scale;
  }
  if (a.scale != 1.0 || a.exposure != 1.0 || a.saturation != 1.0) out.augment = a;
  return out;
}

/// The 2D control points an annotation must carry: the projection under the
/// pre-augmentation pose, mapped through the recorded image similarity.
inline ControlPoints2D expected_control_points(const ControlPoints3D& cp, const Annotation& ann) {
  if (!ann.augment || ann.augment->scale == 1.0) return project_control_points(cp, ann.pose, ann.intrinsics);
  const double s = ann.augment->scale;
  Pose original = ann.pose;
  original.translation.z() *= s;
  ControlPoints2D out = project_control_points(cp, original, ann.intrinsics);
  const Vec2 c(ann.width / 2.0, ann.height / 2.0);
  for (auto& p : out.points) p = c + s * (p - c);
  return out;
}

inline std::pair<ImageRGB, Annotation> augment(const ImageRGB& img, const Annotation& ann, const AugmentParams& p) {
  const AppliedAugment a = draw_augment(p);
  return {apply_augment(img, a), apply_augment(ann, a)};
}

}  // namespace posegap
