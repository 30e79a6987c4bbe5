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

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "posegap/annotation.hpp"
#include "posegap/compose.hpp"
#include "posegap/error.hpp"
#include "posegap/image.hpp"
#include "posegap/renderer.hpp"

namespace posegap {

/// Rec.601 luma, rounded half up.
inline ImageGray to_grayscale(const ImageRGB& img) {
  ImageGray out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto* p = img.data.data() + i * 3;
    out.data[i] = static_cast<std::uint8_t>((299 * p[0] + 587 * p[1] + 114 * p[2] + 500) / 1000);
  }
  return out;
}

/// Laplace response in two forms: the raw signed float response and its 8-bit
/// encoding clamp(128 + raw / 2), with halves rounded away from zero so that
/// 128 encodes exactly the zero response.
struct LaplaceImage {
  ImageGray encoded;
  ImageGrayF raw;
};

inline constexpr std::string_view kLaplaceKernel = "[[0,1,0],[1,-4,1],[0,1,0]]";

inline std::uint8_t encode_laplace(float raw) {
  const long v = 128 + std::lround(static_cast<double>(raw) / 2.0);
  return static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
}

/// 4-neighbor discrete Laplacian with replicated borders.
inline LaplaceImage laplace(const ImageGray& img) {
  if (img.width < 3 || img.height < 3) fail(ErrorCode::TooSmall, "laplace needs at least 3x3 pixels");
  const int w = img.width;
  const int h = img.height;
  LaplaceImage out{ImageGray(w, h), ImageGrayF(w, h)};
  for (int y = 0; y < h; ++y) {
    const int yu = y > 0 ? y - 1 : 0;
    const int yd = y < h - 1 ? y + 1 : h - 1;
    for (int x = 0; x < w; ++x) {
      const int xl = x > 0 ? x - 1 : 0;
      const int xr = x < w - 1 ? x + 1 : w - 1;
      const int r = img.at(xl, y) + img.at(xr, y) + img.at(x, yu) + img.at(x, yd) - 4 * img.at(x, y);
      out.raw.at(x, y) = static_cast<float>(r);
      out.encoded.at(x, y) = encode_laplace(static_cast<float>(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Silhouette recovery for the pair alignment gate

/// Estimates the object silhouette from a Laplace source by comparing it with
/// the Laplace response of the bare background: pixels whose response changed
/// are object or object boundary; of the unchanged regions, the largest
/// 4-connected one is taken as background and every other region is filled.
inline ImageGray recover_silhouette(const LaplaceImage& source, const LaplaceImage& background) {
  if (!source.raw.same_size(background.raw)) fail(ErrorCode::SizeMismatch, "laplace images differ in size");
  const int w = source.raw.width;
  const int h = source.raw.height;
  const std::size_t n = source.raw.pixel_count();
  std::vector<std::uint8_t> changed(n);
  for (std::size_t i = 0; i < n; ++i) changed[i] = source.raw.data[i] != background.raw.data[i];

  std::vector<int> label(n, -1);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (changed[seed] || label[seed] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t size = 0;
    stack.push_back(seed);
    label[seed] = id;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(i % w);
      const int y = static_cast<int>(i / w);
      const std::size_t nb[4] = {x > 0 ? i - 1 : i, x < w - 1 ? i + 1 : i, y > 0 ? i - w : i, y < h - 1 ? i + w : i};
      for (std::size_t j : nb) {
        if (j == i || changed[j] || label[j] >= 0) continue;
        label[j] = id;
        stack.push_back(j);
      }
    }
    sizes.push_back(size);
  }
  int background_id = -1;
  std::size_t best = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i)
    if (sizes[i] > best) best = sizes[i], background_id = static_cast<int>(i);

  ImageGray out(w, h);
  for (std::size_t i = 0; i < n; ++i) out.data[i] = label[i] == background_id && background_id >= 0 ? 0 : 255;
  return out;
}

/// Intersection over union of two binary masks (nonzero = inside). Two empty
/// masks score 0.
inline double mask_iou(const ImageGray& a, const ImageGray& b) {
  if (!a.same_size(b)) fail(ErrorCode::SizeMismatch, "masks differ in size");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    const bool ia = a.data[i] != 0;
    const bool ib = b.data[i] != 0;
    inter += ia && ib;
    uni += ia || ib;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline constexpr double kAlignmentGateIoU = 0.5;

// ---------------------------------------------------------------------------
// Pair construction

enum class PairMethod { RealTex = 1, RandomTex = 2, UniformToGray = 3, UniformToChecker = 4 };

inline std::string_view method_name(PairMethod m) {
  switch (m) {
    case PairMethod::RealTex: return "Method1_RealTex";
    case PairMethod::RandomTex: return "Method2_RandomTex";
    case PairMethod::UniformToGray: return "Method3_UniformToGray";
    case PairMethod::UniformToChecker: return "Method4_UniformToChecker";
  }
  return "?";
}

inline std::optional<PairMethod> parse_method(std::string_view s) {
  for (int i = 1; i <= 4; ++i) {
    const auto m = static_cast<PairMethod>(i);
    if (s == method_name(m) || s == std::to_string(i)) return m;
  }
  return std::nullopt;
}

struct PairConfig {
  UniformColor uniform{};
  Checkerboard checker{};
  std::shared_ptr<const TextureSource> random_textures;
  LightSampling lights{};
  double lit_ambient = 0.25;
  /// Applied to the composited frames before the Laplace transform.
  std::optional<AugmentParams> augment;
  std::uint64_t seed = 0;
};

struct PairSample {
  LaplaceImage source;
  ImageRGB target;
  Annotation annotation;
  ImageGray source_mask;  // render coverage behind the source
  ImageGray target_mask;  // render coverage behind the target
  ImageGray recovered;    // silhouette recovered from the source
  double alignment_iou = 0.0;
};

/// Builds one aligned (Laplace source, RGB target) pair for `method`. Both
/// sides share the pose, the background crop and the augmentation draw.
inline PairSample make_pair(const Mesh& mesh, const Pose& pose, const CameraIntrinsics& k, PairMethod method,
                            const ImageRGB& bg, const PairConfig& cfg, std::string sample_id = "000000",
                            std::string object_id = "object") {
  if (!bg.same_size(k.width, k.height)) fail(ErrorCode::SizeMismatch, "background does not match the frame size");
  RenderConfig rc;
  rc.width = k.width;
  rc.height = k.height;
  rc.seed = cfg.seed;
  rc.ambient = 1.0;

  auto render_with = [&](SurfaceMode mode, std::vector<PointLight> lights, double ambient) {
    RenderConfig c = rc;
    c.mode = std::move(mode);
    c.lights = std::move(lights);
    c.ambient = ambient;
    return rasterize(mesh, pose, k, c);
  };

  std::optional<AppliedAugment> aug;
  if (cfg.augment) {
    AugmentParams p = *cfg.augment;
    p.seed = cfg.seed;
    aug = draw_augment(p);
  }
  auto finish = [&](const ImageRGB& frame) { return aug ? apply_augment(frame, *aug) : frame; };
  auto finish_mask = [&](const ImageRGBA& render) {
    ImageGray m = alpha_mask(render);
    if (aug && aug->scale != 1.0) {
      m = scale_about_center(m, aug->scale, 0);
      for (auto& v : m.data) v = v >= 128 ? 255 : 0;
    }
    return m;
  };

  PairSample out;
  ImageRGB source_frame;
  switch (method) {
    case PairMethod::RealTex:
    case PairMethod::RandomTex: {
      SurfaceMode mode = method == PairMethod::RealTex ? SurfaceMode(RealTexture{})
                                                       : SurfaceMode(RandomTexture{cfg.random_textures});
      const auto r = render_with(mode, {}, 1.0);
      out.target = finish(composite(r.color, bg));
      source_frame = out.target;
      out.target_mask = finish_mask(r.color);
      out.source_mask = out.target_mask;
      break;
    }
    case PairMethod::UniformToGray:
    case PairMethod::UniformToChecker: {
      const auto unlit = render_with(cfg.uniform, {}, 1.0);
      source_frame = finish(composite(unlit.color, bg));
      out.source_mask = finish_mask(unlit.color);
      RenderOutput tgt;
      if (method == PairMethod::UniformToGray) {
        const Vec3 center = pose.apply(control_points_3d(mesh).centroid);
        tgt = render_with(cfg.uniform, sample_lights(cfg.seed, cfg.lights, center), cfg.lit_ambient);
      } else {
        tgt = render_with(cfg.checker, {}, 1.0);
      }
      out.target = finish(composite(tgt.color, bg));
      out.target_mask = finish_mask(tgt.color);
      break;
    }
  }
  out.source = laplace(to_grayscale(source_frame));
  const LaplaceImage bg_laplace = laplace(to_grayscale(finish(bg)));
  out.recovered = recover_silhouette(out.source, bg_laplace);
  out.alignment_iou = mask_iou(out.recovered, out.target_mask);

  out.annotation = make_annotation(std::move(sample_id), std::move(object_id), pose, k, control_points_3d(mesh),
                                   cfg.seed);
  if (aug) out.annotation = apply_augment(out.annotation, *aug);
  return out;
}

}  // namespace posegap
