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
#include <limits>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "posegap/asset_io.hpp"
#include "posegap/error.hpp"
#include "posegap/geometry.hpp"
#include "posegap/image.hpp"
#include "posegap/rng.hpp"

namespace posegap {

// ---------------------------------------------------------------------------
// Surface modes

/// Images to draw random object textures from.
struct TextureSource {
  std::vector<ImageRGB> images;
};

/// The mesh's own texture.
struct RealTexture {};

/// One texture from the source, chosen by the render seed.
struct RandomTexture {
  std::shared_ptr<const TextureSource> source;
};

struct UniformColor {
  Rgb rgb{128, 128, 128};
};

struct Checkerboard {
  int cells_per_uv = 8;
  Rgb color_a{0, 0, 0};
  Rgb color_b{255, 255, 255};
};

using SurfaceMode = std::variant<RealTexture, RandomTexture, UniformColor, Checkerboard>;

struct PointLight {
  Vec3 position = Vec3::Zero();  // camera frame, meters
  double intensity = 1.0;
};

struct RenderConfig {
  SurfaceMode mode = UniformColor{};
  std::vector<PointLight> lights;  // empty: unlit albedo
  double ambient = 1.0;
  int width = 416;
  int height = 416;
  std::uint64_t seed = 0;
};

struct RenderOutput {
  ImageRGBA color;    // alpha is the coverage mask (0 or 255)
  ImageGrayF depth;   // camera-frame z in meters, +inf where empty
  std::size_t covered = 0;
};

inline constexpr double kNearPlane = 0.01;

/// Bilinear lookup with repeat addressing. v runs bottom-to-top as in OBJ
/// files, so v = 1 is the first image row.
inline Rgb sample_texture(const ImageRGB& tex, const Vec2& uv) {
  const double x = uv.x() * tex.width - 0.5;
  const double y = (1.0 - uv.y()) * tex.height - 0.5;
  const double xf = std::floor(x);
  const double yf = std::floor(y);
  const double ax = x - xf;
  const double ay = y - yf;
  auto wrap = [](long long i, int n) { return static_cast<int>(((i % n) + n) % n); };
  const int x0 = wrap(static_cast<long long>(xf), tex.width);
  const int x1 = wrap(static_cast<long long>(xf) + 1, tex.width);
  const int y0 = wrap(static_cast<long long>(yf), tex.height);
  const int y1 = wrap(static_cast<long long>(yf) + 1, tex.height);
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    const double top = (1 - ax) * tex.at(x0, y0, c) + ax * tex.at(x1, y0, c);
    const double bot = (1 - ax) * tex.at(x0, y1, c) + ax * tex.at(x1, y1, c);
    out[c] = clamp_u8((1 - ay) * top + ay * bot);
  }
  return out;
}

inline const ImageRGB& pick_random_texture(const RandomTexture& mode, std::uint64_t seed) {
  if (!mode.source || mode.source->images.empty()) fail(ErrorCode::MissingTexture, "random texture source is empty");
  Rng rng(seed, Stream::Texture);
  return mode.source->images[rng.below(mode.source->images.size())];
}

inline Vec2 wrap_uv(const Vec2& uv) { return {uv.x() - std::floor(uv.x()), uv.y() - std::floor(uv.y())}; }

/// Surface albedo at `uv`. `real_texture` is the mesh texture, needed only
/// for RealTexture.
inline Rgb sample_surface(const SurfaceMode& mode, const Vec2& uv_in, std::uint64_t seed,
                          const ImageRGB* real_texture = nullptr) {
  const Vec2 uv = wrap_uv(uv_in);
  return std::visit(
      [&](const auto& m) -> Rgb {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, RealTexture>) {
          if (!real_texture) fail(ErrorCode::MissingTexture, "mesh has no texture");
          return sample_texture(*real_texture, uv);
        } else if constexpr (std::is_same_v<M, RandomTexture>) {
          return sample_texture(pick_random_texture(m, seed), uv);
        } else if constexpr (std::is_same_v<M, UniformColor>) {
          return m.rgb;
        } else {
          const int n = std::max(1, m.cells_per_uv);
          const auto iu = static_cast<long long>(std::floor(uv.x() * n));
          const auto iv = static_cast<long long>(std::floor(uv.y() * n));
          return ((iu + iv) % 2 == 0) ? m.color_a : m.color_b;
        }
      },
      mode);
}

/// Lambertian shading with inverse-square falloff:
/// albedo * clamp(ambient + sum_i I_i * max(0, n.l_i) / d_i^2, 0, 1).
inline Rgb shade_lambert(const Rgb& albedo, const Vec3& point, const Vec3& normal,
                         std::span<const PointLight> lights, double ambient) {
  double f = ambient;
  for (const auto& light : lights) {
    const Vec3 d = light.position - point;
    const double d2 = d.squaredNorm();
    if (d2 < 1e-12) {
      f = 1.0;
      break;
    }
    f += light.intensity * std::max(0.0, normal.dot(d / std::sqrt(d2))) / d2;
  }
  f = std::clamp(f, 0.0, 1.0);
  return {clamp_u8(albedo[0] * f), clamp_u8(albedo[1] * f), clamp_u8(albedo[2] * f)};
}

// ---------------------------------------------------------------------------
// Random scene parameters

struct LightSampling {
  int min_count = 2;
  int max_count = 4;
  double min_radius = 0.5;  // meters from the object center
  double max_radius = 1.5;
  /// Light strength expressed as irradiance at the object center
  /// (intensity / r^2), so brightness does not depend on the drawn radius.
  double min_irradiance = 0.4;
  double max_irradiance = 0.9;
};

inline Vec3 random_unit_vector(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

inline std::vector<PointLight> sample_lights(std::uint64_t seed, const LightSampling& s, const Vec3& object_center) {
  if (s.min_count < 1 || s.max_count < s.min_count) fail(ErrorCode::InvalidArgument, "light count range");
  if (!(s.min_radius > 0) || s.max_radius < s.min_radius) fail(ErrorCode::InvalidArgument, "light radius range");
  Rng rng(seed, Stream::Lights);
  const auto count = rng.between(s.min_count, s.max_count);
  std::vector<PointLight> lights;
  lights.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    const double r = rng.uniform(s.min_radius, s.max_radius);
    const Vec3 dir = random_unit_vector(rng);
    const double irradiance = rng.uniform(s.min_irradiance, s.max_irradiance);
    lights.push_back({object_center + r * dir, irradiance * r * r});
  }
  return lights;
}

/// Viewpoint distribution. Angles in degrees. The object center is placed at
/// a uniformly drawn pixel inside the central `center_box` fraction of the
/// frame (0 puts it at the frame center).
struct PoseSampling {
  double min_distance = 0.5;
  double max_distance = 1.2;
  double min_azimuth = 0.0;
  double max_azimuth = 360.0;
  double min_elevation = -30.0;
  double max_elevation = 80.0;
  double min_in_plane = -30.0;
  double max_in_plane = 30.0;
  double center_box = 0.8;
};

/// Rotation of a camera that views `object_center` from the given
/// azimuth/elevation (object z is up), rolled by `in_plane` about the
/// optical axis.
inline Mat3 view_rotation(double azimuth_deg, double elevation_deg, double in_plane_deg) {
  const double az = azimuth_deg * kPi / 180.0;
  const double el = elevation_deg * kPi / 180.0;
  const Vec3 toward_camera(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
  const Vec3 forward = -toward_camera;
  Vec3 right = forward.cross(Vec3::UnitZ());
  if (right.norm() < 1e-9) right = forward.cross(Vec3::UnitY());
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return axis_angle(Vec3::UnitZ(), in_plane_deg * kPi / 180.0) * r;
}

inline Pose sample_pose(std::uint64_t seed, const PoseSampling& s, const CameraIntrinsics& k,
                        const Vec3& object_center) {
  if (s.max_distance < s.min_distance || !(s.min_distance > kNearPlane) || s.max_azimuth < s.min_azimuth ||
      s.max_elevation < s.min_elevation || s.max_in_plane < s.min_in_plane || s.center_box < 0 || s.center_box > 1)
    fail(ErrorCode::InvalidArgument, "invalid pose sampling ranges");
  Rng rng(seed, Stream::Pose);
  const double distance = rng.uniform(s.min_distance, s.max_distance);
  const double az = rng.uniform(s.min_azimuth, s.max_azimuth);
  const double el = rng.uniform(s.min_elevation, s.max_elevation);
  const double roll = rng.uniform(s.min_in_plane, s.max_in_plane);
  const double half_w = 0.5 * s.center_box * k.width;
  const double half_h = 0.5 * s.center_box * k.height;
  const double u = k.width / 2.0 + rng.uniform(-half_w, half_w);
  const double v = k.height / 2.0 + rng.uniform(-half_h, half_h);
  Pose pose;
  pose.rotation = view_rotation(az, el, roll);
  const Vec3 target((u - k.cx) / k.fx * distance, (v - k.cy) / k.fy * distance, distance);
  pose.translation = target - pose.rotation * object_center;
  return pose;
}

// ---------------------------------------------------------------------------
// Rasterizer

namespace detail {

struct ClipVertex {
  Vec3 pos;  // camera frame
  Vec3 normal;
  Vec2 uv;
};

inline ClipVertex lerp(const ClipVertex& a, const ClipVertex& b, double t) {
  return {a.pos + t * (b.pos - a.pos), a.normal + t * (b.normal - a.normal), a.uv + t * (b.uv - a.uv)};
}

/// Sutherland-Hodgman against the plane z = near.
inline std::vector<ClipVertex> clip_near(const std::array<ClipVertex, 3>& tri, double near) {
  std::vector<ClipVertex> out;
  out.reserve(4);
  for (int i = 0; i < 3; ++i) {
    const auto& a = tri[i];
    const auto& b = tri[(i + 1) % 3];
    const bool ain = a.pos.z() >= near;
    const bool bin = b.pos.z() >= near;
    if (ain) out.push_back(a);
    if (ain != bin) out.push_back(lerp(a, b, (near - a.pos.z()) / (b.pos.z() - a.pos.z())));
  }
  return out;
}

/// Edge ownership for shared edges: exactly one of (dx, dy) and (-dx, -dy)
/// owns pixels lying on the edge, so adjacent triangles never both cover them.
inline bool owns_edge(double dx, double dy) { return dy > 0 || (dy == 0 && dx > 0); }

struct Fragment {
  int tri = -1;
  std::array<double, 3> w{};  // perspective-correct barycentrics
};

}  // namespace detail

inline RenderOutput rasterize(const Mesh& mesh, const Pose& pose, const CameraIntrinsics& k, const RenderConfig& cfg) {
  if (mesh.empty()) fail(ErrorCode::EmptyMesh, "mesh has no faces");
  if (cfg.width < 16 || cfg.height < 16) fail(ErrorCode::InvalidArgument, "image size must be at least 16x16");
  if (k.width != cfg.width || k.height != cfg.height)
    fail(ErrorCode::InvalidArgument, "intrinsics frame size differs from render size");
  if (std::holds_alternative<RealTexture>(cfg.mode) && !mesh.texture)
    fail(ErrorCode::MissingTexture, "RealTexture mode needs a textured mesh");
  if (const auto* cb = std::get_if<Checkerboard>(&cfg.mode); cb && cb->cells_per_uv < 1)
    fail(ErrorCode::InvalidArgument, "checkerboard cells_per_uv must be >= 1");

  const int w = cfg.width;
  const int h = cfg.height;
  RenderOutput out{ImageRGBA(w, h, 0), ImageGrayF(w, h, std::numeric_limits<float>::infinity()), 0};

  std::vector<Vec3> cam(mesh.vertices.size());
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = pose.apply(mesh.vertices[i]);

  // Screen-space triangles after clipping, with their camera-space attributes.
  struct ScreenTri {
    std::array<detail::ClipVertex, 3> v;
    std::array<Vec2, 3> s;
  };
  std::vector<ScreenTri> tris;
  std::vector<detail::Fragment> frags(static_cast<std::size_t>(w) * h);

  for (const Face& f : mesh.faces) {
    const Vec3& p0 = cam[f.v[0]];
    const Vec3& p1 = cam[f.v[1]];
    const Vec3& p2 = cam[f.v[2]];
    const Vec3 gn = (p1 - p0).cross(p2 - p0);
    if (gn.dot(p0) >= 0) continue;  // back-facing or edge-on
    std::array<detail::ClipVertex, 3> tri;
    for (int c = 0; c < 3; ++c)
      tri[c] = {cam[f.v[c]], pose.rotation * mesh.normals[f.n[c]], mesh.uvs[f.uv[c]]};
    const auto poly = detail::clip_near(tri, kNearPlane);
    if (poly.size() < 3) continue;
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
      ScreenTri st{{poly[0], poly[i], poly[i + 1]}, {}};
      for (int c = 0; c < 3; ++c) st.s[c] = project_camera_point(st.v[c].pos, k);
      tris.push_back(st);
    }
  }

  for (std::size_t ti = 0; ti < tris.size(); ++ti) {
    auto& t = tris[ti];
    auto edge = [](const Vec2& a, const Vec2& b, double px, double py) {
      return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
    };
    double area = edge(t.s[0], t.s[1], t.s[2].x(), t.s[2].y());
    if (area == 0 || !std::isfinite(area)) continue;
    if (area < 0) {
      std::swap(t.s[1], t.s[2]);
      std::swap(t.v[1], t.v[2]);
      area = -area;
    }
    const double minx = std::min({t.s[0].x(), t.s[1].x(), t.s[2].x()});
    const double maxx = std::max({t.s[0].x(), t.s[1].x(), t.s[2].x()});
    const double miny = std::min({t.s[0].y(), t.s[1].y(), t.s[2].y()});
    const double maxy = std::max({t.s[0].y(), t.s[1].y(), t.s[2].y()});
    const int x0 = std::max(0, static_cast<int>(std::floor(minx - 0.5)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(maxx - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(miny - 0.5)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(maxy - 0.5)));
    if (x0 > x1 || y0 > y1) continue;
    // Edge i is opposite vertex i.
    std::array<bool, 3> owned{};
    for (int e = 0; e < 3; ++e) {
      const Vec2& a = t.s[(e + 1) % 3];
      const Vec2& b = t.s[(e + 2) % 3];
      owned[e] = detail::owns_edge(b.x() - a.x(), b.y() - a.y());
    }
    const std::array<double, 3> inv_z{1.0 / t.v[0].pos.z(), 1.0 / t.v[1].pos.z(), 1.0 / t.v[2].pos.z()};
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        std::array<double, 3> e{};
        bool inside = true;
        for (int i = 0; i < 3 && inside; ++i) {
          e[i] = edge(t.s[(i + 1) % 3], t.s[(i + 2) % 3], px, py);
          inside = e[i] > 0 || (e[i] == 0 && owned[i]);
        }
        if (!inside) continue;
        std::array<double, 3> b{e[0] / area, e[1] / area, e[2] / area};
        const double iz = b[0] * inv_z[0] + b[1] * inv_z[1] + b[2] * inv_z[2];
        const auto z = static_cast<float>(1.0 / iz);
        float& zbuf = out.depth.at(x, y);
        if (!(z < zbuf)) continue;
        zbuf = z;
        auto& frag = frags[static_cast<std::size_t>(y) * w + x];
        frag.tri = static_cast<int>(ti);
        for (int i = 0; i < 3; ++i) frag.w[i] = b[i] * inv_z[i] / iz;
      }
    }
  }

  // Resolve the surface once per render.
  const ImageRGB* texture = nullptr;
  if (std::holds_alternative<RealTexture>(cfg.mode)) texture = &*mesh.texture;
  if (const auto* rt = std::get_if<RandomTexture>(&cfg.mode)) texture = &pick_random_texture(*rt, cfg.seed);
  const bool textured = texture != nullptr;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto& frag = frags[static_cast<std::size_t>(y) * w + x];
      if (frag.tri < 0) continue;
      const auto& t = tris[frag.tri];
      Vec2 uv = Vec2::Zero();
      for (int i = 0; i < 3; ++i) uv += frag.w[i] * t.v[i].uv;
      Rgb albedo = textured ? sample_texture(*texture, wrap_uv(uv)) : sample_surface(cfg.mode, uv, cfg.seed);
      Rgb rgb = albedo;
      if (!cfg.lights.empty()) {
        Vec3 n = Vec3::Zero();
        Vec3 p = Vec3::Zero();
        for (int i = 0; i < 3; ++i) {
          n += frag.w[i] * t.v[i].normal;
          p += frag.w[i] * t.v[i].pos;
        }
        const double len = n.norm();
        n = len > 0 ? Vec3(n / len) : Vec3(0, 0, -1);
        rgb = shade_lambert(albedo, p, n, cfg.lights, cfg.ambient);
      }
      auto px = out.color.pixel(x, y);
      px[0] = rgb[0];
      px[1] = rgb[1];
      px[2] = rgb[2];
      px[3] = 255;
      ++out.covered;
    }
  }
  if (out.covered == 0) fail(ErrorCode::NothingVisible, "no pixel covered by the mesh");
  return out;
}

inline ImageGray alpha_mask(const ImageRGBA& img) {
  ImageGray m(img.width, img.height);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) m.data[i] = img.data[i * 4 + 3];
  return m;
}

}  // namespace posegap
