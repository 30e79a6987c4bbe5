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
#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"

namespace posegap {
namespace {

using testing::Gen;

RenderConfig config(SurfaceMode mode, int size = 128) {
  RenderConfig c;
  c.mode = std::move(mode);
  c.width = c.height = size;
  return c;
}

/// Two-triangle quad in the plane z = 0 of its own frame, spanning [-h, h]^2,
/// facing -z (towards a camera looking down +z).
Mesh quad(double h, Vec2 uv_a = {0, 0}, Vec2 uv_b = {1, 1}) {
  Mesh m;
  m.vertices = {{-h, -h, 0}, {h, -h, 0}, {h, h, 0}, {-h, h, 0}};
  m.normals = {{0, 0, -1}};
  m.uvs = {uv_a, {uv_b.x(), uv_a.y()}, uv_b, {uv_a.x(), uv_b.y()}};
  // counter-clockwise seen from -z with y down on screen
  m.faces.push_back({{0, 2, 1}, {0, 0, 0}, {0, 2, 1}});
  m.faces.push_back({{0, 3, 2}, {0, 0, 0}, {0, 3, 2}});
  return m;
}

Pose at(Vec3 t, Mat3 r = Mat3::Identity()) { return {r, t}; }

TEST(Rasterize, UnlitUniformGrayIsExact) {
  const Mesh m = testing::cube_mesh(0.1);
  const auto k = CameraIntrinsics::for_frame(128, 128);
  Gen g(1);
  for (int i = 0; i < 20; ++i) {
    const RenderOutput r = rasterize(m, at({0, 0, 0.5}, g.rotation()), k, config(UniformColor{}));
    ASSERT_GT(r.covered, 0u);
    for (std::size_t p = 0; p < r.color.pixel_count(); ++p) {
      const auto* px = &r.color.data[p * 4];
      if (px[3] == 0) continue;
      ASSERT_EQ(px[0], 128);
      ASSERT_EQ(px[1], 128);
      ASSERT_EQ(px[2], 128);
      ASSERT_EQ(px[3], 255);
    }
  }
}

TEST(Rasterize, ProjectedAreaScalesWithInverseSquareDepth) {
  const Mesh m = testing::cube_mesh(0.1);
  const CameraIntrinsics k{2000, 2000, 208, 208, 416, 416};
  Gen g(2);
  for (int i = 0; i < 10; ++i) {
    const Mat3 r = g.rotation();
    const auto near = rasterize(m, at({0, 0, 2}, r), k, config(UniformColor{}, 416));
    const auto far = rasterize(m, at({0, 0, 4}, r), k, config(UniformColor{}, 416));
    const double ratio = static_cast<double>(near.covered) / static_cast<double>(far.covered);
    EXPECT_NEAR(ratio, 4.0, 0.4);
  }
}

TEST(Rasterize, BehindCameraIsNothingVisible) {
  const auto k = CameraIntrinsics::for_frame(64, 64);
  try {
    rasterize(testing::cube_mesh(0.1), at({0, 0, -1}), k, config(UniformColor{}, 64));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NothingVisible);
  }
}

TEST(Rasterize, Preconditions) {
  const auto k = CameraIntrinsics::for_frame(64, 64);
  EXPECT_THROW(rasterize(Mesh{}, at({0, 0, 1}), k, config(UniformColor{}, 64)), Error);
  EXPECT_THROW(rasterize(testing::cube_mesh(), at({0, 0, 1}), CameraIntrinsics::for_frame(8, 8),
                         config(UniformColor{}, 8)),
               Error);
  EXPECT_THROW(rasterize(testing::cube_mesh(), at({0, 0, 1}), k, config(UniformColor{}, 128)), Error);
  try {
    rasterize(testing::cube_mesh(), at({0, 0, 1}), k, config(RealTexture{}, 64));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingTexture);
  }
}

TEST(Rasterize, AlphaDepthCoherenceOnFuzzedRenders) {
  auto textures = std::make_shared<TextureSource>();
  textures->images.push_back(testing::pattern_image(32, 32, 3));
  textures->images.push_back(testing::pattern_image(16, 48, 4));
  Mesh textured = testing::cube_mesh(0.12);
  textured.texture = testing::pattern_image(32, 32, 5);
  const auto k = CameraIntrinsics::for_frame(96, 96);
  Gen g(3);
  for (int i = 0; i < 100; ++i) {
    const auto seed = static_cast<std::uint64_t>(i);
    const Pose pose = sample_pose(seed, PoseSampling{}, k, Vec3::Zero());
    SurfaceMode modes[] = {RealTexture{}, RandomTexture{textures}, UniformColor{}, Checkerboard{}};
    RenderConfig cfg = config(modes[i % 4], 96);
    cfg.seed = seed;
    if (i % 3 == 0) {
      cfg.lights = sample_lights(seed, LightSampling{}, pose.translation);
      cfg.ambient = 0.25;
    }
    const RenderOutput r = rasterize(textured, pose, k, cfg);
    std::size_t covered = 0;
    for (int y = 0; y < 96; ++y)
      for (int x = 0; x < 96; ++x) {
        const bool alpha = r.color.at(x, y, 3) > 0;
        ASSERT_EQ(alpha, std::isfinite(r.depth.at(x, y))) << "render " << i << " pixel " << x << "," << y;
        if (alpha) {
          ASSERT_GE(r.depth.at(x, y), kNearPlane);
          ++covered;
        }
      }
    EXPECT_EQ(covered, r.covered);
  }
}

TEST(Rasterize, BitIdenticalOnRepeat) {
  auto textures = std::make_shared<TextureSource>();
  textures->images.push_back(testing::pattern_image(32, 32, 3));
  const auto k = CameraIntrinsics::for_frame(96, 96);
  const Pose pose = sample_pose(9, PoseSampling{}, k, Vec3::Zero());
  RenderConfig cfg = config(RandomTexture{textures}, 96);
  cfg.lights = sample_lights(9, LightSampling{}, pose.translation);
  const auto a = rasterize(testing::cube_mesh(0.1), pose, k, cfg);
  const auto b = rasterize(testing::cube_mesh(0.1), pose, k, cfg);
  EXPECT_EQ(a.color, b.color);
  EXPECT_EQ(a.depth.data, b.depth.data);
}

TEST(Rasterize, SeedOnlyAffectsRandomModes) {
  const auto k = CameraIntrinsics::for_frame(96, 96);
  const Pose pose = sample_pose(4, PoseSampling{}, k, Vec3::Zero());
  for (SurfaceMode mode : {SurfaceMode(Checkerboard{}), SurfaceMode(UniformColor{})}) {
    RenderConfig a = config(mode, 96), b = config(mode, 96);
    a.seed = 1;
    b.seed = 2;
    EXPECT_EQ(rasterize(testing::cube_mesh(0.1), pose, k, a).color,
              rasterize(testing::cube_mesh(0.1), pose, k, b).color);
  }
}

TEST(Rasterize, NearTriangleWinsWhereverTheyOverlap) {
  // Two fronto-parallel quads at different depths, textured from different
  // texels so the winner is visible in colour and depth.
  ImageRGB tex(2, 1);
  tex.data = {255, 0, 0, 0, 0, 255};
  const Vec2 red(0.25, 0.5), blue(0.75, 0.5);
  auto build = [&](bool near_first) {
    Mesh a = quad(0.05, red, red);
    Mesh b = quad(0.08, blue, blue);
    for (auto& v : a.vertices) v += Vec3(0.02, 0, 0.5);
    for (auto& v : b.vertices) v += Vec3(-0.02, 0.01, 0.8);
    Mesh m = near_first ? a : b;
    const Mesh& other = near_first ? b : a;
    const int base = static_cast<int>(m.vertices.size());
    const int uvbase = static_cast<int>(m.uvs.size());
    m.vertices.insert(m.vertices.end(), other.vertices.begin(), other.vertices.end());
    m.uvs.insert(m.uvs.end(), other.uvs.begin(), other.uvs.end());
    for (Face f : other.faces) {
      for (auto& i : f.v) i += base;
      for (auto& i : f.uv) i += uvbase;
      m.faces.push_back(f);
    }
    m.texture = tex;
    return m;
  };
  const auto k = CameraIntrinsics::for_frame(128, 128);
  for (bool near_first : {true, false}) {
    const auto r = rasterize(build(near_first), at({0, 0, 0}), k, config(RealTexture{}));
    std::size_t overlap = 0;
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x) {
        if (r.color.at(x, y, 3) == 0) continue;
        // pixel centre falls on the near quad?
        const double X = (x + 0.5 - k.cx) / k.fx * 0.5, Y = (y + 0.5 - k.cy) / k.fy * 0.5;
        const bool on_near = std::abs(X - 0.02) < 0.05 - 1e-4 && std::abs(Y) < 0.05 - 1e-4;
        const bool clearly_off = std::abs(X - 0.02) > 0.05 + 1e-4 || std::abs(Y) > 0.05 + 1e-4;
        if (on_near) {
          ++overlap;
          ASSERT_EQ(r.color.at(x, y, 0), 255);
          ASSERT_EQ(r.color.at(x, y, 2), 0);
          ASSERT_NEAR(r.depth.at(x, y), 0.5, 1e-5);
        } else if (clearly_off) {
          ASSERT_EQ(r.color.at(x, y, 2), 255);
          ASSERT_NEAR(r.depth.at(x, y), 0.8, 1e-5);
        }
      }
    EXPECT_GT(overlap, 500u);
  }
}

TEST(Rasterize, BackFacesAreCulled) {
  const auto k = CameraIntrinsics::for_frame(64, 64);
  Mesh m = quad(0.05);
  EXPECT_NO_THROW(rasterize(m, at({0, 0, 0.5}), k, config(UniformColor{}, 64)));
  for (auto& f : m.faces) std::swap(f.v[1], f.v[2]);
  EXPECT_THROW(rasterize(m, at({0, 0, 0.5}), k, config(UniformColor{}, 64)), Error);
}

TEST(Rasterize, CubeShowsFrontFaceDepth) {
  const auto k = CameraIntrinsics::for_frame(64, 64);
  const auto r = rasterize(testing::cube_mesh(0.1), at({0, 0, 0.5}), k, config(UniformColor{}, 64));
  EXPECT_NEAR(r.depth.at(32, 32), 0.45, 1e-5);
}

TEST(Rasterize, PerspectiveCorrectUvMatchesRayCast) {
  // Tilted checkerboard plane. Each pixel centre is intersected with the
  // plane analytically and the expected cell parity compared.
  const int n = 8;
  Mesh m = quad(0.1);
  const Mat3 r = testing::rot_x(-55) * testing::rot_z(20);
  const Vec3 t(0.01, -0.02, 0.4);
  const auto k = CameraIntrinsics::for_frame(160, 160);
  RenderConfig cfg = config(Checkerboard{n, {0, 0, 0}, {255, 255, 255}}, 160);
  const auto out = rasterize(m, at(t, r), k, cfg);
  const Vec3 normal = r * Vec3::UnitZ();
  const Vec3 ex = r * Vec3::UnitX(), ey = r * Vec3::UnitY();
  std::size_t checked = 0;
  for (int y = 0; y < 160; ++y)
    for (int x = 0; x < 160; ++x) {
      if (out.color.at(x, y, 3) == 0) continue;
      const Vec3 dir((x + 0.5 - k.cx) / k.fx, (y + 0.5 - k.cy) / k.fy, 1.0);
      const double s = normal.dot(t) / normal.dot(dir);
      const Vec3 local = s * dir - t;
      const double u = (ex.dot(local) + 0.1) / 0.2, v = (ey.dot(local) + 0.1) / 0.2;
      const double fu = u * n - std::floor(u * n), fv = v * n - std::floor(v * n);
      if (std::min({fu, 1 - fu, fv, 1 - fv}) < 0.05) continue;
      const bool even = (static_cast<long>(std::floor(u * n)) + static_cast<long>(std::floor(v * n))) % 2 == 0;
      ASSERT_EQ(out.color.at(x, y, 0), even ? 0 : 255) << x << "," << y;
      ++checked;
    }
  EXPECT_GT(checked, 1000u);
}

TEST(Rasterize, TriangleCrossingNearPlaneIsClipped) {
  Mesh m;
  m.vertices = {{-0.5, -0.2, -0.25}, {0.5, -0.2, -0.25}, {0.0, 0.3, 1.0}};
  m.normals = {{0, 0, -1}};
  m.uvs = {{0, 0}, {1, 0}, {0, 1}};
  m.faces.push_back({{0, 1, 2}, {0, 0, 0}, {0, 1, 2}});
  for (auto& f : m.faces) {
    const Vec3 gn = (m.vertices[f.v[1]] - m.vertices[f.v[0]]).cross(m.vertices[f.v[2]] - m.vertices[f.v[0]]);
    if (gn.dot(m.vertices[f.v[0]] + Vec3(0, 0, 0.2)) >= 0) std::swap(f.v[1], f.v[2]);
  }
  const auto k = CameraIntrinsics::for_frame(64, 64);
  const auto r = rasterize(m, at({0, 0, 0.2}), k, config(UniformColor{}, 64));
  EXPECT_GT(r.covered, 0u);
  for (float d : r.depth.data)
    if (std::isfinite(d)) EXPECT_GE(d, kNearPlane - 1e-6);
}

TEST(SampleSurface, Checkerboard) {
  const Checkerboard cb{8, {0, 0, 0}, {255, 255, 255}};
  EXPECT_EQ(sample_surface(cb, {0.05, 0.05}, 0), cb.color_a);
  EXPECT_EQ(sample_surface(cb, {0.05, 0.20}, 0), cb.color_b);
  EXPECT_EQ(sample_surface(cb, {0.20, 0.20}, 0), cb.color_a);
}

TEST(SampleSurface, UniformIgnoresUv) {
  Gen g(4);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_surface(UniformColor{}, g.vec2(0, 1), g.engine()()), (Rgb{128, 128, 128}));
}

TEST(SampleSurface, RealTextureAtTexelCentre) {
  ImageRGB tex(2, 2);
  tex.data = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120};
  // v runs bottom-up, so the top row sits at v = 0.75
  EXPECT_EQ(sample_surface(RealTexture{}, {0.25, 0.75}, 0, &tex), (Rgb{10, 20, 30}));
  EXPECT_EQ(sample_surface(RealTexture{}, {0.75, 0.75}, 0, &tex), (Rgb{40, 50, 60}));
  EXPECT_EQ(sample_surface(RealTexture{}, {0.25, 0.25}, 0, &tex), (Rgb{70, 80, 90}));
  EXPECT_THROW(sample_surface(RealTexture{}, {0.5, 0.5}, 0), Error);
}

TEST(SampleSurface, RandomTextureDependsOnSeedOnly) {
  auto src = std::make_shared<TextureSource>();
  for (int i = 0; i < 5; ++i) {
    ImageRGB t(1, 1);
    t.data = {static_cast<std::uint8_t>(i * 50), 0, 0};
    src->images.push_back(t);
  }
  const RandomTexture mode{src};
  std::set<std::uint8_t> seen;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Rgb a = sample_surface(mode, {0.1, 0.1}, s);
    EXPECT_EQ(a, sample_surface(mode, {0.9, 0.3}, s));
    seen.insert(a[0]);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(ShadeLambert, Examples) {
  const Rgb albedo{200, 100, 50};
  EXPECT_EQ(shade_lambert(albedo, Vec3::Zero(), Vec3::UnitZ(), {}, 1.0), albedo);
  const std::vector<PointLight> on_axis{{Vec3(0, 0, 1), 1.0}};
  EXPECT_EQ(shade_lambert(albedo, Vec3::Zero(), Vec3::UnitZ(), on_axis, 0.0), albedo);
  const std::vector<PointLight> behind{{Vec3(0, 0, -1), 1.0}};
  EXPECT_EQ(shade_lambert(albedo, Vec3::Zero(), Vec3::UnitZ(), behind, 0.0), (Rgb{0, 0, 0}));
  const std::vector<PointLight> far{{Vec3(0, 0, 2), 1.0}};
  EXPECT_EQ(shade_lambert(albedo, Vec3::Zero(), Vec3::UnitZ(), far, 0.0), (Rgb{50, 25, 13}));
  const std::vector<PointLight> coincident{{Vec3::Zero(), 0.0}};
  EXPECT_EQ(shade_lambert(albedo, Vec3::Zero(), Vec3::UnitZ(), coincident, 0.0), albedo);
}

TEST(SampleLights, ForcedCountAndRadius) {
  LightSampling s;
  s.min_count = s.max_count = 1;
  s.min_radius = s.max_radius = 2.0;
  const Vec3 c(0.1, -0.2, 0.7);
  const auto lights = sample_lights(5, s, c);
  ASSERT_EQ(lights.size(), 1u);
  EXPECT_NEAR((lights[0].position - c).norm(), 2.0, 1e-6);
  EXPECT_GE(lights[0].intensity, 0.0);
}

TEST(SampleLights, DeterministicInSeed) {
  const auto a = sample_lights(77, LightSampling{}, Vec3::Zero());
  const auto b = sample_lights(77, LightSampling{}, Vec3::Zero());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].position, b[i].position);
    EXPECT_EQ(a[i].intensity, b[i].intensity);
  }
}

TEST(SampleLights, CountHistogramIsUniform) {
  LightSampling s;
  s.min_count = 2;
  s.max_count = 5;
  std::vector<std::size_t> counts(4, 0);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) ++counts[sample_lights(seed, s, Vec3::Zero()).size() - 2];
  EXPECT_LT(testing::chi_square_uniform(counts), testing::chi_square_critical_p01(3));
}

TEST(SampleLights, RejectsBadRanges) {
  LightSampling s;
  s.min_count = 0;
  EXPECT_THROW(sample_lights(1, s, Vec3::Zero()), Error);
  s = {};
  s.min_radius = 0;
  EXPECT_THROW(sample_lights(1, s, Vec3::Zero()), Error);
}

TEST(SamplePose, DegenerateRangesGiveUniquePose) {
  PoseSampling s;
  s.min_distance = s.max_distance = 0.8;
  s.min_azimuth = s.max_azimuth = 30;
  s.min_elevation = s.max_elevation = 10;
  s.min_in_plane = s.max_in_plane = 5;
  s.center_box = 0;
  const auto k = CameraIntrinsics::for_frame(256, 256);
  const Pose a = sample_pose(1, s, k, Vec3::Zero());
  const Pose b = sample_pose(999, s, k, Vec3::Zero());
  EXPECT_TRUE(a.rotation.isApprox(b.rotation, 0));
  EXPECT_EQ(a.translation, b.translation);
  EXPECT_NEAR(a.translation.z(), 0.8, 1e-12);
  EXPECT_TRUE(is_rotation(a.rotation));
}

TEST(SamplePose, SameSeedSamePose) {
  const auto k = CameraIntrinsics::for_frame(256, 256);
  const Pose a = sample_pose(42, PoseSampling{}, k, Vec3(0.01, 0.02, 0.03));
  const Pose b = sample_pose(42, PoseSampling{}, k, Vec3(0.01, 0.02, 0.03));
  EXPECT_EQ(a.rotation, b.rotation);
  EXPECT_EQ(a.translation, b.translation);
}

TEST(SamplePose, CentroidStaysInCentralBox) {
  const auto k = CameraIntrinsics::for_frame(416, 416);
  const Vec3 c(0.02, -0.01, 0.04);
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const Pose p = sample_pose(seed, PoseSampling{}, k, c);
    ASSERT_TRUE(is_rotation(p.rotation));
    const Vec2 uv = project_point(c, p, k);
    ASSERT_GE(uv.x(), 0.1 * 416 - 1e-9);
    ASSERT_LE(uv.x(), 0.9 * 416 + 1e-9);
    ASSERT_GE(uv.y(), 0.1 * 416 - 1e-9);
    ASSERT_LE(uv.y(), 0.9 * 416 + 1e-9);
    const double dist = p.apply(c).z();
    ASSERT_GE(dist, 0.5);
    ASSERT_LE(dist, 1.2);
  }
}

TEST(SamplePose, ViewRotationLooksAtObject) {
  const Mat3 r = view_rotation(0, 0, 0);
  // camera on the +x axis looking back at the origin
  EXPECT_TRUE((r * Vec3(-1, 0, 0)).isApprox(Vec3(0, 0, 1), 1e-12));
  // object z-up maps to image up (negative y)
  EXPECT_LT((r * Vec3::UnitZ()).y(), 0);
}

}  // namespace
}  // namespace posegap
