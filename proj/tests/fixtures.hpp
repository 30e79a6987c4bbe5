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

#include <posegap/posegap.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <unistd.h>

namespace posegap::testing {

/// Unique scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("posegap_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

/// Axis-aligned cube of side `side` centred on `center`, 12 outward-facing
/// triangles with per-face uv squares.
inline Mesh cube_mesh(double side = 0.1, Vec3 center = Vec3::Zero()) {
  Mesh m;
  const double h = side / 2;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back(center + Vec3((i & 4) ? h : -h, (i & 2) ? h : -h, (i & 1) ? h : -h));
  m.uvs = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  // Quads listed counter-clockwise seen from outside.
  const int quads[6][4] = {{4, 6, 7, 5}, {0, 1, 3, 2}, {2, 3, 7, 6}, {0, 4, 5, 1}, {1, 5, 7, 3}, {0, 2, 6, 4}};
  const Vec3 normals[6] = {Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitZ()};
  for (int f = 0; f < 6; ++f) {
    m.normals.push_back(normals[f]);
    const int n = static_cast<int>(m.normals.size()) - 1;
    for (int t = 0; t < 2; ++t) {
      Face face;
      const int a = 0, b = t == 0 ? 1 : 2, c = t == 0 ? 2 : 3;
      face.v = {quads[f][a], quads[f][b], quads[f][c]};
      face.uv = {a, b, c};
      face.n = {n, n, n};
      m.faces.push_back(face);
    }
  }
  return m;
}

/// Deterministic colourful test image: gradients plus seeded blocks.
inline ImageRGB pattern_image(int w, int h, std::uint64_t seed) {
  ImageRGB img(w, h);
  Rng rng(seed);
  const int r0 = static_cast<int>(rng.below(256)), g0 = static_cast<int>(rng.below(256));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = static_cast<std::uint8_t>((r0 + x * 255 / w) & 255);
      img.at(x, y, 1) = static_cast<std::uint8_t>((g0 + y * 255 / h) & 255);
      img.at(x, y, 2) = static_cast<std::uint8_t>(((x / 8 + y / 8) % 2) ? 200 : 40);
    }
  for (int b = 0; b < 6; ++b) {
    const int bx = static_cast<int>(rng.below(static_cast<std::uint64_t>(w))), by = static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
    const std::uint8_t c = static_cast<std::uint8_t>(rng.below(256));
    for (int y = by; y < std::min(h, by + h / 5); ++y)
      for (int x = bx; x < std::min(w, bx + w / 5); ++x) img.at(x, y, b % 3) = c;
  }
  return img;
}

/// Writes `n` pattern PNGs of the given size into dir.
inline void write_backgrounds(const fs::path& dir, int n, int w = 320, int h = 240, std::uint64_t seed = 1) {
  fs::create_directories(dir);
  for (int i = 0; i < n; ++i) save_image(pattern_image(w, h, seed + static_cast<std::uint64_t>(i)), dir / ("bg" + std::to_string(i) + ".png"));
}

/// Cube with a pattern texture, written as OBJ + MTL + PNG in millimetres.
inline fs::path write_cube_obj(const fs::path& dir, const std::string& name = "cube", double side_mm = 100.0) {
  fs::create_directories(dir);
  const Mesh m = cube_mesh(side_mm);
  std::string obj = "mtllib " + name + ".mtl\n";
  char buf[128];
  for (const auto& v : m.vertices) {
    std::snprintf(buf, sizeof buf, "v %.6f %.6f %.6f\n", v.x(), v.y(), v.z());
    obj += buf;
  }
  for (const auto& t : m.uvs) {
    std::snprintf(buf, sizeof buf, "vt %.6f %.6f\n", t.x(), t.y());
    obj += buf;
  }
  for (const auto& n : m.normals) {
    std::snprintf(buf, sizeof buf, "vn %.6f %.6f %.6f\n", n.x(), n.y(), n.z());
    obj += buf;
  }
  for (const auto& f : m.faces) {
    std::snprintf(buf, sizeof buf, "f %d/%d/%d %d/%d/%d %d/%d/%d\n", f.v[0] + 1, f.uv[0] + 1, f.n[0] + 1, f.v[1] + 1,
                  f.uv[1] + 1, f.n[1] + 1, f.v[2] + 1, f.uv[2] + 1, f.n[2] + 1);
    obj += buf;
  }
  write_text_file(dir / (name + ".obj"), obj);
  write_text_file(dir / (name + ".mtl"), "newmtl skin\nmap_Kd " + name + ".png\n");
  save_image(pattern_image(64, 64, 99), dir / (name + ".png"));
  return dir / (name + ".obj");
}

/// Pose that looks at the origin from `distance` metres along +z.
inline Pose frontal_pose(double distance = 0.6) {
  Pose p;
  p.rotation = Mat3::Identity();
  p.translation = Vec3(0, 0, distance);
  return p;
}

}  // namespace posegap::testing
