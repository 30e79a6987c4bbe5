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

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

#include "posegap/error.hpp"
#include "posegap/geometry.hpp"

namespace posegap {

/// Augmentation factors baked into an emitted image.
struct AppliedAugment {
  double scale = 1.0;
  double exposure = 1.0;
  double saturation = 1.0;

  friend bool operator==(const AppliedAugment&, const AppliedAugment&) = default;
};

/// Per-image ground truth.
struct Annotation {
  std::string sample_id;
  std::string object_id;
  Pose pose;
  CameraIntrinsics intrinsics;
  ControlPoints2D control_points;
  int width = 0;
  int height = 0;
  std::uint64_t source_seed = 0;
  std::optional<AppliedAugment> augment;
};

/// Annotation whose control points are the exact re-projection of the box.
inline Annotation make_annotation(std::string sample_id, std::string object_id, const Pose& pose,
                                  const CameraIntrinsics& k, const ControlPoints3D& cp, std::uint64_t seed) {
  Annotation a;
  a.sample_id = std::move(sample_id);
  a.object_id = std::move(object_id);
  a.pose = pose;
  a.intrinsics = k;
  a.control_points = project_control_points(cp, pose, k);
  a.width = k.width;
  a.height = k.height;
  a.source_seed = seed;
  return a;
}

// ---------------------------------------------------------------------------
// JSON schema (one object per annotation file, written on a single line)
//
//   sampleId        string, the file stem ("000042")
//   objectId        string
//   pose            { rotation: 9 numbers row-major, translation: [x, y, z] meters }
//                   readers also accept { quaternion: [w, x, y, z], translation }
//   intrinsics      { fx, fy, cx, cy, width, height }
//   controlPoints2D [[u, v] x 9], order [centroid, corner0..corner7]
//   imageSize       [width, height]
//   sourceSeed      unsigned integer
//   augment         optional { scale, exposure, saturation }

using json = nlohmann::json;

inline json pose_to_json(const Pose& p) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(p.rotation(r, c));
  return {{"rotation", rot}, {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}};
}

inline Pose pose_from_json(const json& j) {
  Pose p;
  const auto& t = j.at("translation");
  if (!t.is_array() || t.size() != 3) fail(ErrorCode::ParseError, "translation must have 3 numbers");
  p.translation = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
  if (j.contains("rotation")) {
    const auto& r = j.at("rotation");
    if (!r.is_array() || r.size() != 9) fail(ErrorCode::ParseError, "rotation must have 9 numbers");
    for (int i = 0; i < 9; ++i) p.rotation(i / 3, i % 3) = r[i].get<double>();
  } else if (j.contains("quaternion")) {
    const auto& q = j.at("quaternion");
    if (!q.is_array() || q.size() != 4) fail(ErrorCode::ParseError, "quaternion must be [w, x, y, z]");
    p.rotation = rotation_from_quaternion(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                                          q[3].get<double>());
  } else {
    fail(ErrorCode::ParseError, "pose needs rotation or quaternion");
  }
  return p;
}

inline json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

inline CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics k{j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                     j.at("cy").get<double>(), j.at("width").get<int>(), j.at("height").get<int>()};
  if (!is_valid(k)) fail(ErrorCode::ParseError, "invalid intrinsics");
  return k;
}

inline json points2d_to_json(const ControlPoints2D& cp) {
  json arr = json::array();
  for (const auto& p : cp.points) arr.push_back({p.x(), p.y()});
  return arr;
}

inline ControlPoints2D points2d_from_json(const json& j) {
  if (!j.is_array() || j.size() != 9) fail(ErrorCode::LengthMismatch, "controlPoints2D must hold 9 points");
  ControlPoints2D cp;
  for (int i = 0; i < 9; ++i) {
    if (!j[i].is_array() || j[i].size() != 2) fail(ErrorCode::ParseError, "control point must be [u, v]");
    cp.points[i] = Vec2(j[i][0].get<double>(), j[i][1].get<double>());
  }
  return cp;
}

inline json points3d_to_json(const ControlPoints3D& cp) {
  json corners = json::array();
  for (const auto& c : cp.corners) corners.push_back({c.x(), c.y(), c.z()});
  return {{"centroid", {cp.centroid.x(), cp.centroid.y(), cp.centroid.z()}}, {"corners", corners}};
}

inline ControlPoints3D points3d_from_json(const json& j) {
  auto vec = [](const json& a) {
    if (!a.is_array() || a.size() != 3) fail(ErrorCode::ParseError, "expected 3-vector");
    return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
  };
  ControlPoints3D cp;
  cp.centroid = vec(j.at("centroid"));
  const auto& c = j.at("corners");
  if (!c.is_array() || c.size() != 8) fail(ErrorCode::ParseError, "expected 8 corners");
  for (int i = 0; i < 8; ++i) cp.corners[i] = vec(c[i]);
  return cp;
}

inline json annotation_to_json(const Annotation& a) {
  json j = {{"sampleId", a.sample_id},
            {"objectId", a.object_id},
            {"pose", pose_to_json(a.pose)},
            {"intrinsics", intrinsics_to_json(a.intrinsics)},
            {"controlPoints2D", points2d_to_json(a.control_points)},
            {"imageSize", {a.width, a.height}},
            {"sourceSeed", a.source_seed}};
  if (a.augment)
    j["augment"] = {{"scale", a.augment->scale}, {"exposure", a.augment->exposure},
                    {"saturation", a.augment->saturation}};
  return j;
}

inline Annotation annotation_from_json(const json& j) {
  try {
    Annotation a;
    a.sample_id = j.at("sampleId").get<std::string>();
    a.object_id = j.at("objectId").get<std::string>();
    a.pose = pose_from_json(j.at("pose"));
    a.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    a.control_points = points2d_from_json(j.at("controlPoints2D"));
    const auto& size = j.at("imageSize");
    a.width = size.at(0).get<int>();
    a.height = size.at(1).get<int>();
    a.source_seed = j.value("sourceSeed", std::uint64_t{0});
    if (j.contains("augment")) {
      const auto& g = j["augment"];
      a.augment = AppliedAugment{g.at("scale").get<double>(), g.at("exposure").get<double>(),
                                 g.at("saturation").get<double>()};
    }
    return a;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("annotation: ") + e.what());
  }
}

}  // namespace posegap
