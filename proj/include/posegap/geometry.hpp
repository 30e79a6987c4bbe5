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

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>

#include "posegap/error.hpp"

namespace posegap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kRotationTolerance = 1e-6;
inline constexpr double kMinDepth = 1e-9;

/// Rigid object-to-camera transform: x_cam = rotation * x_obj + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

/// Pinhole camera. Pixel (i, j) covers [i, i+1) x [j, j+1); its center sits at
/// (i + 0.5, j + 0.5). No distortion.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Default camera for a square frame, matching the LineMod focal length
  /// (572.4 px at 480 rows) scaled to the frame height.
  static CameraIntrinsics for_frame(int width, int height) {
    const double f = 572.4 * static_cast<double>(height) / 480.0;
    return {f, f, width / 2.0, height / 2.0, width, height};
  }
};

inline bool is_valid(const CameraIntrinsics& k) {
  return k.fx > 0 && k.fy > 0 && k.width >= 1 && k.height >= 1 && k.cx >= 0 &&
         k.cx <= k.width && k.cy >= 0 && k.cy <= k.height;
}

/// Object-frame control points: box center plus the 8 box corners. Corner i
/// takes the max extent on axis a iff bit (2 - a) of i is set, which is the
/// lexicographic sign order (-,-,-), (-,-,+), ..., (+,+,+).
struct ControlPoints3D {
  Vec3 centroid = Vec3::Zero();
  std::array<Vec3, 8> corners{};

  /// All nine points in scoring order: centroid first, then corners.
  std::array<Vec3, 9> points() const {
    std::array<Vec3, 9> out;
    out[0] = centroid;
    std::copy(corners.begin(), corners.end(), out.begin() + 1);
    return out;
  }
};

/// Projected control points in the order [centroid, corner0..corner7].
struct ControlPoints2D {
  std::array<Vec2, 9> points{};
};

inline double rotation_deviation(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

inline bool is_rotation(const Mat3& r, double tol = kRotationTolerance) {
  return r.allFinite() && rotation_deviation(r) <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

inline bool is_valid(const Pose& pose) {
  return is_rotation(pose.rotation) && pose.translation.allFinite();
}

inline void check_rotation(const Mat3& r, const char* what = "rotation") {
  if (!is_rotation(r)) fail(ErrorCode::NotARotation, std::string(what) + " is not orthonormal with det +1");
}

inline Mat3 rotation_from_quaternion(double w, double x, double y, double z) {
  Eigen::Quaterniond q(w, x, y, z);
  if (!(q.norm() > 0)) fail(ErrorCode::NotARotation, "zero quaternion");
  return q.normalized().toRotationMatrix();
}

inline Mat3 axis_angle(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

inline Vec2 project_camera_point(const Vec3& pc, const CameraIntrinsics& k) {
  if (!(pc.z() > kMinDepth)) fail(ErrorCode::NonPositiveDepth, "point at or behind the camera");
  return {k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy};
}

inline Vec2 project_point(const Vec3& p, const Pose& pose, const CameraIntrinsics& k) {
  return project_camera_point(pose.apply(p), k);
}

template <typename Range>
ControlPoints3D control_points_3d(const Range& vertices) {
  auto it = std::begin(vertices);
  if (it == std::end(vertices)) fail(ErrorCode::EmptyMesh, "no vertices");
  Vec3 lo = *it;
  Vec3 hi = *it;
  for (const Vec3& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  ControlPoints3D cp;
  cp.centroid = 0.5 * (lo + hi);
  for (int i = 0; i < 8; ++i) {
    cp.corners[i] = Vec3((i & 4) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 1) ? hi.z() : lo.z());
  }
  return cp;
}

inline ControlPoints2D project_control_points(const ControlPoints3D& cp, const Pose& pose,
                                              const CameraIntrinsics& k) {
  ControlPoints2D out;
  const auto pts = cp.points();
  for (int i = 0; i < 9; ++i) {
    const Vec3 pc = pose.apply(pts[i]);
    if (!(pc.z() > kMinDepth)) {
      fail(ErrorCode::NonPositiveDepth, "control point " + std::to_string(i) + " behind the camera", i);
    }
    out.points[i] = project_camera_point(pc, k);
  }
  return out;
}

/// Geodesic angle between two rotations, in degrees within [0, 180].
inline double rotation_angle_deg(const Mat3& r1, const Mat3& r2) {
  check_rotation(r1, "r1");
  check_rotation(r2, "r2");
  const double c = std::clamp(((r1.transpose() * r2).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

inline double max_residual_px(const ControlPoints2D& a, const ControlPoints2D& b) {
  double worst = 0.0;
  for (int i = 0; i < 9; ++i) worst = std::max(worst, (a.points[i] - b.points[i]).norm());
  return worst;
}

}  // namespace posegap
