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
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "posegap/annotation.hpp"
#include "posegap/dataset.hpp"
#include "posegap/error.hpp"
#include "posegap/geometry.hpp"

namespace posegap {

/// A model's output for one image. No pose and no points means no detection.
struct Prediction {
  std::string sample_id;
  std::optional<Pose> pose;
  std::optional<ControlPoints2D> control_points;

  bool detected() const { return pose.has_value() || control_points.has_value(); }
};

/// Mean Euclidean distance between corresponding control points.
inline double reprojection_error_px(std::span<const Vec2> pred, std::span<const Vec2> gt) {
  if (pred.size() != gt.size() || pred.size() != 9)
    fail(ErrorCode::LengthMismatch, "expected 9 points on both sides, got " + std::to_string(pred.size()) + " and " +
                                        std::to_string(gt.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - gt[i]).norm();
  return sum / static_cast<double>(pred.size());
}

inline double reprojection_error_px(const ControlPoints2D& pred, const ControlPoints2D& gt) {
  return reprojection_error_px(std::span<const Vec2>(pred.points), std::span<const Vec2>(gt.points));
}

inline double translation_error_cm(const Vec3& t_pred, const Vec3& t_gt) { return (t_pred - t_gt).norm() * 100.0; }

struct SampleScore {
  std::string sample_id;
  bool detected = false;
  double reprojection_px = std::numeric_limits<double>::quiet_NaN();
  double translation_cm = std::numeric_limits<double>::quiet_NaN();
  double angle_deg = std::numeric_limits<double>::quiet_NaN();
};

/// Means cover detected samples only; translation and angle means cover the
/// detections that carry a pose.
struct MetricsReport {
  double mean_reprojection_px = std::numeric_limits<double>::quiet_NaN();
  double mean_translation_cm = std::numeric_limits<double>::quiet_NaN();
  double mean_angle_deg = std::numeric_limits<double>::quiet_NaN();
  double detection_rate = 0.0;
  std::size_t sample_count = 0;
  std::size_t detected_count = 0;
  std::vector<SampleScore> rows;
};

using ControlPointLookup = std::map<std::string, ControlPoints3D>;

inline MetricsReport aggregate(std::span<const Prediction> preds, std::span<const Annotation> gts,
                               const ControlPointLookup& objects) {
  std::map<std::string, const Annotation*> by_id;
  for (const auto& g : gts)
    if (!by_id.emplace(g.sample_id, &g).second) fail(ErrorCode::DuplicateId, "ground truth id " + g.sample_id);
  std::map<std::string, const Prediction*> pred_by_id;
  for (const auto& p : preds) {
    if (!by_id.count(p.sample_id)) fail(ErrorCode::UnknownSampleId, "prediction for unknown id " + p.sample_id);
    if (!pred_by_id.emplace(p.sample_id, &p).second) fail(ErrorCode::DuplicateId, "prediction id " + p.sample_id);
  }

  MetricsReport rep;
  rep.sample_count = gts.size();
  double sum_r = 0, sum_t = 0, sum_a = 0;
  std::size_t n_pose = 0;
  for (const auto& g : gts) {
    SampleScore row;
    row.sample_id = g.sample_id;
    const auto it = pred_by_id.find(g.sample_id);
    if (it != pred_by_id.end() && it->second->detected()) {
      const Prediction& p = *it->second;
      row.detected = true;
      ControlPoints2D pts;
      if (p.control_points) {
        pts = *p.control_points;
      } else {
        const auto obj = objects.find(g.object_id);
        if (obj == objects.end()) fail(ErrorCode::UnknownSampleId, "no control points for object " + g.object_id);
        pts = project_control_points(obj->second, *p.pose, g.intrinsics);
      }
      row.reprojection_px = reprojection_error_px(pts, g.control_points);
      sum_r += row.reprojection_px;
      ++rep.detected_count;
      if (p.pose) {
        row.translation_cm = translation_error_cm(p.pose->translation, g.pose.translation);
        row.angle_deg = rotation_angle_deg(p.pose->rotation, g.pose.rotation);
        sum_t += row.translation_cm;
        sum_a += row.angle_deg;
        ++n_pose;
      }
    }
    rep.rows.push_back(std::move(row));
  }
  if (rep.detected_count > 0) rep.mean_reprojection_px = sum_r / static_cast<double>(rep.detected_count);
  if (n_pose > 0) {
    rep.mean_translation_cm = sum_t / static_cast<double>(n_pose);
    rep.mean_angle_deg = sum_a / static_cast<double>(n_pose);
  }
  rep.detection_rate = rep.sample_count ? static_cast<double>(rep.detected_count) / rep.sample_count : 0.0;
  return rep;
}

inline MetricsReport aggregate(std::span<const Prediction> preds, std::span<const Annotation> gts,
                               const ControlPoints3D& cp) {
  ControlPointLookup objects;
  for (const auto& g : gts) objects[g.object_id] = cp;
  return aggregate(preds, gts, objects);
}

// ---------------------------------------------------------------------------
// IO

/// Predictions use the annotation schema without intrinsics; `pose` and
/// `controlPoints2D` are both optional, and a record with neither (or a null
/// pose) is an explicit miss.
inline Prediction prediction_from_json(const json& j) {
  try {
    Prediction p;
    p.sample_id = j.at("sampleId").get<std::string>();
    if (j.contains("pose") && !j["pose"].is_null()) {
      p.pose = pose_from_json(j["pose"]);
      check_rotation(p.pose->rotation, "predicted rotation");
    }
    if (j.contains("controlPoints2D") && !j["controlPoints2D"].is_null())
      p.control_points = points2d_from_json(j["controlPoints2D"]);
    return p;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("prediction: ") + e.what());
  }
}

inline std::vector<Prediction> parse_predictions(std::string_view text) {
  std::vector<Prediction> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, std::string("predictions: ") + e.what(), line_no);
    }
    out.push_back(prediction_from_json(j));
  }
  return out;
}

inline std::vector<Prediction> load_predictions(const fs::path& path) { return parse_predictions(read_text_file(path)); }

struct GroundTruth {
  std::vector<Annotation> annotations;
  ControlPointLookup objects;
};

inline GroundTruth load_ground_truth(const fs::path& manifest_path) {
  const Manifest m = load_manifest(manifest_path);
  GroundTruth gt;
  for (const auto& [id, o] : m.objects) gt.objects[id] = o.control_points;
  for (const auto& r : m.records) {
    if (!r.annotation) continue;
    gt.annotations.push_back(
        annotation_from_json(json::parse(read_text_file(manifest_path.parent_path() / *r.annotation))));
  }
  return gt;
}

// ---------------------------------------------------------------------------
// Reports

/// One decimal, dropping a trailing ".0" ("12", "8.9", "22.5").
inline std::string format_compact(double v) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  std::string s = buf;
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  if (s == "-0") s = "0";
  return s;
}

inline std::string format_px(double v) { return std::isfinite(v) ? format_compact(v) + " px" : "n/a"; }
inline std::string format_cm(double v) { return std::isfinite(v) ? format_compact(v) + " cm" : "n/a"; }
inline std::string format_deg(double v) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f°", v);
  return buf;
}

namespace detail {

inline std::size_t display_width(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

inline std::string pad(std::string_view s, std::size_t width, bool right_align) {
  const std::size_t w = display_width(s);
  const std::string fill(width > w ? width - w : 0, ' ');
  return right_align ? fill + std::string(s) : std::string(s) + fill;
}

}  // namespace detail

using TableRow = std::pair<std::string, MetricsReport>;

/// Fixed-width mean-error table with columns re-projection, translation, angle.
inline std::string render_table(std::span<const TableRow> rows) {
  if (rows.empty()) fail(ErrorCode::InvalidArgument, "table needs at least one row");
  const std::array<std::string, 4> header{"Rendering method / Domain translation", "re-projection", "translation",
                                          "angle"};
  std::vector<std::array<std::string, 4>> cells;
  for (const auto& [label, r] : rows)
    cells.push_back({label.empty() ? "-" : label, format_px(r.mean_reprojection_px),
                     format_cm(r.mean_translation_cm), format_deg(r.mean_angle_deg)});
  std::array<std::size_t, 4> width{};
  for (int c = 0; c < 4; ++c) {
    width[c] = detail::display_width(header[c]);
    for (const auto& row : cells) width[c] = std::max(width[c], detail::display_width(row[c]));
  }
  std::ostringstream out;
  auto line = [&](const std::array<std::string, 4>& r) {
    out << detail::pad(r[0], width[0], false);
    for (int c = 1; c < 4; ++c) out << " | " << detail::pad(r[c], width[c], true);
    out << '\n';
  };
  line(header);
  out << std::string(width[0], '-');
  for (int c = 1; c < 4; ++c) out << "-+-" << std::string(width[c], '-');
  out << '\n';
  for (const auto& r : cells) line(r);
  return out.str();
}

namespace detail {
inline std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}
}  // namespace detail

inline std::string render_csv(std::span<const TableRow> rows) {
  std::ostringstream out;
  out << "label,reprojection_px,translation_cm,angle_deg,detection_rate,samples,detected\n";
  for (const auto& [label, r] : rows)
    out << detail::csv_field(label) << ',' << detail::csv_number(r.mean_reprojection_px) << ','
        << detail::csv_number(r.mean_translation_cm) << ',' << detail::csv_number(r.mean_angle_deg) << ','
        << detail::csv_number(r.detection_rate) << ',' << r.sample_count << ',' << r.detected_count << '\n';
  return out.str();
}

inline std::string render_sample_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "sample_id,detected,reprojection_px,translation_cm,angle_deg\n";
  for (const auto& s : r.rows)
    out << detail::csv_field(s.sample_id) << ',' << (s.detected ? 1 : 0) << ',' << detail::csv_number(s.reprojection_px)
        << ',' << detail::csv_number(s.translation_cm) << ',' << detail::csv_number(s.angle_deg) << '\n';
  return out.str();
}

}  // namespace posegap
