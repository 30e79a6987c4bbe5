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

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "posegap/annotation.hpp"
#include "posegap/asset_io.hpp"
#include "posegap/compose.hpp"
#include "posegap/intermediate.hpp"
#include "posegap/parallel.hpp"
#include "posegap/renderer.hpp"

#ifndef POSEGAP_VERSION
#define POSEGAP_VERSION "0.0.0"
#endif

namespace posegap {

inline constexpr std::string_view kGeneratorVersion = POSEGAP_VERSION;
inline constexpr std::string_view kManifestFormat = "posegap.manifest/1";
inline constexpr double kReprojectionTolerancePx = 1e-2;

/// A loaded mesh together with its identity and scoring points.
struct NamedMesh {
  std::string id;
  Mesh mesh;
  ControlPoints3D control_points;
  std::string source;  // path as given, echoed in manifests
  LengthUnit units = LengthUnit::Meters;
};

inline NamedMesh make_named_mesh(std::string id, Mesh mesh, std::string source = {},
                                 LengthUnit units = LengthUnit::Meters) {
  NamedMesh nm{std::move(id), std::move(mesh), {}, std::move(source), units};
  nm.control_points = control_points_3d(nm.mesh);
  return nm;
}

inline NamedMesh load_named_mesh(const fs::path& path, LengthUnit units) {
  return make_named_mesh(path.stem().string(), load_mesh(path, units), path.string(), units);
}

// ---------------------------------------------------------------------------
// Configuration

/// Where augmentation happens relative to domain adaptation. `Before` bakes
/// the factors into the emitted images; `After` leaves images unaugmented and
/// records the ranges for the training side; `None` disables it.
enum class AugmentOrder { None, Before, After };

inline std::string_view augment_order_name(AugmentOrder o) {
  switch (o) {
    case AugmentOrder::None: return "none";
    case AugmentOrder::Before: return "before";
    case AugmentOrder::After: return "after";
  }
  return "none";
}

inline std::optional<AugmentOrder> parse_augment_order(std::string_view s) {
  if (s == "none") return AugmentOrder::None;
  if (s == "before") return AugmentOrder::Before;
  if (s == "after") return AugmentOrder::After;
  return std::nullopt;
}

struct AugmentSettings {
  AugmentOrder order = AugmentOrder::After;
  Range scale{0.75, 1.25};
  Range exposure{0.67, 1.5};
  Range saturation{0.67, 1.5};

  std::optional<AugmentParams> params_if_baked() const {
    if (order != AugmentOrder::Before) return std::nullopt;
    return AugmentParams{scale, exposure, saturation, 0};
  }
};

struct EmitConfig {
  int width = 416;
  int height = 416;
  std::optional<CameraIntrinsics> intrinsics;  // default: CameraIntrinsics::for_frame
  PoseSampling pose{};
  LightSampling lights{};
  double lit_ambient = 0.25;
  UniformColor uniform{};
  Checkerboard checker{};
  AugmentSettings augment{};
  std::uint64_t root_seed = 0;
  int max_attempts = 8;

  CameraIntrinsics camera() const {
    return intrinsics ? *intrinsics : CameraIntrinsics::for_frame(width, height);
  }
};

/// Runtime knobs that must not influence the emitted bytes.
struct RunOptions {
  int jobs = 1;
  std::function<void(std::size_t, std::size_t)> progress;
};

inline json range_to_json(const Range& r) { return json::array({r.min, r.max}); }
inline Range range_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) fail(ErrorCode::ParseError, "range must be [min, max]");
  return {j[0].get<double>(), j[1].get<double>()};
}
inline json rgb_to_json(const Rgb& c) { return json::array({c[0], c[1], c[2]}); }
inline Rgb rgb_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) fail(ErrorCode::ParseError, "color must be [r, g, b]");
  Rgb c{};
  for (int i = 0; i < 3; ++i) {
    const int v = j[i].get<int>();
    if (v < 0 || v > 255) fail(ErrorCode::ParseError, "color channel out of range");
    c[i] = static_cast<std::uint8_t>(v);
  }
  return c;
}

inline json emit_config_to_json(const EmitConfig& c) {
  json j;
  j["imageSize"] = {c.width, c.height};
  j["intrinsics"] = intrinsics_to_json(c.camera());
  j["pose"] = {{"distance", {c.pose.min_distance, c.pose.max_distance}},
               {"azimuth", {c.pose.min_azimuth, c.pose.max_azimuth}},
               {"elevation", {c.pose.min_elevation, c.pose.max_elevation}},
               {"inPlane", {c.pose.min_in_plane, c.pose.max_in_plane}},
               {"centerBox", c.pose.center_box}};
  j["lights"] = {{"count", {c.lights.min_count, c.lights.max_count}},
                 {"radius", {c.lights.min_radius, c.lights.max_radius}},
                 {"irradiance", {c.lights.min_irradiance, c.lights.max_irradiance}},
                 {"ambient", c.lit_ambient}};
  j["uniformColor"] = rgb_to_json(c.uniform.rgb);
  j["checkerboard"] = {{"cellsPerUV", c.checker.cells_per_uv},
                       {"colorA", rgb_to_json(c.checker.color_a)},
                       {"colorB", rgb_to_json(c.checker.color_b)}};
  j["augment"] = {{"order", augment_order_name(c.augment.order)},
                  {"scale", range_to_json(c.augment.scale)},
                  {"exposure", range_to_json(c.augment.exposure)},
                  {"saturation", range_to_json(c.augment.saturation)},
                  {"colorSpace", "HSV"}};
  j["rootSeed"] = c.root_seed;
  j["maxAttempts"] = c.max_attempts;
  return j;
}

/// Reads the keys present in `j` over `base`; absent keys keep their value.
inline EmitConfig emit_config_from_json(const json& j, EmitConfig c = {}) {
  auto read_pair = [](const json& a, auto& lo, auto& hi) {
    lo = a.at(0).get<std::decay_t<decltype(lo)>>();
    hi = a.at(1).get<std::decay_t<decltype(hi)>>();
  };
  try {
    if (j.contains("imageSize")) {
      c.width = j["imageSize"].at(0).get<int>();
      c.height = j["imageSize"].at(1).get<int>();
    }
    if (j.contains("intrinsics") && !j["intrinsics"].is_null()) c.intrinsics = intrinsics_from_json(j["intrinsics"]);
    if (j.contains("pose")) {
      const auto& p = j["pose"];
      if (p.contains("distance")) read_pair(p["distance"], c.pose.min_distance, c.pose.max_distance);
      if (p.contains("azimuth")) read_pair(p["azimuth"], c.pose.min_azimuth, c.pose.max_azimuth);
      if (p.contains("elevation")) read_pair(p["elevation"], c.pose.min_elevation, c.pose.max_elevation);
      if (p.contains("inPlane")) read_pair(p["inPlane"], c.pose.min_in_plane, c.pose.max_in_plane);
      c.pose.center_box = p.value("centerBox", c.pose.center_box);
    }
    if (j.contains("lights")) {
      const auto& l = j["lights"];
      if (l.contains("count")) read_pair(l["count"], c.lights.min_count, c.lights.max_count);
      if (l.contains("radius")) read_pair(l["radius"], c.lights.min_radius, c.lights.max_radius);
      if (l.contains("irradiance")) read_pair(l["irradiance"], c.lights.min_irradiance, c.lights.max_irradiance);
      c.lit_ambient = l.value("ambient", c.lit_ambient);
    }
    if (j.contains("uniformColor")) c.uniform.rgb = rgb_from_json(j["uniformColor"]);
    if (j.contains("checkerboard")) {
      const auto& cb = j["checkerboard"];
      c.checker.cells_per_uv = cb.value("cellsPerUV", c.checker.cells_per_uv);
      if (cb.contains("colorA")) c.checker.color_a = rgb_from_json(cb["colorA"]);
      if (cb.contains("colorB")) c.checker.color_b = rgb_from_json(cb["colorB"]);
    }
    if (j.contains("augment")) {
      const auto& a = j["augment"];
      if (a.contains("order")) {
        const auto o = parse_augment_order(a["order"].get<std::string>());
        if (!o) fail(ErrorCode::ParseError, "augment.order must be none, before or after");
        c.augment.order = *o;
      }
      if (a.contains("scale")) c.augment.scale = range_from_json(a["scale"]);
      if (a.contains("exposure")) c.augment.exposure = range_from_json(a["exposure"]);
      if (a.contains("saturation")) c.augment.saturation = range_from_json(a["saturation"]);
    }
    c.root_seed = j.value("rootSeed", c.root_seed);
    c.max_attempts = j.value("maxAttempts", c.max_attempts);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  return c;
}

inline void check_config(const EmitConfig& c) {
  if (c.width < 16 || c.height < 16) fail(ErrorCode::InvalidArgument, "image size must be at least 16x16");
  if (c.intrinsics && (!is_valid(*c.intrinsics) || c.intrinsics->width != c.width || c.intrinsics->height != c.height))
    fail(ErrorCode::InvalidArgument, "intrinsics must be valid and match the image size");
  if (c.max_attempts < 1) fail(ErrorCode::InvalidArgument, "maxAttempts must be >= 1");
  if (c.checker.cells_per_uv < 1) fail(ErrorCode::InvalidArgument, "checkerboard cellsPerUV must be >= 1");
  check_range(c.augment.scale, "scale");
  check_range(c.augment.exposure, "exposure");
  check_range(c.augment.saturation, "saturation");
}

// ---------------------------------------------------------------------------
// Manifest

enum class DatasetType { Paired, Unpaired, Composited };

inline std::string_view dataset_type_name(DatasetType t) {
  switch (t) {
    case DatasetType::Paired: return "Paired";
    case DatasetType::Unpaired: return "Unpaired";
    case DatasetType::Composited: return "Composited";
  }
  return "?";
}

struct ManifestRecord {
  std::string id;
  std::string object_id;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> files;  // role -> path relative to the manifest
  std::optional<std::string> annotation;
  std::optional<double> alignment_iou;
};

struct ObjectEntry {
  ControlPoints3D control_points;
  std::string mesh;
  LengthUnit units = LengthUnit::Meters;
};

struct Manifest {
  DatasetType type = DatasetType::Paired;
  std::optional<PairMethod> method;
  std::string surface;  // Composited: "realtex" or "randtex"
  std::size_t sample_count = 0;
  int width = 0;
  int height = 0;
  std::uint64_t root_seed = 0;
  std::string generator_version{kGeneratorVersion};
  json config = json::object();
  std::map<std::string, ObjectEntry> objects;
  std::vector<ManifestRecord> records;
};

inline json laplace_encoding_json() {
  return {{"grayscale", "Rec.601 (299 R + 587 G + 114 B) / 1000, rounded half up"},
          {"kernel", kLaplaceKernel},
          {"border", "replicate"},
          {"encoding", "clamp(128 + raw / 2, 0, 255)"},
          {"rounding", "half away from zero"},
          {"neutral", 128},
          {"channels", 3},
          {"computedAfterCompositing", true}};
}

inline json manifest_to_json(const Manifest& m) {
  json j;
  j["format"] = kManifestFormat;
  j["generatorVersion"] = m.generator_version;
  json kind = {{"type", dataset_type_name(m.type)}};
  if (m.method) kind["method"] = method_name(*m.method);
  if (!m.surface.empty()) kind["surface"] = m.surface;
  j["datasetKind"] = kind;
  j["sampleCount"] = m.sample_count;
  j["imageSize"] = {m.width, m.height};
  j["rootSeed"] = m.root_seed;
  j["config"] = m.config;
  if (m.type == DatasetType::Paired) j["laplaceEncoding"] = laplace_encoding_json();
  if (m.type == DatasetType::Unpaired)
    j["domains"] = {{"trainA", "random-textured renders over SyntheticGame backgrounds (annotated in annA/)"},
                    {"trainB", "RealPhotos pool crops, no render"}};
  if (m.config.contains("augment")) j["augmentation"] = m.config["augment"];
  json objects = json::object();
  for (const auto& [id, o] : m.objects)
    objects[id] = {{"controlPoints3D", points3d_to_json(o.control_points)}, {"mesh", o.mesh}, {"units", unit_name(o.units)}};
  j["objects"] = objects;
  json records = json::array();
  for (const auto& r : m.records) {
    json rj = {{"id", r.id}, {"objectId", r.object_id}, {"seed", r.seed}, {"files", r.files}};
    if (r.annotation) rj["annotation"] = *r.annotation;
    if (r.alignment_iou) rj["alignmentIoU"] = *r.alignment_iou;
    records.push_back(rj);
  }
  j["records"] = records;
  return j;
}

inline Manifest manifest_from_json(const json& j) {
  try {
    Manifest m;
    if (j.at("format").get<std::string>() != kManifestFormat) fail(ErrorCode::ManifestParseError, "unknown format");
    m.generator_version = j.at("generatorVersion").get<std::string>();
    const auto& kind = j.at("datasetKind");
    const auto type = kind.at("type").get<std::string>();
    if (type == "Paired") m.type = DatasetType::Paired;
    else if (type == "Unpaired") m.type = DatasetType::Unpaired;
    else if (type == "Composited") m.type = DatasetType::Composited;
    else fail(ErrorCode::ManifestParseError, "unknown dataset type " + type);
    if (kind.contains("method")) {
      m.method = parse_method(kind["method"].get<std::string>());
      if (!m.method) fail(ErrorCode::ManifestParseError, "unknown pair method");
    }
    m.surface = kind.value("surface", std::string{});
    m.sample_count = j.at("sampleCount").get<std::size_t>();
    m.width = j.at("imageSize").at(0).get<int>();
    m.height = j.at("imageSize").at(1).get<int>();
    m.root_seed = j.at("rootSeed").get<std::uint64_t>();
    m.config = j.value("config", json::object());
    for (const auto& [id, o] : j.at("objects").items()) {
      ObjectEntry e;
      e.control_points = points3d_from_json(o.at("controlPoints3D"));
      e.mesh = o.value("mesh", std::string{});
      e.units = parse_unit(o.value("units", std::string{"m"})).value_or(LengthUnit::Meters);
      m.objects.emplace(id, e);
    }
    for (const auto& rj : j.at("records")) {
      ManifestRecord r;
      r.id = rj.at("id").get<std::string>();
      r.object_id = rj.value("objectId", std::string{});
      r.seed = rj.value("seed", std::uint64_t{0});
      r.files = rj.at("files").get<std::map<std::string, std::string>>();
      if (rj.contains("annotation")) r.annotation = rj["annotation"].get<std::string>();
      if (rj.contains("alignmentIoU")) r.alignment_iou = rj["alignmentIoU"].get<double>();
      m.records.push_back(std::move(r));
    }
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::ManifestParseError, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ManifestParseError) throw;
    fail(ErrorCode::ManifestParseError, e.what());
  }
}

inline Manifest load_manifest(const fs::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::ManifestParseError, e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ManifestParseError, e.what());
  }
  return manifest_from_json(j);
}

inline std::string sample_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

// ---------------------------------------------------------------------------
// Emission plumbing

namespace detail {

/// Writes into "<root>.partial" and moves it over `root` only once
/// everything succeeded, so a failed run leaves no partial dataset behind.
template <typename Body>
void emit_atomically(const fs::path& root, Body&& body) {
  const fs::path staging = fs::path(root.string() + ".partial");
  std::error_code ec;
  fs::remove_all(staging, ec);
  fs::create_directories(staging);
  try {
    body(staging);
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
  fs::remove_all(root, ec);
  if (root.has_parent_path()) fs::create_directories(root.parent_path());
  fs::rename(staging, root, ec);
  if (ec) fail(ErrorCode::IoError, "cannot move dataset into " + root.string() + ": " + ec.message());
}

inline void write_manifest(const fs::path& dir, const Manifest& m) {
  write_text_file(dir / "manifest.json", manifest_to_json(m).dump(2) + "\n");
}

inline void write_annotation(const fs::path& path, const Annotation& a) {
  write_text_file(path, annotation_to_json(a).dump() + "\n");
}

inline std::uint64_t attempt_seed(std::uint64_t frame_seed, int attempt) {
  return attempt == 0 ? frame_seed : splitmix64(frame_seed ^ (0xA24BAED4963EE407ull * static_cast<std::uint64_t>(attempt)));
}

inline const NamedMesh& pick_mesh(std::span<const NamedMesh> meshes, std::uint64_t seed) {
  Rng rng(seed, Stream::Mesh);
  return meshes[rng.below(meshes.size())];
}

inline Manifest base_manifest(DatasetType type, std::span<const NamedMesh> meshes, const EmitConfig& cfg,
                              std::size_t n, const json& extra_config) {
  Manifest m;
  m.type = type;
  m.sample_count = n;
  m.width = cfg.width;
  m.height = cfg.height;
  m.root_seed = cfg.root_seed;
  m.config = emit_config_to_json(cfg);
  for (const auto& [k, v] : extra_config.items()) m.config[k] = v;
  for (const auto& nm : meshes) {
    if (m.objects.count(nm.id)) fail(ErrorCode::DuplicateId, "two meshes share the id " + nm.id);
    m.objects[nm.id] = {nm.control_points, nm.source, nm.units};
  }
  m.records.resize(n);
  return m;
}

inline void check_meshes(std::span<const NamedMesh> meshes) {
  if (meshes.empty()) fail(ErrorCode::InvalidArgument, "at least one mesh is required");
  for (const auto& m : meshes)
    if (m.mesh.empty()) fail(ErrorCode::EmptyMesh, "mesh " + m.id + " is empty");
}

}  // namespace detail

struct EmitPools {
  std::optional<BackgroundPool> real;       // paired/composited backgrounds; unpaired domain B
  std::optional<BackgroundPool> synthetic;  // unpaired domain A backgrounds
  std::shared_ptr<const TextureSource> textures;
};

/// Renders a pose that keeps the object visible, retrying with derived seeds
/// when a draw leaves nothing on screen or fails `accept`.
template <typename Attempt>
auto with_retries(const EmitConfig& cfg, std::uint64_t frame_seed, Attempt&& attempt) {
  std::optional<Error> last;
  for (int a = 0; a < cfg.max_attempts; ++a) {
    try {
      if (auto out = attempt(detail::attempt_seed(frame_seed, a))) return std::move(*out);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NothingVisible && e.code() != ErrorCode::NonPositiveDepth) throw;
      last = e;
    }
  }
  fail(ErrorCode::NothingVisible, "no acceptable sample after " + std::to_string(cfg.max_attempts) +
                                      " attempts for seed " + std::to_string(frame_seed) +
                                      (last ? std::string(" (") + last->what() + ")" : std::string{}));
}

/// Paired dataset: <root>/{source,target,ann}/NNNNNN.{png,json} plus
/// manifest.json. Sample i uses seed rootSeed + i.
inline Manifest emit_paired(std::span<const NamedMesh> meshes, PairMethod method, std::size_t n,
                            const EmitPools& pools, const EmitConfig& cfg, const fs::path& root,
                            const RunOptions& run = {}, const json& extra_config = json::object()) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "count must be >= 1");
  check_config(cfg);
  detail::check_meshes(meshes);
  if (!pools.real || pools.real->empty()) fail(ErrorCode::EmptyPool, "paired emission needs a background pool");
  if (method == PairMethod::RandomTex && (!pools.textures || pools.textures->images.empty()))
    fail(ErrorCode::MissingTexture, "Method2 needs a random texture source");
  if (method == PairMethod::RealTex)
    for (const auto& m : meshes)
      if (!m.mesh.texture) fail(ErrorCode::MissingTexture, "Method1 needs textured meshes; " + m.id + " has none");

  Manifest manifest = detail::base_manifest(DatasetType::Paired, meshes, cfg, n, extra_config);
  manifest.method = method;
  const CameraIntrinsics k = cfg.camera();
  PairConfig pc;
  pc.uniform = cfg.uniform;
  pc.checker = cfg.checker;
  pc.random_textures = pools.textures;
  pc.lights = cfg.lights;
  pc.lit_ambient = cfg.lit_ambient;
  pc.augment = cfg.augment.params_if_baked();

  detail::emit_atomically(root, [&](const fs::path& dir) {
    for (const char* sub : {"source", "target", "ann"}) fs::create_directories(dir / sub);
    parallel_for(n, run.jobs, [&](std::size_t i) {
      const std::uint64_t seed = cfg.root_seed + i;
      const std::string name = sample_name(i);
      const NamedMesh& nm = detail::pick_mesh(meshes, seed);
      const ImageRGB bg = pick_background(*pools.real, k.width, k.height, seed);
      PairSample sample = with_retries(cfg, seed, [&](std::uint64_t s) -> std::optional<PairSample> {
        PairConfig c = pc;
        c.seed = s;
        const Pose pose = sample_pose(s, cfg.pose, k, nm.control_points.centroid);
        PairSample ps = make_pair(nm.mesh, pose, k, method, bg, c, name, nm.id);
        if (ps.alignment_iou < kAlignmentGateIoU) return std::nullopt;
        return ps;
      });
      save_image(gray_to_rgb(sample.source.encoded), dir / "source" / (name + ".png"));
      save_image(sample.target, dir / "target" / (name + ".png"));
      detail::write_annotation(dir / "ann" / (name + ".json"), sample.annotation);
      auto& rec = manifest.records[i];
      rec.id = name;
      rec.object_id = nm.id;
      rec.seed = sample.annotation.source_seed;
      rec.files = {{"source", "source/" + name + ".png"}, {"target", "target/" + name + ".png"}};
      rec.annotation = "ann/" + name + ".json";
      rec.alignment_iou = sample.alignment_iou;
    }, run.progress);
    detail::write_manifest(dir, manifest);
  });
  return manifest;
}

/// Unpaired dataset: trainA/ holds random-textured renders over SyntheticGame
/// backgrounds (annotated in annA/), trainB/ holds RealPhotos crops.
inline Manifest emit_unpaired(std::span<const NamedMesh> meshes, std::size_t n_per_domain, const EmitPools& pools,
                              const EmitConfig& cfg, const fs::path& root, const RunOptions& run = {},
                              const json& extra_config = json::object()) {
  check_config(cfg);
  detail::check_meshes(meshes);
  if (!pools.real || pools.real->empty()) fail(ErrorCode::EmptyPool, "unpaired emission needs a real photo pool");
  if (!pools.synthetic || pools.synthetic->empty())
    fail(ErrorCode::EmptyPool, "unpaired emission needs a synthetic background pool");
  if (!pools.textures || pools.textures->images.empty())
    fail(ErrorCode::MissingTexture, "unpaired emission needs a random texture source");

  Manifest manifest = detail::base_manifest(DatasetType::Unpaired, meshes, cfg, n_per_domain, extra_config);
  const CameraIntrinsics k = cfg.camera();
  const auto aug_params = cfg.augment.params_if_baked();

  detail::emit_atomically(root, [&](const fs::path& dir) {
    for (const char* sub : {"trainA", "trainB", "annA"}) fs::create_directories(dir / sub);
    parallel_for(n_per_domain, run.jobs, [&](std::size_t i) {
      const std::uint64_t seed = cfg.root_seed + i;
      const std::string name = sample_name(i);
      const NamedMesh& nm = detail::pick_mesh(meshes, seed);
      const ImageRGB bg = pick_background(*pools.synthetic, k.width, k.height, seed);
      using Result = std::pair<ImageRGB, Annotation>;
      Result a = with_retries(cfg, seed, [&](std::uint64_t s) -> std::optional<Result> {
        const Pose pose = sample_pose(s, cfg.pose, k, nm.control_points.centroid);
        RenderConfig rc;
        rc.width = k.width;
        rc.height = k.height;
        rc.seed = s;
        rc.mode = RandomTexture{pools.textures};
        const RenderOutput r = rasterize(nm.mesh, pose, k, rc);
        Result out{composite(r.color, bg), make_annotation(name, nm.id, pose, k, nm.control_points, s)};
        if (aug_params) {
          AugmentParams p = *aug_params;
          p.seed = s;
          out = augment(out.first, out.second, p);
        }
        return out;
      });
      save_image(a.first, dir / "trainA" / (name + ".png"));
      detail::write_annotation(dir / "annA" / (name + ".json"), a.second);
      ImageRGB real = pick_background(*pools.real, k.width, k.height, seed, Stream::SourceBackground);
      if (aug_params) {
        AugmentParams p = *aug_params;
        p.seed = seed;
        real = apply_augment(real, draw_augment(p));
      }
      save_image(real, dir / "trainB" / (name + ".png"));
      auto& rec = manifest.records[i];
      rec.id = name;
      rec.object_id = nm.id;
      rec.seed = a.second.source_seed;
      rec.files = {{"trainA", "trainA/" + name + ".png"}, {"trainB", "trainB/" + name + ".png"}};
      rec.annotation = "annA/" + name + ".json";
    }, run.progress);
    detail::write_manifest(dir, manifest);
  });
  return manifest;
}

/// Baseline composited dataset (real or random object texture over real
/// backgrounds): <root>/{images,ann}/NNNNNN.{png,json}.
inline Manifest emit_composited(std::span<const NamedMesh> meshes, bool real_texture, std::size_t n,
                                const EmitPools& pools, const EmitConfig& cfg, const fs::path& root,
                                const RunOptions& run = {}, const json& extra_config = json::object()) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "count must be >= 1");
  check_config(cfg);
  detail::check_meshes(meshes);
  if (!pools.real || pools.real->empty()) fail(ErrorCode::EmptyPool, "composited emission needs a background pool");
  if (real_texture) {
    for (const auto& m : meshes)
      if (!m.mesh.texture) fail(ErrorCode::MissingTexture, "mesh " + m.id + " has no texture");
  } else if (!pools.textures || pools.textures->images.empty()) {
    fail(ErrorCode::MissingTexture, "random texturing needs a texture source");
  }
  Manifest manifest = detail::base_manifest(DatasetType::Composited, meshes, cfg, n, extra_config);
  manifest.surface = real_texture ? "realtex" : "randtex";
  const CameraIntrinsics k = cfg.camera();
  const auto aug_params = cfg.augment.params_if_baked();

  detail::emit_atomically(root, [&](const fs::path& dir) {
    for (const char* sub : {"images", "ann"}) fs::create_directories(dir / sub);
    parallel_for(n, run.jobs, [&](std::size_t i) {
      const std::uint64_t seed = cfg.root_seed + i;
      const std::string name = sample_name(i);
      const NamedMesh& nm = detail::pick_mesh(meshes, seed);
      const ImageRGB bg = pick_background(*pools.real, k.width, k.height, seed);
      using Result = std::pair<ImageRGB, Annotation>;
      Result out = with_retries(cfg, seed, [&](std::uint64_t s) -> std::optional<Result> {
        const Pose pose = sample_pose(s, cfg.pose, k, nm.control_points.centroid);
        RenderConfig rc;
        rc.width = k.width;
        rc.height = k.height;
        rc.seed = s;
        rc.mode = real_texture ? SurfaceMode(RealTexture{}) : SurfaceMode(RandomTexture{pools.textures});
        const RenderOutput r = rasterize(nm.mesh, pose, k, rc);
        Result res{composite(r.color, bg), make_annotation(name, nm.id, pose, k, nm.control_points, s)};
        if (aug_params) {
          AugmentParams p = *aug_params;
          p.seed = s;
          res = augment(res.first, res.second, p);
        }
        return res;
      });
      save_image(out.first, dir / "images" / (name + ".png"));
      detail::write_annotation(dir / "ann" / (name + ".json"), out.second);
      auto& rec = manifest.records[i];
      rec.id = name;
      rec.object_id = nm.id;
      rec.seed = out.second.source_seed;
      rec.files = {{"image", "images/" + name + ".png"}};
      rec.annotation = "ann/" + name + ".json";
    }, run.progress);
    detail::write_manifest(dir, manifest);
  });
  return manifest;
}

// ---------------------------------------------------------------------------
// Background crop harvesting

struct CropSpec {
  fs::path source_dir;
  fs::path out_dir;
  std::size_t count = 500;
  int crop_size = 256;
  std::uint64_t seed = 0;
};

/// Takes `count` random square crops of randomly chosen frames and writes
/// them, resized to crop_size, as out_dir/NNNNNN.png. The crop side is drawn
/// uniformly between min(crop_size, short side) and the frame's short side.
inline BackgroundPool harvest_crops(const CropSpec& spec, const RunOptions& run = {}) {
  if (spec.crop_size < 64) fail(ErrorCode::InvalidArgument, "cropSize must be >= 64");
  const auto frames = list_images(spec.source_dir);
  if (frames.empty()) fail(ErrorCode::EmptySource, "no images in " + spec.source_dir.string());

  struct Draw {
    std::size_t frame;
    double side, x, y;
  };
  std::vector<Draw> draws(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    Rng rng(spec.seed + i, Stream::Crop);
    draws[i].frame = rng.below(frames.size());
    draws[i].side = rng.uniform();
    draws[i].x = rng.uniform();
    draws[i].y = rng.uniform();
  }
  // Visit each frame once; crops of one frame are cut while it is decoded.
  std::vector<std::vector<std::size_t>> by_frame(frames.size());
  for (std::size_t i = 0; i < spec.count; ++i) by_frame[draws[i].frame].push_back(i);
  std::vector<std::size_t> used;
  for (std::size_t f = 0; f < frames.size(); ++f)
    if (!by_frame[f].empty()) used.push_back(f);

  BackgroundPool pool{spec.out_dir, {}, PoolKind::SyntheticGame};
  detail::emit_atomically(spec.out_dir, [&](const fs::path& dir) {
    parallel_for(used.size(), run.jobs, [&](std::size_t u) {
      const std::size_t f = used[u];
      const ImageRGB frame = load_image(frames[f]);
      const int short_side = std::min(frame.width, frame.height);
      const int lo = std::min(spec.crop_size, short_side);
      for (std::size_t i : by_frame[f]) {
        const Draw& d = draws[i];
        const int side = std::min(short_side, lo + static_cast<int>(d.side * (short_side - lo + 1)));
        const int x0 = std::min(frame.width - side, static_cast<int>(d.x * (frame.width - side + 1)));
        const int y0 = std::min(frame.height - side, static_cast<int>(d.y * (frame.height - side + 1)));
        save_image(resize(crop(frame, x0, y0, side, side), spec.crop_size, spec.crop_size),
                   dir / (sample_name(i) + ".png"));
      }
    }, run.progress);
    json sources = json::array();
    for (const auto& p : frames) sources.push_back(fs::relative(p, spec.source_dir).generic_string());
    const json echo = {{"format", "posegap.crops/1"}, {"generatorVersion", kGeneratorVersion},
                       {"count", spec.count},       {"cropSize", spec.crop_size},
                       {"seed", spec.seed},         {"sourceFrames", sources}};
    write_text_file(dir / "crops.json", echo.dump(2) + "\n");
  });
  for (std::size_t i = 0; i < spec.count; ++i) pool.image_paths.push_back(spec.out_dir / (sample_name(i) + ".png"));
  return pool;
}

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
  MissingFile,
  UndecodableImage,
  ImageSizeMismatch,
  InvalidAnnotation,
  UnknownObject,
  ReprojectionMismatch,
  CountMismatch,
};

inline std::string_view violation_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::MissingFile: return "MissingFile";
    case ViolationKind::UndecodableImage: return "UndecodableImage";
    case ViolationKind::ImageSizeMismatch: return "ImageSizeMismatch";
    case ViolationKind::InvalidAnnotation: return "InvalidAnnotation";
    case ViolationKind::UnknownObject: return "UnknownObject";
    case ViolationKind::ReprojectionMismatch: return "ReprojectionMismatch";
    case ViolationKind::CountMismatch: return "CountMismatch";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  std::string record;
  std::string message;
};

struct ValidationReport {
  std::size_t records_checked = 0;
  double max_residual_px = 0.0;
  std::vector<Violation> violations;

  bool clean() const { return violations.empty(); }
  std::size_t count(ViolationKind k) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [k](const Violation& v) { return v.kind == k; }));
  }
};

inline ValidationReport validate(const fs::path& manifest_path) {
  const Manifest m = load_manifest(manifest_path);
  const fs::path root = manifest_path.parent_path();
  ValidationReport report;
  auto add = [&](ViolationKind k, const std::string& rec, std::string msg) {
    report.violations.push_back({k, rec, std::move(msg)});
  };
  if (m.sample_count != m.records.size())
    add(ViolationKind::CountMismatch, "",
        "sampleCount " + std::to_string(m.sample_count) + " but " + std::to_string(m.records.size()) + " records");
  for (const auto& rec : m.records) {
    ++report.records_checked;
    for (const auto& [role, rel] : rec.files) {
      const fs::path p = root / rel;
      if (!fs::is_regular_file(p)) {
        add(ViolationKind::MissingFile, rec.id, rel);
        continue;
      }
      try {
        const ImageRGB img = load_image(p);
        if (!img.same_size(m.width, m.height))
          add(ViolationKind::ImageSizeMismatch, rec.id,
              rel + " is " + std::to_string(img.width) + "x" + std::to_string(img.height));
      } catch (const Error& e) {
        add(ViolationKind::UndecodableImage, rec.id, rel + ": " + e.what());
      }
    }
    if (!rec.annotation) continue;
    const fs::path ap = root / *rec.annotation;
    if (!fs::is_regular_file(ap)) {
      add(ViolationKind::MissingFile, rec.id, *rec.annotation);
      continue;
    }
    Annotation ann;
    try {
      ann = annotation_from_json(json::parse(read_text_file(ap)));
    } catch (const std::exception& e) {
      add(ViolationKind::InvalidAnnotation, rec.id, *rec.annotation + ": " + e.what());
      continue;
    }
    const auto obj = m.objects.find(ann.object_id);
    if (obj == m.objects.end()) {
      add(ViolationKind::UnknownObject, rec.id, "object '" + ann.object_id + "' not in manifest");
      continue;
    }
    if (ann.width != m.width || ann.height != m.height)
      add(ViolationKind::ImageSizeMismatch, rec.id, "annotation imageSize differs from manifest");
    try {
      check_rotation(ann.pose.rotation);
      const double r = max_residual_px(expected_control_points(obj->second.control_points, ann), ann.control_points);
      report.max_residual_px = std::max(report.max_residual_px, r);
      if (!(r <= kReprojectionTolerancePx)) add(ViolationKind::ReprojectionMismatch, rec.id, "residual " + std::to_string(r) + " px");
    } catch (const Error& e) {
      add(ViolationKind::ReprojectionMismatch, rec.id, e.what());
    }
  }
  return report;
}

}  // namespace posegap
