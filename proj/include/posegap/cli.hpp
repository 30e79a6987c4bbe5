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

#include <CLI11.hpp>

#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "posegap/dataset.hpp"
#include "posegap/evaluator.hpp"

namespace posegap::cli {

enum ExitCode : int { kOk = 0, kValidationFailed = 1, kUsage = 2, kIo = 3 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::DecodeError:
    case ErrorCode::ParseError:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::ManifestParseError:
    case ErrorCode::EmptyMesh:
    case ErrorCode::EmptySource:
      return kIo;
    default:
      return kUsage;
  }
}

/// Thrown for argument/config problems found before any work starts.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything a run needs besides output location and worker count. It is
/// echoed into every manifest, which is enough to reproduce the run.
struct RunConfig {
  std::vector<std::string> meshes;
  std::optional<std::string> units;
  std::string backgrounds;
  std::string synthetic_backgrounds;
  std::string textures;
  int method = 3;
  std::optional<std::size_t> count;
  EmitConfig emit;
  bool size_set = false;

  json echo() const {
    json j = {{"meshes", meshes}, {"backgrounds", backgrounds}, {"textures", textures}, {"method", method}};
    if (units) j["units"] = *units;
    if (!synthetic_backgrounds.empty()) j["syntheticBackgrounds"] = synthetic_backgrounds;
    if (count) j["count"] = *count;
    return j;
  }
};

inline RunConfig run_config_from_json(const json& j) {
  RunConfig rc;
  try {
    if (j.contains("meshes")) rc.meshes = j["meshes"].get<std::vector<std::string>>();
    if (j.contains("units")) rc.units = j["units"].get<std::string>();
    rc.backgrounds = j.value("backgrounds", std::string{});
    rc.synthetic_backgrounds = j.value("syntheticBackgrounds", std::string{});
    rc.textures = j.value("textures", std::string{});
    rc.method = j.value("method", rc.method);
    if (j.contains("count")) rc.count = j["count"].get<std::size_t>();
    rc.emit = emit_config_from_json(j);
    if (j.contains("seed")) rc.emit.root_seed = j["seed"].get<std::uint64_t>();
    if (j.contains("size")) {
      rc.emit.width = rc.emit.height = j["size"].get<int>();
      rc.size_set = true;
    }
    rc.size_set = rc.size_set || j.contains("imageSize");
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return {};
  if (!fs::is_regular_file(path)) throw UsageError("config file not found: " + path);
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

inline LengthUnit require_units(const RunConfig& rc) {
  if (!rc.units) throw UsageError("--units is required (m, cm or mm); mesh units are never guessed");
  const auto u = parse_unit(*rc.units);
  if (!u) throw UsageError("--units must be m, cm or mm");
  return *u;
}

inline std::vector<NamedMesh> load_meshes(const RunConfig& rc) {
  if (rc.meshes.empty()) throw UsageError("at least one --mesh is required");
  const LengthUnit units = require_units(rc);
  std::vector<NamedMesh> out;
  for (const auto& p : rc.meshes) {
    if (!fs::is_regular_file(p)) throw UsageError("mesh not found: " + p);
    out.push_back(load_named_mesh(p, units));
  }
  return out;
}

inline void require_dir(const std::string& dir, const char* flag) {
  if (dir.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_directory(dir)) throw UsageError(std::string(flag) + " is not a directory: " + dir);
}

/// Up to `max_images` textures spread evenly over the sorted directory
/// listing, each downscaled to at most `max_side` pixels.
inline std::shared_ptr<TextureSource> load_texture_source(const fs::path& dir, std::size_t max_images = 64,
                                                          int max_side = 256) {
  auto paths = list_images(dir);
  if (paths.empty()) fail(ErrorCode::EmptyPool, "no texture images in " + dir.string());
  auto src = std::make_shared<TextureSource>();
  const std::size_t n = std::min(max_images, paths.size());
  for (std::size_t i = 0; i < n; ++i) {
    ImageRGB img = load_image(paths[i * paths.size() / n]);
    const int side = std::max(img.width, img.height);
    if (side > max_side) {
      const double s = static_cast<double>(max_side) / side;
      img = resize(img, std::max(1, static_cast<int>(img.width * s)), std::max(1, static_cast<int>(img.height * s)));
    }
    src->images.push_back(std::move(img));
  }
  return src;
}

inline std::function<void(std::size_t, std::size_t)> progress_printer(std::ostream& err, std::string label) {
  return [&err, label](std::size_t done, std::size_t total) {
    const std::size_t step = std::max<std::size_t>(1, total / 10);
    if (done % step == 0 || done == total) err << label << ": " << done << "/" << total << "\n";
  };
}

/// Options shared by the emitting subcommands.
struct CommonFlags {
  std::string config;
  std::vector<std::string> meshes;
  std::string units;
  std::string textures;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  int size = 0;
  int jobs = 1;
  std::string augment_order;
  std::string out;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* count_opt = nullptr;
  CLI::Option* size_opt = nullptr;

  void add_to(CLI::App* app, bool with_mesh = true) {
    app->add_option("--config", config, "JSON run config; flags given on the command line win");
    if (with_mesh) {
      app->add_option("--mesh", meshes, "Mesh file (OBJ or ascii PLY); repeat for several objects");
      app->add_option("--units", units, "Length unit of the mesh files: m, cm or mm");
    }
    app->add_option("--textures", textures, "Directory of images used as random object textures");
    seed_opt = app->add_option("--seed", seed, "Root seed; sample i uses seed + i");
    count_opt = app->add_option("--count", count, "Number of samples to emit");
    size_opt = app->add_option("--size", size, "Square output size in pixels");
    app->add_option("--jobs", jobs, "Worker threads; output does not depend on it")->check(CLI::PositiveNumber);
    app->add_option("--augment-order", augment_order,
                    "Augmentation relative to adaptation: after (recorded only), before (baked in) or none");
    app->add_option("--out", out, "Output directory")->required();
  }

  RunConfig merge(std::size_t default_count, int default_size) const {
    RunConfig rc = load_run_config(config);
    if (!meshes.empty()) rc.meshes = meshes;
    if (!units.empty()) rc.units = units;
    if (!textures.empty()) rc.textures = textures;
    if (seed_opt && seed_opt->count()) rc.emit.root_seed = seed;
    if (count_opt && count_opt->count()) rc.count = count;
    if (!rc.count) rc.count = default_count;
    if (size_opt && size_opt->count()) {
      rc.emit.width = rc.emit.height = size;
      rc.size_set = true;
    }
    if (!rc.size_set) rc.emit.width = rc.emit.height = default_size;
    if (rc.emit.intrinsics && (rc.emit.intrinsics->width != rc.emit.width || rc.emit.intrinsics->height != rc.emit.height))
      throw UsageError("config intrinsics do not match the output size");
    if (!augment_order.empty()) {
      const auto o = parse_augment_order(augment_order);
      if (!o) throw UsageError("--augment-order must be after, before or none");
      rc.emit.augment.order = *o;
    }
    return rc;
  }
};

inline constexpr int kDefaultPairedSize = 416;
inline constexpr int kDefaultUnpairedSize = 256;
inline constexpr std::size_t kDefaultCount = 100;
inline constexpr std::size_t kDefaultCropCount = 500;


/// Runs the command line and returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"posegap: synthetic pose-estimation data and pose-error scoring"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kGeneratorVersion));

  // render
  auto* render = app.add_subcommand("render", "Render one mesh view to a PNG plus annotation JSON");
  std::string r_mesh, r_units, r_mode = "uniform", r_pose, r_out, r_backgrounds, r_textures;
  std::uint64_t r_seed = 0;
  int r_size = kDefaultPairedSize;
  bool r_lit = false;
  render->add_option("--mesh", r_mesh, "Mesh file (OBJ or ascii PLY)");
  render->add_option("--units", r_units, "Length unit of the mesh file: m, cm or mm");
  render->add_option("--mode", r_mode, "Surface: realtex, randtex, uniform or checker");
  render->add_option("--seed", r_seed, "Seed for pose, texture, lights and background");
  render->add_option("--pose", r_pose, "JSON pose file {rotation|quaternion, translation}; sampled from --seed if absent");
  render->add_option("--size", r_size, "Square output size in pixels");
  render->add_flag("--lit", r_lit, "Shade with randomly placed point lights");
  render->add_option("--backgrounds", r_backgrounds, "Background image directory; transparent output if absent");
  render->add_option("--textures", r_textures, "Texture directory for randtex (defaults to --backgrounds)");
  render->add_option("--out", r_out, "Output PNG path; the annotation goes next to it as .json");

  // pairs
  auto* pairs = app.add_subcommand("pairs", "Emit a paired Laplace-source / RGB-target dataset");
  CommonFlags p_flags;
  std::string p_method, p_backgrounds;
  p_flags.add_to(pairs);
  pairs->add_option("--method", p_method, "Pair method 1-4 (realtex, randtex, uniform->gray, uniform->checker)");
  pairs->add_option("--backgrounds", p_backgrounds, "Directory of real background photos");

  // unpaired
  auto* unpaired = app.add_subcommand("unpaired", "Emit trainA/trainB folders for unpaired translation");
  CommonFlags u_flags;
  std::string u_real, u_synthetic;
  u_flags.add_to(unpaired);
  unpaired->add_option("--real", u_real, "Directory of real photos (domain B)");
  unpaired->add_option("--synthetic", u_synthetic, "Directory of synthetic backgrounds behind domain A renders");

  // harvest
  auto* harvest = app.add_subcommand("harvest", "Cut random square crops from a directory of frames");
  std::string h_src, h_out;
  std::size_t h_count = kDefaultCropCount;
  int h_size = kDefaultUnpairedSize, h_jobs = 1;
  std::uint64_t h_seed = 0;
  harvest->add_option("--src", h_src, "Directory of extracted video frames or photos")->required();
  harvest->add_option("--out", h_out, "Output pool directory")->required();
  harvest->add_option("--count", h_count, "Number of crops");
  harvest->add_option("--size", h_size, "Crop output size in pixels (>= 64)");
  harvest->add_option("--seed", h_seed, "Seed; crop i uses seed + i");
  harvest->add_option("--jobs", h_jobs, "Worker threads; output does not depend on it")->check(CLI::PositiveNumber);

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Check an emitted dataset against its manifest");
  std::string v_manifest;
  validate_cmd->add_option("--manifest", v_manifest, "Path to manifest.json")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score predicted poses against a dataset's ground truth");
  std::string e_pred, e_gt, e_label = "predictions", e_csv, e_samples, e_out;
  evaluate->add_option("--pred", e_pred, "Predictions, one JSON record per line")->required();
  evaluate->add_option("--gt", e_gt, "Ground-truth manifest.json")->required();
  evaluate->add_option("--label", e_label, "Row label in the report table");
  evaluate->add_option("--csv", e_csv, "Also write the summary row as CSV to this path");
  evaluate->add_option("--samples-csv", e_samples, "Also write per-sample errors as CSV to this path");
  evaluate->add_option("--out", e_out, "Also write the text table to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help(e.get_name() == "--help" && app.get_subcommands().size() == 1 ? app.get_subcommands()[0]->get_name() : "");
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kGeneratorVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kUsage;
  }

  try {
    if (render->parsed()) {
      if (r_mesh.empty()) throw UsageError("--mesh is required");
      if (r_out.empty()) throw UsageError("--out is required");
      if (!fs::is_regular_file(r_mesh)) throw UsageError("mesh not found: " + r_mesh);
      RunConfig rc;
      if (!r_units.empty()) rc.units = r_units;
      const LengthUnit units = require_units(rc);
      if (r_size < 16) throw UsageError("--size must be >= 16");
      if (!r_backgrounds.empty()) require_dir(r_backgrounds, "--backgrounds");
      if (!r_pose.empty() && !fs::is_regular_file(r_pose)) throw UsageError("pose file not found: " + r_pose);
      const NamedMesh nm = load_named_mesh(r_mesh, units);
      const CameraIntrinsics k = CameraIntrinsics::for_frame(r_size, r_size);
      RenderConfig cfg;
      cfg.width = cfg.height = r_size;
      cfg.seed = r_seed;
      if (r_mode == "realtex") cfg.mode = RealTexture{};
      else if (r_mode == "randtex") {
        const std::string dir = r_textures.empty() ? r_backgrounds : r_textures;
        require_dir(dir, "--textures");
        cfg.mode = RandomTexture{load_texture_source(dir)};
      } else if (r_mode == "uniform") cfg.mode = UniformColor{};
      else if (r_mode == "checker") cfg.mode = Checkerboard{};
      else throw UsageError("--mode must be one of realtex, randtex, uniform, checker");
      Pose pose;
      if (!r_pose.empty()) {
        try {
          pose = pose_from_json(json::parse(read_text_file(r_pose)));
        } catch (const json::exception& e) {
          throw UsageError("pose file: " + std::string(e.what()));
        }
        if (!is_valid(pose)) throw UsageError("pose file holds an invalid rotation");
      } else {
        pose = sample_pose(r_seed, PoseSampling{}, k, nm.control_points.centroid);
      }
      if (r_lit) {
        cfg.lights = sample_lights(r_seed, LightSampling{}, pose.apply(nm.control_points.centroid));
        cfg.ambient = 0.25;
      }
      const RenderOutput ro = rasterize(nm.mesh, pose, k, cfg);
      const fs::path out_path(r_out);
      if (r_backgrounds.empty()) {
        save_image(ro.color, out_path);
      } else {
        const auto pool = BackgroundPool::from_directory(r_backgrounds, PoolKind::RealPhotos, false);
        save_image(composite(ro.color, pick_background(pool, r_size, r_size, r_seed)), out_path);
      }
      const Annotation ann = make_annotation(out_path.stem().string(), nm.id, pose, k, nm.control_points, r_seed);
      write_text_file(fs::path(out_path).replace_extension(".json"), annotation_to_json(ann).dump() + "\n");
      err << "render: wrote " << out_path.string() << " (" << ro.covered << " object pixels)\n";
      return kOk;
    }

    if (pairs->parsed()) {
      RunConfig rc = p_flags.merge(kDefaultCount, kDefaultPairedSize);
      if (!p_backgrounds.empty()) rc.backgrounds = p_backgrounds;
      if (!p_method.empty()) {
        const auto m = parse_method(p_method);
        if (!m) throw UsageError("--method must be 1, 2, 3 or 4");
        rc.method = static_cast<int>(*m);
      }
      if (rc.method < 1 || rc.method > 4) throw UsageError("method must be 1, 2, 3 or 4");
      const auto method = static_cast<PairMethod>(rc.method);
      require_dir(rc.backgrounds, "--backgrounds");
      if (method == PairMethod::RandomTex && rc.textures.empty()) rc.textures = rc.backgrounds;
      if (!rc.textures.empty()) require_dir(rc.textures, "--textures");
      const auto meshes = load_meshes(rc);
      EmitPools pools;
      pools.real = BackgroundPool::from_directory(rc.backgrounds, PoolKind::RealPhotos);
      if (!rc.textures.empty()) pools.textures = load_texture_source(rc.textures);
      RunOptions run{p_flags.jobs, progress_printer(err, "pairs")};
      const Manifest m = emit_paired(meshes, method, *rc.count, pools, rc.emit, p_flags.out, run, rc.echo());
      err << "pairs: " << m.records.size() << " pairs (" << method_name(method) << ") in " << p_flags.out << "\n";
      return kOk;
    }

    if (unpaired->parsed()) {
      RunConfig rc = u_flags.merge(kDefaultCount, kDefaultUnpairedSize);
      if (!u_real.empty()) rc.backgrounds = u_real;
      if (!u_synthetic.empty()) rc.synthetic_backgrounds = u_synthetic;
      require_dir(rc.backgrounds, "--real");
      require_dir(rc.synthetic_backgrounds, "--synthetic");
      if (rc.textures.empty()) rc.textures = rc.backgrounds;
      require_dir(rc.textures, "--textures");
      const auto meshes = load_meshes(rc);
      EmitPools pools;
      pools.real = BackgroundPool::from_directory(rc.backgrounds, PoolKind::RealPhotos);
      pools.synthetic = BackgroundPool::from_directory(rc.synthetic_backgrounds, PoolKind::SyntheticGame);
      pools.textures = load_texture_source(rc.textures);
      RunOptions run{u_flags.jobs, progress_printer(err, "unpaired")};
      const Manifest m = emit_unpaired(meshes, *rc.count, pools, rc.emit, u_flags.out, run, rc.echo());
      err << "unpaired: " << m.records.size() << " samples per domain in " << u_flags.out << "\n";
      return kOk;
    }

    if (harvest->parsed()) {
      require_dir(h_src, "--src");
      if (h_size < 64) throw UsageError("--size must be >= 64");
      const auto pool = harvest_crops({h_src, h_out, h_count, h_size, h_seed}, {h_jobs, progress_printer(err, "harvest")});
      err << "harvest: " << pool.image_paths.size() << " crops in " << h_out << "\n";
      return kOk;
    }

    if (validate_cmd->parsed()) {
      if (!fs::is_regular_file(v_manifest)) throw UsageError("manifest not found: " + v_manifest);
      const ValidationReport rep = validate(v_manifest);
      for (const auto& v : rep.violations)
        out << violation_name(v.kind) << "\t" << (v.record.empty() ? "-" : v.record) << "\t" << v.message << "\n";
      err << "validate: " << rep.records_checked << " records, " << rep.violations.size() << " violations, max residual "
          << rep.max_residual_px << " px\n";
      return rep.clean() ? kOk : kValidationFailed;
    }

    if (evaluate->parsed()) {
      if (!fs::is_regular_file(e_pred)) throw UsageError("predictions not found: " + e_pred);
      if (!fs::is_regular_file(e_gt)) throw UsageError("manifest not found: " + e_gt);
      const auto preds = load_predictions(e_pred);
      const auto gt = load_ground_truth(e_gt);
      const MetricsReport rep = aggregate(preds, gt.annotations, gt.objects);
      const std::vector<TableRow> rows{{e_label, rep}};
      const std::string table = render_table(rows);
      out << table;
      out << "detection rate: " << format_compact(100.0 * rep.detection_rate) << "% (" << rep.detected_count << "/"
          << rep.sample_count << ")\n";
      if (!e_out.empty()) write_text_file(e_out, table);
      if (!e_csv.empty()) write_text_file(e_csv, render_csv(rows));
      if (!e_samples.empty()) write_text_file(e_samples, render_sample_csv(rep));
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}

}  // namespace posegap::cli
