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

#include <png.h>

#include <cstdio>
// jpeglib.h expects size_t and FILE to be declared first.
#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <csetjmp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "posegap/error.hpp"
#include "posegap/geometry.hpp"
#include "posegap/image.hpp"

namespace posegap {

namespace fs = std::filesystem;

/// Triangle corner indices into the mesh's vertex, normal and uv arrays.
struct Face {
  std::array<int, 3> v{};
  std::array<int, 3> n{};
  std::array<int, 3> uv{};
};

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<Vec2> uvs;
  std::vector<Face> faces;
  std::optional<ImageRGB> texture;

  bool empty() const { return vertices.empty() || faces.empty(); }
};

inline ControlPoints3D control_points_3d(const Mesh& mesh) { return control_points_3d(mesh.vertices); }

/// Length unit of the coordinates stored in a mesh file. Meshes are always
/// converted to meters on load.
enum class LengthUnit { Meters, Centimeters, Millimeters };

inline double unit_scale(LengthUnit u) {
  switch (u) {
    case LengthUnit::Meters: return 1.0;
    case LengthUnit::Centimeters: return 0.01;
    case LengthUnit::Millimeters: return 0.001;
  }
  return 1.0;
}

inline std::optional<LengthUnit> parse_unit(std::string_view s) {
  if (s == "m") return LengthUnit::Meters;
  if (s == "cm") return LengthUnit::Centimeters;
  if (s == "mm") return LengthUnit::Millimeters;
  return std::nullopt;
}

inline std::string_view unit_name(LengthUnit u) {
  switch (u) {
    case LengthUnit::Meters: return "m";
    case LengthUnit::Centimeters: return "cm";
    case LengthUnit::Millimeters: return "mm";
  }
  return "m";
}

struct SplitFile {
  std::vector<std::int64_t> indices;
};

// ---------------------------------------------------------------------------
// Raw files

inline std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

inline void write_text_file(const fs::path& path, std::string_view text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ---------------------------------------------------------------------------
// Split files

inline SplitFile parse_split(std::string_view text) {
  SplitFile split;
  std::set<std::int64_t> seen;
  std::int64_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
    if (ec != std::errc() || ptr != line.data() + line.size() || value < 0)
      fail(ErrorCode::ParseError, "bad split entry '" + std::string(line) + "'", line_no);
    if (!seen.insert(value).second)
      fail(ErrorCode::DuplicateIndex, "index " + std::to_string(value) + " repeated", line_no);
    split.indices.push_back(value);
    if (end == text.size()) break;
  }
  return split;
}

inline SplitFile load_split(const fs::path& path) { return parse_split(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Rasters

namespace detail {

inline bool has_png_signature(std::span<const std::uint8_t> b) {
  return b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0;
}

inline bool has_jpeg_signature(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

template <int C>
Image<std::uint8_t, C> decode_png(std::span<const std::uint8_t> bytes, std::uint32_t format) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    fail(ErrorCode::DecodeError, std::string("png: ") + img.message);
  img.format = format;
  if (img.width < 1 || img.height < 1) {
    png_image_free(&img);
    fail(ErrorCode::DecodeError, "png: empty image");
  }
  Image<std::uint8_t, C> out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr))
    fail(ErrorCode::DecodeError, std::string("png: ") + img.message);
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Corrupt-data warnings (e.g. premature end of stream) are treated as fatal.
inline void jpeg_emit_message(j_common_ptr cinfo, int level) {
  if (level < 0) jpeg_error_exit(cinfo);
}

inline ImageRGB decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_emit_message;
  std::vector<std::uint8_t> pixels;
  int width = 0;
  int height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorCode::DecodeError, std::string("jpeg: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  pixels.resize(static_cast<std::size_t>(width) * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  ImageRGB out(width, height);
  out.data = std::move(pixels);
  return out;
}

template <int C>
std::vector<std::uint8_t> encode_png(const Image<std::uint8_t, C>& img) {
  static_assert(C == 1 || C == 3 || C == 4);
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(img.width);
  desc.height = static_cast<png_uint_32>(img.height);
  desc.format = C == 1 ? PNG_FORMAT_GRAY : (C == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA);
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(desc, size, 0, img.data.data(), 0, nullptr))
    fail(ErrorCode::IoError, std::string("png encode: ") + desc.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, img.data.data(), 0, nullptr))
    fail(ErrorCode::IoError, std::string("png encode: ") + desc.message);
  out.resize(size);
  return out;
}

}  // namespace detail

inline ImageRGB decode_image(std::span<const std::uint8_t> bytes) {
  if (detail::has_png_signature(bytes)) return detail::decode_png<3>(bytes, PNG_FORMAT_RGB);
  if (detail::has_jpeg_signature(bytes)) return detail::decode_jpeg(bytes);
  fail(ErrorCode::DecodeError, "not a PNG or JPEG stream");
}

/// Loads PNG or JPEG as 8-bit RGB. Gray inputs are replicated, alpha dropped.
inline ImageRGB load_image(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DecodeError) fail(ErrorCode::DecodeError, path.string() + ": " + e.what());
    throw;
  }
}

inline ImageRGBA load_image_rgba(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  if (!detail::has_png_signature(bytes)) fail(ErrorCode::DecodeError, path.string() + ": not a PNG");
  return detail::decode_png<4>(bytes, PNG_FORMAT_RGBA);
}

inline ImageGray load_image_gray(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  if (!detail::has_png_signature(bytes)) fail(ErrorCode::DecodeError, path.string() + ": not a PNG");
  return detail::decode_png<1>(bytes, PNG_FORMAT_GRAY);
}

template <int C>
std::vector<std::uint8_t> encode_png(const Image<std::uint8_t, C>& img) {
  return detail::encode_png(img);
}

/// Writes an 8-bit PNG. Encoding is deterministic: identical pixels give
/// identical file bytes.
template <int C>
void save_image(const Image<std::uint8_t, C>& img, const fs::path& path) {
  write_file_bytes(path, detail::encode_png(img));
}

inline bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

/// Image files under `dir`, found recursively and sorted by relative path.
inline std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::IoError, dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(), [&](const fs::path& a, const fs::path& b) {
    return fs::relative(a, dir).generic_string() < fs::relative(b, dir).generic_string();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Meshes

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline double parse_double(std::string_view tok, std::int64_t line) {
  // from_chars for double is available in libstdc++ 11.
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
    fail(ErrorCode::ParseError, "bad number '" + std::string(tok) + "'", line);
  return v;
}

inline long long parse_int(std::string_view tok, std::int64_t line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    fail(ErrorCode::ParseError, "bad integer '" + std::string(tok) + "'", line);
  return v;
}

inline double wrap_unit(double t) {
  if (t >= 0.0 && t <= 1.0) return t;
  return t - std::floor(t);
}

inline Vec3 flat_normal(const Mesh& m, const Face& f) {
  const Vec3 e1 = m.vertices[f.v[1]] - m.vertices[f.v[0]];
  const Vec3 e2 = m.vertices[f.v[2]] - m.vertices[f.v[0]];
  const Vec3 n = e1.cross(e2);
  const double len = n.norm();
  return len > 0 ? Vec3(n / len) : Vec3(0, 0, 1);
}

/// Fills in whatever the file did not provide: flat per-face normals for
/// faces without normal indices, planar uvs for faces without uv indices.
/// Faces with n[0] < 0 or uv[0] < 0 are the ones missing data.
inline void complete_mesh(Mesh& m) {
  for (auto& n : m.normals) {
    const double len = n.norm();
    if (len > 0) n /= len;
  }
  for (auto& f : m.faces) {
    bool bad = f.n[0] < 0;
    for (int c = 0; c < 3 && !bad; ++c) bad = m.normals[f.n[c]].norm() < 0.5;
    if (bad) {
      m.normals.push_back(flat_normal(m, f));
      const int idx = static_cast<int>(m.normals.size()) - 1;
      f.n = {idx, idx, idx};
    }
  }
  for (auto& uv : m.uvs) uv = Vec2(wrap_unit(uv.x()), wrap_unit(uv.y()));

  const bool need_planar = std::any_of(m.faces.begin(), m.faces.end(), [](const Face& f) { return f.uv[0] < 0; });
  if (!need_planar) return;
  // Planar fallback: project onto the plane spanned by the two largest box
  // extents, each normalized to [0, 1].
  const auto cp = control_points_3d(m.vertices);
  const Vec3 lo = cp.corners[0];
  const Vec3 ext = cp.corners[7] - cp.corners[0];
  std::array<int, 3> axes{0, 1, 2};
  std::sort(axes.begin(), axes.end(), [&](int a, int b) { return ext[a] > ext[b] || (ext[a] == ext[b] && a < b); });
  const int ua = std::min(axes[0], axes[1]);
  const int va = std::max(axes[0], axes[1]);
  const int base = static_cast<int>(m.uvs.size());
  for (const auto& v : m.vertices) {
    const double u = ext[ua] > 0 ? (v[ua] - lo[ua]) / ext[ua] : 0.0;
    const double w = ext[va] > 0 ? (v[va] - lo[va]) / ext[va] : 0.0;
    m.uvs.emplace_back(u, w);
  }
  for (auto& f : m.faces)
    if (f.uv[0] < 0) f.uv = {base + f.v[0], base + f.v[1], base + f.v[2]};
}

inline std::optional<ImageRGB> try_load_texture(const fs::path& path) {
  if (path.empty() || !fs::is_regular_file(path)) return std::nullopt;
  return load_image(path);
}

inline std::optional<fs::path> mtl_texture(const fs::path& mtl_path) {
  std::ifstream in(mtl_path);
  if (!in) return std::nullopt;
  std::string line;
  while (std::getline(in, line)) {
    const auto toks = split_ws(line);
    if (toks.size() >= 2 && toks[0] == "map_Kd") return mtl_path.parent_path() / std::string(toks.back());
  }
  return std::nullopt;
}

}  // namespace detail

/// Parses Wavefront OBJ text. `base_dir` resolves mtllib/texture references.
inline Mesh parse_obj(std::string_view text, double scale, const fs::path& base_dir = {}) {
  Mesh m;
  struct Corner {
    long long v, t, n;
  };
  std::vector<std::pair<std::array<Corner, 3>, std::int64_t>> tris;
  std::optional<fs::path> texture_path;
  std::int64_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto toks = detail::split_ws(line);
    if (toks.empty() || toks[0].front() == '#') continue;
    const auto& kw = toks[0];
    if (kw == "v") {
      if (toks.size() < 4) fail(ErrorCode::ParseError, "vertex needs 3 coordinates", line_no);
      m.vertices.emplace_back(detail::parse_double(toks[1], line_no) * scale,
                              detail::parse_double(toks[2], line_no) * scale,
                              detail::parse_double(toks[3], line_no) * scale);
    } else if (kw == "vn") {
      if (toks.size() < 4) fail(ErrorCode::ParseError, "normal needs 3 components", line_no);
      m.normals.emplace_back(detail::parse_double(toks[1], line_no), detail::parse_double(toks[2], line_no),
                             detail::parse_double(toks[3], line_no));
    } else if (kw == "vt") {
      if (toks.size() < 3) fail(ErrorCode::ParseError, "texcoord needs 2 components", line_no);
      m.uvs.emplace_back(detail::parse_double(toks[1], line_no), detail::parse_double(toks[2], line_no));
    } else if (kw == "f") {
      if (toks.size() < 4) fail(ErrorCode::ParseError, "face needs at least 3 corners", line_no);
      std::vector<Corner> poly;
      for (std::size_t i = 1; i < toks.size(); ++i) {
        Corner c{0, 0, 0};
        std::array<std::string_view, 3> parts{};
        std::size_t start = 0;
        int field = 0;
        const auto tok = toks[i];
        for (std::size_t j = 0; j <= tok.size(); ++j) {
          if (j == tok.size() || tok[j] == '/') {
            if (field > 2) fail(ErrorCode::ParseError, "malformed face corner", line_no);
            parts[field++] = tok.substr(start, j - start);
            start = j + 1;
          }
        }
        auto resolve = [&](std::string_view s, std::size_t count) -> long long {
          if (s.empty()) return 0;
          long long idx = detail::parse_int(s, line_no);
          if (idx < 0) idx = static_cast<long long>(count) + idx + 1;
          if (idx == 0) fail(ErrorCode::ParseError, "index 0 is invalid in OBJ", line_no);
          return idx;
        };
        c.v = resolve(parts[0], m.vertices.size());
        if (c.v == 0) fail(ErrorCode::ParseError, "face corner without vertex index", line_no);
        c.t = resolve(parts[1], m.uvs.size());
        c.n = resolve(parts[2], m.normals.size());
        poly.push_back(c);
      }
      for (std::size_t i = 1; i + 1 < poly.size(); ++i) tris.push_back({{poly[0], poly[i], poly[i + 1]}, line_no});
    } else if (kw == "mtllib" && toks.size() >= 2 && !base_dir.empty()) {
      if (!texture_path) texture_path = detail::mtl_texture(base_dir / std::string(toks[1]));
    }
  }
  for (const auto& [tri, line] : tris) {
    Face f;
    bool has_t = true;
    bool has_n = true;
    for (int c = 0; c < 3; ++c) {
      const auto& k = tri[c];
      if (k.v < 1 || k.v > static_cast<long long>(m.vertices.size()))
        fail(ErrorCode::ParseError, "vertex index " + std::to_string(k.v) + " out of range", line);
      if (k.t > static_cast<long long>(m.uvs.size()) || k.t < 0)
        fail(ErrorCode::ParseError, "texcoord index " + std::to_string(k.t) + " out of range", line);
      if (k.n > static_cast<long long>(m.normals.size()) || k.n < 0)
        fail(ErrorCode::ParseError, "normal index " + std::to_string(k.n) + " out of range", line);
      f.v[c] = static_cast<int>(k.v - 1);
      f.uv[c] = static_cast<int>(k.t - 1);
      f.n[c] = static_cast<int>(k.n - 1);
      has_t = has_t && k.t > 0;
      has_n = has_n && k.n > 0;
    }
    if (!has_t) f.uv = {-1, -1, -1};
    if (!has_n) f.n = {-1, -1, -1};
    m.faces.push_back(f);
  }
  if (m.vertices.empty()) fail(ErrorCode::EmptyMesh, "OBJ has no vertices");
  detail::complete_mesh(m);
  if (texture_path) m.texture = detail::try_load_texture(*texture_path);
  return m;
}

/// Parses ascii PLY. Recognized vertex properties: x y z, nx ny nz, and
/// u/v, s/t or texture_u/texture_v. Faces use a vertex_indices (or
/// vertex_index) list and optionally a per-corner texcoord list.
inline Mesh parse_ply(std::string_view text, double scale, const fs::path& base_dir = {}) {
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> props;
    std::vector<bool> is_list;
  };
  std::vector<Element> elements;
  std::optional<fs::path> texture_path;
  std::int64_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= text.size()) return std::nullopt;
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return line;
  };
  auto first = next_line();
  if (!first || *first != "ply") fail(ErrorCode::UnsupportedFormat, "missing 'ply' magic");
  bool header_done = false;
  while (auto line = next_line()) {
    const auto toks = detail::split_ws(*line);
    if (toks.empty()) continue;
    if (toks[0] == "format") {
      if (toks.size() < 2 || toks[1] != "ascii") fail(ErrorCode::UnsupportedFormat, "only ascii PLY is supported");
    } else if (toks[0] == "comment") {
      if (toks.size() >= 3 && toks[1] == "TextureFile") texture_path = base_dir / std::string(toks[2]);
    } else if (toks[0] == "element") {
      if (toks.size() < 3) fail(ErrorCode::ParseError, "malformed element", line_no);
      elements.push_back({std::string(toks[1]), static_cast<std::size_t>(detail::parse_int(toks[2], line_no)), {}, {}});
    } else if (toks[0] == "property") {
      if (elements.empty() || toks.size() < 3) fail(ErrorCode::ParseError, "property outside element", line_no);
      const bool list = toks[1] == "list";
      if (list && toks.size() < 5) fail(ErrorCode::ParseError, "malformed list property", line_no);
      elements.back().props.emplace_back(toks.back());
      elements.back().is_list.push_back(list);
    } else if (toks[0] == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) fail(ErrorCode::ParseError, "missing end_header", line_no);

  Mesh m;
  bool has_normals = false;
  bool has_uvs = false;
  for (const auto& el : elements) {
    auto prop_index = [&](std::initializer_list<const char*> names) -> int {
      for (const char* n : names)
        for (std::size_t i = 0; i < el.props.size(); ++i)
          if (el.props[i] == n) return static_cast<int>(i);
      return -1;
    };
    for (std::size_t row = 0; row < el.count; ++row) {
      auto line = next_line();
      if (!line) fail(ErrorCode::ParseError, "unexpected end of file in element " + el.name, line_no);
      const auto toks = detail::split_ws(*line);
      // Expand list properties into (count, values...) runs.
      std::vector<std::vector<double>> values(el.props.size());
      std::size_t t = 0;
      for (std::size_t p = 0; p < el.props.size(); ++p) {
        if (t >= toks.size()) fail(ErrorCode::ParseError, "too few values", line_no);
        if (el.is_list[p]) {
          const auto n = detail::parse_int(toks[t++], line_no);
          if (n < 0 || t + static_cast<std::size_t>(n) > toks.size())
            fail(ErrorCode::ParseError, "list length exceeds row", line_no);
          for (long long i = 0; i < n; ++i) values[p].push_back(detail::parse_double(toks[t++], line_no));
        } else {
          values[p].push_back(detail::parse_double(toks[t++], line_no));
        }
      }
      if (el.name == "vertex") {
        const int ix = prop_index({"x"}), iy = prop_index({"y"}), iz = prop_index({"z"});
        if (ix < 0 || iy < 0 || iz < 0) fail(ErrorCode::ParseError, "vertex lacks x/y/z", line_no);
        m.vertices.emplace_back(values[ix][0] * scale, values[iy][0] * scale, values[iz][0] * scale);
        const int inx = prop_index({"nx"}), iny = prop_index({"ny"}), inz = prop_index({"nz"});
        if (inx >= 0 && iny >= 0 && inz >= 0) {
          has_normals = true;
          m.normals.emplace_back(values[inx][0], values[iny][0], values[inz][0]);
        }
        const int iu = prop_index({"u", "s", "texture_u"}), iv = prop_index({"v", "t", "texture_v"});
        if (iu >= 0 && iv >= 0) {
          has_uvs = true;
          m.uvs.emplace_back(values[iu][0], values[iv][0]);
        }
      } else if (el.name == "face") {
        const int ii = prop_index({"vertex_indices", "vertex_index"});
        if (ii < 0) fail(ErrorCode::ParseError, "face lacks vertex_indices", line_no);
        const auto& idx = values[ii];
        if (idx.size() < 3) fail(ErrorCode::ParseError, "face needs at least 3 corners", line_no);
        for (double d : idx)
          if (d < 0 || d >= static_cast<double>(m.vertices.size()))
            fail(ErrorCode::ParseError, "vertex index " + std::to_string(static_cast<long long>(d)) + " out of range",
                 line_no);
        const int itc = prop_index({"texcoord"});
        const bool wedge = itc >= 0 && values[itc].size() == 2 * idx.size();
        int wedge_base = static_cast<int>(m.uvs.size());
        if (wedge)
          for (std::size_t c = 0; c < idx.size(); ++c) m.uvs.emplace_back(values[itc][2 * c], values[itc][2 * c + 1]);
        for (std::size_t c = 1; c + 1 < idx.size(); ++c) {
          Face f;
          const std::array<std::size_t, 3> corner{0, c, c + 1};
          for (int k = 0; k < 3; ++k) {
            f.v[k] = static_cast<int>(idx[corner[k]]);
            f.n[k] = has_normals ? f.v[k] : -1;
            f.uv[k] = wedge ? wedge_base + static_cast<int>(corner[k]) : (has_uvs ? f.v[k] : -1);
          }
          m.faces.push_back(f);
        }
      }
    }
  }
  if (m.vertices.empty()) fail(ErrorCode::EmptyMesh, "PLY has no vertices");
  detail::complete_mesh(m);
  if (texture_path) m.texture = detail::try_load_texture(*texture_path);
  return m;
}

/// Loads an OBJ or ascii PLY mesh and converts coordinates to meters.
inline Mesh load_mesh(const fs::path& path, LengthUnit units) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext != ".obj" && ext != ".ply") fail(ErrorCode::UnsupportedFormat, "unsupported mesh extension '" + ext + "'");
  const std::string text = read_text_file(path);
  if (ext == ".obj") return parse_obj(text, unit_scale(units), path.parent_path());
  return parse_ply(text, unit_scale(units), path.parent_path());
}

}  // namespace posegap
