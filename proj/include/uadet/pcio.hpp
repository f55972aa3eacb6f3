// Copyright 2026 The uadet Authors
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

#ifndef UADET__PCIO_HPP_
#define UADET__PCIO_HPP_

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "uadet/binary_io.hpp"
#include "uadet/boxgeom.hpp"
#include "uadet/error.hpp"
#include "uadet/range_spec.hpp"

namespace uadet
{

struct Point
{
  float x{0.0f};
  float y{0.0f};
  float z{0.0f};
  float intensity{0.0f};
};

struct PointCloud
{
  std::vector<Point> points;
  std::string frame_id{"lidar"};

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

enum class ObjectClass { Car, Background };
enum class Difficulty { Easy, Moderate, Hard };

struct GroundTruthObject
{
  ObjectClass class_id{ObjectClass::Car};
  Box3D box;
  Difficulty difficulty{Difficulty::Easy};
};

inline const char * to_string(ObjectClass c) { return c == ObjectClass::Car ? "Car" : "Background"; }

inline const char * to_string(Difficulty d)
{
  switch (d) {
    case Difficulty::Easy:
      return "Easy";
    case Difficulty::Moderate:
      return "Moderate";
    case Difficulty::Hard:
      return "Hard";
  }
  return "Hard";
}

inline std::optional<ObjectClass> parse_object_class(std::string_view s)
{
  if (s == "Car") return ObjectClass::Car;
  if (s == "Background") return ObjectClass::Background;
  return std::nullopt;
}

inline std::optional<Difficulty> parse_difficulty(std::string_view s)
{
  if (s == "Easy") return Difficulty::Easy;
  if (s == "Moderate") return Difficulty::Moderate;
  if (s == "Hard") return Difficulty::Hard;
  return std::nullopt;
}

/// Loads a headerless little-endian cloud: 16 bytes per point, float32 x, y, z, intensity.
inline PointCloud load_cloud(const std::filesystem::path & path)
{
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.size() % 16 != 0) {
    throw FormatError(
      path.string() + ": byte length " + std::to_string(bytes.size()) +
      " is not a multiple of 16");
  }
  PointCloud pc;
  pc.points.reserve(bytes.size() / 16);
  for (std::size_t off = 0; off < bytes.size(); off += 16) {
    Point p{
      detail::get_f32(&bytes[off]), detail::get_f32(&bytes[off + 4]),
      detail::get_f32(&bytes[off + 8]), detail::get_f32(&bytes[off + 12])};
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.intensity)) {
      throw FormatError(
        path.string() + ": non-finite value in point " + std::to_string(off / 16));
    }
    pc.points.push_back(p);
  }
  return pc;
}

inline void save_cloud(const PointCloud & pc, const std::filesystem::path & path)
{
  std::vector<std::uint8_t> bytes;
  bytes.reserve(pc.points.size() * 16);
  for (const Point & p : pc.points) {
    detail::put_f32(bytes, p.x);
    detail::put_f32(bytes, p.y);
    detail::put_f32(bytes, p.z);
    detail::put_f32(bytes, p.intensity);
  }
  detail::write_file_bytes(path, bytes);
}

/// Keeps points inside the half-open box [min, max) on every axis, preserving order.
inline PointCloud crop_range(const PointCloud & pc, const RangeSpec & range)
{
  PointCloud out;
  out.frame_id = pc.frame_id;
  for (const Point & p : pc.points) {
    if (range.contains(p.x, p.y, p.z)) {
      out.points.push_back(p);
    }
  }
  return out;
}

namespace detail
{

/// Shortest of %.15g and %.17g that reads back to the same double.
inline std::string format_number(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string_view> split_ws(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s)
{
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

/// Calls fn(line_number, fields) for every non-empty, non-comment line.
template <typename Fn>
void for_each_record(const std::string & text, Fn && fn)
{
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string_view line(text.data() + start, end - start);
    const auto fields = split_ws(line);
    if (!fields.empty() && fields.front().front() != '#') {
      fn(line_no, fields);
    }
    if (end == text.size()) break;
    start = end + 1;
  }
}

}  // namespace detail

/// Parses label text: `class cx cy cz l w h yaw difficulty` per line, `#` starts a comment line.
inline std::vector<GroundTruthObject> parse_labels(const std::string & text, const std::string & source)
{
  std::vector<GroundTruthObject> objs;
  detail::for_each_record(text, [&](std::size_t line_no, const auto & f) {
    const std::string where = source + ":" + std::to_string(line_no);
    if (f.size() != 9) {
      throw FormatError(where + ": expected 9 fields, got " + std::to_string(f.size()));
    }
    const auto cls = parse_object_class(f[0]);
    const auto diff = parse_difficulty(f[8]);
    if (!cls) throw FormatError(where + ": unknown class '" + std::string(f[0]) + "'");
    if (!diff) throw FormatError(where + ": unknown difficulty '" + std::string(f[8]) + "'");
    double v[7];
    for (int i = 0; i < 7; ++i) {
      const auto d = detail::parse_double(f[1 + i]);
      if (!d) throw FormatError(where + ": bad number '" + std::string(f[1 + i]) + "'");
      v[i] = *d;
    }
    GroundTruthObject o{*cls, Box3D{v[0], v[1], v[2], v[3], v[4], v[5], v[6]}, *diff};
    if (!(o.box.l > 0.0 && o.box.w > 0.0 && o.box.h > 0.0)) {
      throw FormatError(where + ": box dimensions must be positive");
    }
    objs.push_back(o);
  });
  return objs;
}

inline std::string format_labels(const std::vector<GroundTruthObject> & objs)
{
  std::ostringstream os;
  for (const auto & o : objs) {
    const Box3D & b = o.box;
    os << to_string(o.class_id);
    for (double v : {b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw}) {
      os << ' ' << detail::format_number(v);
    }
    os << ' ' << to_string(o.difficulty) << '\n';
  }
  return os.str();
}

inline std::vector<GroundTruthObject> load_labels(const std::filesystem::path & path)
{
  return parse_labels(detail::read_text_file(path), path.string());
}

inline void save_labels(const std::vector<GroundTruthObject> & objs, const std::filesystem::path & path)
{
  detail::write_text_file(path, format_labels(objs));
}

}  // namespace uadet

#endif  // UADET__PCIO_HPP_
