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

#ifndef UADET__UNCSTATS_HPP_
#define UADET__UNCSTATS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "uadet/error.hpp"
#include "uadet/pcio.hpp"

namespace uadet
{

/// Sum of the variances exp(s_i).
inline double total_variance(std::span<const double> log_vars)
{
  double tv = 0.0;
  for (const double s : log_vars) tv += std::exp(s);
  return tv;
}

/// Sample Pearson correlation. Throws DegenerateInput for mismatched or short inputs or zero
/// variance.
inline double pearson(std::span<const double> xs, std::span<const double> ys)
{
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw DegenerateInput("pearson: need two equal-length samples of size >= 2");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateInput("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Distance from yaw to the nearest of {0, 90, 180, 270} degrees, in [0, pi/4].
inline double base_angle_offset(double yaw)
{
  constexpr double quarter = 0.5 * std::numbers::pi;
  double r = std::fmod(yaw, quarter);
  if (r < 0.0) r += quarter;
  return std::min(r, quarter - r);
}

/// Per-detection uncertainty summary used by the analyses.
struct UncertaintyRecord
{
  std::size_t id{0};
  double rpn_tv{0.0};
  double frh_loc_tv{0.0};
  double frh_orient_tv{0.0};
  double score{0.0};
  double distance{0.0};
  double yaw{0.0};
  Difficulty difficulty{Difficulty::Moderate};
  std::optional<double> sigma_label;

  double frh_tv() const { return frh_loc_tv + frh_orient_tv; }
};

enum class BinKey { Distance, Score, AngleOffset };
enum class TvKind { Rpn, FrhLoc, FrhOrient, Frh };

inline double key_value(const UncertaintyRecord & r, BinKey k)
{
  switch (k) {
    case BinKey::Distance:
      return r.distance;
    case BinKey::Score:
      return r.score;
    case BinKey::AngleOffset:
      return base_angle_offset(r.yaw);
  }
  return 0.0;
}

inline double tv_value(const UncertaintyRecord & r, TvKind k)
{
  switch (k) {
    case TvKind::Rpn:
      return r.rpn_tv;
    case TvKind::FrhLoc:
      return r.frh_loc_tv;
    case TvKind::FrhOrient:
      return r.frh_orient_tv;
    case TvKind::Frh:
      return r.frh_tv();
  }
  return 0.0;
}

struct Bin
{
  double lo{0.0};
  double hi{0.0};
  std::size_t count{0};
  std::optional<double> mean;

  double center() const { return 0.5 * (lo + hi); }
};

/// Half-open bin of `v` for strictly increasing `edges`, or nullopt outside [front, back).
inline std::optional<std::size_t> bin_index(std::span<const double> edges, double v)
{
  if (edges.size() < 2 || v < edges.front() || !(v < edges.back())) return std::nullopt;
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

inline void check_edges(std::span<const double> edges)
{
  if (edges.size() < 2) throw BadEdges("need at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw BadEdges("bin edges must be strictly increasing");
  }
}

/// Mean TV per half-open bin [e_i, e_{i+1}) of the key; records outside the edges are dropped.
inline std::vector<Bin> binned_means(
  std::span<const UncertaintyRecord> records, BinKey key, TvKind tv, std::span<const double> edges)
{
  check_edges(edges);
  std::vector<Bin> bins(edges.size() - 1);
  std::vector<double> sums(bins.size(), 0.0);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    bins[i].lo = edges[i];
    bins[i].hi = edges[i + 1];
  }
  for (const auto & r : records) {
    if (const auto b = bin_index(edges, key_value(r, key))) {
      ++bins[*b].count;
      sums[*b] += tv_value(r, tv);
    }
  }
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].count > 0) bins[i].mean = sums[i] / static_cast<double>(bins[i].count);
  }
  return bins;
}

/// log10(TV) edges of the difficulty histogram: -4, -3.5, ..., 2.
inline std::vector<double> difficulty_histogram_edges()
{
  std::vector<double> e;
  for (int k = 0; k <= 12; ++k) e.push_back(-4.0 + 0.5 * k);
  return e;
}

struct DifficultyHistogram
{
  std::vector<double> log10_edges;
  std::array<std::vector<std::size_t>, 3> counts;  ///< Easy, Moderate, Hard
};

/// Histogram of log10 of the FRH TV per difficulty; values beyond the end edges fall in the
/// first or last bin.
inline DifficultyHistogram difficulty_histogram(std::span<const UncertaintyRecord> records)
{
  DifficultyHistogram h;
  h.log10_edges = difficulty_histogram_edges();
  const std::size_t nb = h.log10_edges.size() - 1;
  for (auto & c : h.counts) c.assign(nb, 0);
  for (const auto & r : records) {
    const double tv = r.frh_tv();
    const double v = tv > 0.0 ? std::log10(tv) : h.log10_edges.front();
    std::size_t b = 0;
    if (v >= h.log10_edges.back()) {
      b = nb - 1;
    } else if (v > h.log10_edges.front()) {
      b = *bin_index(h.log10_edges, v);
    }
    ++h.counts[static_cast<std::size_t>(r.difficulty)][b];
  }
  return h;
}

/// Records with score > threshold (the analyses use 0.5).
inline std::vector<UncertaintyRecord> confident(std::span<const UncertaintyRecord> records, double threshold = 0.5)
{
  std::vector<UncertaintyRecord> out;
  for (const auto & r : records) {
    if (r.score > threshold) out.push_back(r);
  }
  return out;
}

// -- record CSV ------------------------------------------------------------------------------

inline constexpr const char * kRecordHeader =
  "id,rpn_tv,frh_loc_tv,frh_orient_tv,score,distance,yaw,difficulty,sigma_label";

inline std::string format_records(std::span<const UncertaintyRecord> records)
{
  std::ostringstream os;
  os << kRecordHeader << '\n';
  for (const auto & r : records) {
    os << r.id << ',' << detail::format_number(r.rpn_tv) << ',' << detail::format_number(r.frh_loc_tv)
       << ',' << detail::format_number(r.frh_orient_tv) << ',' << detail::format_number(r.score) << ','
       << detail::format_number(r.distance) << ',' << detail::format_number(r.yaw) << ','
       << to_string(r.difficulty) << ',';
    if (r.sigma_label) os << detail::format_number(*r.sigma_label);
    os << '\n';
  }
  return os.str();
}

inline std::vector<UncertaintyRecord> parse_records(const std::string & text, const std::string & source)
{
  std::vector<UncertaintyRecord> out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kRecordHeader) throw FormatError(source + ":1: unexpected header");
      continue;
    }
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    const std::string where = source + ":" + std::to_string(line_no);
    if (f.size() != 9) throw FormatError(where + ": expected 9 columns");
    auto num = [&](std::size_t i) {
      const auto v = detail::parse_double(f[i]);
      if (!v) throw FormatError(where + ": bad number '" + f[i] + "'");
      return *v;
    };
    UncertaintyRecord r;
    const double id = num(0);
    if (id < 0.0 || id != std::floor(id)) throw FormatError(where + ": bad id");
    r.id = static_cast<std::size_t>(id);
    r.rpn_tv = num(1);
    r.frh_loc_tv = num(2);
    r.frh_orient_tv = num(3);
    r.score = num(4);
    r.distance = num(5);
    r.yaw = num(6);
    const auto d = parse_difficulty(f[7]);
    if (!d) throw FormatError(where + ": unknown difficulty '" + f[7] + "'");
    r.difficulty = *d;
    if (!f[8].empty()) r.sigma_label = num(8);
    if (r.rpn_tv < 0.0 || r.frh_loc_tv < 0.0 || r.frh_orient_tv < 0.0) {
      throw FormatError(where + ": negative total variance");
    }
    out.push_back(r);
  }
  return out;
}

inline std::string format_bins(const std::vector<Bin> & bins)
{
  std::ostringstream os;
  os << "lo,hi,count,mean_tv\n";
  for (const auto & b : bins) {
    os << detail::format_number(b.lo) << ',' << detail::format_number(b.hi) << ',' << b.count << ',';
    if (b.mean) os << detail::format_number(*b.mean);
    os << '\n';
  }
  return os.str();
}

inline std::string format_histogram(const DifficultyHistogram & h)
{
  std::ostringstream os;
  os << "log10_lo,log10_hi,easy,moderate,hard\n";
  for (std::size_t i = 0; i + 1 < h.log10_edges.size(); ++i) {
    os << detail::format_number(h.log10_edges[i]) << ',' << detail::format_number(h.log10_edges[i + 1])
       << ',' << h.counts[0][i] << ',' << h.counts[1][i] << ',' << h.counts[2][i] << '\n';
  }
  return os.str();
}

}  // namespace uadet

#endif  // UADET__UNCSTATS_HPP_
