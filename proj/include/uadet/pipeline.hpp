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

#ifndef UADET__PIPELINE_HPP_
#define UADET__PIPELINE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uadet/bevraster.hpp"
#include "uadet/codec.hpp"
#include "uadet/config.hpp"
#include "uadet/detector.hpp"
#include "uadet/metrics.hpp"
#include "uadet/synthgen.hpp"
#include "uadet/trainer.hpp"
#include "uadet/uncstats.hpp"

namespace uadet
{

/// Training boxes of a scene: each gt corrupted with its recorded label-noise magnitude. The
/// corruption of object `obj` in scene `scene` depends only on (seed, scene, obj).
inline std::vector<Box3D> noisy_labels(
  const std::vector<GroundTruthObject> & gts, const std::vector<NoiseRecord> & noise,
  std::uint64_t seed, std::uint64_t scene)
{
  if (gts.size() != noise.size()) throw ShapeError("labels and noise records differ in length");
  std::vector<Box3D> out;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    Rng rng(hash_keys({seed, scene, i, 0x1AB}));
    out.push_back(perturb_label(gts[i].box, noise[i].sigma_label, rng));
  }
  return out;
}

/// Anchor sizes clustered from training boxes.
inline std::vector<AnchorDims> anchor_dims_from(
  const std::vector<std::vector<Box3D>> & labels, std::size_t clusters, std::uint64_t seed)
{
  std::vector<std::array<double, 3>> dims;
  for (const auto & scene : labels) {
    for (const Box3D & b : scene) dims.push_back({b.l, b.w, b.h});
  }
  return kmeans_anchor_dims(dims, clusters, seed);
}

/// One scene as consumed by training: grid plus the noisy training boxes.
struct TrainingScene
{
  BevGrid grid;
  std::vector<Box3D> labels;
};

// -- noise oracle files ----------------------------------------------------------------------

inline std::string format_noise(const std::vector<NoiseRecord> & noise)
{
  std::ostringstream os;
  os << "object,sigma_label,visibility,distance,num_points\n";
  for (std::size_t i = 0; i < noise.size(); ++i) {
    const auto & n = noise[i];
    os << i << ',' << detail::format_number(n.sigma_label) << ',' << detail::format_number(n.visibility)
       << ',' << detail::format_number(n.distance) << ',' << n.num_points << '\n';
  }
  return os.str();
}

inline std::vector<NoiseRecord> parse_noise(const std::string & text, const std::string & source)
{
  std::vector<NoiseRecord> out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    const std::string where = source + ":" + std::to_string(line_no);
    if (f.size() != 5) throw FormatError(where + ": expected 5 columns");
    double v[5];
    for (std::size_t i = 0; i < 5; ++i) {
      const auto p = detail::parse_double(f[i]);
      if (!p) throw FormatError(where + ": bad number '" + f[i] + "'");
      v[i] = *p;
    }
    if (v[0] != static_cast<double>(out.size())) throw FormatError(where + ": objects out of order");
    out.push_back({v[1], v[2], v[3], static_cast<std::size_t>(v[4])});
  }
  return out;
}

// -- records ---------------------------------------------------------------------------------

/// Per-detection uncertainty records. Detections matched (BEV IoU >= iou_threshold, greedy by
/// score) to a gt take its difficulty and, when `noise` is given, its label-noise magnitude;
/// unmatched ones get the difficulty implied by their range at full visibility.
inline std::vector<UncertaintyRecord> make_records(
  const std::vector<Detection> & dets, const std::vector<GroundTruthObject> & gts,
  const std::vector<NoiseRecord> * noise, double iou_threshold, std::size_t first_id = 0)
{
  std::vector<ScoredBox> sb;
  for (const auto & d : dets) sb.push_back({d.box, d.score});
  std::vector<Box3D> gb;
  for (const auto & g : gts) gb.push_back(g.box);
  const MatchResult m = match(sb, gb, iou_function(IouMetric::Bev), iou_threshold);
  std::vector<UncertaintyRecord> out;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const Detection & d = dets[i];
    UncertaintyRecord r;
    r.id = first_id + i;
    r.rpn_tv = d.rpn_tv;
    r.frh_loc_tv = d.frh_loc_tv;
    r.frh_orient_tv = d.frh_orient_tv;
    r.score = d.score;
    r.distance = bev_range(d.box);
    r.yaw = d.box.yaw;
    if (const auto g = m.det_to_gt[i]) {
      r.difficulty = gts[*g].difficulty;
      if (noise) r.sigma_label = (*noise)[*g].sigma_label;
    } else {
      r.difficulty = difficulty_of(r.distance, 1.0);
    }
    out.push_back(r);
  }
  return out;
}

inline std::vector<ScoredBox> scored_boxes(const std::vector<Detection> & dets)
{
  std::vector<ScoredBox> out;
  for (const auto & d : dets) out.push_back({d.box, d.score});
  return out;
}

}  // namespace uadet

#endif  // UADET__PIPELINE_HPP_
