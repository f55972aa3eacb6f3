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

#ifndef UADET__METRICS_HPP_
#define UADET__METRICS_HPP_

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "uadet/boxgeom.hpp"
#include "uadet/error.hpp"
#include "uadet/pcio.hpp"

namespace uadet
{

enum class IouMetric { Bev, ThreeD };

using IouFn = std::function<double(const Box3D &, const Box3D &)>;

inline IouFn iou_function(IouMetric m)
{
  if (m == IouMetric::Bev) return [](const Box3D & a, const Box3D & b) { return iou_bev_rotated(a, b); };
  return [](const Box3D & a, const Box3D & b) { return iou_3d(a, b); };
}

struct Match
{
  std::size_t det{0};
  std::size_t gt{0};
  double iou{0.0};
};

struct MatchResult
{
  std::vector<Match> matches;            ///< in processing order (descending score)
  std::vector<std::size_t> order;        ///< detection indices by descending score, ties by index
  std::vector<std::optional<std::size_t>> det_to_gt;  ///< indexed by detection
  std::vector<std::size_t> false_positives;
  std::vector<std::size_t> false_negatives;
};

/// Greedy matching: detections in descending score order (ties by index) each take the
/// unmatched gt of highest IoU (ties to the lowest gt index) when that IoU >= threshold.
inline MatchResult match(
  std::span<const ScoredBox> dets, std::span<const Box3D> gts, const IouFn & iou, double threshold)
{
  if (!(threshold > 0.0 && threshold <= 1.0)) throw SpecError("match: threshold must be in (0, 1]");
  MatchResult res;
  res.order.resize(dets.size());
  std::iota(res.order.begin(), res.order.end(), std::size_t{0});
  std::stable_sort(res.order.begin(), res.order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  res.det_to_gt.assign(dets.size(), std::nullopt);
  std::vector<bool> taken(gts.size(), false);
  for (const std::size_t d : res.order) {
    double best = -1.0;
    std::optional<std::size_t> arg;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(dets[d].box, gts[g]);
      if (v > best) {
        best = v;
        arg = g;
      }
    }
    if (arg && best >= threshold) {
      taken[*arg] = true;
      res.det_to_gt[d] = arg;
      res.matches.push_back({d, *arg, best});
    } else {
      res.false_positives.push_back(d);
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!taken[g]) res.false_negatives.push_back(g);
  }
  return res;
}

/// Scored outcome of one detection in a pooled sweep.
struct SweepEntry
{
  double score{0.0};
  bool true_positive{false};
};

struct PrPoint
{
  double score{0.0};
  double precision{0.0};
  double recall{0.0};
};

/// Detections pooled over scenes plus the number of ground-truth objects they compete for.
struct Sweep
{
  std::vector<SweepEntry> entries;
  std::size_t num_gt{0};
};

/// Precision/recall after each detection in descending score order (stable for ties).
inline std::vector<PrPoint> pr_curve(const Sweep & sweep)
{
  std::vector<std::size_t> order(sweep.entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sweep.entries[a].score > sweep.entries[b].score;
  });
  std::vector<PrPoint> curve;
  curve.reserve(order.size());
  std::size_t tp = 0;
  std::size_t n = 0;
  for (const std::size_t i : order) {
    ++n;
    tp += sweep.entries[i].true_positive ? 1 : 0;
    const double recall = sweep.num_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(sweep.num_gt);
    curve.push_back({sweep.entries[i].score, static_cast<double>(tp) / static_cast<double>(n), recall});
  }
  return curve;
}

enum class ApInterpolation { Point11, Point40 };

/// Interpolated AP: mean over recall levels r of the maximum precision at recall >= r (0 when
/// that recall is never reached). Point11 uses r = 0, 0.1, ..., 1; Point40 uses r = 1/40, ..., 1.
inline double average_precision(const Sweep & sweep, ApInterpolation interp = ApInterpolation::Point11)
{
  if (sweep.num_gt == 0) throw NoGroundTruth("average precision needs at least one ground-truth object");
  const auto curve = pr_curve(sweep);
  const int levels = interp == ApInterpolation::Point11 ? 11 : 40;
  double sum = 0.0;
  for (int k = 0; k < levels; ++k) {
    const double r = interp == ApInterpolation::Point11 ? k / 10.0 : (k + 1) / 40.0;
    double best = 0.0;
    for (const auto & p : curve) {
      if (p.recall >= r) best = std::max(best, p.precision);
    }
    sum += best;
  }
  return sum / levels;
}

/// Detections and labels of one scene.
struct SceneResult
{
  std::vector<ScoredBox> dets;
  std::vector<GroundTruthObject> gts;
};

struct EvalOptions
{
  IouMetric metric{IouMetric::Bev};
  double iou_threshold{0.7};
  ApInterpolation interpolation{ApInterpolation::Point11};
  /// When set only gts of this difficulty count; detections matched to other gts are ignored.
  std::optional<Difficulty> difficulty;
};

struct EvalResult
{
  double ap{0.0};
  std::vector<PrPoint> curve;
  Sweep sweep;
  std::vector<MatchResult> matches;  ///< per scene, against all gts
};

/// Pooled AP over scenes. Throws NoGroundTruth when no gt survives the difficulty filter.
inline EvalResult evaluate(std::span<const SceneResult> scenes, const EvalOptions & opt)
{
  EvalResult res;
  const IouFn iou = iou_function(opt.metric);
  for (const auto & s : scenes) {
    std::vector<Box3D> boxes;
    for (const auto & g : s.gts) boxes.push_back(g.box);
    MatchResult m = match(s.dets, boxes, iou, opt.iou_threshold);
    auto counts = [&](std::size_t g) { return !opt.difficulty || s.gts[g].difficulty == *opt.difficulty; };
    for (std::size_t g = 0; g < s.gts.size(); ++g) res.sweep.num_gt += counts(g) ? 1 : 0;
    for (std::size_t d = 0; d < s.dets.size(); ++d) {
      const auto & g = m.det_to_gt[d];
      if (g && !counts(*g)) continue;
      res.sweep.entries.push_back({s.dets[d].score, g.has_value()});
    }
    res.matches.push_back(std::move(m));
  }
  res.curve = pr_curve(res.sweep);
  res.ap = average_precision(res.sweep, opt.interpolation);
  return res;
}

inline std::string format_pr_curve(const std::vector<PrPoint> & curve)
{
  std::ostringstream os;
  os << "score,precision,recall\n";
  for (const auto & p : curve) {
    os << detail::format_number(p.score) << ',' << detail::format_number(p.precision) << ','
       << detail::format_number(p.recall) << '\n';
  }
  return os.str();
}

}  // namespace uadet

#endif  // UADET__METRICS_HPP_
