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

#ifndef UADET__CODEC_HPP_
#define UADET__CODEC_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "uadet/bevraster.hpp"
#include "uadet/boxgeom.hpp"
#include "uadet/error.hpp"
#include "uadet/random.hpp"

namespace uadet
{

inline constexpr std::size_t kRpnTargetSize = 6;
inline constexpr std::size_t kCornerTargetSize = 10;
inline constexpr std::size_t kOrientTargetSize = 2;

using RpnTarget = std::array<double, kRpnTargetSize>;        // dx, dy, dz, dw, dl, dh
using CornerTarget = std::array<double, kCornerTargetSize>;  // dx1..4, dy1..4, dh1, dh2
using OrientTarget = std::array<double, kOrientTargetSize>;  // cos, sin

struct TargetVectors
{
  RpnTarget t_r{};
  CornerTarget t_v{};
  OrientTarget r_v{};
};

struct AnchorDims
{
  double l{0.0};
  double w{0.0};
  double h{0.0};
};

/// Yaw-free anchor. With `rotated` set the length runs along y (the 90 degree bin).
struct Anchor
{
  double cx{0.0};
  double cy{0.0};
  double cz{0.0};
  AnchorDims dims;
  bool rotated{false};

  Box3D box() const
  {
    return rotated ? Box3D{cx, cy, cz, dims.w, dims.l, dims.h, 0.0}
                   : Box3D{cx, cy, cz, dims.l, dims.w, dims.h, 0.0};
  }
};

/// Anchors centered on every `stride`-th cell, one per (dims cluster, orientation bin). The
/// anchor rests on the ground plane.
inline std::vector<Anchor> generate_anchors(
  const RangeSpec & spec, std::size_t stride, std::span<const AnchorDims> dims, double ground_z)
{
  std::vector<Anchor> anchors;
  if (stride == 0) {
    throw SpecError("anchor stride must be positive");
  }
  for (std::size_t r = stride / 2; r < spec.rows(); r += stride) {
    for (std::size_t c = stride / 2; c < spec.cols(); c += stride) {
      const auto [x, y] = cell_center(spec, r, c);
      for (const auto & d : dims) {
        for (const bool rot : {false, true}) {
          anchors.push_back(Anchor{x, y, ground_z + 0.5 * d.h, d, rot});
        }
      }
    }
  }
  return anchors;
}

// -- k-means ---------------------------------------------------------------------------------

struct KMeansResult
{
  std::vector<std::array<double, 3>> centroids;
  std::vector<std::size_t> labels;
  double inertia{0.0};  ///< sum of squared distances to the assigned centroid
  std::size_t iterations{0};
};

namespace detail
{
inline double sq_dist3(const std::array<double, 3> & a, const std::array<double, 3> & b)
{
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}
}  // namespace detail

/// Lloyd's algorithm with farthest-point seeding. The first center is drawn from `seed`, the rest
/// are the samples farthest from the centers chosen so far (ties to the lowest index). Stops when
/// assignments no longer change or after 100 iterations.
inline KMeansResult kmeans(
  std::span<const std::array<double, 3>> samples, std::size_t k, std::uint64_t seed)
{
  const std::size_t n = samples.size();
  if (k == 0 || n < k) {
    throw InsufficientData(
      "k-means needs at least k=" + std::to_string(k) + " samples, got " + std::to_string(n));
  }
  KMeansResult res;
  res.centroids.push_back(samples[splitmix64(seed) % n]);
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  while (res.centroids.size() < k) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_d[i] = std::min(min_d[i], detail::sq_dist3(samples[i], res.centroids.back()));
      if (min_d[i] > best_d) {
        best_d = min_d[i];
        best = i;
      }
    }
    res.centroids.push_back(samples[best]);
  }

  res.labels.assign(n, k);
  for (std::size_t it = 0; it < 100; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t arg = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = detail::sq_dist3(samples[i], res.centroids[c]);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      if (res.labels[i] != arg) {
        res.labels[i] = arg;
        changed = true;
      }
    }
    res.iterations = it + 1;
    if (!changed) {
      break;
    }
    // Incremental means keep zero-variance clusters exact.
    std::vector<std::array<double, 3>> mean(k, {0.0, 0.0, 0.0});
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = res.labels[i];
      const double inv = 1.0 / static_cast<double>(++count[c]);
      for (int d = 0; d < 3; ++d) {
        mean[c][d] += (samples[i][d] - mean[c][d]) * inv;
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) {
        res.centroids[c] = mean[c];
      }
    }
  }
  res.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res.inertia += detail::sq_dist3(samples[i], res.centroids[res.labels[i]]);
  }
  return res;
}

/// Anchor dimensions from k-means over ground-truth (l, w, h).
inline std::vector<AnchorDims> kmeans_anchor_dims(
  std::span<const std::array<double, 3>> gt_dims, std::size_t k, std::uint64_t seed)
{
  const auto res = kmeans(gt_dims, k, seed);
  std::vector<AnchorDims> out;
  for (const auto & c : res.centroids) {
    out.push_back({c[0], c[1], c[2]});
  }
  return out;
}

// -- stage-1 offsets -------------------------------------------------------------------------

/// Normalized anchor offsets. x and y are scaled by the anchor's BEV diagonal, z by its height,
/// dimensions are log ratios. The ground truth is taken by its axis-aligned footprint.
inline RpnTarget encode_rpn(const Box3D & anchor, const Box3D & gt)
{
  const Box3D g = ortho_footprint(gt);
  const double d = std::hypot(anchor.l, anchor.w);
  return {
    (g.cx - anchor.cx) / d,     (g.cy - anchor.cy) / d,     (g.cz - anchor.cz) / anchor.h,
    std::log(g.w / anchor.w),   std::log(g.l / anchor.l),   std::log(g.h / anchor.h)};
}

inline Box3D decode_rpn(const Box3D & anchor, std::span<const double, kRpnTargetSize> t)
{
  const double d = std::hypot(anchor.l, anchor.w);
  return {
    anchor.cx + t[0] * d,         anchor.cy + t[1] * d,         anchor.cz + t[2] * anchor.h,
    anchor.l * std::exp(t[4]),    anchor.w * std::exp(t[3]),    anchor.h * std::exp(t[5]),
    0.0};
}

// -- stage-2 four-corner and orientation encoding --------------------------------------------

/// Four-corner encoding against a yaw-free ROI. The ground truth is first taken in its canonical
/// form (yaw wrapped into [-pi/4, pi/4], see canonical_box); its corner i (counter-clockwise from
/// local (+l/2, +w/2)) is paired with corner i of the ROI and the offsets are divided by the ROI
/// diagonal. The two height terms are the bottom and top offsets from the ground plane divided by
/// the ROI height. Orientation is (cos yaw, sin yaw) of the true heading.
inline std::pair<CornerTarget, OrientTarget> encode_frh(
  const Box3D & roi, const Box3D & gt, double ground_z = 0.0)
{
  const Box3D r = ortho_footprint(roi);
  const auto rc = bev_corners(r);
  const auto gc = bev_corners(canonical_box(gt));
  const double d = std::hypot(r.l, r.w);
  CornerTarget tv{};
  for (std::size_t i = 0; i < 4; ++i) {
    tv[i] = (gc[i].x - rc[i].x) / d;
    tv[4 + i] = (gc[i].y - rc[i].y) / d;
  }
  tv[8] = (gt.z_bottom() - ground_z) / r.h;
  tv[9] = (gt.z_top() - ground_z) / r.h;
  return {tv, {std::cos(gt.yaw), std::sin(gt.yaw)}};
}

/// Inverse of encode_frh. The corners give the center (their mean), the canonical length and
/// width (mean opposite-edge lengths) and the canonical axis. The heading is the normalized
/// orientation vector; when it lies closer to the canonical width axis, length and width swap.
inline Box3D decode_frh(
  const Box3D & roi, std::span<const double, kCornerTargetSize> tv,
  std::span<const double, kOrientTargetSize> rv, double ground_z = 0.0)
{
  constexpr double min_dim = 1e-3;
  const Box3D r = ortho_footprint(roi);
  const auto rc = bev_corners(r);
  const double d = std::hypot(r.l, r.w);
  std::array<Vec2, 4> p{};
  Vec2 mean{};
  for (std::size_t i = 0; i < 4; ++i) {
    p[i] = {rc[i].x + tv[i] * d, rc[i].y + tv[4 + i] * d};
    mean.x += 0.25 * p[i].x;
    mean.y += 0.25 * p[i].y;
  }
  auto dist = [](const Vec2 & a, const Vec2 & b) { return std::hypot(a.x - b.x, a.y - b.y); };
  double l = 0.5 * (dist(p[0], p[1]) + dist(p[3], p[2]));
  double w = 0.5 * (dist(p[0], p[3]) + dist(p[1], p[2]));
  const double z_bottom = ground_z + tv[8] * r.h;
  const double z_top = ground_z + tv[9] * r.h;

  // Canonical length axis: corners 1 -> 0 and 2 -> 3 both run along +l.
  const double ax = (p[0].x - p[1].x) + (p[3].x - p[2].x);
  const double ay = (p[0].y - p[1].y) + (p[3].y - p[2].y);
  const double axis = std::atan2(ay, ax);
  const double norm = std::hypot(rv[0], rv[1]);
  const double yaw = norm > 0.0 ? std::atan2(rv[1] / norm, rv[0] / norm) : axis;
  const double quarter = 0.5 * std::numbers::pi;
  const long k = std::lround(normalize_yaw(yaw - axis) / quarter);
  if (k % 2 != 0) {
    std::swap(l, w);
  }
  return {
    mean.x, mean.y, 0.5 * (z_bottom + z_top), std::max(l, min_dim), std::max(w, min_dim),
    std::max(z_top - z_bottom, min_dim), normalize_yaw(yaw)};
}

// -- assignment ------------------------------------------------------------------------------

enum class AssignLabel { Positive, Negative, Ignore };

struct Assignment
{
  AssignLabel label{AssignLabel::Negative};
  std::optional<std::size_t> matched_gt;
  double iou{0.0};
};

/// Labels each candidate by its best axis-aligned BEV IoU over the ground truth: >= pos_thr is
/// Positive (ties go to the lowest gt index), < neg_thr is Negative, anything between is Ignore.
inline std::vector<Assignment> assign(
  std::span<const Box3D> candidates, std::span<const Box3D> gts, double pos_thr, double neg_thr)
{
  if (pos_thr < neg_thr) {
    throw SpecError("assign: positive threshold below negative threshold");
  }
  std::vector<Assignment> out;
  out.reserve(candidates.size());
  for (const Box3D & c : candidates) {
    double best = 0.0;
    std::optional<std::size_t> arg;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double iou = iou_bev_aa(c, gts[g]);
      if (!arg || iou > best) {
        best = iou;
        arg = g;
      }
    }
    Assignment a;
    a.iou = best;
    if (arg && best >= pos_thr) {
      a.label = AssignLabel::Positive;
      a.matched_gt = arg;
    } else if (best < neg_thr) {
      a.label = AssignLabel::Negative;
    } else {
      a.label = AssignLabel::Ignore;
      a.matched_gt = arg;
    }
    out.push_back(a);
  }
  return out;
}

}  // namespace uadet

#endif  // UADET__CODEC_HPP_
