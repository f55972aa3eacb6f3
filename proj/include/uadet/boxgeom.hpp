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

#ifndef UADET__BOXGEOM_HPP_
#define UADET__BOXGEOM_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

namespace uadet
{

struct Vec2
{
  double x{0.0};
  double y{0.0};
};

/// Wraps an angle into (-pi, pi].
inline double normalize_yaw(double yaw)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(yaw, two_pi);
  if (a <= -std::numbers::pi) {
    a += two_pi;
  } else if (a > std::numbers::pi) {
    a -= two_pi;
  }
  return a;
}

/// Oriented 3D box in the LiDAR frame. `cz` is the vertical center, `l` runs along the heading.
struct Box3D
{
  double cx{0.0};
  double cy{0.0};
  double cz{0.0};
  double l{1.0};
  double w{1.0};
  double h{1.0};
  double yaw{0.0};

  double z_bottom() const { return cz - 0.5 * h; }
  double z_top() const { return cz + 0.5 * h; }
  double volume() const { return l * w * h; }
  bool valid() const
  {
    return l > 0.0 && w > 0.0 && h > 0.0 && std::isfinite(cx) && std::isfinite(cy) &&
           std::isfinite(cz) && std::isfinite(yaw);
  }
};

struct ScoredBox
{
  Box3D box;
  double score{0.0};
};

using Polygon = std::vector<Vec2>;

/// Counter-clockwise BEV corners, starting at local (+l/2, +w/2).
inline std::array<Vec2, 4> bev_corners(const Box3D & b)
{
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double hl = 0.5 * b.l;
  const double hw = 0.5 * b.w;
  const std::array<Vec2, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  std::array<Vec2, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {b.cx + c * local[i].x - s * local[i].y, b.cy + s * local[i].x + c * local[i].y};
  }
  return out;
}

/// Signed shoelace area; positive for counter-clockwise polygons.
inline double polygon_area(std::span<const Vec2> poly)
{
  if (poly.size() < 3) {
    return 0.0;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 & p = poly[i];
    const Vec2 & q = poly[(i + 1) % poly.size()];
    acc += p.x * q.y - q.x * p.y;
  }
  return 0.5 * acc;
}

/// Sutherland-Hodgman clipping of a convex polygon against a convex, counter-clockwise clip
/// polygon. Both inputs must be convex.
inline Polygon clip_convex(const Polygon & subject, std::span<const Vec2> clip)
{
  Polygon output = subject;
  for (std::size_t e = 0; e < clip.size() && !output.empty(); ++e) {
    const Vec2 a = clip[e];
    const Vec2 b = clip[(e + 1) % clip.size()];
    const double ex = b.x - a.x;
    const double ey = b.y - a.y;
    const double scale = std::max(1.0, std::hypot(ex, ey));
    auto side = [&](const Vec2 & p) { return ex * (p.y - a.y) - ey * (p.x - a.x); };
    const double eps = 1e-12 * scale * scale;

    Polygon input;
    input.swap(output);
    Vec2 prev = input.back();
    double prev_side = side(prev);
    for (const Vec2 & cur : input) {
      const double cur_side = side(cur);
      const bool cur_in = cur_side >= -eps;
      const bool prev_in = prev_side >= -eps;
      if (cur_in != prev_in) {
        const double t = prev_side / (prev_side - cur_side);
        output.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
      }
      if (cur_in) {
        output.push_back(cur);
      }
      prev = cur;
      prev_side = cur_side;
    }
  }
  return output;
}

/// Area of the intersection of the two rotated BEV footprints.
inline double bev_intersection_area(const Box3D & a, const Box3D & b)
{
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  const Polygon inter = clip_convex(Polygon(ca.begin(), ca.end()), cb);
  const double area = polygon_area(inter);
  return area > 0.0 ? area : 0.0;
}

/// Axis-aligned footprint of a box: yaw snapped to the nearest multiple of 90 degrees, with
/// length and width swapped on odd multiples. The result has yaw 0.
inline Box3D ortho_footprint(const Box3D & b)
{
  Box3D out = b;
  const long k = std::lround(b.yaw / (0.5 * std::numbers::pi));
  if (k % 2 != 0) {
    std::swap(out.l, out.w);
  }
  out.yaw = 0.0;
  return out;
}

/// The same physical box with yaw wrapped into [-pi/4, pi/4]: rotated by the nearest multiple
/// of 90 degrees, with l and w swapped on odd multiples.
inline Box3D canonical_box(const Box3D & b)
{
  Box3D out = b;
  const double quarter = 0.5 * std::numbers::pi;
  const long k = std::lround(b.yaw / quarter);
  if (k % 2 != 0) {
    std::swap(out.l, out.w);
  }
  out.yaw = b.yaw - static_cast<double>(k) * quarter;
  return out;
}

namespace detail
{
inline double safe_ratio(double inter, double uni)
{
  if (!(inter > 0.0) || !(uni > 0.0)) {
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}
}  // namespace detail

/// IoU of the axis-aligned BEV footprints (see ortho_footprint). Anchors and ROIs carry no yaw,
/// so for them this is plain rectangle IoU.
inline double iou_bev_aa(const Box3D & a, const Box3D & b)
{
  const Box3D fa = ortho_footprint(a);
  const Box3D fb = ortho_footprint(b);
  const double ix = std::min(fa.cx + 0.5 * fa.l, fb.cx + 0.5 * fb.l) -
                    std::max(fa.cx - 0.5 * fa.l, fb.cx - 0.5 * fb.l);
  const double iy = std::min(fa.cy + 0.5 * fa.w, fb.cy + 0.5 * fb.w) -
                    std::max(fa.cy - 0.5 * fa.w, fb.cy - 0.5 * fb.w);
  if (ix <= 0.0 || iy <= 0.0) {
    return 0.0;
  }
  const double inter = ix * iy;
  return detail::safe_ratio(inter, fa.l * fa.w + fb.l * fb.w - inter);
}

/// IoU of the rotated BEV footprints.
inline double iou_bev_rotated(const Box3D & a, const Box3D & b)
{
  const double inter = bev_intersection_area(a, b);
  return detail::safe_ratio(inter, a.l * a.w + b.l * b.w - inter);
}

/// Vertical overlap length of two boxes.
inline double z_overlap(const Box3D & a, const Box3D & b)
{
  return std::max(0.0, std::min(a.z_top(), b.z_top()) - std::max(a.z_bottom(), b.z_bottom()));
}

/// 3D IoU: rotated BEV intersection times vertical overlap over the union of volumes.
inline double iou_3d(const Box3D & a, const Box3D & b)
{
  const double dz = z_overlap(a, b);
  if (dz <= 0.0) {
    return 0.0;
  }
  const double inter = bev_intersection_area(a, b) * dz;
  return detail::safe_ratio(inter, a.volume() + b.volume() - inter);
}

/// Greedy non-maximum suppression on axis-aligned BEV IoU. Boxes are visited by descending score
/// with ties broken by lower input index; a box is dropped when its IoU with any kept box exceeds
/// `iou_threshold`. Returns at most `keep_max` boxes in selection order.
inline std::vector<std::size_t> nms_indices(
  std::span<const ScoredBox> boxes, double iou_threshold, std::size_t keep_max)
{
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return boxes[i].score > boxes[j].score;
  });

  std::vector<std::size_t> kept;
  for (const std::size_t i : order) {
    if (kept.size() >= keep_max) {
      break;
    }
    bool suppressed = false;
    for (const std::size_t k : kept) {
      if (iou_bev_aa(boxes[i].box, boxes[k].box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(i);
    }
  }
  return kept;
}

inline std::vector<ScoredBox> nms(
  std::span<const ScoredBox> boxes, double iou_threshold, std::size_t keep_max)
{
  std::vector<ScoredBox> out;
  for (const std::size_t i : nms_indices(boxes, iou_threshold, keep_max)) {
    out.push_back(boxes[i]);
  }
  return out;
}

}  // namespace uadet

#endif  // UADET__BOXGEOM_HPP_
