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

#ifndef UADET__SYNTHGEN_HPP_
#define UADET__SYNTHGEN_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "uadet/boxgeom.hpp"
#include "uadet/error.hpp"
#include "uadet/pcio.hpp"
#include "uadet/random.hpp"
#include "uadet/range_spec.hpp"

namespace uadet
{

/// Parameters of one synthetic LiDAR scene. The sensor sits at the origin, the ground plane is
/// z = 0 and cars rest on it.
struct SceneSpec
{
  std::size_t num_cars{6};

  // Placement region of car centers, meters.
  double region_x_min{5.0};
  double region_x_max{65.0};
  double region_y_min{-30.0};
  double region_y_max{30.0};
  double min_range{5.0};
  double min_gap{0.5};  ///< minimum BEV clearance between cars

  std::array<double, 3> dims_mean{3.9, 1.6, 1.56};
  std::array<double, 3> dims_std{0.2, 0.08, 0.08};

  double p_base{0.8};  ///< probability of a base heading {0, 90, 180, 270} degrees, else uniform

  double points_at_ref{800.0};  ///< point budget of a car at ref_distance
  double ref_distance{10.0};
  double density_exponent{2.0};  ///< count ~ budget * (ref / d)^exponent
  bool occlusion{true};
  double jitter{0.02};  ///< per-axis Gaussian point noise, meters

  // Car profile: the front `hood_fraction` of the length is lowered to `hood_height_ratio * h`,
  // which makes the heading observable.
  double hood_fraction{0.3};
  double hood_height_ratio{0.6};

  // Per-object label noise magnitude: base + per_meter * distance + occlusion * (1 - visibility).
  double label_noise_base{0.03};
  double label_noise_per_meter{0.006};
  double label_noise_occlusion{0.3};

  RangeSpec range{};
  std::uint64_t seed{0};

  void validate() const
  {
    if (!(p_base >= 0.0 && p_base <= 1.0)) throw SpecError("scene spec: p_base must be in [0, 1]");
    if (jitter < 0.0 || label_noise_base < 0.0 || label_noise_per_meter < 0.0 || label_noise_occlusion < 0.0) {
      throw SpecError("scene spec: noise magnitudes must be non-negative");
    }
    if (!(region_x_min < region_x_max) || !(region_y_min < region_y_max)) {
      throw SpecError("scene spec: empty placement region");
    }
    if (points_at_ref < 0.0 || !(ref_distance > 0.0)) throw SpecError("scene spec: bad point budget");
    for (int i = 0; i < 3; ++i) {
      if (!(dims_mean[i] > 0.0) || dims_std[i] < 0.0) throw SpecError("scene spec: bad dimensions");
    }
    range.validate();
  }
};

/// Oracle record of one generated object.
struct NoiseRecord
{
  double sigma_label{0.0};
  double visibility{1.0};
  double distance{0.0};
  std::size_t num_points{0};  ///< points kept after occlusion
};

struct SyntheticScene
{
  PointCloud cloud;
  std::vector<GroundTruthObject> gts;
  std::vector<NoiseRecord> noise;
};

/// Easy: d < 25 and visibility > 0.9. Hard: d > 45 or visibility < 0.5. Otherwise Moderate.
inline Difficulty difficulty_of(double distance, double visibility)
{
  if (distance > 45.0 || visibility < 0.5) return Difficulty::Hard;
  if (distance < 25.0 && visibility > 0.9) return Difficulty::Easy;
  return Difficulty::Moderate;
}

inline Difficulty difficulty_of(const GroundTruthObject &, const NoiseRecord & rec)
{
  return difficulty_of(rec.distance, rec.visibility);
}

inline double bev_range(const Box3D & b) { return std::hypot(b.cx, b.cy); }

/// Points a car at distance d receives before occlusion.
inline std::size_t expected_point_count(const SceneSpec & spec, double distance)
{
  const double n = spec.points_at_ref * std::pow(spec.ref_distance / distance, spec.density_exponent);
  return static_cast<std::size_t>(std::max(0.0, std::round(n)));
}

/// Azimuth interval [lo, hi] spanned by a box's BEV corners, seen from the origin. Boxes are kept
/// in front of the sensor, so the interval never wraps.
inline std::pair<double, double> azimuth_interval(const Box3D & b)
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Vec2 & c : bev_corners(b)) {
    const double a = std::atan2(c.y, c.x);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  return {lo, hi};
}

/// Fraction of `target`'s azimuth interval not covered by the union of `blockers`.
inline double visible_fraction(
  std::pair<double, double> target, std::vector<std::pair<double, double>> blockers)
{
  const double span = target.second - target.first;
  if (!(span > 0.0)) return 1.0;
  std::sort(blockers.begin(), blockers.end());
  double covered = 0.0;
  double cursor = target.first;
  for (const auto & [lo, hi] : blockers) {
    const double a = std::max(lo, cursor);
    const double b = std::min(hi, target.second);
    if (b > a) {
      covered += b - a;
      cursor = b;
    }
  }
  return std::clamp(1.0 - covered / span, 0.0, 1.0);
}

namespace detail
{

inline double sample_yaw(const SceneSpec & spec, Rng & rng)
{
  if (rng.uniform() < spec.p_base) {
    static constexpr std::array<double, 4> base{0.0, 0.5 * std::numbers::pi, std::numbers::pi, -0.5 * std::numbers::pi};
    return base[rng.below(4)];
  }
  return normalize_yaw(rng.uniform(-std::numbers::pi, std::numbers::pi));
}

inline bool footprint_inside(const Box3D & b, const RangeSpec & r)
{
  for (const Vec2 & c : bev_corners(b)) {
    if (!(c.x >= r.x_min && c.x < r.x_max && c.y >= r.y_min && c.y < r.y_max)) return false;
  }
  return true;
}

/// Height of the car surface at local longitudinal position t in [-l/2, l/2].
inline double roof_height(const SceneSpec & spec, const Box3D & b, double t)
{
  return t > 0.5 * b.l - spec.hood_fraction * b.l ? spec.hood_height_ratio * b.h : b.h;
}

/// Samples surface points of a car in its local frame (x along heading, z from the ground).
inline std::vector<std::array<double, 3>> sample_car_surface(
  const SceneSpec & spec, const Box3D & b, std::size_t count, Rng & rng)
{
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  struct Face
  {
    int kind;  // 0 front, 1 back, 2 left, 3 right, 4 roof
    double area;
  };
  std::vector<Face> faces;
  const std::array<std::array<double, 2>, 4> normals{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  const std::array<double, 4> offsets{0.5 * b.l, 0.5 * b.l, 0.5 * b.w, 0.5 * b.w};
  for (int k = 0; k < 4; ++k) {
    const double nx = c * normals[k][0] - s * normals[k][1];
    const double ny = s * normals[k][0] + c * normals[k][1];
    const double fx = b.cx + nx * offsets[k];
    const double fy = b.cy + ny * offsets[k];
    if (nx * (0.0 - fx) + ny * (0.0 - fy) > 0.0) {
      const double span = k < 2 ? b.w : b.l;
      faces.push_back({k, span * b.h});
    }
  }
  faces.push_back({4, b.l * b.w});
  double total = 0.0;
  for (const auto & f : faces) total += f.area;

  std::vector<std::array<double, 3>> pts;
  pts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double pick = rng.uniform() * total;
    int kind = faces.back().kind;
    for (const auto & f : faces) {
      if (pick < f.area) {
        kind = f.kind;
        break;
      }
      pick -= f.area;
    }
    const double u = rng.uniform();
    const double v = rng.uniform();
    double lx = 0.0;
    double ly = 0.0;
    double z = 0.0;
    switch (kind) {
      case 0:
        lx = 0.5 * b.l;
        ly = (u - 0.5) * b.w;
        break;
      case 1:
        lx = -0.5 * b.l;
        ly = (u - 0.5) * b.w;
        break;
      case 2:
        lx = (u - 0.5) * b.l;
        ly = 0.5 * b.w;
        break;
      case 3:
        lx = (u - 0.5) * b.l;
        ly = -0.5 * b.w;
        break;
      default:
        lx = (u - 0.5) * b.l;
        ly = (v - 0.5) * b.w;
        break;
    }
    const double top = roof_height(spec, b, lx);
    z = kind == 4 ? top : v * top;
    pts.push_back({lx, ly, z});
  }
  return pts;
}

inline float clamp_below(double v, double lo, double hi)
{
  const float flo = static_cast<float>(lo);
  const float fhi = std::nextafter(static_cast<float>(hi), flo);
  float f = static_cast<float>(v);
  if (static_cast<double>(f) >= hi) f = fhi;
  return std::clamp(f, flo, fhi);
}

}  // namespace detail

/// Generates one scene: non-overlapping cars, distance-dependent surface sampling on the two
/// sensor-facing faces plus the roof, azimuth occlusion by nearer cars, per-point jitter. Label
/// noise is only recorded here (see perturb_label).
inline SyntheticScene generate(const SceneSpec & spec)
{
  spec.validate();
  Rng rng(hash_keys({spec.seed, 0x5CE4E}));
  SyntheticScene scene;

  std::vector<Box3D> boxes;
  for (std::size_t i = 0; i < spec.num_cars; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      Box3D b;
      b.cx = rng.uniform(spec.region_x_min, spec.region_x_max);
      b.cy = rng.uniform(spec.region_y_min, spec.region_y_max);
      b.l = std::max(0.5 * spec.dims_mean[0], rng.normal(spec.dims_mean[0], spec.dims_std[0]));
      b.w = std::max(0.5 * spec.dims_mean[1], rng.normal(spec.dims_mean[1], spec.dims_std[1]));
      b.h = std::max(0.5 * spec.dims_mean[2], rng.normal(spec.dims_mean[2], spec.dims_std[2]));
      b.h = std::min(b.h, spec.range.z_max - spec.range.z_min - 1e-3);
      b.cz = spec.range.z_min + 0.5 * b.h;
      b.yaw = detail::sample_yaw(spec, rng);
      if (bev_range(b) < spec.min_range || !detail::footprint_inside(b, spec.range)) continue;
      Box3D padded = b;
      padded.l += 2.0 * spec.min_gap;
      padded.w += 2.0 * spec.min_gap;
      const bool overlaps = std::any_of(boxes.begin(), boxes.end(), [&](const Box3D & o) {
        return bev_intersection_area(padded, o) > 0.0;
      });
      if (!overlaps) {
        boxes.push_back(b);
        placed = true;
      }
    }
    if (!placed) {
      throw PlacementError("could not place car " + std::to_string(i) + " after 1000 attempts");
    }
  }

  std::vector<std::pair<double, double>> intervals;
  std::vector<double> ranges;
  for (const Box3D & b : boxes) {
    intervals.push_back(azimuth_interval(b));
    ranges.push_back(bev_range(b));
  }

  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Box3D & b = boxes[i];
    std::vector<std::pair<double, double>> blockers;
    if (spec.occlusion) {
      for (std::size_t j = 0; j < boxes.size(); ++j) {
        if (j != i && ranges[j] < ranges[i]) blockers.push_back(intervals[j]);
      }
    }
    const double vis = visible_fraction(intervals[i], blockers);

    const std::size_t n = expected_point_count(spec, ranges[i]);
    const auto local = detail::sample_car_surface(spec, b, n, rng);
    const double c = std::cos(b.yaw);
    const double s = std::sin(b.yaw);
    std::size_t kept = 0;
    for (const auto & p : local) {
      const double x = b.cx + c * p[0] - s * p[1];
      const double y = b.cy + s * p[0] + c * p[1];
      const double z = spec.range.z_min + p[2];
      const double az = std::atan2(y, x);
      const bool hidden = std::any_of(blockers.begin(), blockers.end(), [&](const auto & iv) {
        return az >= iv.first && az <= iv.second;
      });
      const double jx = rng.normal(0.0, spec.jitter);
      const double jy = rng.normal(0.0, spec.jitter);
      const double jz = rng.normal(0.0, spec.jitter);
      const float intensity = static_cast<float>(rng.uniform());
      if (hidden) continue;
      const RangeSpec & r = spec.range;
      scene.cloud.points.push_back(Point{
        detail::clamp_below(x + jx, r.x_min, r.x_max), detail::clamp_below(y + jy, r.y_min, r.y_max),
        detail::clamp_below(z + jz, r.z_min, r.z_max), intensity});
      ++kept;
    }

    NoiseRecord rec;
    rec.distance = ranges[i];
    rec.visibility = vis;
    rec.num_points = kept;
    rec.sigma_label = spec.label_noise_base + spec.label_noise_per_meter * ranges[i] +
                      spec.label_noise_occlusion * (1.0 - vis);
    scene.gts.push_back({ObjectClass::Car, b, difficulty_of(rec.distance, rec.visibility)});
    scene.noise.push_back(rec);
  }
  return scene;
}

/// Scene `index` of a dataset drawn from `base` (seeds are derived from base.seed and index).
inline SyntheticScene generate_indexed(const SceneSpec & base, std::uint64_t index)
{
  SceneSpec spec = base;
  spec.seed = hash_keys({base.seed, index});
  return generate(spec);
}

/// Annotation-style corruption of a box with magnitude sigma (meters): center and size offsets
/// plus a heading error that displaces the box ends by about sigma.
inline Box3D perturb_label(const Box3D & gt, double sigma, Rng & rng)
{
  Box3D b = gt;
  b.cx += sigma * rng.normal();
  b.cy += sigma * rng.normal();
  b.cz += 0.25 * sigma * rng.normal();
  b.l = std::max(0.5 * gt.l, gt.l + 0.5 * sigma * rng.normal());
  b.w = std::max(0.5 * gt.w, gt.w + 0.25 * sigma * rng.normal());
  b.h = std::max(0.5 * gt.h, gt.h + 0.25 * sigma * rng.normal());
  b.yaw = normalize_yaw(gt.yaw + sigma / (0.5 * gt.l) * rng.normal());
  return b;
}

}  // namespace uadet

#endif  // UADET__SYNTHGEN_HPP_
