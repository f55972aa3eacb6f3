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

#ifndef UADET__FEATURES_HPP_
#define UADET__FEATURES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "uadet/bevraster.hpp"
#include "uadet/boxgeom.hpp"
#include "uadet/error.hpp"

namespace uadet
{

/// Pooling layout of the candidate feature vector.
struct FeatureConfig
{
  std::size_t subgrid{4};  ///< the pooled region is split into subgrid x subgrid sub-cells
  double margin{1.0};      ///< context added around the candidate footprint, meters

  /// Layout: per-slice max height, per-slice mean height, density mean, density max,
  /// sub-cell max height, sub-cell density mean, footprint (l, w, h).
  std::size_t dimension(std::size_t num_slices) const
  {
    return 2 * num_slices + 2 + 2 * subgrid * subgrid + 3;
  }
};

using FeatureVector = std::vector<double>;

/// Half-open ranges of rows and columns whose cell centers fall in a region.
struct CellWindow
{
  std::size_t row0{0};
  std::size_t row1{0};
  std::size_t col0{0};
  std::size_t col1{0};
  double x0{0.0};
  double x1{0.0};
  double y0{0.0};
  double y1{0.0};

  bool empty() const { return row0 >= row1 || col0 >= col1; }
};

namespace detail
{

inline double center_coord(double origin, double res, std::size_t i)
{
  return origin + (static_cast<double>(i) + 0.5) * res;
}

/// First index whose cell center is >= bound.
inline std::size_t first_center_at_or_above(double origin, double res, std::size_t n, double bound)
{
  const double guess = std::ceil((bound - origin) / res - 0.5);
  std::size_t i = guess <= 0.0 ? 0 : std::min(n, static_cast<std::size_t>(guess));
  while (i > 0 && center_coord(origin, res, i - 1) >= bound) --i;
  while (i < n && center_coord(origin, res, i) < bound) ++i;
  return i;
}

}  // namespace detail

/// Cells covered by the candidate's axis-aligned footprint expanded by `margin`.
inline CellWindow covered_cells(const RangeSpec & spec, const Box3D & candidate, double margin)
{
  const Box3D f = ortho_footprint(candidate);
  CellWindow win;
  win.x0 = f.cx - 0.5 * f.l - margin;
  win.x1 = f.cx + 0.5 * f.l + margin;
  win.y0 = f.cy - 0.5 * f.w - margin;
  win.y1 = f.cy + 0.5 * f.w + margin;
  const double res = spec.xy_resolution;
  win.row0 = detail::first_center_at_or_above(spec.x_min, res, spec.rows(), win.x0);
  win.row1 = detail::first_center_at_or_above(spec.x_min, res, spec.rows(), win.x1);
  win.col0 = detail::first_center_at_or_above(spec.y_min, res, spec.cols(), win.y0);
  win.col1 = detail::first_center_at_or_above(spec.y_min, res, spec.cols(), win.y1);
  return win;
}

/// Summed-area table of per-cell point counts, for O(1) occupancy queries.
class CountIntegral
{
public:
  explicit CountIntegral(const BevGrid & grid)
  : cols_(grid.cols() + 1), table_((grid.rows() + 1) * (grid.cols() + 1), 0)
  {
    for (std::size_t r = 0; r < grid.rows(); ++r) {
      std::uint64_t row_sum = 0;
      for (std::size_t c = 0; c < grid.cols(); ++c) {
        row_sum += grid.count(r, c);
        table_[(r + 1) * cols_ + c + 1] = table_[r * cols_ + c + 1] + row_sum;
      }
    }
  }

  std::uint64_t sum(const CellWindow & w) const
  {
    if (w.empty()) return 0;
    return table_[w.row1 * cols_ + w.col1] - table_[w.row0 * cols_ + w.col1] -
           table_[w.row1 * cols_ + w.col0] + table_[w.row0 * cols_ + w.col0];
  }

private:
  std::size_t cols_;
  std::vector<std::uint64_t> table_;
};

/// Pooled statistics of the BEV grid over a candidate footprint. Throws OutOfGrid when the
/// footprint covers no cell center.
inline FeatureVector featurize(const BevGrid & grid, const Box3D & candidate, const FeatureConfig & cfg)
{
  const RangeSpec & spec = grid.spec();
  const CellWindow win = covered_cells(spec, candidate, cfg.margin);
  if (win.empty()) {
    throw OutOfGrid("candidate footprint does not cover any grid cell");
  }
  const std::size_t ns = grid.num_slices();
  const std::size_t S = cfg.subgrid;
  const double res = spec.xy_resolution;
  FeatureVector f(cfg.dimension(ns), 0.0);

  double * slice_max = f.data();
  double * slice_mean = f.data() + ns;
  double & density_mean = f[2 * ns];
  double & density_max = f[2 * ns + 1];
  double * sub_max = f.data() + 2 * ns + 2;
  double * sub_density = sub_max + S * S;

  for (std::size_t s = 0; s < ns; ++s) slice_max[s] = spec.z_min;
  for (std::size_t k = 0; k < S * S; ++k) sub_max[k] = spec.z_min;
  std::vector<std::size_t> sub_count(S * S, 0);

  const double inv_wx = static_cast<double>(S) / (win.x1 - win.x0);
  const double inv_wy = static_cast<double>(S) / (win.y1 - win.y0);
  for (std::size_t r = win.row0; r < win.row1; ++r) {
    const double x = detail::center_coord(spec.x_min, res, r);
    const auto sx = std::min<std::size_t>(S - 1, static_cast<std::size_t>(std::max(0.0, std::floor((x - win.x0) * inv_wx))));
    for (std::size_t c = win.col0; c < win.col1; ++c) {
      const double y = detail::center_coord(spec.y_min, res, c);
      const auto sy = std::min<std::size_t>(S - 1, static_cast<std::size_t>(std::max(0.0, std::floor((y - win.y0) * inv_wy))));
      const std::size_t k = sx * S + sy;
      double cell_max = spec.z_min;
      for (std::size_t s = 0; s < ns; ++s) {
        const double h = grid.height(r, c, s);
        slice_max[s] = std::max(slice_max[s], h);
        slice_mean[s] += h;
        cell_max = std::max(cell_max, h);
      }
      const double d = grid.density(r, c);
      density_mean += d;
      density_max = std::max(density_max, d);
      sub_max[k] = std::max(sub_max[k], cell_max);
      sub_density[k] += d;
      ++sub_count[k];
    }
  }
  const double n_cells = static_cast<double>((win.row1 - win.row0) * (win.col1 - win.col0));
  for (std::size_t s = 0; s < ns; ++s) slice_mean[s] /= n_cells;
  density_mean /= n_cells;
  for (std::size_t k = 0; k < S * S; ++k) {
    if (sub_count[k] > 0) sub_density[k] /= static_cast<double>(sub_count[k]);
  }
  const Box3D fp = ortho_footprint(candidate);
  double * geom = sub_density + S * S;
  geom[0] = fp.l;
  geom[1] = fp.w;
  geom[2] = fp.h;
  return f;
}

}  // namespace uadet

#endif  // UADET__FEATURES_HPP_
