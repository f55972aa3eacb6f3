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

#ifndef UADET__BEVRASTER_HPP_
#define UADET__BEVRASTER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <string_view>
#include <vector>

#include "uadet/binary_io.hpp"
#include "uadet/error.hpp"
#include "uadet/pcio.hpp"
#include "uadet/range_spec.hpp"

namespace uadet
{

/// Density encoding of a cell holding `n` points: min(1, ln(n + 1) / ln 16).
inline double density_value(std::size_t n)
{
  return std::min(1.0, std::log(static_cast<double>(n) + 1.0) / std::log(16.0));
}

/// Dense BEV feature grid, row-major [row][col][channel]. Channels 0..num_slices-1 hold the
/// maximum absolute z of each height slice (z_min when the slice is empty), the last channel
/// holds the point density. Row runs along x (forward), column along y (lateral).
class BevGrid
{
public:
  BevGrid() = default;

  explicit BevGrid(const RangeSpec & spec)
  : spec_(spec),
    rows_(spec.rows()),
    cols_(spec.cols()),
    channels_(spec.channels()),
    data_(rows_ * cols_ * channels_, 0.0),
    counts_(rows_ * cols_, 0)
  {
    for (std::size_t cell = 0; cell < rows_ * cols_; ++cell) {
      for (std::size_t s = 0; s < spec.num_slices; ++s) {
        data_[cell * channels_ + s] = spec.z_min;
      }
    }
  }

  const RangeSpec & spec() const { return spec_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t channels() const { return channels_; }
  std::size_t num_slices() const { return channels_ - 1; }
  std::size_t density_channel() const { return channels_ - 1; }

  double at(std::size_t row, std::size_t col, std::size_t ch) const
  {
    return data_[(row * cols_ + col) * channels_ + ch];
  }
  double & at(std::size_t row, std::size_t col, std::size_t ch)
  {
    return data_[(row * cols_ + col) * channels_ + ch];
  }
  double height(std::size_t row, std::size_t col, std::size_t slice) const { return at(row, col, slice); }
  double density(std::size_t row, std::size_t col) const { return at(row, col, density_channel()); }

  /// Number of points that fell into a cell, across all slices.
  std::uint32_t count(std::size_t row, std::size_t col) const { return counts_[row * cols_ + col]; }
  std::uint32_t & count(std::size_t row, std::size_t col) { return counts_[row * cols_ + col]; }

  const std::vector<double> & data() const { return data_; }

private:
  RangeSpec spec_{};
  std::size_t rows_{0};
  std::size_t cols_{0};
  std::size_t channels_{0};
  std::vector<double> data_;
  std::vector<std::uint32_t> counts_;
};

struct CellIndex
{
  std::size_t row{0};
  std::size_t col{0};
  friend bool operator==(const CellIndex &, const CellIndex &) = default;
};

/// Cell holding (x, y), or nullopt outside the half-open xy range.
inline std::optional<CellIndex> cell_of(const RangeSpec & spec, double x, double y)
{
  if (!(x >= spec.x_min && x < spec.x_max && y >= spec.y_min && y < spec.y_max)) {
    return std::nullopt;
  }
  const std::size_t rows = spec.rows();
  const std::size_t cols = spec.cols();
  auto row = static_cast<std::size_t>(std::floor((x - spec.x_min) / spec.xy_resolution));
  auto col = static_cast<std::size_t>(std::floor((y - spec.y_min) / spec.xy_resolution));
  return CellIndex{std::min(row, rows - 1), std::min(col, cols - 1)};
}

/// Slice index of a height; z == z_max lands in the top slice.
inline std::optional<std::size_t> slice_of(const RangeSpec & spec, double z)
{
  if (!(z >= spec.z_min && z <= spec.z_max)) {
    return std::nullopt;
  }
  const auto s = static_cast<std::size_t>(std::floor((z - spec.z_min) / spec.slice_height));
  return std::min(s, spec.num_slices - 1);
}

inline std::pair<double, double> cell_center(const RangeSpec & spec, std::size_t row, std::size_t col)
{
  if (row >= spec.rows() || col >= spec.cols()) {
    throw IndexError(
      "cell (" + std::to_string(row) + ", " + std::to_string(col) + ") outside " +
      std::to_string(spec.rows()) + "x" + std::to_string(spec.cols()) + " grid");
  }
  return {
    spec.x_min + (static_cast<double>(row) + 0.5) * spec.xy_resolution,
    spec.y_min + (static_cast<double>(col) + 0.5) * spec.xy_resolution};
}

/// Rasterizes a point cloud into height slices plus a density map. Points outside the xy range
/// or outside [z_min, z_max] are ignored.
inline BevGrid rasterize(const PointCloud & pc, const RangeSpec & spec)
{
  spec.validate();
  BevGrid grid(spec);
  for (const Point & p : pc.points) {
    const auto cell = cell_of(spec, p.x, p.y);
    const auto slice = slice_of(spec, p.z);
    if (!cell || !slice) {
      continue;
    }
    double & h = grid.at(cell->row, cell->col, *slice);
    h = std::max(h, static_cast<double>(p.z));
    ++grid.count(cell->row, cell->col);
  }
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      grid.at(r, c, grid.density_channel()) = density_value(grid.count(r, c));
    }
  }
  return grid;
}

/// Serialized grid: 32-byte header (magic "BEVGRID1", u32 H, u32 W, u32 C, f32 resolution,
/// f32 x_min, f32 y_min) followed by H*W*C little-endian float32 values, row-major
/// [row][col][channel].
inline std::vector<std::uint8_t> encode_grid(const BevGrid & grid)
{
  std::vector<std::uint8_t> out;
  out.reserve(32 + grid.data().size() * 4);
  for (const char ch : std::string_view("BEVGRID1")) {
    out.push_back(static_cast<std::uint8_t>(ch));
  }
  detail::put_u32(out, static_cast<std::uint32_t>(grid.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(grid.cols()));
  detail::put_u32(out, static_cast<std::uint32_t>(grid.channels()));
  detail::put_f32(out, static_cast<float>(grid.spec().xy_resolution));
  detail::put_f32(out, static_cast<float>(grid.spec().x_min));
  detail::put_f32(out, static_cast<float>(grid.spec().y_min));
  for (const double v : grid.data()) {
    detail::put_f32(out, static_cast<float>(v));
  }
  return out;
}

inline void save_grid(const BevGrid & grid, const std::filesystem::path & path)
{
  detail::write_file_bytes(path, encode_grid(grid));
}

struct GridFile
{
  std::uint32_t rows{0};
  std::uint32_t cols{0};
  std::uint32_t channels{0};
  float resolution{0.0f};
  float x_min{0.0f};
  float y_min{0.0f};
  std::vector<float> values;
};

inline GridFile load_grid_file(const std::filesystem::path & path)
{
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.size() < 32 || std::memcmp(bytes.data(), "BEVGRID1", 8) != 0) {
    throw FormatError(path.string() + ": not a BEV grid file");
  }
  GridFile g;
  g.rows = detail::get_u32(&bytes[8]);
  g.cols = detail::get_u32(&bytes[12]);
  g.channels = detail::get_u32(&bytes[16]);
  g.resolution = detail::get_f32(&bytes[20]);
  g.x_min = detail::get_f32(&bytes[24]);
  g.y_min = detail::get_f32(&bytes[28]);
  const std::size_t n = static_cast<std::size_t>(g.rows) * g.cols * g.channels;
  if (bytes.size() != 32 + 4 * n) {
    throw FormatError(path.string() + ": payload size does not match header");
  }
  g.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.values[i] = detail::get_f32(&bytes[32 + 4 * i]);
  }
  return g;
}

}  // namespace uadet

#endif  // UADET__BEVRASTER_HPP_
