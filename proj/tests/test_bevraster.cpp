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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include "oracles/raster.hpp"
#include "uadet/bevraster.hpp"
#include "uadet/features.hpp"

namespace
{

uadet::RangeSpec small_spec()
{
  uadet::RangeSpec s;
  s.x_min = 0.0;
  s.x_max = 4.0;
  s.y_min = -2.0;
  s.y_max = 2.0;
  s.xy_resolution = 0.25;
  return s;
}

uadet::PointCloud random_points(const uadet::RangeSpec & s, std::size_t n, std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> x(static_cast<float>(s.x_min), static_cast<float>(s.x_max));
  std::uniform_real_distribution<float> y(static_cast<float>(s.y_min), static_cast<float>(s.y_max));
  std::uniform_real_distribution<float> z(static_cast<float>(s.z_min), static_cast<float>(s.z_max));
  uadet::PointCloud pc;
  for (std::size_t i = 0; i < n; ++i) {
    pc.points.push_back({x(gen), y(gen), z(gen), 0.5f});
  }
  return pc;
}

void expect_same_grid(const uadet::BevGrid & a, const uadet::BevGrid & b)
{
  ASSERT_EQ(a.data().size(), b.data().size());
  for (std::size_t i = 0; i < a.data().size(); ++i) ASSERT_EQ(a.data()[i], b.data()[i]) << i;
}

TEST(Rasterize, DefaultRangeGivesSevenHundredByEightHundredBySix)
{
  const auto g = uadet::rasterize({}, uadet::RangeSpec{});
  EXPECT_EQ(g.rows(), 700u);
  EXPECT_EQ(g.cols(), 800u);
  EXPECT_EQ(g.channels(), 6u);
  EXPECT_EQ(g.height(0, 0, 0), 0.0);
  EXPECT_EQ(g.density(699, 799), 0.0);
}

TEST(Rasterize, DensityOfZeroThreeAndFifteenPoints)
{
  EXPECT_DOUBLE_EQ(uadet::density_value(0), 0.0);
  EXPECT_DOUBLE_EQ(uadet::density_value(3), 0.5);
  EXPECT_DOUBLE_EQ(uadet::density_value(15), 1.0);
  uadet::PointCloud pc;
  for (int i = 0; i < 3; ++i) pc.points.push_back({1.01f, 0.01f, 0.1f * i, 0});
  for (int i = 0; i < 15; ++i) pc.points.push_back({2.01f, 0.01f, 0.1f * i, 0});
  const auto g = uadet::rasterize(pc, small_spec());
  const auto a = uadet::cell_of(g.spec(), 1.01, 0.01);
  const auto b = uadet::cell_of(g.spec(), 2.01, 0.01);
  EXPECT_DOUBLE_EQ(g.density(a->row, a->col), 0.5);
  EXPECT_DOUBLE_EQ(g.density(b->row, b->col), 1.0);
}

TEST(Rasterize, DensityNondecreasingAndSaturatesAtFifteen)
{
  for (std::size_t n = 0; n < 40; ++n) {
    EXPECT_LE(uadet::density_value(n), uadet::density_value(n + 1));
    if (n < 15) {
      EXPECT_LT(uadet::density_value(n), 1.0);
    } else {
      EXPECT_EQ(uadet::density_value(n), 1.0);
    }
  }
}

TEST(Rasterize, TopBoundaryGoesToTopSlice)
{
  uadet::PointCloud pc;
  pc.points.push_back({1.0f, 0.0f, 2.5f, 0});
  const auto g = uadet::rasterize(pc, small_spec());
  const auto c = uadet::cell_of(g.spec(), 1.0, 0.0);
  EXPECT_EQ(g.height(c->row, c->col, 4), 2.5);
  EXPECT_EQ(g.count(c->row, c->col), 1u);
}

TEST(Rasterize, OutOfRangePointsIgnored)
{
  uadet::PointCloud pc;
  pc.points = {{-0.1f, 0, 1, 0}, {4.0f, 0, 1, 0}, {1, 2.0f, 1, 0}, {1, 0, -0.1f, 0}, {1, 0, 2.6f, 0}};
  const auto g = uadet::rasterize(pc, small_spec());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) EXPECT_EQ(g.count(r, c), 0u);
  }
}

TEST(Rasterize, RejectsInconsistentSpec)
{
  uadet::RangeSpec s = small_spec();
  s.xy_resolution = 0.3;
  EXPECT_THROW(uadet::rasterize({}, s), uadet::SpecError);
  s = small_spec();
  s.num_slices = 4;
  EXPECT_THROW(uadet::rasterize({}, s), uadet::SpecError);
}

TEST(Rasterize, MatchesNaivePerCellAccumulation)
{
  const auto s = small_spec();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto pc = random_points(s, 500, seed);
    const auto g = uadet::rasterize(pc, s);
    const auto ref = oracle::naive_raster(pc, s);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) {
        ASSERT_EQ(g.count(r, c), ref.count[r * g.cols() + c]);
        EXPECT_EQ(g.density(r, c), uadet::density_value(ref.count[r * g.cols() + c]));
        for (std::size_t k = 0; k < s.num_slices; ++k) {
          const double h = g.height(r, c, k);
          ASSERT_EQ(h, ref.height[(r * g.cols() + c) * s.num_slices + k]);
          EXPECT_LE(h, s.z_min + (k + 1) * s.slice_height);
        }
      }
    }
  }
}

TEST(Rasterize, DefaultRangeMatchesPerPointAccumulation)
{
  const uadet::RangeSpec s;
  const auto pc = random_points(s, 500, 42);
  const auto g = uadet::rasterize(pc, s);
  std::vector<std::size_t> count(g.rows() * g.cols(), 0);
  std::vector<double> height(g.rows() * g.cols() * 5, 0.0);
  for (const auto & p : pc.points) {
    const auto r = static_cast<std::size_t>(std::floor((p.x - s.x_min) / s.xy_resolution));
    const auto c = static_cast<std::size_t>(std::floor((p.y - s.y_min) / s.xy_resolution));
    const auto k = std::min<std::size_t>(4, static_cast<std::size_t>(std::floor((p.z - s.z_min) / s.slice_height)));
    ++count[r * g.cols() + c];
    double & h = height[(r * g.cols() + c) * 5 + k];
    h = std::max(h, static_cast<double>(p.z));
  }
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      ASSERT_EQ(g.count(r, c), count[r * g.cols() + c]);
      for (std::size_t k = 0; k < 5; ++k) ASSERT_EQ(g.height(r, c, k), height[(r * g.cols() + c) * 5 + k]);
    }
  }
}

TEST(Rasterize, PermutationInvariantAndMonotone)
{
  const auto s = small_spec();
  auto pc = random_points(s, 400, 7);
  const auto g = uadet::rasterize(pc, s);
  std::mt19937_64 gen(8);
  std::shuffle(pc.points.begin(), pc.points.end(), gen);
  expect_same_grid(g, uadet::rasterize(pc, s));

  pc.points.push_back({1.3f, -0.7f, 1.9f, 0.0f});
  const auto more = uadet::rasterize(pc, s);
  for (std::size_t i = 0; i < g.data().size(); ++i) EXPECT_GE(more.data()[i], g.data()[i]);
}

TEST(CellCenter, CornersOfDefaultGrid)
{
  const uadet::RangeSpec s;
  const auto [x0, y0] = uadet::cell_center(s, 0, 0);
  EXPECT_NEAR(x0, 0.05, 1e-12);
  EXPECT_NEAR(y0, -39.95, 1e-12);
  const auto [x1, y1] = uadet::cell_center(s, 699, 799);
  EXPECT_NEAR(x1, 69.95, 1e-12);
  EXPECT_NEAR(y1, 39.95, 1e-12);
  EXPECT_THROW(uadet::cell_center(s, 700, 0), uadet::IndexError);
  EXPECT_THROW(uadet::cell_center(s, 0, 800), uadet::IndexError);
}

TEST(CellCenter, RoundTripsThroughCellOf)
{
  const uadet::RangeSpec s;
  for (std::size_t r = 0; r < s.rows(); r += 7) {
    for (std::size_t c = 0; c < s.cols(); c += 11) {
      const auto [x, y] = uadet::cell_center(s, r, c);
      EXPECT_EQ(uadet::cell_of(s, x, y), (uadet::CellIndex{r, c}));
    }
  }
}

class GridFileTest : public ::testing::Test
{
protected:
  void TearDown() override { std::filesystem::remove(path_); }
  std::filesystem::path path_ = std::filesystem::temp_directory_path() / "uadet_grid_test.bev";
};

TEST_F(GridFileTest, HeaderAndPayloadRoundTrip)
{
  const auto s = small_spec();
  const auto g = uadet::rasterize(random_points(s, 300, 3), s);
  uadet::save_grid(g, path_);
  EXPECT_EQ(std::filesystem::file_size(path_), 32u + 4u * g.data().size());
  const auto f = uadet::load_grid_file(path_);
  EXPECT_EQ(f.rows, g.rows());
  EXPECT_EQ(f.cols, g.cols());
  EXPECT_EQ(f.channels, g.channels());
  EXPECT_FLOAT_EQ(f.resolution, 0.25f);
  for (std::size_t i = 0; i < g.data().size(); ++i) EXPECT_EQ(f.values[i], static_cast<float>(g.data()[i]));
}

TEST(Featurize, MatchesFullGridScan)
{
  const auto s = small_spec();
  const auto g = uadet::rasterize(random_points(s, 600, 9), s);
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> cx(-0.5, 4.5);
  std::uniform_real_distribution<double> cy(-2.5, 2.5);
  std::uniform_real_distribution<double> dim(0.3, 2.5);
  std::uniform_int_distribution<int> q(-2, 2);
  for (std::size_t subgrid : {1u, 2u, 4u}) {
    const uadet::FeatureConfig cfg{subgrid, 0.3};
    for (int i = 0; i < 200; ++i) {
      const uadet::Box3D b{cx(gen), cy(gen), 0.8, dim(gen), dim(gen), 1.5, q(gen) * std::numbers::pi / 2};
      std::vector<double> got;
      try {
        got = uadet::featurize(g, b, cfg);
      } catch (const uadet::OutOfGrid &) {
        continue;
      }
      const auto ref = oracle::naive_featurize(g, b, cfg);
      ASSERT_EQ(got.size(), cfg.dimension(s.num_slices));
      ASSERT_EQ(got.size(), ref.size());
      for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], ref[k], 1e-12) << "feature " << k;
    }
  }
}

TEST(Featurize, ShiftByWholeCellsLeavesFeaturesUnchanged)
{
  const auto s = small_spec();
  auto pc = random_points(s, 300, 11);
  for (auto & p : pc.points) {
    p.x = static_cast<float>(1.0 + 0.5 * (p.x - s.x_min) / (s.x_max - s.x_min));
    p.y = static_cast<float>(-0.5 + 0.5 * (p.y - s.y_min) / (s.y_max - s.y_min));
  }
  const uadet::Box3D b{1.25, -0.25, 0.8, 0.5, 0.5, 1.5, 0};
  const auto base = uadet::featurize(uadet::rasterize(pc, s), b, {2, 0.25});
  for (const auto & [dr, dc] : {std::pair{4, 0}, {0, 3}, {-2, 2}}) {
    auto moved = pc;
    for (auto & p : moved.points) {
      p.x += static_cast<float>(dr * s.xy_resolution);
      p.y += static_cast<float>(dc * s.xy_resolution);
    }
    uadet::Box3D mb = b;
    mb.cx += dr * s.xy_resolution;
    mb.cy += dc * s.xy_resolution;
    const auto f = uadet::featurize(uadet::rasterize(moved, s), mb, {2, 0.25});
    for (std::size_t k = 0; k < f.size(); ++k) EXPECT_NEAR(f[k], base[k], 1e-12) << k;
  }
}

TEST(Featurize, EmptyRegionGivesSentinelHeightsAndZeroDensity)
{
  const auto s = small_spec();
  const auto g = uadet::rasterize({}, s);
  const uadet::FeatureConfig cfg{2, 0.25};
  const auto f = uadet::featurize(g, {2, 0, 0.8, 1, 1, 1.5, 0}, cfg);
  for (std::size_t k = 0; k < 2 * s.num_slices; ++k) EXPECT_EQ(f[k], s.z_min);
  EXPECT_EQ(f[2 * s.num_slices], 0.0);
  EXPECT_EQ(f[2 * s.num_slices + 1], 0.0);
}

TEST(Featurize, OutsideGridThrows)
{
  const auto s = small_spec();
  const auto g = uadet::rasterize({}, s);
  EXPECT_THROW(uadet::featurize(g, {50, 50, 0, 1, 1, 1, 0}, {}), uadet::OutOfGrid);
}

}  // namespace
