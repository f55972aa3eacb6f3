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

#include <cmath>
#include <random>
#include <vector>

#include "oracles/evaluation.hpp"
#include "uadet/metrics.hpp"

namespace
{

using uadet::Box3D;
using uadet::ScoredBox;

std::vector<Box3D> random_boxes(std::mt19937_64 & gen, std::size_t n)
{
  std::uniform_real_distribution<double> p(0, 12);
  std::uniform_real_distribution<double> d(1.5, 4.5);
  std::uniform_real_distribution<double> yaw(-3, 3);
  std::vector<Box3D> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({p(gen), p(gen), 0.8, d(gen), d(gen) / 2, 1.5, yaw(gen)});
  return out;
}

TEST(Match, SingleExactDetection)
{
  const Box3D g{10, 0, 0.8, 4, 1.8, 1.5, 0.3};
  const std::vector<ScoredBox> dets{{g, 0.9}};
  const std::vector<Box3D> gts{g};
  const auto m = uadet::match(dets, gts, uadet::iou_function(uadet::IouMetric::Bev), 0.7);
  EXPECT_EQ(m.matches.size(), 1u);
  EXPECT_TRUE(m.false_positives.empty());
  EXPECT_TRUE(m.false_negatives.empty());
}

TEST(Match, TwoDetectionsOnOneGtTieBreakByIndex)
{
  const Box3D g{10, 0, 0.8, 4, 1.8, 1.5, 0.3};
  const std::vector<ScoredBox> dets{{g, 0.5}, {g, 0.5}};
  const std::vector<Box3D> gts{g};
  const auto m = uadet::match(dets, gts, uadet::iou_function(uadet::IouMetric::Bev), 0.7);
  ASSERT_EQ(m.matches.size(), 1u);
  EXPECT_EQ(m.matches[0].det, 0u);
  EXPECT_EQ(m.false_positives, std::vector<std::size_t>{1});
}

TEST(Match, BadThresholdThrows)
{
  const auto iou = uadet::iou_function(uadet::IouMetric::Bev);
  EXPECT_THROW(uadet::match({}, {}, iou, 0.0), uadet::SpecError);
  EXPECT_THROW(uadet::match({}, {}, iou, 1.5), uadet::SpecError);
}

TEST(Match, RandomCasesEqualIouMatrixReference)
{
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> coarse(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto gts = random_boxes(gen, 10);
    std::vector<ScoredBox> dets;
    std::vector<double> scores;
    for (const auto & b : random_boxes(gen, 20)) {
      dets.push_back({b, coarse(gen) / 5.0});
      scores.push_back(dets.back().score);
    }
    // Half the detections sit near a gt so that matches occur.
    for (std::size_t i = 0; i < 10; ++i) {
      dets[i].box = gts[i];
      dets[i].box.cx += 0.3 * (i % 3);
    }
    for (const auto metric : {uadet::IouMetric::Bev, uadet::IouMetric::ThreeD}) {
      const auto fn = uadet::iou_function(metric);
      std::vector<std::vector<double>> iou(dets.size(), std::vector<double>(gts.size()));
      for (std::size_t d = 0; d < dets.size(); ++d) {
        for (std::size_t g = 0; g < gts.size(); ++g) iou[d][g] = fn(dets[d].box, gts[g]);
      }
      for (double thr : {0.1, 0.5, 0.7}) {
        const auto m = uadet::match(dets, gts, fn, thr);
        EXPECT_EQ(m.det_to_gt, oracle::matrix_match(scores, iou, thr));
        EXPECT_EQ(m.matches.size() + m.false_negatives.size(), gts.size());
        EXPECT_EQ(m.matches.size() + m.false_positives.size(), dets.size());
      }
    }
  }
}

uadet::Sweep sweep_of(const std::vector<std::pair<double, bool>> & e, std::size_t num_gt)
{
  uadet::Sweep s;
  for (const auto & [score, tp] : e) s.entries.push_back({score, tp});
  s.num_gt = num_gt;
  return s;
}

TEST(AveragePrecision, HandCases)
{
  EXPECT_DOUBLE_EQ(uadet::average_precision(sweep_of({{0.9, true}, {0.8, true}}, 2)), 1.0);
  EXPECT_DOUBLE_EQ(uadet::average_precision(sweep_of({}, 3)), 0.0);
  EXPECT_DOUBLE_EQ(uadet::average_precision(sweep_of({{0.9, true}, {0.1, false}}, 1)), 1.0);
  EXPECT_THROW(uadet::average_precision(sweep_of({{0.9, true}}, 0)), uadet::NoGroundTruth);
}

TEST(AveragePrecision, HalfRecallTable)
{
  // One of two gts found at full precision: levels 0..0.5 score 1, the rest 0.
  EXPECT_NEAR(uadet::average_precision(sweep_of({{0.9, true}}, 2)), 6.0 / 11.0, 1e-15);
  EXPECT_NEAR(uadet::average_precision(sweep_of({{0.9, true}}, 2), uadet::ApInterpolation::Point40), 20.0 / 40.0, 1e-15);
}

TEST(AveragePrecision, RandomSweepsEqualElevenPointReference)
{
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<int> n(0, 30);
  std::uniform_int_distribution<int> coarse(0, 8);
  std::bernoulli_distribution tp(0.6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, bool>> e;
    std::size_t tps = 0;
    const int count = n(gen);
    for (int i = 0; i < count; ++i) {
      e.push_back({coarse(gen) / 8.0, tp(gen)});
      tps += e.back().second;
    }
    const std::size_t num_gt = tps + static_cast<std::size_t>(coarse(gen));
    if (num_gt == 0) continue;
    EXPECT_EQ(uadet::average_precision(sweep_of(e, num_gt)), oracle::ap11(e, num_gt));
  }
}

TEST(AveragePrecision, InvariantUnderMonotoneScoreTransform)
{
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::bernoulli_distribution tp(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, bool>> e;
    std::vector<std::pair<double, bool>> t;
    for (int i = 0; i < 25; ++i) {
      e.push_back({u(gen), tp(gen)});
      t.push_back({std::exp(3.0 * e.back().first) - 7.0, e.back().second});
    }
    EXPECT_EQ(uadet::average_precision(sweep_of(e, 20)), uadet::average_precision(sweep_of(t, 20)));
  }
}

TEST(AveragePrecision, LowestScoreAdditions)
{
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.1, 1);
  std::bernoulli_distribution tp(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, bool>> e;
    std::size_t tps = 0;
    for (int i = 0; i < 20; ++i) {
      e.push_back({u(gen), tp(gen)});
      tps += e.back().second;
    }
    const std::size_t num_gt = tps + 3;
    const double ap = uadet::average_precision(sweep_of(e, num_gt));
    auto with_tp = e;
    with_tp.push_back({0.01, true});
    EXPECT_GE(uadet::average_precision(sweep_of(with_tp, num_gt)), ap);
    auto with_fp = e;
    with_fp.push_back({0.01, false});
    const auto before = uadet::pr_curve(sweep_of(e, num_gt));
    const auto after = uadet::pr_curve(sweep_of(with_fp, num_gt));
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].precision, after[i].precision);
    EXPECT_LE(after.back().precision, before.back().precision);
    EXPECT_LE(uadet::average_precision(sweep_of(with_fp, num_gt)), ap);
  }
}

TEST(PrCurve, RecallNondecreasing)
{
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::bernoulli_distribution tp(0.5);
  std::vector<std::pair<double, bool>> e;
  for (int i = 0; i < 100; ++i) e.push_back({u(gen), tp(gen)});
  const auto curve = uadet::pr_curve(sweep_of(e, 80));
  for (std::size_t i = 1; i < curve.size(); ++i) {
    EXPECT_GE(curve[i].recall, curve[i - 1].recall);
    EXPECT_LE(curve[i].score, curve[i - 1].score);
  }
}

uadet::GroundTruthObject gt(double x, uadet::Difficulty d)
{
  return {uadet::ObjectClass::Car, {x, 0, 0.78, 3.9, 1.6, 1.56, 0}, d};
}

TEST(Evaluate, DifficultyFilterAndBevAtLeastThreeD)
{
  uadet::SceneResult s;
  s.gts = {gt(10, uadet::Difficulty::Easy), gt(30, uadet::Difficulty::Hard), gt(50, uadet::Difficulty::Hard)};
  s.dets = {{s.gts[0].box, 0.9}, {s.gts[1].box, 0.8}, {{70, 20, 0.78, 3.9, 1.6, 1.56, 0}, 0.7}};
  s.dets[1].box.cz += 0.3;  // same footprint, shifted up: full BEV overlap, partial 3D overlap
  const std::vector<uadet::SceneResult> scenes{s};
  uadet::EvalOptions opt;
  opt.iou_threshold = 0.5;
  EXPECT_NEAR(uadet::evaluate(scenes, opt).ap, oracle::ap11({{0.9, true}, {0.8, true}, {0.7, false}}, 3), 1e-15);
  opt.difficulty = uadet::Difficulty::Hard;
  const auto hard = uadet::evaluate(scenes, opt);
  EXPECT_EQ(hard.sweep.num_gt, 2u);
  EXPECT_EQ(hard.sweep.entries.size(), 2u);
  opt.difficulty = uadet::Difficulty::Moderate;
  EXPECT_THROW(uadet::evaluate(scenes, opt), uadet::NoGroundTruth);
  opt.difficulty.reset();
  const double bev = uadet::evaluate(scenes, opt).ap;
  opt.metric = uadet::IouMetric::ThreeD;
  opt.iou_threshold = 0.7;
  const double three_d = uadet::evaluate(scenes, opt).ap;
  opt.metric = uadet::IouMetric::Bev;
  EXPECT_GE(uadet::evaluate(scenes, opt).ap, three_d);
  EXPECT_GE(bev, three_d);
}

TEST(Evaluate, PrCurveCsv)
{
  const std::vector<uadet::PrPoint> c{{0.9, 1.0, 0.5}, {0.4, 0.5, 0.5}};
  EXPECT_EQ(uadet::format_pr_curve(c), "score,precision,recall\n0.9,1,0.5\n0.4,0.5,0.5\n");
}

}  // namespace
