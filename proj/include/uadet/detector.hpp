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

#ifndef UADET__DETECTOR_HPP_
#define UADET__DETECTOR_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uadet/binary_io.hpp"
#include "uadet/bevraster.hpp"
#include "uadet/boxgeom.hpp"
#include "uadet/codec.hpp"
#include "uadet/features.hpp"
#include "uadet/pcio.hpp"
#include "uadet/toymodel.hpp"

namespace uadet
{

struct DetectorConfig
{
  std::size_t anchor_stride{5};
  double ground_z{0.0};
  double proposal_nms{0.8};
  std::size_t proposals{64};
  double final_nms{0.1};
  double min_score{0.05};
};

struct Detection
{
  Box3D box;
  double score{0.0};      ///< stage-2 object probability
  double rpn_score{0.0};  ///< stage-1 object probability of the source anchor
  double rpn_tv{0.0};
  double frh_loc_tv{0.0};
  double frh_orient_tv{0.0};
};

/// Anchors of a grid that cover at least one point, with their pooled features.
struct AnchorFeatures
{
  std::vector<Box3D> boxes;
  Eigen::MatrixXd features;
};

inline AnchorFeatures anchor_features(
  const BevGrid & grid, std::span<const AnchorDims> dims, const FeatureConfig & fc,
  std::size_t stride, double ground_z)
{
  const auto anchors = generate_anchors(grid.spec(), stride, dims, ground_z);
  const CountIntegral occupancy(grid);
  AnchorFeatures out;
  std::vector<FeatureVector> rows;
  for (const Anchor & a : anchors) {
    const Box3D b = a.box();
    if (occupancy.sum(covered_cells(grid.spec(), b, fc.margin)) == 0) continue;
    rows.push_back(featurize(grid, b, fc));
    out.boxes.push_back(b);
  }
  out.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(fc.dimension(grid.num_slices())));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
      Eigen::Map<const Eigen::RowVectorXd>(rows[i].data(), static_cast<Eigen::Index>(rows[i].size()));
  }
  return out;
}

inline double sum_exp(const Eigen::MatrixXd & m, Eigen::Index row, Eigen::Index col0, Eigen::Index cols)
{
  return m.row(row).segment(col0, cols).array().exp().sum();
}

namespace detail
{

inline double object_probability(const Eigen::MatrixXd & logits, Eigen::Index i)
{
  const double z[2] = {logits(i, 0), logits(i, 1)};
  return softmax(z)[1];
}

}  // namespace detail

/// Two-stage inference on precomputed anchor features: stage-1 scores and refines anchors,
/// NMS(proposal_nms) keeps the top `proposals`, stage 2 decodes corners and orientation. A final
/// NMS and score threshold produce the detections, sorted by descending score.
inline std::vector<Detection> infer(
  const ModelParams & params, const BevGrid & grid, const AnchorFeatures & anchors,
  const DetectorConfig & cfg)
{
  std::vector<Detection> dets;
  if (anchors.boxes.empty()) return dets;
  const StageOutputs s1 = forward(params.rpn, anchors.features);

  std::vector<ScoredBox> props;
  std::vector<std::size_t> src;
  for (std::size_t i = 0; i < anchors.boxes.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    std::array<double, kRpnTargetSize> t{};
    for (std::size_t j = 0; j < kRpnTargetSize; ++j) t[j] = s1.regression(r, static_cast<Eigen::Index>(j));
    props.push_back({decode_rpn(anchors.boxes[i], t), detail::object_probability(s1.logits, r)});
    src.push_back(i);
  }
  const auto keep = nms_indices(props, cfg.proposal_nms, cfg.proposals);
  if (keep.empty()) return dets;

  std::vector<FeatureVector> feats;
  std::vector<std::size_t> kept;
  for (const std::size_t k : keep) {
    try {
      feats.push_back(featurize(grid, props[k].box, params.features));
    } catch (const OutOfGrid &) {
      continue;
    }
    kept.push_back(k);
  }
  if (kept.empty()) return dets;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(feats.front().size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) =
      Eigen::Map<const Eigen::RowVectorXd>(feats[i].data(), static_cast<Eigen::Index>(feats[i].size()));
  }
  const StageOutputs s2 = forward(params.frh, x);

  std::vector<Detection> cand;
  std::vector<ScoredBox> cand_boxes;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const std::size_t k = kept[i];
    std::array<double, kCornerTargetSize> tv{};
    std::array<double, kOrientTargetSize> rv{};
    for (std::size_t j = 0; j < kCornerTargetSize; ++j) tv[j] = s2.regression(r, static_cast<Eigen::Index>(j));
    for (std::size_t j = 0; j < kOrientTargetSize; ++j) {
      rv[j] = s2.regression(r, static_cast<Eigen::Index>(kCornerTargetSize + j));
    }
    Detection d;
    d.box = decode_frh(props[k].box, tv, rv, cfg.ground_z);
    d.score = detail::object_probability(s2.logits, r);
    d.rpn_score = props[k].score;
    const auto a = static_cast<Eigen::Index>(src[k]);
    d.rpn_tv = sum_exp(s1.log_variance, a, 0, kRpnTargetSize);
    d.frh_loc_tv = sum_exp(s2.log_variance, r, 0, kCornerTargetSize);
    d.frh_orient_tv = sum_exp(s2.log_variance, r, kCornerTargetSize, kOrientTargetSize);
    if (d.score < cfg.min_score) continue;
    cand.push_back(d);
    cand_boxes.push_back({d.box, d.score});
  }
  for (const std::size_t k : nms_indices(cand_boxes, cfg.final_nms, cand_boxes.size())) {
    dets.push_back(cand[k]);
  }
  return dets;
}

inline std::vector<Detection> infer(const ModelParams & params, const BevGrid & grid, const DetectorConfig & cfg)
{
  return infer(params, grid, anchor_features(grid, params.anchor_dims, params.features, cfg.anchor_stride, cfg.ground_z), cfg);
}

// -- detection files -------------------------------------------------------------------------
//
// One detection per line: class cx cy cz l w h yaw score rpn_score rpn_tv frh_loc_tv
// frh_orient_tv. Lines starting with '#' are comments.

inline std::string format_detections(const std::vector<Detection> & dets)
{
  std::string out = "# class cx cy cz l w h yaw score rpn_score rpn_tv frh_loc_tv frh_orient_tv\n";
  for (const auto & d : dets) {
    const Box3D & b = d.box;
    out += "Car";
    for (const double v : {b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw, d.score, d.rpn_score, d.rpn_tv,
                           d.frh_loc_tv, d.frh_orient_tv}) {
      out += ' ';
      out += detail::format_number(v);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<Detection> parse_detections(const std::string & text, const std::string & source)
{
  std::vector<Detection> dets;
  detail::for_each_record(text, [&](std::size_t line_no, const std::vector<std::string_view> & f) {
    auto fail = [&](const std::string & what) {
      throw FormatError(source + ":" + std::to_string(line_no) + ": " + what);
    };
    if (f.size() != 13) fail("expected 13 fields, got " + std::to_string(f.size()));
    if (!parse_object_class(f[0])) fail("unknown class '" + std::string(f[0]) + "'");
    double v[12];
    for (std::size_t i = 0; i < 12; ++i) {
      const auto p = detail::parse_double(f[i + 1]);
      if (!p) fail("bad number '" + std::string(f[i + 1]) + "'");
      v[i] = *p;
    }
    Detection d;
    d.box = {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
    d.score = v[7];
    d.rpn_score = v[8];
    d.rpn_tv = v[9];
    d.frh_loc_tv = v[10];
    d.frh_orient_tv = v[11];
    dets.push_back(d);
  });
  return dets;
}

inline void save_detections(const std::vector<Detection> & dets, const std::filesystem::path & path)
{
  detail::write_text_file(path, format_detections(dets));
}

inline std::vector<Detection> load_detections(const std::filesystem::path & path)
{
  return parse_detections(detail::read_text_file(path), path.string());
}

}  // namespace uadet

#endif  // UADET__DETECTOR_HPP_
