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

#ifndef UADET__TRAINER_HPP_
#define UADET__TRAINER_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "uadet/attnloss.hpp"
#include "uadet/bevraster.hpp"
#include "uadet/codec.hpp"
#include "uadet/features.hpp"
#include "uadet/random.hpp"
#include "uadet/toymodel.hpp"

namespace uadet
{

struct TrainConfig
{
  double learning_rate{1e-4};
  double decay_factor{0.8};
  std::size_t decay_every{2000};
  double adam_beta1{0.9};
  double adam_beta2{0.999};
  double adam_epsilon{1e-8};
  double dropout_rate{0.5};
  double weight_decay{5e-4};
  std::size_t phase1_steps{2000};
  std::size_t phase2_steps{6000};
  std::size_t batch_rpn{64};
  std::size_t batch_frh{64};
  double rpn_positive_fraction{0.5};
  double frh_positive_fraction{0.5};
  Likelihood likelihood{Likelihood::Gaussian};
  /// With attenuation off the second phase keeps the baseline loss (the no-uncertainty model).
  bool attenuation{true};
  /// Keeps the log-variance heads at zero for the whole run while the attenuated loss is used.
  bool clamp_log_variance{false};
  std::uint64_t seed{0};

  void validate() const
  {
    if (!(learning_rate > 0.0) || !(decay_factor > 0.0) || decay_every == 0) {
      throw SpecError("train config: learning rate, decay factor and decay interval must be positive");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw SpecError("train config: dropout must be in [0, 1)");
    if (weight_decay < 0.0) throw SpecError("train config: negative weight decay");
    if (batch_rpn == 0 || batch_frh == 0) throw SpecError("train config: empty batch");
  }
};

/// Staircase exponential decay: lr * factor^floor(step / decay_every).
inline double learning_rate_at(const TrainConfig & cfg, std::size_t step)
{
  return cfg.learning_rate * std::pow(cfg.decay_factor, static_cast<double>(step / cfg.decay_every));
}

/// Precomputed samples of one stage.
struct SamplePool
{
  Eigen::MatrixXd features;
  Eigen::MatrixXd targets;
  std::vector<AssignLabel> labels;
  std::vector<std::size_t> scene;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;

  std::size_t size() const { return labels.size(); }
};

struct TrainingSet
{
  SamplePool rpn;
  SamplePool frh;
  std::vector<AnchorDims> anchor_dims;
  FeatureConfig features;
  std::size_t feature_dim{0};
};

/// How training samples are drawn from a scene.
struct SamplingConfig
{
  std::size_t anchor_stride{5};
  double ground_z{0.0};
  double rpn_pos_iou{0.5};
  double rpn_neg_iou{0.3};
  double frh_pos_iou{0.65};
  double frh_neg_iou{0.55};
  std::size_t rpn_negatives_per_scene{64};
  /// Cap on stage-2 ROIs per scene.
  std::size_t rois_per_scene{256};
  std::size_t rois_per_object{12};
  std::size_t background_rois_per_scene{24};
  double roi_center_jitter{0.35};  ///< meters
  double roi_size_jitter{0.08};    ///< log-scale
};

namespace detail
{

struct PoolBuilder
{
  std::vector<std::vector<double>> feats;
  std::vector<std::vector<double>> targets;
  std::vector<AssignLabel> labels;
  std::vector<std::size_t> scene;

  void add(std::vector<double> f, std::vector<double> t, AssignLabel l, std::size_t s)
  {
    feats.push_back(std::move(f));
    targets.push_back(std::move(t));
    labels.push_back(l);
    scene.push_back(s);
  }

  SamplePool finish(std::size_t feat_dim, std::size_t target_dim)
  {
    SamplePool p;
    const auto n = static_cast<Eigen::Index>(labels.size());
    p.features.resize(n, static_cast<Eigen::Index>(feat_dim));
    p.targets.resize(n, static_cast<Eigen::Index>(target_dim));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      for (std::size_t j = 0; j < feat_dim; ++j) p.features(i, static_cast<Eigen::Index>(j)) = feats[k][j];
      for (std::size_t j = 0; j < target_dim; ++j) p.targets(i, static_cast<Eigen::Index>(j)) = targets[k][j];
      (labels[k] == AssignLabel::Positive ? p.positives : p.negatives).push_back(k);
    }
    p.labels = std::move(labels);
    p.scene = std::move(scene);
    return p;
  }
};

}  // namespace detail

/// Accumulates stage-1 and stage-2 samples scene by scene so the grids need not be kept alive.
class TrainingSetBuilder
{
public:
  TrainingSetBuilder(
    const RangeSpec & range, std::vector<AnchorDims> dims, const FeatureConfig & features,
    const SamplingConfig & sampling, std::uint64_t seed)
  : range_(range), dims_(std::move(dims)), features_(features), sampling_(sampling), seed_(seed)
  {
    anchors_ = generate_anchors(range_, sampling_.anchor_stride, dims_, sampling_.ground_z);
    feature_dim_ = features_.dimension(range_.num_slices);
  }

  /// Adds a scene. `labels` are the (possibly noisy) training boxes.
  void add_scene(const BevGrid & grid, std::span<const Box3D> labels)
  {
    const std::size_t scene = scene_count_++;
    Rng rng(hash_keys({seed_, scene, 0x5A3B1E}));
    const CountIntegral occupancy(grid);
    auto occupied = [&](const Box3D & b) {
      return occupancy.sum(covered_cells(range_, b, features_.margin)) > 0;
    };

    // Stage 1: every positive anchor plus a random subset of occupied negatives.
    std::vector<Box3D> boxes;
    std::vector<std::size_t> occupied_idx;
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
      const Box3D b = anchors_[i].box();
      if (occupied(b)) {
        occupied_idx.push_back(i);
        boxes.push_back(b);
      }
    }
    const auto rpn_assign = assign(boxes, labels, sampling_.rpn_pos_iou, sampling_.rpn_neg_iou);
    std::vector<std::size_t> negatives;
    for (std::size_t k = 0; k < boxes.size(); ++k) {
      const auto & a = rpn_assign[k];
      if (a.label == AssignLabel::Positive) {
        const auto t = encode_rpn(boxes[k], labels[*a.matched_gt]);
        rpn_.add(featurize(grid, boxes[k], features_), {t.begin(), t.end()}, a.label, scene);
      } else if (a.label == AssignLabel::Negative) {
        negatives.push_back(k);
      }
    }
    for (std::size_t n = 0; n < sampling_.rpn_negatives_per_scene && !negatives.empty(); ++n) {
      const std::size_t pick = rng.below(negatives.size());
      const std::size_t k = negatives[pick];
      negatives[pick] = negatives.back();
      negatives.pop_back();
      rpn_.add(featurize(grid, boxes[k], features_), std::vector<double>(kRpnTargetSize, 0.0), AssignLabel::Negative, scene);
    }

    // Stage 2: jittered footprints around each object stand in for proposals, plus background
    // ROIs from occupied anchors.
    std::vector<Box3D> rois;
    for (const Box3D & gt : labels) {
      const Box3D fp = ortho_footprint(gt);
      for (std::size_t j = 0; j < sampling_.rois_per_object; ++j) {
        Box3D r = fp;
        r.cx += sampling_.roi_center_jitter * rng.normal();
        r.cy += sampling_.roi_center_jitter * rng.normal();
        r.l *= std::exp(sampling_.roi_size_jitter * rng.normal());
        r.w *= std::exp(sampling_.roi_size_jitter * rng.normal());
        r.h *= std::exp(sampling_.roi_size_jitter * rng.normal());
        r.cz = sampling_.ground_z + 0.5 * r.h;
        rois.push_back(r);
      }
    }
    for (std::size_t n = 0; n < sampling_.background_rois_per_scene && !boxes.empty(); ++n) {
      rois.push_back(boxes[rng.below(boxes.size())]);
    }
    if (rois.size() > sampling_.rois_per_scene) rois.resize(sampling_.rois_per_scene);
    const auto frh_assign = assign(rois, labels, sampling_.frh_pos_iou, sampling_.frh_neg_iou);
    for (std::size_t k = 0; k < rois.size(); ++k) {
      const auto & a = frh_assign[k];
      if (a.label == AssignLabel::Ignore) continue;
      FeatureVector f;
      try {
        f = featurize(grid, rois[k], features_);
      } catch (const OutOfGrid &) {
        continue;
      }
      std::vector<double> t(kCornerTargetSize + kOrientTargetSize, 0.0);
      if (a.label == AssignLabel::Positive) {
        const auto [tv, rv] = encode_frh(rois[k], labels[*a.matched_gt], sampling_.ground_z);
        std::copy(tv.begin(), tv.end(), t.begin());
        std::copy(rv.begin(), rv.end(), t.begin() + kCornerTargetSize);
      }
      frh_.add(std::move(f), std::move(t), a.label, scene);
    }
  }

  TrainingSet finish()
  {
    TrainingSet ts;
    ts.rpn = rpn_.finish(feature_dim_, kRpnTargetSize);
    ts.frh = frh_.finish(feature_dim_, kCornerTargetSize + kOrientTargetSize);
    ts.anchor_dims = dims_;
    ts.features = features_;
    ts.feature_dim = feature_dim_;
    return ts;
  }

private:
  RangeSpec range_;
  std::vector<AnchorDims> dims_;
  FeatureConfig features_;
  SamplingConfig sampling_;
  std::uint64_t seed_;
  std::vector<Anchor> anchors_;
  std::size_t feature_dim_{0};
  std::size_t scene_count_{0};
  detail::PoolBuilder rpn_;
  detail::PoolBuilder frh_;
};

struct TrainLogRow
{
  std::size_t step{0};
  double lr{0.0};
  LossBreakdown loss;
};

inline std::string format_train_log(const std::vector<TrainLogRow> & rows)
{
  std::ostringstream os;
  os << "step,lr,rpn_reg,rpn_cls,frh_loc,frh_cls,frh_orient,total\n";
  char buf[256];
  for (const auto & r : rows) {
    std::snprintf(
      buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.step, r.lr, r.loss.rpn_reg,
      r.loss.rpn_cls, r.loss.frh_loc, r.loss.frh_cls, r.loss.frh_orient, r.loss.total);
    os << buf;
  }
  return os.str();
}

/// A drawn mini-batch of one stage.
struct Batch
{
  Eigen::MatrixXd features;
  StageTargets targets;
};

/// Draws `size` samples with replacement: round(size * pos_fraction) positives (when any exist),
/// the rest negatives.
inline Batch draw_batch(const SamplePool & pool, std::size_t size, double pos_fraction, Rng & rng)
{
  std::vector<std::size_t> idx;
  const std::size_t n_pos = pool.positives.empty()
                              ? 0
                              : (pool.negatives.empty() ? size : static_cast<std::size_t>(std::lround(static_cast<double>(size) * pos_fraction)));
  for (std::size_t i = 0; i < size; ++i) {
    const auto & from = i < n_pos ? pool.positives : pool.negatives;
    if (from.empty()) break;
    idx.push_back(from[rng.below(from.size())]);
  }
  Batch b;
  b.features.resize(static_cast<Eigen::Index>(idx.size()), pool.features.cols());
  b.targets.regression.resize(static_cast<Eigen::Index>(idx.size()), pool.targets.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto src = static_cast<Eigen::Index>(idx[i]);
    b.features.row(r) = pool.features.row(src);
    b.targets.regression.row(r) = pool.targets.row(src);
    b.targets.labels.push_back(pool.labels[idx[i]]);
  }
  return b;
}

/// Adam state mirroring the parameter layout.
struct AdamState
{
  ModelParams m;
  ModelParams v;
  std::size_t t{0};
};

/// One Adam step; L2 weight decay is added to the gradients of weight matrices (not biases).
inline void adam_update(
  ModelParams & params, ModelParams & grads, AdamState & state, const TrainConfig & cfg, double lr)
{
  ++state.t;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  auto & m = state.m;
  auto & v = state.v;
  // Walk params, grads, m and v in lockstep.
  std::vector<Eigen::MatrixXd *> P, G, M, V;
  std::vector<bool> is_weight;
  params.visit(grads, [&](Eigen::MatrixXd & p, Eigen::MatrixXd & g, bool w) {
    P.push_back(&p);
    G.push_back(&g);
    is_weight.push_back(w);
  });
  m.visit(v, [&](Eigen::MatrixXd & a, Eigen::MatrixXd & b, bool) {
    M.push_back(&a);
    V.push_back(&b);
  });
  for (std::size_t k = 0; k < P.size(); ++k) {
    Eigen::MatrixXd & p = *P[k];
    Eigen::MatrixXd & g = *G[k];
    if (is_weight[k] && cfg.weight_decay > 0.0) g += cfg.weight_decay * p;
    Eigen::MatrixXd & mk = *M[k];
    Eigen::MatrixXd & vk = *V[k];
    mk = b1 * mk + (1.0 - b1) * g;
    vk = b2 * vk + (1.0 - b2) * g.cwiseAbs2();
    p.array() -= lr * (mk.array() / c1) / ((vk.array() / c2).sqrt() + cfg.adam_epsilon);
  }
}

struct TrainResult
{
  ModelParams params;
  std::vector<TrainLogRow> log;
};

/// Loss and parameter gradients of the whole two-stage head on one pair of batches.
struct StepGradients
{
  MultiLossResult loss;
  ModelParams grads;
};

inline StepGradients compute_step(
  const ModelParams & params, const Batch & rpn_batch, const Batch & frh_batch,
  const LossOptions & loss_opt, const ForwardOptions & rpn_fwd, const ForwardOptions & frh_fwd)
{
  const StageTrace rpn_t = forward_trace(params.rpn, rpn_batch.features, rpn_fwd);
  const StageTrace frh_t = forward_trace(params.frh, frh_batch.features, frh_fwd);
  StepGradients out;
  out.loss = multi_loss(rpn_t.outputs, rpn_batch.targets, frh_t.outputs, frh_batch.targets, loss_opt);
  out.grads.rpn = backward(params.rpn, rpn_t, out.loss.rpn, rpn_fwd.zero_log_variance);
  out.grads.frh = backward(params.frh, frh_t, out.loss.frh, frh_fwd.zero_log_variance);
  out.grads.anchor_dims = params.anchor_dims;
  out.grads.features = params.features;
  return out;
}

/// Two-phase training: `phase1_steps` with the baseline loss and frozen (zero) log-variance
/// heads, then `phase2_steps` with the attenuated loss (or the baseline again when
/// cfg.attenuation is false). Adam with staircase learning-rate decay; deterministic given
/// cfg.seed.
inline TrainResult train(
  const TrainingSet & data, const TrainConfig & cfg, const ModelShape & shape,
  const std::function<void(const TrainLogRow &)> & on_step = {})
{
  cfg.validate();
  if (data.rpn.size() == 0 || data.frh.size() == 0) {
    throw InsufficientData("training set has no samples");
  }
  TrainResult res;
  res.params = create_model(data.feature_dim, shape, data.anchor_dims, data.features, cfg.seed);
  AdamState adam{res.params.zeros_like(), res.params.zeros_like(), 0};

  const std::size_t total_steps = cfg.phase1_steps + cfg.phase2_steps;
  res.log.reserve(total_steps);
  for (std::size_t step = 0; step < total_steps; ++step) {
    const bool phase1 = step < cfg.phase1_steps;
    LossOptions lo;
    lo.likelihood = cfg.likelihood;
    lo.attenuation = !phase1 && cfg.attenuation;
    const bool frozen = phase1 || !cfg.attenuation || cfg.clamp_log_variance;

    Rng rng(hash_keys({cfg.seed, step, 0xBA7C4}));
    const Batch rb = draw_batch(data.rpn, cfg.batch_rpn, cfg.rpn_positive_fraction, rng);
    const Batch fb = draw_batch(data.frh, cfg.batch_frh, cfg.frh_positive_fraction, rng);

    ForwardOptions rf{true, cfg.dropout_rate, {cfg.seed, step, 1}, frozen};
    ForwardOptions ff{true, cfg.dropout_rate, {cfg.seed, step, 2}, frozen};
    StepGradients sg = compute_step(res.params, rb, fb, lo, rf, ff);
    if (!std::isfinite(sg.loss.loss.total)) {
      throw DivergenceError("training diverged at step " + std::to_string(step));
    }
    const double lr = learning_rate_at(cfg, step);
    adam_update(res.params, sg.grads, adam, cfg, lr);

    TrainLogRow row{step, lr, sg.loss.loss};
    res.log.push_back(row);
    if (on_step) on_step(row);
  }
  return res;
}

}  // namespace uadet

#endif  // UADET__TRAINER_HPP_
