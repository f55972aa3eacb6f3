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

#ifndef UADET__ATTNLOSS_HPP_
#define UADET__ATTNLOSS_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "uadet/codec.hpp"
#include "uadet/error.hpp"

namespace uadet
{

/// Observation likelihood behind the attenuated regression term.
///  - Gaussian: 0.5 * exp(-s) * L + s
///  - Laplace:           exp(-s) * L + s
enum class Likelihood { Gaussian, Laplace };

inline double residual_weight(Likelihood lk) { return lk == Likelihood::Gaussian ? 0.5 : 1.0; }

struct ValueAndDerivative
{
  double value{0.0};
  double derivative{0.0};
};

/// 0.5 r^2 inside |r| < 1, |r| - 0.5 outside.
inline ValueAndDerivative smooth_l1(double r)
{
  const double a = std::abs(r);
  if (a < 1.0) {
    return {0.5 * r * r, r};
  }
  return {a - 0.5, r > 0.0 ? 1.0 : -1.0};
}

struct CrossEntropy
{
  double value{0.0};
  std::vector<double> gradient;  ///< softmax - one_hot
};

inline std::vector<double> softmax(std::span<const double> logits)
{
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double & v : p) v /= z;
  return p;
}

/// -log softmax(logits)[label], evaluated with max subtraction.
inline CrossEntropy cross_entropy(std::span<const double> logits, std::size_t label)
{
  if (logits.size() < 2 || label >= logits.size()) {
    throw ShapeError("cross_entropy needs >= 2 logits and a valid label");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (const double v : logits) z += std::exp(v - m);
  const double log_z = std::log(z) + m;
  CrossEntropy ce;
  ce.value = log_z - logits[label];
  ce.gradient.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    ce.gradient[i] = std::exp(logits[i] - log_z) - (i == label ? 1.0 : 0.0);
  }
  return ce;
}

struct AttenuatedTerm
{
  double value{0.0};
  double d_residual{0.0};  ///< c * exp(-s); the weight 1/(2 sigma^2) for the Gaussian form
  double d_log_var{0.0};   ///< -c * exp(-s) * L + 1
};

/// Residual loss `residual_loss` attenuated by the log-variance `s`.
inline AttenuatedTerm attenuated_term(
  double residual_loss, double s, Likelihood lk = Likelihood::Gaussian)
{
  const double w = residual_weight(lk) * std::exp(-s);
  return {w * residual_loss + s, w, 1.0 - w * residual_loss};
}

/// Raw head outputs of one stage for a batch (one row per sample).
struct StageOutputs
{
  Eigen::MatrixXd logits;        ///< n x 2 (background, object)
  Eigen::MatrixXd regression;    ///< n x R
  Eigen::MatrixXd log_variance;  ///< n x R
};

struct StageTargets
{
  std::vector<AssignLabel> labels;
  Eigen::MatrixXd regression;  ///< n x R; rows of non-positive samples are unused
};

struct StageGradients
{
  Eigen::MatrixXd logits;
  Eigen::MatrixXd regression;
  Eigen::MatrixXd log_variance;
};

struct LossBreakdown
{
  double rpn_reg{0.0};
  double rpn_cls{0.0};
  double frh_loc{0.0};
  double frh_cls{0.0};
  double frh_orient{0.0};
  double total{0.0};
};

struct LossOptions
{
  Likelihood likelihood{Likelihood::Gaussian};
  /// When false the log-variances are treated as 0 and the +s penalty is dropped, giving the
  /// baseline loss; the log-variance gradients are then zero.
  bool attenuation{true};
};

struct MultiLossResult
{
  LossBreakdown loss;
  StageGradients rpn;
  StageGradients frh;
};

namespace detail
{

inline void check_stage(
  const StageOutputs & out, const StageTargets & tgt, Eigen::Index reg_cols, const char * name)
{
  const Eigen::Index n = out.logits.rows();
  auto fail = [&](const std::string & what) {
    throw ShapeError(std::string(name) + ": " + what);
  };
  if (out.logits.cols() != 2) fail("logits must have 2 columns");
  if (out.regression.rows() != n || out.regression.cols() != reg_cols) fail("regression shape");
  if (out.log_variance.rows() != n || out.log_variance.cols() != reg_cols) fail("log-variance shape");
  if (tgt.regression.rows() != n || tgt.regression.cols() != reg_cols) fail("target shape");
  if (static_cast<Eigen::Index>(tgt.labels.size()) != n) fail("label count");
}

/// Mean cross entropy over non-ignored samples; writes logits gradients.
inline double classification_loss(
  const StageOutputs & out, const StageTargets & tgt, Eigen::MatrixXd & grad)
{
  std::size_t used = 0;
  for (const auto l : tgt.labels) used += (l != AssignLabel::Ignore);
  if (used == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(used);
  double total = 0.0;
  for (Eigen::Index i = 0; i < out.logits.rows(); ++i) {
    const auto l = tgt.labels[static_cast<std::size_t>(i)];
    if (l == AssignLabel::Ignore) continue;
    const double z[2] = {out.logits(i, 0), out.logits(i, 1)};
    const auto ce = cross_entropy(z, l == AssignLabel::Positive ? 1 : 0);
    total += ce.value;
    grad(i, 0) = inv * ce.gradient[0];
    grad(i, 1) = inv * ce.gradient[1];
  }
  return total * inv;
}

/// Mean over positive samples of the per-sample sum of attenuated smooth-L1 terms over columns
/// [col0, col0 + cols).
inline double regression_loss(
  const StageOutputs & out, const StageTargets & tgt, Eigen::Index col0, Eigen::Index cols,
  const LossOptions & opt, StageGradients & grad)
{
  std::size_t positives = 0;
  for (const auto l : tgt.labels) positives += (l == AssignLabel::Positive);
  if (positives == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(positives);
  double total = 0.0;
  for (Eigen::Index i = 0; i < out.regression.rows(); ++i) {
    if (tgt.labels[static_cast<std::size_t>(i)] != AssignLabel::Positive) continue;
    for (Eigen::Index j = col0; j < col0 + cols; ++j) {
      const auto base = smooth_l1(out.regression(i, j) - tgt.regression(i, j));
      const double s = opt.attenuation ? out.log_variance(i, j) : 0.0;
      const auto term = attenuated_term(base.value, s, opt.likelihood);
      total += opt.attenuation ? term.value : term.value - s;
      grad.regression(i, j) = inv * term.d_residual * base.derivative;
      grad.log_variance(i, j) = opt.attenuation ? inv * term.d_log_var : 0.0;
    }
  }
  return total * inv;
}

inline StageGradients zero_gradients(const StageOutputs & out)
{
  return {
    Eigen::MatrixXd::Zero(out.logits.rows(), out.logits.cols()),
    Eigen::MatrixXd::Zero(out.regression.rows(), out.regression.cols()),
    Eigen::MatrixXd::Zero(out.log_variance.rows(), out.log_variance.cols())};
}

}  // namespace detail

/// Five-term multi-loss: stage-1 regression (6 offsets) and classification, stage-2 corner
/// location (10 terms), classification and orientation (2 terms). Regression terms are averaged
/// over positive samples and carry one log-variance per component; classification terms are
/// averaged over non-ignored samples and are not attenuated.
inline MultiLossResult multi_loss(
  const StageOutputs & rpn, const StageTargets & rpn_targets, const StageOutputs & frh,
  const StageTargets & frh_targets, const LossOptions & opt = {})
{
  detail::check_stage(rpn, rpn_targets, kRpnTargetSize, "rpn");
  detail::check_stage(frh, frh_targets, kCornerTargetSize + kOrientTargetSize, "frh");

  MultiLossResult res;
  res.rpn = detail::zero_gradients(rpn);
  res.frh = detail::zero_gradients(frh);

  LossBreakdown & lb = res.loss;
  lb.rpn_reg = detail::regression_loss(rpn, rpn_targets, 0, kRpnTargetSize, opt, res.rpn);
  lb.rpn_cls = detail::classification_loss(rpn, rpn_targets, res.rpn.logits);
  lb.frh_loc = detail::regression_loss(frh, frh_targets, 0, kCornerTargetSize, opt, res.frh);
  lb.frh_cls = detail::classification_loss(frh, frh_targets, res.frh.logits);
  lb.frh_orient = detail::regression_loss(
    frh, frh_targets, kCornerTargetSize, kOrientTargetSize, opt, res.frh);
  lb.total = lb.rpn_reg + lb.rpn_cls + lb.frh_loc + lb.frh_cls + lb.frh_orient;
  return res;
}

}  // namespace uadet

#endif  // UADET__ATTNLOSS_HPP_
