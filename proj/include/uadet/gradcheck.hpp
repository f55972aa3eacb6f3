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

#ifndef UADET__GRADCHECK_HPP_
#define UADET__GRADCHECK_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uadet/attnloss.hpp"
#include "uadet/random.hpp"
#include "uadet/toymodel.hpp"
#include "uadet/trainer.hpp"

namespace uadet
{

struct GradcheckOptions
{
  double rtol{1e-4};
  double atol{1e-8};
  double step{1e-6};
  std::size_t seeds{20};
  std::uint64_t base_seed{0};
  std::size_t batch{8};
  std::vector<Eigen::Index> rpn_hidden{16};
  std::vector<Eigen::Index> frh_hidden{24};
  std::size_t input_dim{47};
};

struct GradcheckSuite
{
  std::string name;
  std::size_t checked{0};
  std::size_t failed{0};
  double max_rel_error{0.0};
};

struct GradcheckReport
{
  std::vector<GradcheckSuite> suites;

  bool passed() const
  {
    return std::all_of(suites.begin(), suites.end(), [](const auto & s) { return s.failed == 0 && s.checked > 0; });
  }
};

namespace detail
{

class GradAccumulator
{
public:
  GradAccumulator(GradcheckSuite & suite, const GradcheckOptions & opt) : suite_(suite), opt_(opt) {}

  void check(double analytic, double numeric)
  {
    const double err = std::abs(analytic - numeric);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    ++suite_.checked;
    if (err > opt_.rtol * scale + opt_.atol) ++suite_.failed;
    if (scale > 0.0) suite_.max_rel_error = std::max(suite_.max_rel_error, err / std::max(scale, opt_.atol / opt_.rtol));
  }

private:
  GradcheckSuite & suite_;
  const GradcheckOptions & opt_;
};

inline double central_difference(const std::function<double(double)> & f, double x, double h)
{
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, double sd, Rng & rng)
{
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, sd);
  return m;
}

inline StageTargets random_targets(Eigen::Index n, Eigen::Index cols, Rng & rng)
{
  StageTargets t;
  t.regression = random_matrix(n, cols, 1.0, rng);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Guarantee at least one positive and one negative.
    if (i == 0) {
      t.labels.push_back(AssignLabel::Positive);
    } else if (i == 1) {
      t.labels.push_back(AssignLabel::Negative);
    } else {
      const auto k = rng.below(3);
      t.labels.push_back(k == 0 ? AssignLabel::Positive : (k == 1 ? AssignLabel::Negative : AssignLabel::Ignore));
    }
  }
  return t;
}

inline StageOutputs random_outputs(Eigen::Index n, Eigen::Index cols, Rng & rng)
{
  return {random_matrix(n, 2, 2.0, rng), random_matrix(n, cols, 1.5, rng), random_matrix(n, cols, 1.0, rng)};
}

}  // namespace detail

/// Central finite differences against every analytic partial: smooth L1, cross entropy, the
/// attenuated term (both likelihoods), the five-term multi-loss with respect to all head outputs,
/// and the full two-stage model with respect to every parameter (with and without dropout).
inline GradcheckReport run_gradcheck(const GradcheckOptions & opt = {})
{
  GradcheckReport rep;
  rep.suites = {{"smooth_l1"}, {"cross_entropy"}, {"attenuated_term"}, {"multi_loss"}, {"model"}};
  const double h = opt.step;

  for (std::size_t k = 0; k < opt.seeds; ++k) {
    const std::uint64_t seed = hash_keys({opt.base_seed, k, 0x6C});
    Rng rng(seed);

    {
      detail::GradAccumulator acc(rep.suites[0], opt);
      for (int i = 0; i < 5; ++i) {
        double r = rng.uniform(-3.0, 3.0);
        while (std::abs(std::abs(r) - 1.0) < 1e-4) r = rng.uniform(-3.0, 3.0);
        acc.check(smooth_l1(r).derivative, detail::central_difference([](double x) { return smooth_l1(x).value; }, r, h));
      }
    }
    {
      detail::GradAccumulator acc(rep.suites[1], opt);
      const std::size_t n = 2 + rng.below(4);
      std::vector<double> z(n);
      for (double & v : z) v = rng.normal(0.0, 3.0);
      const std::size_t label = rng.below(n);
      const auto ce = cross_entropy(z, label);
      for (std::size_t i = 0; i < n; ++i) {
        auto f = [&](double x) {
          auto zz = z;
          zz[i] = x;
          return cross_entropy(zz, label).value;
        };
        acc.check(ce.gradient[i], detail::central_difference(f, z[i], h));
      }
    }
    {
      detail::GradAccumulator acc(rep.suites[2], opt);
      for (const Likelihood lk : {Likelihood::Gaussian, Likelihood::Laplace}) {
        const double L = rng.uniform(0.0, 4.0);
        const double s = rng.uniform(-3.0, 3.0);
        const auto t = attenuated_term(L, s, lk);
        acc.check(t.d_residual, detail::central_difference([&](double x) { return attenuated_term(x, s, lk).value; }, L, h));
        acc.check(t.d_log_var, detail::central_difference([&](double x) { return attenuated_term(L, x, lk).value; }, s, h));
      }
    }
    {
      detail::GradAccumulator acc(rep.suites[3], opt);
      const auto n = static_cast<Eigen::Index>(opt.batch);
      StageOutputs r = detail::random_outputs(n, kRpnTargetSize, rng);
      StageOutputs f = detail::random_outputs(n, kCornerTargetSize + kOrientTargetSize, rng);
      const StageTargets rt = detail::random_targets(n, kRpnTargetSize, rng);
      const StageTargets ft = detail::random_targets(n, kCornerTargetSize + kOrientTargetSize, rng);
      LossOptions lo;
      lo.likelihood = k % 2 == 0 ? Likelihood::Gaussian : Likelihood::Laplace;
      const MultiLossResult res = multi_loss(r, rt, f, ft, lo);
      auto sweep = [&](Eigen::MatrixXd & m, const Eigen::MatrixXd & g) {
        for (Eigen::Index i = 0; i < m.size(); ++i) {
          const double x0 = m.data()[i];
          auto fn = [&](double x) {
            m.data()[i] = x;
            const double v = multi_loss(r, rt, f, ft, lo).loss.total;
            m.data()[i] = x0;
            return v;
          };
          acc.check(g.data()[i], detail::central_difference(fn, x0, h));
        }
      };
      sweep(r.logits, res.rpn.logits);
      sweep(r.regression, res.rpn.regression);
      sweep(r.log_variance, res.rpn.log_variance);
      sweep(f.logits, res.frh.logits);
      sweep(f.regression, res.frh.regression);
      sweep(f.log_variance, res.frh.log_variance);
    }
    {
      detail::GradAccumulator acc(rep.suites[4], opt);
      const auto n = static_cast<Eigen::Index>(opt.batch);
      const auto d = static_cast<Eigen::Index>(opt.input_dim);
      ModelShape shape{opt.rpn_hidden, opt.frh_hidden};
      ModelParams params = create_model(opt.input_dim, shape, {}, {}, seed);
      // Non-trivial heads so every path carries gradient.
      params.visit(params, [&](Eigen::MatrixXd & p, Eigen::MatrixXd &, bool) {
        for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] += rng.normal(0.0, 0.1);
      });
      Batch rb{detail::random_matrix(n, d, 1.0, rng), detail::random_targets(n, kRpnTargetSize, rng)};
      Batch fb{detail::random_matrix(n, d, 1.0, rng), detail::random_targets(n, kCornerTargetSize + kOrientTargetSize, rng)};
      LossOptions lo;
      lo.likelihood = k % 2 == 0 ? Likelihood::Gaussian : Likelihood::Laplace;
      const bool dropout = k % 4 >= 2;
      const ForwardOptions rf{dropout, dropout ? 0.5 : 0.0, {seed, k, 1}, false};
      const ForwardOptions ff{dropout, dropout ? 0.5 : 0.0, {seed, k, 2}, false};
      StepGradients sg = compute_step(params, rb, fb, lo, rf, ff);
      ModelParams probe = params;
      probe.visit(sg.grads, [&](Eigen::MatrixXd & p, Eigen::MatrixXd & g, bool) {
        for (Eigen::Index i = 0; i < p.size(); ++i) {
          const double x0 = p.data()[i];
          auto fn = [&](double x) {
            p.data()[i] = x;
            const double v = compute_step(probe, rb, fb, lo, rf, ff).loss.loss.total;
            p.data()[i] = x0;
            return v;
          };
          acc.check(g.data()[i], detail::central_difference(fn, x0, h));
        }
      });
    }
  }
  return rep;
}

}  // namespace uadet

#endif  // UADET__GRADCHECK_HPP_
