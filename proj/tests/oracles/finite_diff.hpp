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

#ifndef ORACLES__FINITE_DIFF_HPP_
#define ORACLES__FINITE_DIFF_HPP_

// Central finite differences and a mixed absolute/relative comparison.

#include <algorithm>
#include <cmath>

namespace oracle
{

template <typename Fn>
double central_diff(Fn && f, double x, double h = 1e-6)
{
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// |a - b| <= rtol * max(|a|, |b|) + atol.
inline bool close(double a, double b, double rtol, double atol = 1e-8)
{
  return std::abs(a - b) <= rtol * std::max(std::abs(a), std::abs(b)) + atol;
}

/// Golden-section search for the minimizer of a unimodal function on [lo, hi].
template <typename Fn>
double golden_min(Fn && f, double lo, double hi, double tol = 1e-10)
{
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  while (b - a > tol) {
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return 0.5 * (a + b);
}

}  // namespace oracle

#endif  // ORACLES__FINITE_DIFF_HPP_
