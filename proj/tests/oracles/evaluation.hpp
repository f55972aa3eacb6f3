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

#ifndef ORACLES__EVALUATION_HPP_
#define ORACLES__EVALUATION_HPP_

// Independent matching and 11-point AP references.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace oracle
{

/// Greedy matching from a precomputed IoU matrix (rows: detections, cols: gts). Returns the gt
/// index per detection. Processing order is chosen by repeated selection of the best remaining
/// score, lowest index first.
inline std::vector<std::optional<std::size_t>> matrix_match(
  const std::vector<double> & scores, const std::vector<std::vector<double>> & iou, double thr)
{
  const std::size_t nd = scores.size();
  const std::size_t ng = nd == 0 ? 0 : iou[0].size();
  std::vector<std::optional<std::size_t>> out(nd);
  std::vector<bool> done(nd, false);
  std::vector<bool> taken(ng, false);
  for (std::size_t step = 0; step < nd; ++step) {
    std::size_t d = nd;
    for (std::size_t i = 0; i < nd; ++i) {
      if (!done[i] && (d == nd || scores[i] > scores[d])) d = i;
    }
    done[d] = true;
    std::size_t best = ng;
    for (std::size_t g = 0; g < ng; ++g) {
      if (!taken[g] && (best == ng || iou[d][g] > iou[d][best])) best = g;
    }
    if (best < ng && iou[d][best] >= thr) {
      taken[best] = true;
      out[d] = best;
    }
  }
  return out;
}

/// 11-point interpolated AP written directly from the definition: for each recall level, the
/// best precision among all score cut-offs whose recall reaches it.
inline double ap11(std::vector<std::pair<double, bool>> dets, std::size_t num_gt)
{
  // Sort by score descending; equal scores keep input order.
  std::vector<std::size_t> idx(dets.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].first != dets[b].first ? dets[a].first > dets[b].first : a < b;
  });
  double total = 0.0;
  for (int level = 0; level <= 10; ++level) {
    double best = 0.0;
    for (std::size_t cut = 1; cut <= idx.size(); ++cut) {
      std::size_t tp = 0;
      for (std::size_t k = 0; k < cut; ++k) tp += dets[idx[k]].second;
      const double recall = static_cast<double>(tp) / static_cast<double>(num_gt);
      const double precision = static_cast<double>(tp) / static_cast<double>(cut);
      if (recall >= level / 10.0) best = std::max(best, precision);
    }
    total += best;
  }
  return total / 11.0;
}

}  // namespace oracle

#endif  // ORACLES__EVALUATION_HPP_
