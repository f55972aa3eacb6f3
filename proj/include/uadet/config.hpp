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

#ifndef UADET__CONFIG_HPP_
#define UADET__CONFIG_HPP_

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "uadet/binary_io.hpp"
#include "uadet/detector.hpp"
#include "uadet/error.hpp"
#include "uadet/pcio.hpp"
#include "uadet/synthgen.hpp"
#include "uadet/trainer.hpp"

namespace uadet
{

/// Every tunable of the pipeline. Text form: `section.key = value` lines, `#` comments.
struct Config
{
  RangeSpec raster;
  std::size_t anchor_clusters{2};
  FeatureConfig features;
  SamplingConfig sampling;
  DetectorConfig detector;
  ModelShape model;
  TrainConfig train;
  SceneSpec synth;
  std::uint64_t seed{0};

  /// Pushes the shared settings (range, stride, ground, seed) into the per-module configs.
  void sync()
  {
    synth.range = raster;
    synth.seed = seed;
    train.seed = seed;
    detector.anchor_stride = sampling.anchor_stride;
    detector.ground_z = sampling.ground_z;
  }

  void validate() const
  {
    raster.validate();
    synth.validate();
    train.validate();
    if (anchor_clusters == 0) throw ConfigError("anchor.clusters must be positive");
    if (features.subgrid == 0 || features.margin < 0.0) throw ConfigError("bad feature pooling");
    if (sampling.rpn_pos_iou < sampling.rpn_neg_iou || sampling.frh_pos_iou < sampling.frh_neg_iou) {
      throw ConfigError("assign: positive threshold below negative threshold");
    }
    if (model.rpn_hidden.empty() || model.frh_hidden.empty()) throw ConfigError("model needs a hidden layer");
  }
};

namespace detail
{

// std::uint64_t is listed separately only where it differs from std::size_t.
using Uint64Slot = std::conditional_t<std::is_same_v<std::size_t, std::uint64_t>, std::monostate, std::uint64_t>;
using ConfigField = std::variant<double *, std::size_t *, Uint64Slot *, bool *, Likelihood *,
                                 std::vector<Eigen::Index> *>;

inline std::map<std::string, ConfigField> config_fields(Config & c)
{
  return {
    {"seed", &c.seed},
    {"raster.x_min", &c.raster.x_min},
    {"raster.x_max", &c.raster.x_max},
    {"raster.y_min", &c.raster.y_min},
    {"raster.y_max", &c.raster.y_max},
    {"raster.z_min", &c.raster.z_min},
    {"raster.z_max", &c.raster.z_max},
    {"raster.xy_resolution", &c.raster.xy_resolution},
    {"raster.num_slices", &c.raster.num_slices},
    {"raster.slice_height", &c.raster.slice_height},
    {"anchor.stride", &c.sampling.anchor_stride},
    {"anchor.clusters", &c.anchor_clusters},
    {"anchor.ground_z", &c.sampling.ground_z},
    {"features.subgrid", &c.features.subgrid},
    {"features.margin", &c.features.margin},
    {"assign.rpn_pos", &c.sampling.rpn_pos_iou},
    {"assign.rpn_neg", &c.sampling.rpn_neg_iou},
    {"assign.frh_pos", &c.sampling.frh_pos_iou},
    {"assign.frh_neg", &c.sampling.frh_neg_iou},
    {"sampling.rpn_negatives", &c.sampling.rpn_negatives_per_scene},
    {"sampling.rois_per_object", &c.sampling.rois_per_object},
    {"sampling.background_rois", &c.sampling.background_rois_per_scene},
    {"sampling.roi_center_jitter", &c.sampling.roi_center_jitter},
    {"sampling.roi_size_jitter", &c.sampling.roi_size_jitter},
    {"proposals.train", &c.sampling.rois_per_scene},
    {"proposals.test", &c.detector.proposals},
    {"nms.proposal", &c.detector.proposal_nms},
    {"nms.final", &c.detector.final_nms},
    {"infer.min_score", &c.detector.min_score},
    {"model.rpn_hidden", &c.model.rpn_hidden},
    {"model.frh_hidden", &c.model.frh_hidden},
    {"train.learning_rate", &c.train.learning_rate},
    {"train.decay_factor", &c.train.decay_factor},
    {"train.decay_every", &c.train.decay_every},
    {"train.adam_beta1", &c.train.adam_beta1},
    {"train.adam_beta2", &c.train.adam_beta2},
    {"train.adam_epsilon", &c.train.adam_epsilon},
    {"train.dropout_rate", &c.train.dropout_rate},
    {"train.weight_decay", &c.train.weight_decay},
    {"train.phase1_steps", &c.train.phase1_steps},
    {"train.phase2_steps", &c.train.phase2_steps},
    {"train.batch_rpn", &c.train.batch_rpn},
    {"train.batch_frh", &c.train.batch_frh},
    {"train.rpn_positive_fraction", &c.train.rpn_positive_fraction},
    {"train.frh_positive_fraction", &c.train.frh_positive_fraction},
    {"loss.likelihood", &c.train.likelihood},
    {"loss.attenuation", &c.train.attenuation},
    {"synth.num_cars", &c.synth.num_cars},
    {"synth.region_x_min", &c.synth.region_x_min},
    {"synth.region_x_max", &c.synth.region_x_max},
    {"synth.region_y_min", &c.synth.region_y_min},
    {"synth.region_y_max", &c.synth.region_y_max},
    {"synth.min_range", &c.synth.min_range},
    {"synth.min_gap", &c.synth.min_gap},
    {"synth.length_mean", &c.synth.dims_mean[0]},
    {"synth.width_mean", &c.synth.dims_mean[1]},
    {"synth.height_mean", &c.synth.dims_mean[2]},
    {"synth.length_std", &c.synth.dims_std[0]},
    {"synth.width_std", &c.synth.dims_std[1]},
    {"synth.height_std", &c.synth.dims_std[2]},
    {"synth.p_base", &c.synth.p_base},
    {"synth.points_at_ref", &c.synth.points_at_ref},
    {"synth.ref_distance", &c.synth.ref_distance},
    {"synth.density_exponent", &c.synth.density_exponent},
    {"synth.occlusion", &c.synth.occlusion},
    {"synth.jitter", &c.synth.jitter},
    {"synth.hood_fraction", &c.synth.hood_fraction},
    {"synth.hood_height_ratio", &c.synth.hood_height_ratio},
    {"synth.label_noise_base", &c.synth.label_noise_base},
    {"synth.label_noise_per_meter", &c.synth.label_noise_per_meter},
    {"synth.label_noise_occlusion", &c.synth.label_noise_occlusion},
  };
}

inline std::string trim(const std::string & s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline void set_field(const ConfigField & field, const std::string & value, const std::string & where)
{
  auto bad = [&]() { throw ConfigError(where + ": bad value '" + value + "'"); };
  auto number = [&]() {
    const auto v = parse_double(value);
    if (!v) bad();
    return *v;
  };
  auto count = [&]() -> std::uint64_t {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) bad();
    return v;
  };
  std::visit(
    [&](auto * p) {
      using T = std::remove_pointer_t<decltype(p)>;
      if constexpr (std::is_same_v<T, double>) {
        *p = number();
      } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        *p = static_cast<T>(count());
      } else if constexpr (std::is_same_v<T, std::monostate>) {
        bad();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (value == "true") {
          *p = true;
        } else if (value == "false") {
          *p = false;
        } else {
          bad();
        }
      } else if constexpr (std::is_same_v<T, Likelihood>) {
        if (value == "gaussian-eq3") {
          *p = Likelihood::Gaussian;
        } else if (value == "laplace") {
          *p = Likelihood::Laplace;
        } else {
          bad();
        }
      } else {
        std::vector<Eigen::Index> sizes;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
          item = trim(item);
          std::int64_t v = 0;
          const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
          if (ec != std::errc{} || ptr != item.data() + item.size() || v <= 0) bad();
          sizes.push_back(static_cast<Eigen::Index>(v));
        }
        if (sizes.empty()) bad();
        *p = sizes;
      }
    },
    field);
}

inline std::string field_text(const ConfigField & field)
{
  return std::visit(
    [](auto * p) -> std::string {
      using T = std::remove_pointer_t<decltype(p)>;
      if constexpr (std::is_same_v<T, double>) {
        return format_number(*p);
      } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        return std::to_string(*p);
      } else if constexpr (std::is_same_v<T, std::monostate>) {
        return {};
      } else if constexpr (std::is_same_v<T, bool>) {
        return *p ? "true" : "false";
      } else if constexpr (std::is_same_v<T, Likelihood>) {
        return *p == Likelihood::Gaussian ? "gaussian-eq3" : "laplace";
      } else {
        std::string s;
        for (std::size_t i = 0; i < p->size(); ++i) {
          if (i) s += ',';
          s += std::to_string((*p)[i]);
        }
        return s;
      }
    },
    field);
}

}  // namespace detail

/// Applies `key = value` lines on top of `base`. Unknown keys and malformed lines raise
/// ConfigError. The result is synced and validated.
inline Config parse_config(const std::string & text, const std::string & source, Config base = {})
{
  auto fields = detail::config_fields(base);
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError(where + ": unknown key '" + key + "'");
    detail::set_field(it->second, value, where);
  }
  base.sync();
  try {
    base.validate();
  } catch (const SpecError & e) {
    throw ConfigError(source + ": " + e.what());
  }
  return base;
}

inline Config load_config(const std::filesystem::path & path)
{
  return parse_config(detail::read_text_file(path), path.string());
}

/// Canonical text form; parse_config(format_config(c)) reproduces c.
inline std::string format_config(Config c)
{
  std::string out;
  for (const auto & [key, field] : detail::config_fields(c)) {
    out += key + " = " + detail::field_text(field) + "\n";
  }
  return out;
}

}  // namespace uadet

#endif  // UADET__CONFIG_HPP_
