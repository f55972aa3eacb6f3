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

#ifndef UADET__TOYMODEL_HPP_
#define UADET__TOYMODEL_HPP_

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "uadet/attnloss.hpp"
#include "uadet/binary_io.hpp"
#include "uadet/codec.hpp"
#include "uadet/error.hpp"
#include "uadet/features.hpp"
#include "uadet/random.hpp"

namespace uadet
{

/// Fully connected layer y = W x + b; W is out x in, b is out x 1.
struct DenseLayer
{
  Eigen::MatrixXd weight;
  Eigen::MatrixXd bias;

  Eigen::Index in() const { return weight.cols(); }
  Eigen::Index out() const { return weight.rows(); }

  static DenseLayer zeros(Eigen::Index in, Eigen::Index out)
  {
    return {Eigen::MatrixXd::Zero(out, in), Eigen::MatrixXd::Zero(out, 1)};
  }

  /// Batch forward: rows of `x` are samples.
  Eigen::MatrixXd apply(const Eigen::MatrixXd & x) const
  {
    Eigen::MatrixXd z = x * weight.transpose();
    z.rowwise() += bias.col(0).transpose();
    return z;
  }
};

/// One stage of the two-stage head: ReLU hidden layers feeding three linear heads (class logits,
/// regression, log-variance).
struct StageNet
{
  std::vector<DenseLayer> hidden;
  DenseLayer cls;
  DenseLayer reg;
  DenseLayer log_var;

  Eigen::Index input_size() const { return hidden.empty() ? cls.in() : hidden.front().in(); }
  Eigen::Index regression_size() const { return reg.out(); }

  /// Visits every tensor in a fixed order together with the matching tensor of `other`.
  template <typename Other, typename Fn>
  void visit(Other & other, Fn && fn)
  {
    for (std::size_t k = 0; k < hidden.size(); ++k) {
      fn(hidden[k].weight, other.hidden[k].weight, true);
      fn(hidden[k].bias, other.hidden[k].bias, false);
    }
    for (auto [a, b] : {std::pair{&cls, &other.cls}, std::pair{&reg, &other.reg}, std::pair{&log_var, &other.log_var}}) {
      fn(a->weight, b->weight, true);
      fn(a->bias, b->bias, false);
    }
  }

  StageNet zeros_like() const
  {
    StageNet z;
    for (const auto & h : hidden) z.hidden.push_back(DenseLayer::zeros(h.in(), h.out()));
    z.cls = DenseLayer::zeros(cls.in(), cls.out());
    z.reg = DenseLayer::zeros(reg.in(), reg.out());
    z.log_var = DenseLayer::zeros(log_var.in(), log_var.out());
    return z;
  }

  /// He-initialized hidden layers, small head weights, zero log-variance head (sigma^2 = 1).
  static StageNet create(
    Eigen::Index input, const std::vector<Eigen::Index> & hidden_sizes, Eigen::Index reg_size,
    Rng & rng)
  {
    StageNet net;
    Eigen::Index prev = input;
    auto fill = [&](Eigen::MatrixXd & m, double stddev) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, stddev);
    };
    for (const Eigen::Index h : hidden_sizes) {
      DenseLayer layer = DenseLayer::zeros(prev, h);
      fill(layer.weight, std::sqrt(2.0 / static_cast<double>(prev)));
      net.hidden.push_back(std::move(layer));
      prev = h;
    }
    net.cls = DenseLayer::zeros(prev, 2);
    net.reg = DenseLayer::zeros(prev, reg_size);
    net.log_var = DenseLayer::zeros(prev, reg_size);
    fill(net.cls.weight, 0.01);
    fill(net.reg.weight, 0.01);
    return net;
  }
};

/// Key of the counter-based dropout stream: the mask of (layer, row, unit) is a pure function of
/// (seed, step, stage, layer, row, unit).
struct DropoutKey
{
  std::uint64_t seed{0};
  std::uint64_t step{0};
  std::uint64_t stage{0};
};

struct ForwardOptions
{
  bool train_mode{false};
  double dropout_rate{0.0};
  DropoutKey key{};
  /// Forces the log-variance outputs to zero (the frozen-head phase).
  bool zero_log_variance{false};
};

/// Activations kept for the backward pass.
struct StageTrace
{
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;    ///< pre-activation of each hidden layer
  std::vector<Eigen::MatrixXd> scale;  ///< ReLU * dropout multiplier of each hidden layer
  std::vector<Eigen::MatrixXd> act;    ///< output of each hidden layer
  StageOutputs outputs;
};

inline StageTrace forward_trace(const StageNet & net, const Eigen::MatrixXd & x, const ForwardOptions & opt)
{
  if (x.cols() != net.input_size()) {
    throw ShapeError(
      "forward: feature width " + std::to_string(x.cols()) + " != network input " +
      std::to_string(net.input_size()));
  }
  StageTrace t;
  t.input = x;
  const Eigen::MatrixXd * a = &t.input;
  const bool drop = opt.train_mode && opt.dropout_rate > 0.0;
  const double keep_scale = drop ? 1.0 / (1.0 - opt.dropout_rate) : 1.0;
  for (std::size_t k = 0; k < net.hidden.size(); ++k) {
    Eigen::MatrixXd z = net.hidden[k].apply(*a);
    Eigen::MatrixXd m(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        double s = z(i, j) > 0.0 ? 1.0 : 0.0;
        if (drop && s > 0.0) {
          const double u = to_unit(hash_keys(
            {opt.key.seed, opt.key.step, opt.key.stage, static_cast<std::uint64_t>(k),
             static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)}));
          s = u < opt.dropout_rate ? 0.0 : keep_scale;
        }
        m(i, j) = s;
      }
    }
    t.act.push_back(z.cwiseProduct(m));
    t.pre.push_back(std::move(z));
    t.scale.push_back(std::move(m));
    a = &t.act.back();
  }
  t.outputs.logits = net.cls.apply(*a);
  t.outputs.regression = net.reg.apply(*a);
  if (opt.zero_log_variance) {
    t.outputs.log_variance = Eigen::MatrixXd::Zero(a->rows(), net.log_var.out());
  } else {
    t.outputs.log_variance = net.log_var.apply(*a);
  }
  return t;
}

/// Forward pass returning only the head outputs.
inline StageOutputs forward(const StageNet & net, const Eigen::MatrixXd & x, const ForwardOptions & opt = {})
{
  return forward_trace(net, x, opt).outputs;
}

/// Backpropagates head-output gradients into parameter gradients.
inline StageNet backward(
  const StageNet & net, const StageTrace & t, const StageGradients & g, bool zero_log_variance = false)
{
  StageNet grad = net.zeros_like();
  const Eigen::MatrixXd & last = t.act.empty() ? t.input : t.act.back();
  auto head = [&](const DenseLayer & layer, DenseLayer & gl, const Eigen::MatrixXd & go,
                  Eigen::MatrixXd & d_last) {
    gl.weight = go.transpose() * last;
    gl.bias = go.colwise().sum().transpose();
    d_last.noalias() += go * layer.weight;
  };
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(last.rows(), last.cols());
  head(net.cls, grad.cls, g.logits, d);
  head(net.reg, grad.reg, g.regression, d);
  if (!zero_log_variance) {
    head(net.log_var, grad.log_var, g.log_variance, d);
  }
  for (std::size_t k = net.hidden.size(); k-- > 0;) {
    const Eigen::MatrixXd dz = d.cwiseProduct(t.scale[k]);
    const Eigen::MatrixXd & below = k == 0 ? t.input : t.act[k - 1];
    grad.hidden[k].weight = dz.transpose() * below;
    grad.hidden[k].bias = dz.colwise().sum().transpose();
    if (k > 0) d = dz * net.hidden[k].weight;
  }
  return grad;
}

/// Parameters of the whole two-stage head plus the anchor set and pooling layout it was trained
/// with.
struct ModelParams
{
  StageNet rpn;
  StageNet frh;
  std::vector<AnchorDims> anchor_dims;
  FeatureConfig features;

  template <typename Fn>
  void visit(ModelParams & other, Fn && fn)
  {
    rpn.visit(other.rpn, fn);
    frh.visit(other.frh, fn);
  }

  ModelParams zeros_like() const
  {
    return {rpn.zeros_like(), frh.zeros_like(), anchor_dims, features};
  }

  std::size_t parameter_count() const
  {
    std::size_t n = 0;
    auto self = *this;
    auto other = zeros_like();
    self.visit(other, [&](Eigen::MatrixXd & p, Eigen::MatrixXd &, bool) { n += static_cast<std::size_t>(p.size()); });
    return n;
  }
};

struct ModelShape
{
  std::vector<Eigen::Index> rpn_hidden{64};
  std::vector<Eigen::Index> frh_hidden{128};
};

inline ModelParams create_model(
  std::size_t feature_dim, const ModelShape & shape, const std::vector<AnchorDims> & anchors,
  const FeatureConfig & features, std::uint64_t seed)
{
  Rng rng(hash_keys({seed, 0x1417}));
  ModelParams p;
  p.rpn = StageNet::create(static_cast<Eigen::Index>(feature_dim), shape.rpn_hidden, kRpnTargetSize, rng);
  p.frh = StageNet::create(
    static_cast<Eigen::Index>(feature_dim), shape.frh_hidden, kCornerTargetSize + kOrientTargetSize, rng);
  p.anchor_dims = anchors;
  p.features = features;
  return p;
}

// -- parameter file ----------------------------------------------------------------------------
//
// "UADPRM01", u32 version, u32 tensor count, then per tensor {u32 name length, name bytes,
// u32 rows, u32 cols}, then every tensor's values as little-endian float32, row-major, in table
// order.

inline constexpr std::uint32_t kParamsVersion = 1;

namespace detail
{

struct NamedTensor
{
  std::string name;
  Eigen::MatrixXd value;
};

inline void collect_stage(const StageNet & s, const std::string & prefix, std::vector<NamedTensor> & out)
{
  for (std::size_t k = 0; k < s.hidden.size(); ++k) {
    out.push_back({prefix + ".hidden" + std::to_string(k) + ".weight", s.hidden[k].weight});
    out.push_back({prefix + ".hidden" + std::to_string(k) + ".bias", s.hidden[k].bias});
  }
  for (auto [name, layer] : {std::pair{"cls", &s.cls}, std::pair{"reg", &s.reg}, std::pair{"log_var", &s.log_var}}) {
    out.push_back({prefix + "." + name + ".weight", layer->weight});
    out.push_back({prefix + "." + name + ".bias", layer->bias});
  }
}

inline StageNet parse_stage(const std::vector<NamedTensor> & tensors, const std::string & prefix)
{
  auto find = [&](const std::string & name) -> const Eigen::MatrixXd * {
    for (const auto & t : tensors) if (t.name == name) return &t.value;
    return nullptr;
  };
  auto need = [&](const std::string & name) {
    const auto * m = find(name);
    if (!m) throw FormatError("params: missing tensor " + name);
    return *m;
  };
  StageNet s;
  for (std::size_t k = 0;; ++k) {
    const std::string base = prefix + ".hidden" + std::to_string(k);
    if (!find(base + ".weight")) break;
    s.hidden.push_back({need(base + ".weight"), need(base + ".bias")});
  }
  s.cls = {need(prefix + ".cls.weight"), need(prefix + ".cls.bias")};
  s.reg = {need(prefix + ".reg.weight"), need(prefix + ".reg.bias")};
  s.log_var = {need(prefix + ".log_var.weight"), need(prefix + ".log_var.bias")};
  Eigen::Index prev = s.input_size();
  for (const auto & h : s.hidden) {
    if (h.in() != prev || h.bias.rows() != h.out() || h.bias.cols() != 1) {
      throw FormatError("params: inconsistent hidden shapes in " + prefix);
    }
    prev = h.out();
  }
  for (const DenseLayer * l : {&s.cls, &s.reg, &s.log_var}) {
    if (l->in() != prev || l->bias.rows() != l->out()) {
      throw FormatError("params: inconsistent head shapes in " + prefix);
    }
  }
  if (s.cls.out() != 2 || s.reg.out() != s.log_var.out()) {
    throw FormatError("params: bad head sizes in " + prefix);
  }
  return s;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_params(const ModelParams & p)
{
  std::vector<detail::NamedTensor> tensors;
  detail::collect_stage(p.rpn, "rpn", tensors);
  detail::collect_stage(p.frh, "frh", tensors);
  Eigen::MatrixXd anchors(static_cast<Eigen::Index>(p.anchor_dims.size()), 3);
  for (std::size_t i = 0; i < p.anchor_dims.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    anchors(r, 0) = p.anchor_dims[i].l;
    anchors(r, 1) = p.anchor_dims[i].w;
    anchors(r, 2) = p.anchor_dims[i].h;
  }
  tensors.push_back({"anchor_dims", anchors});
  Eigen::MatrixXd feat(1, 2);
  feat << static_cast<double>(p.features.subgrid), p.features.margin;
  tensors.push_back({"feature_config", feat});

  std::vector<std::uint8_t> out;
  const char magic[8] = {'U', 'A', 'D', 'P', 'R', 'M', '0', '1'};
  out.insert(out.end(), magic, magic + 8);
  detail::put_u32(out, kParamsVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto & t : tensors) {
    detail::put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    detail::put_u32(out, static_cast<std::uint32_t>(t.value.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(t.value.cols()));
  }
  for (const auto & t : tensors) {
    for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.value.cols(); ++j) {
        detail::put_f32(out, static_cast<float>(t.value(i, j)));
      }
    }
  }
  return out;
}

inline ModelParams decode_params(const std::vector<std::uint8_t> & bytes)
{
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw FormatError("params: truncated file");
  };
  auto u32 = [&]() {
    need(4);
    const auto v = detail::get_u32(&bytes[pos]);
    pos += 4;
    return v;
  };
  need(8);
  if (std::memcmp(bytes.data(), "UADPRM01", 8) != 0) throw FormatError("params: bad magic");
  pos = 8;
  if (const auto v = u32(); v != kParamsVersion) {
    throw FormatError("params: unsupported version " + std::to_string(v));
  }
  const std::uint32_t count = u32();
  std::vector<detail::NamedTensor> tensors(count);
  for (auto & t : tensors) {
    const std::uint32_t len = u32();
    need(len);
    t.name.assign(reinterpret_cast<const char *>(&bytes[pos]), len);
    pos += len;
    const std::uint32_t rows = u32();
    const std::uint32_t cols = u32();
    t.value.resize(rows, cols);
  }
  for (auto & t : tensors) {
    for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.value.cols(); ++j) {
        need(4);
        t.value(i, j) = detail::get_f32(&bytes[pos]);
        pos += 4;
      }
    }
  }
  if (pos != bytes.size()) throw FormatError("params: trailing bytes");

  ModelParams p;
  p.rpn = detail::parse_stage(tensors, "rpn");
  p.frh = detail::parse_stage(tensors, "frh");
  for (const auto & t : tensors) {
    if (t.name == "anchor_dims" && t.value.cols() == 3) {
      for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
        p.anchor_dims.push_back({t.value(i, 0), t.value(i, 1), t.value(i, 2)});
      }
    } else if (t.name == "feature_config" && t.value.size() == 2) {
      p.features.subgrid = static_cast<std::size_t>(std::lround(t.value(0, 0)));
      p.features.margin = t.value(0, 1);
    }
  }
  if (p.anchor_dims.empty()) throw FormatError("params: missing anchor dims");
  return p;
}

inline void save_params(const ModelParams & p, const std::filesystem::path & path)
{
  detail::write_file_bytes(path, encode_params(p));
}

inline ModelParams load_params(const std::filesystem::path & path)
{
  return decode_params(detail::read_file_bytes(path));
}

}  // namespace uadet

#endif  // UADET__TOYMODEL_HPP_
