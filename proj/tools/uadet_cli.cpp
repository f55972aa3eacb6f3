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

// uadet: command-line front end (rasterize, synth, train, infer, eval, analyze, gradcheck).

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "uadet/uadet.hpp"

namespace fs = std::filesystem;

namespace
{

using namespace uadet;

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

Config read_config(const std::string & path)
{
  if (path.empty()) {
    Config c;
    c.sync();
    return c;
  }
  return load_config(path);
}

std::string scene_name(std::size_t index)
{
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06zu", index);
  return buf;
}

/// Scene indices of the `NNNNNN<suffix>` files in a directory, ascending.
std::vector<std::size_t> list_scenes(const fs::path & dir, const std::string & suffix)
{
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::size_t> out;
  for (const auto & entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() != 6 + suffix.size() || name.compare(6, suffix.size(), suffix) != 0) continue;
    if (!std::all_of(name.begin(), name.begin() + 6, [](char c) { return c >= '0' && c <= '9'; })) continue;
    out.push_back(std::stoul(name.substr(0, 6)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path scene_file(const fs::path & dir, std::size_t index, const std::string & suffix)
{
  return dir / (scene_name(index) + suffix);
}

// -- subcommands -----------------------------------------------------------------------------

int run_rasterize(const std::string & cloud, const std::string & config, const std::string & out)
{
  const Config cfg = read_config(config);
  const BevGrid grid = rasterize(load_cloud(cloud), cfg.raster);
  save_grid(grid, out);
  std::cout << "grid " << grid.rows() << "x" << grid.cols() << "x" << grid.channels() << " -> " << out << "\n";
  return 0;
}

int run_synth(const std::string & config, std::size_t count, std::size_t start, const std::string & out)
{
  const Config cfg = read_config(config);
  fs::create_directories(out);
  for (std::size_t i = start; i < start + count; ++i) {
    const SyntheticScene s = generate_indexed(cfg.synth, i);
    save_cloud(s.cloud, scene_file(out, i, ".bin"));
    save_labels(s.gts, scene_file(out, i, ".txt"));
    detail::write_text_file(scene_file(out, i, ".noise.csv"), format_noise(s.noise));
  }
  std::cout << "wrote " << count << " scenes to " << out << "\n";
  return 0;
}

int run_train(const std::string & data, const std::string & config, const std::string & out_params, const std::string & log)
{
  const Config cfg = read_config(config);
  const auto scenes = list_scenes(data, ".bin");
  if (scenes.empty()) throw InsufficientData("no scenes in " + data);

  std::vector<std::vector<Box3D>> labels;
  for (const std::size_t i : scenes) {
    const auto gts = load_labels(scene_file(data, i, ".txt"));
    const auto noise_path = scene_file(data, i, ".noise.csv");
    std::vector<NoiseRecord> noise(gts.size());
    if (fs::exists(noise_path)) noise = parse_noise(detail::read_text_file(noise_path), noise_path.string());
    labels.push_back(noisy_labels(gts, noise, cfg.seed, i));
  }
  const auto dims = anchor_dims_from(labels, cfg.anchor_clusters, cfg.seed);
  TrainingSetBuilder builder(cfg.raster, dims, cfg.features, cfg.sampling, cfg.seed);
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    builder.add_scene(rasterize(load_cloud(scene_file(data, scenes[k], ".bin")), cfg.raster), labels[k]);
  }
  const TrainingSet ts = builder.finish();
  std::cout << "training samples: stage1 " << ts.rpn.size() << " (" << ts.rpn.positives.size()
            << " positive), stage2 " << ts.frh.size() << " (" << ts.frh.positives.size() << " positive)\n";
  const TrainResult res = train(ts, cfg.train, cfg.model);
  save_params(res.params, out_params);
  if (!log.empty()) detail::write_text_file(log, format_train_log(res.log));
  const auto & last = res.log.back().loss;
  std::printf("final loss %.6g (steps %zu)\n", last.total, res.log.size());
  return 0;
}

int run_infer(const std::string & params_path, const std::string & data, const std::string & config, const std::string & out)
{
  const Config cfg = read_config(config);
  const ModelParams params = load_params(params_path);
  fs::create_directories(out);
  std::size_t total = 0;
  const auto scenes = list_scenes(data, ".bin");
  for (const std::size_t i : scenes) {
    const BevGrid grid = rasterize(load_cloud(scene_file(data, i, ".bin")), cfg.raster);
    const auto dets = infer(params, grid, cfg.detector);
    save_detections(dets, scene_file(out, i, ".txt"));
    total += dets.size();
  }
  std::cout << "wrote " << total << " detections for " << scenes.size() << " scenes to " << out << "\n";
  return 0;
}

struct EvalArgs
{
  std::string dets;
  std::string gts;
  double iou{0.7};
  std::string metric{"bev"};
  bool ap40{false};
  std::string pr_out;
  std::string records_out;
};

int run_eval(const EvalArgs & a)
{
  const auto scenes = list_scenes(a.gts, ".txt");
  if (scenes.empty()) throw InsufficientData("no label files in " + a.gts);
  std::vector<SceneResult> results;
  std::vector<UncertaintyRecord> records;
  for (const std::size_t i : scenes) {
    SceneResult sr;
    sr.gts = load_labels(scene_file(a.gts, i, ".txt"));
    const auto det_path = scene_file(a.dets, i, ".txt");
    std::vector<Detection> dets;
    if (fs::exists(det_path)) dets = load_detections(det_path);
    sr.dets = scored_boxes(dets);
    const auto noise_path = scene_file(a.gts, i, ".noise.csv");
    std::optional<std::vector<NoiseRecord>> noise;
    if (fs::exists(noise_path)) noise = parse_noise(detail::read_text_file(noise_path), noise_path.string());
    const auto recs = make_records(dets, sr.gts, noise ? &*noise : nullptr, 0.5, records.size());
    records.insert(records.end(), recs.begin(), recs.end());
    results.push_back(std::move(sr));
  }

  EvalOptions opt;
  opt.metric = a.metric == "3d" ? IouMetric::ThreeD : IouMetric::Bev;
  opt.iou_threshold = a.iou;
  opt.interpolation = a.ap40 ? ApInterpolation::Point40 : ApInterpolation::Point11;
  const EvalResult all = evaluate(results, opt);
  std::printf("AP_%s@%.2f (%s)\n", a.metric == "3d" ? "3D" : "BEV", a.iou, a.ap40 ? "40-point" : "11-point");
  std::printf("  %-9s %8.4f\n", "all", all.ap);
  for (const Difficulty d : {Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard}) {
    opt.difficulty = d;
    try {
      std::printf("  %-9s %8.4f\n", to_string(d), evaluate(results, opt).ap);
    } catch (const NoGroundTruth &) {
      std::printf("  %-9s %8s\n", to_string(d), "n/a");
    }
  }
  if (!a.pr_out.empty()) detail::write_text_file(a.pr_out, format_pr_curve(all.curve));
  if (!a.records_out.empty()) detail::write_text_file(a.records_out, format_records(records));
  return 0;
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins)
{
  std::vector<double> e;
  for (std::size_t i = 0; i <= bins; ++i) e.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins));
  return e;
}

std::string format_multi_bins(
  std::span<const UncertaintyRecord> records, BinKey key, std::span<const double> edges)
{
  const auto rpn = binned_means(records, key, TvKind::Rpn, edges);
  const auto loc = binned_means(records, key, TvKind::FrhLoc, edges);
  const auto ori = binned_means(records, key, TvKind::FrhOrient, edges);
  std::string out = "lo,hi,count,rpn_tv,frh_loc_tv,frh_orient_tv\n";
  auto opt = [](const std::optional<double> & v) { return v ? detail::format_number(*v) : std::string(); };
  for (std::size_t i = 0; i < rpn.size(); ++i) {
    out += detail::format_number(rpn[i].lo) + "," + detail::format_number(rpn[i].hi) + "," +
           std::to_string(rpn[i].count) + "," + opt(rpn[i].mean) + "," + opt(loc[i].mean) + "," +
           opt(ori[i].mean) + "\n";
  }
  return out;
}

std::string format_pairs(
  std::span<const UncertaintyRecord> records, const char * xname, TvKind x, const char * yname, TvKind y)
{
  std::string out = std::string("id,") + xname + "," + yname + "\n";
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto & r : records) {
    xs.push_back(tv_value(r, x));
    ys.push_back(tv_value(r, y));
    out += std::to_string(r.id) + "," + detail::format_number(xs.back()) + "," + detail::format_number(ys.back()) + "\n";
  }
  try {
    std::printf("PCC(%s, %s) = %.4f over %zu records\n", xname, yname, pearson(xs, ys), xs.size());
  } catch (const DegenerateInput & e) {
    std::printf("PCC(%s, %s) undefined: %s\n", xname, yname, e.what());
  }
  return out;
}

int run_analyze(const std::string & records_path, const std::string & analysis, const std::string & out, double min_score)
{
  const auto all = parse_records(detail::read_text_file(records_path), records_path);
  const auto recs = confident(all, min_score);
  std::string text;
  if (analysis == "tv-vs-distance") {
    text = format_multi_bins(recs, BinKey::Distance, uniform_edges(0.0, 80.0, 8));
  } else if (analysis == "tv-vs-score") {
    text = format_multi_bins(recs, BinKey::Score, uniform_edges(0.5, 1.0, 10));
  } else if (analysis == "tv-vs-angle") {
    auto edges = uniform_edges(0.0, std::numbers::pi / 4.0, 9);
    edges.back() = std::nextafter(edges.back(), 1.0);  // keep offsets of exactly pi/4
    text = format_multi_bins(recs, BinKey::AngleOffset, edges);
  } else if (analysis == "difficulty-hist") {
    text = format_histogram(difficulty_histogram(recs));
  } else if (analysis == "rpn-vs-frh") {
    text = format_pairs(recs, "rpn_tv", TvKind::Rpn, "frh_tv", TvKind::Frh);
  } else {
    text = format_pairs(recs, "frh_loc_tv", TvKind::FrhLoc, "frh_orient_tv", TvKind::FrhOrient);
  }
  detail::write_text_file(out, text);
  std::cout << analysis << ": " << recs.size() << " of " << all.size() << " records (score > " << min_score
            << ") -> " << out << "\n";
  return 0;
}

int run_gradcheck(double rtol, std::size_t seeds)
{
  GradcheckOptions opt;
  opt.rtol = rtol;
  opt.seeds = seeds;
  const GradcheckReport rep = uadet::run_gradcheck(opt);
  for (const auto & s : rep.suites) {
    std::printf("%-16s checked %7zu  failed %5zu  max rel err %.3g\n", s.name.c_str(), s.checked, s.failed, s.max_rel_error);
  }
  std::printf("%s\n", rep.passed() ? "gradcheck passed" : "gradcheck FAILED");
  return rep.passed() ? 0 : kExitDomain;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"uadet: uncertainty-aware two-stage LiDAR detection toolkit"};
  app.set_version_flag("--version", std::string("uadet ") + uadet::kVersion);
  app.require_subcommand(1);

  std::string config;
  std::function<int()> action;

  auto * ras = app.add_subcommand("rasterize", "Rasterize a point cloud into a BEV grid");
  std::string ras_cloud;
  std::string ras_out;
  ras->add_option("--cloud", ras_cloud, "Point cloud (.bin)")->required();
  ras->add_option("--out", ras_out, "Output grid file")->required();
  ras->add_option("--spec,--config", config, "Config file");
  ras->callback([&] { action = [&] { return run_rasterize(ras_cloud, config, ras_out); }; });

  auto * syn = app.add_subcommand("synth", "Generate synthetic scenes");
  std::size_t syn_count = 0;
  std::size_t syn_start = 0;
  std::string syn_out;
  syn->add_option("--spec,--config", config, "Config file");
  syn->add_option("--count", syn_count, "Number of scenes")->required();
  syn->add_option("--start", syn_start, "Index of the first scene");
  syn->add_option("--out", syn_out, "Output directory")->required();
  syn->callback([&] { action = [&] { return run_synth(config, syn_count, syn_start, syn_out); }; });

  auto * trn = app.add_subcommand("train", "Train the two-stage head");
  std::string trn_data;
  std::string trn_params;
  std::string trn_log;
  trn->add_option("--data", trn_data, "Scene directory")->required();
  trn->add_option("--config", config, "Config file");
  trn->add_option("--out-params", trn_params, "Output parameter file")->required();
  trn->add_option("--log", trn_log, "Training log CSV");
  trn->callback([&] { action = [&] { return run_train(trn_data, config, trn_params, trn_log); }; });

  auto * inf = app.add_subcommand("infer", "Detect cars in every scene of a directory");
  std::string inf_params;
  std::string inf_data;
  std::string inf_out;
  inf->add_option("--params", inf_params, "Parameter file")->required();
  inf->add_option("--data", inf_data, "Scene directory")->required();
  inf->add_option("--config", config, "Config file");
  inf->add_option("--out", inf_out, "Output directory of detection files")->required();
  inf->callback([&] { action = [&] { return run_infer(inf_params, inf_data, config, inf_out); }; });

  auto * evl = app.add_subcommand("eval", "Average precision of detections against labels");
  EvalArgs ea;
  evl->add_option("--dets", ea.dets, "Detection directory")->required();
  evl->add_option("--gts", ea.gts, "Label directory")->required();
  evl->add_option("--iou", ea.iou, "IoU threshold")->check(CLI::Range(0.0, 1.0));
  evl->add_option("--metric", ea.metric, "bev or 3d")->check(CLI::IsMember({"bev", "3d"}));
  evl->add_flag("--ap40", ea.ap40, "40-point interpolation instead of 11-point");
  evl->add_option("--pr-out", ea.pr_out, "PR-curve CSV");
  evl->add_option("--records-out", ea.records_out, "Per-detection uncertainty records CSV");
  evl->callback([&] { action = [&] { return run_eval(ea); }; });

  auto * ana = app.add_subcommand("analyze", "Uncertainty analyses over a records CSV");
  std::string ana_records;
  std::string ana_kind;
  std::string ana_out;
  double ana_min_score = 0.5;
  ana->add_option("--records", ana_records, "Records CSV")->required();
  ana->add_option("--analysis", ana_kind, "Analysis")
    ->required()
    ->check(CLI::IsMember(
      {"tv-vs-distance", "tv-vs-score", "tv-vs-angle", "difficulty-hist", "rpn-vs-frh", "loc-vs-orient"}));
  ana->add_option("--out", ana_out, "Output CSV")->required();
  ana->add_option("--min-score", ana_min_score, "Keep records with score above this");
  ana->callback([&] { action = [&] { return run_analyze(ana_records, ana_kind, ana_out, ana_min_score); }; });

  auto * grd = app.add_subcommand("gradcheck", "Finite-difference check of every analytic gradient");
  double grd_rtol = 1e-4;
  std::size_t grd_seeds = 20;
  grd->add_option("--rtol", grd_rtol, "Relative tolerance");
  grd->add_option("--seeds", grd_seeds, "Number of random seeds")->check(CLI::PositiveNumber);
  grd->callback([&] { action = [&] { return run_gradcheck(grd_rtol, grd_seeds); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    return action();
  } catch (const uadet::Error & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::filesystem::filesystem_error & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}
