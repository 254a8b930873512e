#include "dsd/cli.hpp"

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsd/errors.hpp"
#include "dsd/pipeline.hpp"
#include "dsd/synthetic.hpp"

namespace dsd {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string mask_name(int f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "mask_%04d.pgm", f);
  return buf;
}

json read_json_file(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

struct MaskOptions {
  std::string scene;
  std::string out;
  std::string config;
  bool no_attention = false;
  bool no_purification = false;
  bool no_uncertainty = false;
  bool timing = false;
  std::optional<double> theta_saliency, r_factor, lambda, theta_dyn, scene_diagonal;
  std::optional<int> tau;
};

int cmd_generate(const std::string& spec_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
                 std::ostream& out, std::ostream& err) {
  SceneSpec spec;
  try {
    auto j = read_json_file(spec_path);
    if (seed) j["seed"] = *seed;
    spec = scene_spec_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(spec_path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(spec_path + ": " + e.what());
  }
  const auto scene = generate(spec);
  for (const auto& w : scene.warnings) err << "warning: " << w << "\n";
  write_generated(scene, out_dir);
  out << "generated " << out_dir << ": frames=" << spec.frames << " movers=" << spec.movers.size()
      << " seed=" << spec.seed << " size=" << spec.width << "x" << spec.height << "\n";
  return kExitOk;
}

int cmd_mask(const MaskOptions& o, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineConfig config;
  if (!o.config.empty()) {
    try {
      config = PipelineConfig::from_json(read_json_file(o.config));
    } catch (const std::invalid_argument& e) {
      throw FormatError(o.config + ": " + e.what());
    } catch (const json::exception& e) {
      throw FormatError(o.config + ": " + e.what());
    }
  }
  if (o.no_attention) config.attention_weighting = false;
  if (o.no_purification) config.purification = false;
  if (o.no_uncertainty) config.uncertainty = false;
  if (o.theta_saliency) config.theta_saliency = *o.theta_saliency;
  if (o.r_factor) config.r_factor = *o.r_factor;
  if (o.lambda) config.lambda = *o.lambda;
  if (o.theta_dyn) config.theta_dyn = *o.theta_dyn;
  if (o.scene_diagonal) config.scene_diagonal = *o.scene_diagonal;
  if (o.tau) config.tau = *o.tau;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }

  const auto bundle = load_scene(o.scene);
  const auto t1 = std::chrono::steady_clock::now();
  const auto result = run_pipeline(bundle, config);
  const auto t2 = std::chrono::steady_clock::now();

  fs::create_directories(o.out);
  for (int f = 0; f < bundle.frames; ++f) write_pgm(result.masks[static_cast<std::size_t>(f)], fs::path(o.out) / mask_name(f));
  write_ply(result.cloud, fs::path(o.out) / "cloud.ply");
  json summary = result.summary(config);
  if (o.timing) {
    const auto t3 = std::chrono::steady_clock::now();
    auto ms = [](auto a, auto b) { return std::chrono::duration<double, std::milli>(b - a).count(); };
    summary["timing_ms"] = {{"load", ms(t0, t1)}, {"pipeline", ms(t1, t2)}, {"write", ms(t2, t3)}};
  }
  write_text_atomic(fs::path(o.out) / "pipeline.json", summary.dump(2) + "\n");
  std::size_t dynamic = 0;
  for (const auto& m : result.masks) dynamic += m.count();
  out << "mask: " << bundle.frames << " frames, " << dynamic << " dynamic pixels, cloud " << result.counts.cloud_points
      << " -> purified " << result.counts.purified_points << " -> refined " << result.counts.refined_points << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& pred_dir, const std::string& scene_dir, const std::string& out_dir,
             double tol_frac, std::ostream& out) {
  const auto bundle = load_scene(scene_dir);
  const auto truth = load_ground_truth(scene_dir, bundle);
  MaskStack pred;
  for (int f = 0; f < bundle.frames; ++f) pred.push_back(read_pgm(fs::path(pred_dir) / mask_name(f)));
  for (const auto& m : pred) {
    if (m.height != bundle.height || m.width != bundle.width) throw ShapeError("predicted mask dims differ from scene");
  }
  const auto report = evaluate_masks(pred, bundle, truth, tol_frac);
  const fs::path target = out_dir.empty() ? fs::path(pred_dir) : fs::path(out_dir);
  fs::create_directories(target);
  write_text_atomic(target / "report.json", report.to_json().dump(2) + "\n");
  auto show = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("null"); };
  out << "JM=" << show(report.jm) << " FM=" << show(report.fm) << " JR=" << show(report.jr) << " FR=" << show(report.fr)
      << " ATE=" << show(report.ate) << "\n";
  return kExitOk;
}

int cmd_residuals(const std::string& scene_dir, const std::string& out_dir, std::ostream& out) {
  const auto bundle = load_scene(scene_dir);
  const auto truth = load_ground_truth(scene_dir, bundle);
  if (!truth || !bundle.gt_cameras) throw FormatError("residuals need gt.json and gt_cameras in " + scene_dir);
  const auto summary = compute_residuals(bundle, *truth);
  fs::create_directories(out_dir);
  for (const auto& p : summary.pairs) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "residual_%04d_%04d.dmt", p.reference, p.target);
    write_tensor(p.magnitude, fs::path(out_dir) / buf);
  }
  write_text_atomic(fs::path(out_dir) / "residuals.json", summary.to_json().dump(2) + "\n");
  out << "residuals: " << summary.pairs.size() << " pairs, mover median " << summary.mover_median
      << ", background median " << summary.background_median << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Training-free dynamic-static decoupling for multi-view scenes", "dsd"};
  app.require_subcommand(1);

  std::string spec_path, gen_out;
  std::optional<std::uint64_t> seed;
  auto* gen = app.add_subcommand("generate", "Render a synthetic scene bundle with ground truth");
  gen->add_option("spec", spec_path, "Scene spec JSON")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", seed, "Override the spec seed");

  MaskOptions mo;
  auto* mask = app.add_subcommand("mask", "Run the decoupling pipeline and write dynamic masks");
  mask->add_option("scene", mo.scene, "Scene directory")->required();
  mask->add_option("--out", mo.out, "Output directory")->required();
  mask->add_option("--config", mo.config, "Pipeline config JSON");
  mask->add_flag("--disable-attention-weighting", mo.no_attention, "Uniform head averaging");
  mask->add_flag("--disable-purification", mo.no_purification, "Skip the radius support filter");
  mask->add_flag("--disable-uncertainty", mo.no_uncertainty, "Skip cross-view refinement");
  mask->add_flag("--timing", mo.timing, "Record stage timings in pipeline.json");
  mask->add_option("--theta-saliency", mo.theta_saliency);
  mask->add_option("--r-factor", mo.r_factor);
  mask->add_option("--tau", mo.tau);
  mask->add_option("--lambda", mo.lambda);
  mask->add_option("--theta-dyn", mo.theta_dyn);
  mask->add_option("--scene-diagonal", mo.scene_diagonal, "Use this diagonal (m) for the purification radius");

  std::string pred_dir, eval_scene, eval_out;
  double tol_frac = kDefaultBoundaryTolerance;
  auto* ev = app.add_subcommand("eval", "Score predicted masks against scene ground truth");
  ev->add_option("pred", pred_dir, "Directory with mask_NNNN.pgm")->required();
  ev->add_option("scene", eval_scene, "Scene directory")->required();
  ev->add_option("--out", eval_out, "Report directory (default: prediction directory)");
  ev->add_option("--boundary-tol", tol_frac, "Boundary tolerance as a fraction of the image diagonal");

  std::string res_scene, res_out;
  auto* res = app.add_subcommand("residuals", "Epipolar residual maps from ground-truth motion");
  res->add_option("scene", res_scene, "Scene directory")->required();
  res->add_option("--out", res_out, "Output directory")->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(spec_path, gen_out, seed, out, err);
    if (mask->parsed()) return cmd_mask(mo, out);
    if (ev->parsed()) return cmd_eval(pred_dir, eval_scene, eval_out, tol_frac, out);
    if (res->parsed()) return cmd_residuals(res_scene, res_out, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace dsd
