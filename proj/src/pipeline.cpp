#include "dsd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>

#include "dsd/errors.hpp"

namespace dsd {
using nlohmann::json;

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + what);
  };
  require(eps > 0.0, "eps must be > 0");
  require(theta_saliency >= 0.0, "theta_saliency must be >= 0");
  require(r_factor >= 0.0, "r_factor must be >= 0");
  require(tau >= 0, "tau must be >= 0");
  require(lambda >= 0.0, "lambda must be >= 0");
  require(theta_dyn >= 0.0, "theta_dyn must be >= 0");
  require(occlusion_tolerance >= 0.0, "occlusion_tolerance must be >= 0");
  require(boundary_tol_frac >= 0.0, "boundary_tol_frac must be >= 0");
  require(!scene_diagonal || *scene_diagonal >= 0.0, "scene_diagonal must be >= 0");
}

json PipelineConfig::to_json() const {
  json j;
  j["eps"] = eps;
  j["theta_saliency"] = theta_saliency;
  j["r_factor"] = r_factor;
  j["tau"] = tau;
  j["lambda"] = lambda;
  j["theta_dyn"] = theta_dyn;
  j["occlusion_tolerance"] = occlusion_tolerance;
  j["boundary_tol_frac"] = boundary_tol_frac;
  j["scene_diagonal"] = scene_diagonal ? json(*scene_diagonal) : json(nullptr);
  j["attention_weighting"] = attention_weighting;
  j["purification"] = purification;
  j["uncertainty"] = uncertainty;
  return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  static const std::set<std::string> known = {
      "eps", "theta_saliency", "r_factor", "tau", "lambda", "theta_dyn", "occlusion_tolerance",
      "boundary_tol_frac", "scene_diagonal", "attention_weighting", "purification", "uncertainty"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw std::invalid_argument("config: unknown key '" + k + "'");
  }
  PipelineConfig c;
  c.eps = j.value("eps", c.eps);
  c.theta_saliency = j.value("theta_saliency", c.theta_saliency);
  c.r_factor = j.value("r_factor", c.r_factor);
  c.tau = j.value("tau", c.tau);
  c.lambda = j.value("lambda", c.lambda);
  c.theta_dyn = j.value("theta_dyn", c.theta_dyn);
  c.occlusion_tolerance = j.value("occlusion_tolerance", c.occlusion_tolerance);
  c.boundary_tol_frac = j.value("boundary_tol_frac", c.boundary_tol_frac);
  if (j.contains("scene_diagonal") && !j["scene_diagonal"].is_null()) c.scene_diagonal = j["scene_diagonal"].get<double>();
  c.attention_weighting = j.value("attention_weighting", c.attention_weighting);
  c.purification = j.value("purification", c.purification);
  c.uncertainty = j.value("uncertainty", c.uncertainty);
  c.validate();
  return c;
}

PipelineResult run_pipeline(const SceneBundle& bundle, const PipelineConfig& config,
                            std::span<const PixelRef> extra_pixels) {
  config.validate();
  PipelineResult out;
  const auto T = static_cast<std::size_t>(bundle.frames);
  const HeadFusion fusion = config.attention_weighting ? HeadFusion::variance_weighted : HeadFusion::uniform;
  out.saliency.resize(T);
  out.initial_masks.resize(T);
  const auto n_frames = static_cast<std::int64_t>(T);
#pragma omp parallel for schedule(static)
  for (std::int64_t f = 0; f < n_frames; ++f) {
    const auto i = static_cast<std::size_t>(f);
    out.saliency[i] = aggregate(HeadStack::from_tensor(bundle.attention[i], static_cast<int>(f)), config.eps, fusion);
    out.initial_masks[i] = binarize(out.saliency[i], config.theta_saliency, bundle.patch);
  }
  for (const auto& p : extra_pixels) {
    if (p.frame < 0 || p.frame >= bundle.frames || p.row < 0 || p.row >= bundle.height || p.col < 0 || p.col >= bundle.width) {
      throw ShapeError("injected pixel outside the scene");
    }
    out.initial_masks[static_cast<std::size_t>(p.frame)].set(p.row, p.col);
  }
  for (const auto& m : out.initial_masks) out.counts.saliency_pixels += m.count();

  if (!config.purification && !config.uncertainty) {
    out.masks = out.initial_masks;
    return out;
  }

  out.cloud = unproject_mask(bundle, out.initial_masks, out.saliency);
  out.counts.cloud_points = out.cloud.points.size();
  if (config.purification) {
    out.counts.scene_diagonal = config.scene_diagonal ? *config.scene_diagonal : scene_diagonal(out.cloud);
    out.counts.radius = config.r_factor * out.counts.scene_diagonal;
    out.cloud = purify_with_radius(out.cloud, config.tau, out.counts.radius);
  }
  out.counts.purified_points = out.cloud.alive_count();

  if (!config.uncertainty) {
    out.masks = mask_from_cloud(out.cloud, bundle.frames, bundle.height, bundle.width);
    return out;
  }
  const auto confidence = activate_all(bundle);
  RefineOptions options;
  options.theta_dyn = config.theta_dyn;
  options.lambda = config.lambda;
  options.occlusion_tolerance = config.occlusion_tolerance;
  auto refined = refine_masks(out.cloud, bundle, confidence, options);
  for (std::size_t i = 0; i < out.cloud.points.size(); ++i) {
    if (out.cloud.points[i].alive && !refined.verdicts[i].kept) out.cloud.points[i].alive = false;
  }
  out.counts.refined_points = refined.kept;
  out.counts.unobserved_points = refined.unobserved;
  out.masks = std::move(refined.masks);
  return out;
}

json PipelineResult::summary(const PipelineConfig& config) const {
  json j;
  j["config"] = config.to_json();
  j["counts"] = {{"saliency_pixels", counts.saliency_pixels},
                 {"cloud_points", counts.cloud_points},
                 {"purified_points", counts.purified_points},
                 {"refined_points", counts.refined_points},
                 {"unobserved_points", counts.unobserved_points},
                 {"scene_diagonal", counts.scene_diagonal},
                 {"radius", counts.radius}};
  json weights = json::array();
  for (const auto& s : saliency) weights.push_back(s.head_weights);
  j["head_weights"] = weights;
  std::vector<std::size_t> mask_pixels;
  for (const auto& m : masks) mask_pixels.push_back(m.count());
  j["mask_pixels"] = mask_pixels;
  return j;
}

namespace {

std::vector<Vec3> unproject_all(const MaskStack& masks, const std::vector<TensorMap>& depths,
                                const std::vector<CameraModel>& cams) {
  std::vector<Vec3> pts;
  for (std::size_t f = 0; f < masks.size(); ++f) {
    const auto& m = masks[f];
    for (int r = 0; r < m.height; ++r) {
      for (int c = 0; c < m.width; ++c) {
        if (!m.at(r, c)) continue;
        const double d = depths[f].at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        if (d > 0.0) pts.push_back(unproject(Vec2(c, r), d, cams[f]));
      }
    }
  }
  return pts;
}

}  // namespace

MetricReport evaluate_masks(const MaskStack& pred, const SceneBundle& bundle,
                            const std::optional<GroundTruthExtras>& truth, double tol_frac) {
  if (static_cast<int>(pred.size()) != bundle.frames) throw ShapeError("prediction frame count differs from scene");
  MetricReport rep;
  if (bundle.gt_masks) {
    rep.jm_per_frame = jaccard_per_frame(pred, *bundle.gt_masks);
    rep.fm_per_frame = boundary_f_per_frame(pred, *bundle.gt_masks, tol_frac);
    auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    rep.jm = mean(rep.jm_per_frame);
    rep.fm = mean(rep.fm_per_frame);
    rep.jr = recall_fraction(rep.jm_per_frame);
    rep.fr = recall_fraction(rep.fm_per_frame);
  }
  if (bundle.gt_cameras) rep.ate = ate(bundle.cameras, *bundle.gt_cameras);
  if (bundle.gt_masks) {
    const auto pred_pts = unproject_all(pred, bundle.depths, bundle.cameras);
    const auto& gt_cams = bundle.gt_cameras ? *bundle.gt_cameras : bundle.cameras;
    const auto gt_pts = unproject_all(*bundle.gt_masks, truth ? truth->depths : bundle.depths, gt_cams);
    if (!pred_pts.empty() && !gt_pts.empty()) rep.cloud = cloud_metrics(pred_pts, gt_pts);
  }
  return rep;
}

ResidualSummary compute_residuals(const SceneBundle& bundle, const GroundTruthExtras& truth) {
  if (!bundle.gt_cameras) throw ShapeError("residuals need ground-truth cameras");
  if (static_cast<int>(truth.depths.size()) != bundle.frames || static_cast<int>(truth.labels.size()) != bundle.frames) {
    throw ShapeError("residuals need ground-truth depth and labels for every frame");
  }
  const auto& cams = *bundle.gt_cameras;
  ResidualSummary out;
  std::vector<double> all_mover, all_background;
  for (int r = 0; r + 1 < bundle.frames; ++r) {
    const int t = r + 1;
    const auto& ref = cams[static_cast<std::size_t>(r)];
    const auto& tgt = cams[static_cast<std::size_t>(t)];
    if (RelativePose::between(ref, tgt).t.norm() <= kMinBaseline) continue;
    const EssentialMatrix E = essential_from_poses(ref, tgt);
    ResidualPair pair{r, t, TensorMap::zeros({static_cast<std::uint32_t>(bundle.height), static_cast<std::uint32_t>(bundle.width)}), {}, {}};
    const auto& depth = truth.depths[static_cast<std::size_t>(r)];
    const auto& labels = truth.labels[static_cast<std::size_t>(r)];
    for (int row = 0; row < bundle.height; ++row) {
      for (int col = 0; col < bundle.width; ++col) {
        const auto ur = static_cast<std::size_t>(row);
        const auto uc = static_cast<std::size_t>(col);
        const double d = depth.at(ur, uc);
        if (!(d > 0.0)) continue;
        const int label = static_cast<int>(labels.at(ur, uc));
        Vec3 displacement = Vec3::Zero();
        if (label > 0) {
          const auto it = std::find_if(truth.movers.begin(), truth.movers.end(), [&](const MoverTruth& m) { return m.id == label; });
          if (it == truth.movers.end()) throw ShapeError("label " + std::to_string(label) + " has no mover entry");
          displacement = tgt.R * (static_cast<double>(t - r) * it->velocity);
        }
        PixelProjection proj;
        try {
          proj = project_dynamic(Vec2(col, row), d, ref, tgt, displacement);
        } catch (const GeometryError&) {
          continue;
        }
        const Vec2& x = proj.pixel;
        if (!(x.x() >= 0.0 && x.y() >= 0.0 && x.x() <= bundle.width - 1 && x.y() <= bundle.height - 1)) continue;
        const double delta = std::abs(epipolar_residual(Vec2(col, row), x, E, ref.intrinsics, tgt.intrinsics));
        pair.magnitude.at(ur, uc) = static_cast<float>(delta);
        (label > 0 ? pair.mover : pair.background).push_back(delta);
      }
    }
    all_mover.insert(all_mover.end(), pair.mover.begin(), pair.mover.end());
    all_background.insert(all_background.end(), pair.background.begin(), pair.background.end());
    out.pairs.push_back(std::move(pair));
  }
  out.mover_samples = all_mover.size();
  out.background_samples = all_background.size();
  out.mover_median = median(all_mover);
  out.background_median = median(all_background);
  out.background_max = all_background.empty() ? 0.0 : *std::max_element(all_background.begin(), all_background.end());
  return out;
}

json ResidualSummary::to_json() const {
  json j;
  j["mover_median"] = mover_median;
  j["background_median"] = background_median;
  j["background_max"] = background_max;
  j["mover_samples"] = mover_samples;
  j["background_samples"] = background_samples;
  j["separation"] = background_median > 0.0 ? json(mover_median / background_median) : json(nullptr);
  json pairs_json = json::array();
  for (const auto& p : pairs) {
    pairs_json.push_back({{"reference", p.reference},
                          {"target", p.target},
                          {"mover_median", median(p.mover)},
                          {"background_median", median(p.background)}});
  }
  j["pairs"] = pairs_json;
  return j;
}

}  // namespace dsd
