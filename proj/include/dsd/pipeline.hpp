#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "dsd/attention.hpp"
#include "dsd/crossview.hpp"
#include "dsd/evaluation.hpp"
#include "dsd/purification.hpp"
#include "dsd/scene.hpp"
#include "dsd/synthetic.hpp"

namespace dsd {

struct PipelineConfig {
  double eps = kDefaultHeadEps;
  double theta_saliency = 0.5;
  double r_factor = kDefaultRadiusFactor;
  int tau = kDefaultSupportThreshold;
  double lambda = kDefaultLambda;
  double theta_dyn = kDefaultThetaDyn;
  double occlusion_tolerance = kDefaultOcclusionTolerance;
  double boundary_tol_frac = kDefaultBoundaryTolerance;
  /// Purification radius from this diagonal instead of the dynamic cloud's own box.
  std::optional<double> scene_diagonal;

  bool attention_weighting = true;
  bool purification = true;
  bool uncertainty = true;

  /// Throws std::invalid_argument when a value is out of range.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static PipelineConfig from_json(const nlohmann::json& j);
};

struct StageCounts {
  std::size_t saliency_pixels = 0;
  std::size_t cloud_points = 0;
  std::size_t purified_points = 0;
  std::size_t refined_points = 0;
  std::size_t unobserved_points = 0;
  double scene_diagonal = 0.0;
  double radius = 0.0;
};

struct PipelineResult {
  MaskStack masks;
  /// Binarized saliency before any 3D stage (with injected pixels).
  MaskStack initial_masks;
  std::vector<SaliencyMap> saliency;
  DynamicPointCloud cloud;
  StageCounts counts;

  nlohmann::json summary(const PipelineConfig& config) const;
};

/// aggregate -> binarize -> unproject -> purify -> refine. Disabled stages are
/// skipped: with purification and uncertainty both off the masks are the
/// binarized saliency itself. `extra_pixels` are OR-ed into the binarized
/// saliency (used to inject false positives).
PipelineResult run_pipeline(const SceneBundle& bundle, const PipelineConfig& config,
                            std::span<const PixelRef> extra_pixels = {});

/// Metrics of predicted masks (and optionally a predicted cloud / trajectory)
/// against whatever ground truth the bundle carries.
MetricReport evaluate_masks(const MaskStack& pred, const SceneBundle& bundle,
                            const std::optional<GroundTruthExtras>& truth,
                            double tol_frac = kDefaultBoundaryTolerance);

/// Epipolar residuals between consecutive frames computed from ground-truth
/// depth and mover motion.
struct ResidualPair {
  int reference = 0;
  int target = 0;
  /// |delta| per reference pixel; 0 where the point leaves the target view.
  TensorMap magnitude;
  std::vector<double> mover;
  std::vector<double> background;
};

struct ResidualSummary {
  std::vector<ResidualPair> pairs;
  double mover_median = 0.0;
  double background_median = 0.0;
  double background_max = 0.0;
  std::size_t mover_samples = 0;
  std::size_t background_samples = 0;

  nlohmann::json to_json() const;
};

/// Needs ground-truth cameras on the bundle and gt.json extras; pairs with
/// zero baseline are skipped.
ResidualSummary compute_residuals(const SceneBundle& bundle, const GroundTruthExtras& truth);

}  // namespace dsd
