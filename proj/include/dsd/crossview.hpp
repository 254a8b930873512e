#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dsd/geometry.hpp"
#include "dsd/mask.hpp"
#include "dsd/purification.hpp"
#include "dsd/scene.hpp"
#include "dsd/tensor.hpp"

namespace dsd {

inline constexpr double kLogitClamp = 40.0;
inline constexpr double kDefaultLambda = 1.0 / 3.0;
inline constexpr double kDefaultThetaDyn = 0.1;
inline constexpr double kDefaultOcclusionTolerance = 0.05;
inline constexpr double kVarianceFloor = 1e-12;

/// C(u) = 1 + exp(clamp(l(u), -40, 40)); every value is > 1.
struct ConfidenceMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
};

ConfidenceMap activate_confidence(const TensorMap& logits);
std::vector<ConfidenceMap> activate_all(const SceneBundle& bundle);

/// sigma^2 = 1 / (C - 1 + 1e-12).
double variance_from_confidence(double confidence);

struct ProjectionRecord {
  std::size_t point_id = 0;
  int view = 0;
  Vec2 pixel = Vec2::Zero();
  double projected_depth = 0.0;
  double sampled_depth = 0.0;
  Vec3 projected_color = Vec3::Zero();
  Vec3 sampled_color = Vec3::Zero();
  double confidence = 1.0;
  bool visible = false;

  double depth_residual() const { return projected_depth - sampled_depth; }
};

/// Projects the point into every view. A record is visible when the pixel is
/// inside the image, the camera-space depth is positive, at least one of the
/// four bilinear support pixels has valid depth, and
/// d_proj <= D(u) + occlusion_tolerance * d_proj.
///
/// Depth, color and confidence are bilinearly sampled using only the
/// valid-depth support pixels (weights renormalized). The projected color is
/// the point's source pixel color.
std::vector<ProjectionRecord> gather_projections(const CloudPoint& point, std::size_t point_id,
                                                 const SceneBundle& bundle,
                                                 std::span<const ConfidenceMap> confidence,
                                                 double occlusion_tolerance = kDefaultOcclusionTolerance);

/// Heteroscedastic negative log-likelihood over the visible records:
/// sum r^2 / (2 sigma^2) + log(sigma^2) / 2. Throws EmptyViewSetError when no
/// record is visible.
double mle_loss(std::span<const ProjectionRecord> records);

enum class ViewWeighting { confidence, uniform };

/// sum_i w_i (|d_proj,i - D_i| + lambda * mean_rgb |c_proj,i - I_i|) over the
/// visible records, w_i = C_i / sum C (or 1/|V| for uniform weighting).
/// Throws EmptyViewSetError when no record is visible.
double dynamic_score(std::span<const ProjectionRecord> records, double lambda = kDefaultLambda,
                     ViewWeighting weighting = ViewWeighting::confidence);

struct RefineOptions {
  double theta_dyn = kDefaultThetaDyn;
  double lambda = kDefaultLambda;
  double occlusion_tolerance = kDefaultOcclusionTolerance;
  ViewWeighting weighting = ViewWeighting::confidence;
  bool close_masks = true;
};

/// Per-point outcome of cross-view refinement.
struct PointVerdict {
  double score = 0.0;
  std::size_t visible_views = 0;
  bool kept = false;
};

struct RefineResult {
  MaskStack masks;
  std::vector<PointVerdict> verdicts;
  std::size_t scored = 0;
  std::size_t kept = 0;
  std::size_t unobserved = 0;
};

/// Scores one alive point against every view other than its source frame.
/// Points with no visible view keep their purification verdict.
PointVerdict score_point(const DynamicPointCloud& cloud, std::size_t i, const SceneBundle& bundle,
                         std::span<const ConfidenceMap> confidence, const RefineOptions& options);

/// Keeps alive points with S_dyn >= theta_dyn, rasterizes them per frame and
/// applies one 3x3 closing. Scoring is OpenMP-parallel over points.
RefineResult refine_masks(const DynamicPointCloud& cloud, const SceneBundle& bundle,
                          std::span<const ConfidenceMap> confidence, const RefineOptions& options = {});
/// Serial reference for refine_masks.
RefineResult refine_masks_serial(const DynamicPointCloud& cloud, const SceneBundle& bundle,
                                 std::span<const ConfidenceMap> confidence, const RefineOptions& options = {});

}  // namespace dsd
