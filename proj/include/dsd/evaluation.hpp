#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "dsd/geometry.hpp"
#include "dsd/mask.hpp"

namespace dsd {

inline constexpr double kDefaultBoundaryTolerance = 0.008;

/// |pred & gt| / |pred | gt|, 1 when the union is empty.
double jaccard(const BinaryMap& pred, const BinaryMap& gt);
std::vector<double> jaccard_per_frame(const MaskStack& pred, const MaskStack& gt);
double jaccard_mean(const MaskStack& pred, const MaskStack& gt);

/// Foreground pixels with at least one in-image 4-neighbor in the background.
BinaryMap boundary_map(const BinaryMap& m);

/// Boundary F-measure for one frame. Boundary pixels match when a boundary
/// pixel of the other map lies within a disk of radius
/// max(1, ceil(tol_frac * image diagonal)).
double boundary_f(const BinaryMap& pred, const BinaryMap& gt, double tol_frac = kDefaultBoundaryTolerance);
std::vector<double> boundary_f_per_frame(const MaskStack& pred, const MaskStack& gt,
                                         double tol_frac = kDefaultBoundaryTolerance);
double boundary_f(const MaskStack& pred, const MaskStack& gt, double tol_frac = kDefaultBoundaryTolerance);

/// Fraction of values strictly above 0.5 (JR / FR).
double recall_fraction(std::span<const double> per_frame);

struct Sim3 {
  double scale = 1.0;
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (R * p) + t; }
};

/// Least-squares similarity mapping `source` onto `target`. When every source
/// point coincides the result has identity rotation, unit scale and a
/// centroid-aligning translation.
Sim3 align_similarity(std::span<const Vec3> source, std::span<const Vec3> target);

/// RMSE of camera centers after Sim(3) alignment of predicted to ground truth.
double ate(std::span<const Vec3> pred_centers, std::span<const Vec3> gt_centers);
double ate(std::span<const CameraModel> pred, std::span<const CameraModel> gt);

struct CloudMetrics {
  double acc_mean = 0.0, acc_median = 0.0;
  double comp_mean = 0.0, comp_median = 0.0;
  double dist_mean = 0.0, dist_median = 0.0;
};

/// Nearest-neighbor distance from each query point to `reference`, through a
/// uniform grid with expanding shell search. OpenMP-parallel over queries.
std::vector<double> nearest_distances(std::span<const Vec3> queries, std::span<const Vec3> reference);
std::vector<double> nearest_distances_serial(std::span<const Vec3> queries, std::span<const Vec3> reference);

/// Accuracy (pred -> gt), completeness (gt -> pred), distance = their average.
CloudMetrics cloud_metrics(std::span<const Vec3> pred, std::span<const Vec3> gt);

double median(std::vector<double> values);

struct MetricReport {
  /// Null when the bundle has no ground-truth masks.
  std::optional<double> jm, fm, jr, fr;
  std::vector<double> jm_per_frame, fm_per_frame;
  std::optional<double> ate;
  std::optional<CloudMetrics> cloud;

  nlohmann::json to_json() const;
};

}  // namespace dsd
