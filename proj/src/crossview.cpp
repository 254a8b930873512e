#include "dsd/crossview.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "dsd/errors.hpp"

namespace dsd {

ConfidenceMap activate_confidence(const TensorMap& logits) {
  if (logits.ndim() != 2) throw ShapeError("confidence logits must be H x W");
  ConfidenceMap c;
  c.height = static_cast<int>(logits.dim(0));
  c.width = static_cast<int>(logits.dim(1));
  c.values.resize(logits.numel());
  const auto src = logits.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    c.values[i] = 1.0 + std::exp(std::clamp(static_cast<double>(src[i]), -kLogitClamp, kLogitClamp));
  }
  return c;
}

std::vector<ConfidenceMap> activate_all(const SceneBundle& bundle) {
  std::vector<ConfidenceMap> out;
  out.reserve(bundle.confidence_logits.size());
  for (const auto& l : bundle.confidence_logits) out.push_back(activate_confidence(l));
  return out;
}

double variance_from_confidence(double confidence) { return 1.0 / (confidence - 1.0 + kVarianceFloor); }

namespace {

Vec3 pixel_color(const TensorMap& image, int row, int col) {
  const auto r = static_cast<std::size_t>(row);
  const auto c = static_cast<std::size_t>(col);
  return {image.at(r, c, 0), image.at(r, c, 1), image.at(r, c, 2)};
}

}  // namespace

std::vector<ProjectionRecord> gather_projections(const CloudPoint& point, std::size_t point_id,
                                                 const SceneBundle& bundle,
                                                 std::span<const ConfidenceMap> confidence,
                                                 double occlusion_tolerance) {
  std::vector<ProjectionRecord> records;
  records.reserve(static_cast<std::size_t>(bundle.frames));
  const Vec3 source_color = pixel_color(bundle.images[static_cast<std::size_t>(point.frame)], point.row, point.col);
  for (int v = 0; v < bundle.frames; ++v) {
    const auto vi = static_cast<std::size_t>(v);
    ProjectionRecord rec;
    rec.point_id = point_id;
    rec.view = v;
    rec.projected_color = source_color;
    const Vec3 cam = bundle.cameras[vi].to_camera(point.position);
    rec.projected_depth = cam.z();
    if (cam.z() <= kBehindCameraEpsilon) {
      records.push_back(rec);
      continue;
    }
    rec.pixel = bundle.cameras[vi].intrinsics.to_pixel(cam);
    // In bounds means inside the footprint of the edge pixels; sampling then
    // clamps to the outermost pixel centers.
    if (!(rec.pixel.x() >= -0.5 && rec.pixel.y() >= -0.5 && rec.pixel.x() < bundle.width - 0.5 &&
          rec.pixel.y() < bundle.height - 0.5)) {
      records.push_back(rec);
      continue;
    }
    const double x = std::clamp(rec.pixel.x(), 0.0, static_cast<double>(bundle.width - 1));
    const double y = std::clamp(rec.pixel.y(), 0.0, static_cast<double>(bundle.height - 1));
    const int x0 = std::min(static_cast<int>(std::floor(x)), bundle.width - 1);
    const int y0 = std::min(static_cast<int>(std::floor(y)), bundle.height - 1);
    const int x1 = std::min(x0 + 1, bundle.width - 1);
    const int y1 = std::min(y0 + 1, bundle.height - 1);
    const double ax = x - x0;
    const double ay = y - y0;
    const int xs[4] = {x0, x1, x0, x1};
    const int ys[4] = {y0, y0, y1, y1};
    const double ws[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
    const auto& depth = bundle.depths[vi];
    const auto& image = bundle.images[vi];
    const auto& conf = confidence[vi];
    double wsum = 0.0, d = 0.0, cval = 0.0;
    Vec3 color = Vec3::Zero();
    for (int k = 0; k < 4; ++k) {
      const double dk = depth.at(static_cast<std::size_t>(ys[k]), static_cast<std::size_t>(xs[k]));
      if (!(dk > 0.0) || ws[k] <= 0.0) continue;
      wsum += ws[k];
      d += ws[k] * dk;
      cval += ws[k] * conf.at(ys[k], xs[k]);
      color += ws[k] * pixel_color(image, ys[k], xs[k]);
    }
    if (!(wsum > 0.0)) {
      // Exactly on a pixel center whose own depth is invalid, or all support invalid.
      records.push_back(rec);
      continue;
    }
    rec.sampled_depth = d / wsum;
    rec.confidence = cval / wsum;
    rec.sampled_color = color / wsum;
    rec.visible = rec.projected_depth <= rec.sampled_depth + occlusion_tolerance * rec.projected_depth;
    records.push_back(rec);
  }
  return records;
}

double mle_loss(std::span<const ProjectionRecord> records) {
  double loss = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!r.visible) continue;
    const double var = variance_from_confidence(r.confidence);
    const double res = r.depth_residual();
    loss += res * res / (2.0 * var) + 0.5 * std::log(var);
    ++n;
  }
  if (n == 0) throw EmptyViewSetError("mle_loss: no visible views");
  return loss;
}

double dynamic_score(std::span<const ProjectionRecord> records, double lambda, ViewWeighting weighting) {
  double weight_sum = 0.0;
  double weighted = 0.0;
  for (const auto& r : records) {
    if (!r.visible) continue;
    const double w = weighting == ViewWeighting::confidence ? r.confidence : 1.0;
    const double color = (r.projected_color - r.sampled_color).cwiseAbs().sum() / 3.0;
    weighted += w * (std::abs(r.depth_residual()) + lambda * color);
    weight_sum += w;
  }
  if (!(weight_sum > 0.0)) throw EmptyViewSetError("dynamic_score: no visible views");
  return weighted / weight_sum;
}

PointVerdict score_point(const DynamicPointCloud& cloud, std::size_t i, const SceneBundle& bundle,
                         std::span<const ConfidenceMap> confidence, const RefineOptions& options) {
  const auto& p = cloud.points[i];
  PointVerdict v;
  if (!p.alive) return v;
  auto records = gather_projections(p, i, bundle, confidence, options.occlusion_tolerance);
  std::erase_if(records, [&](const ProjectionRecord& r) { return r.view == p.frame || !r.visible; });
  v.visible_views = records.size();
  if (records.empty()) {
    v.kept = true;
    return v;
  }
  v.score = dynamic_score(records, options.lambda, options.weighting);
  v.kept = v.score >= options.theta_dyn;
  return v;
}

namespace {

RefineResult finish(const DynamicPointCloud& cloud, const SceneBundle& bundle, std::vector<PointVerdict> verdicts,
                    const RefineOptions& options) {
  RefineResult out;
  out.masks = empty_masks(bundle.frames, bundle.height, bundle.width);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    if (!p.alive) continue;
    ++out.scored;
    if (verdicts[i].visible_views == 0) ++out.unobserved;
    if (!verdicts[i].kept) continue;
    ++out.kept;
    out.masks[static_cast<std::size_t>(p.frame)].set(p.row, p.col);
  }
  if (options.close_masks) {
    for (auto& m : out.masks) m = close3x3(m);
  }
  out.verdicts = std::move(verdicts);
  return out;
}

}  // namespace

RefineResult refine_masks(const DynamicPointCloud& cloud, const SceneBundle& bundle,
                          std::span<const ConfidenceMap> confidence, const RefineOptions& options) {
  std::vector<PointVerdict> verdicts(cloud.points.size());
  const auto n = static_cast<std::int64_t>(cloud.points.size());
#pragma omp parallel for schedule(dynamic, 128)
  for (std::int64_t i = 0; i < n; ++i) {
    verdicts[static_cast<std::size_t>(i)] = score_point(cloud, static_cast<std::size_t>(i), bundle, confidence, options);
  }
  return finish(cloud, bundle, std::move(verdicts), options);
}

RefineResult refine_masks_serial(const DynamicPointCloud& cloud, const SceneBundle& bundle,
                                 std::span<const ConfidenceMap> confidence, const RefineOptions& options) {
  std::vector<PointVerdict> verdicts(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    verdicts[i] = score_point(cloud, i, bundle, confidence, options);
  }
  return finish(cloud, bundle, std::move(verdicts), options);
}

}  // namespace dsd
