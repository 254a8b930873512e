#include "dsd/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include <Eigen/Geometry>

#include "dsd/errors.hpp"

namespace dsd {

namespace {

void check_same_dims(const BinaryMap& a, const BinaryMap& b) {
  if (a.height != b.height || a.width != b.width) throw ShapeError("mask dims differ");
}

void check_same_stack(const MaskStack& a, const MaskStack& b) {
  if (a.size() != b.size()) throw ShapeError("mask stacks have different frame counts");
  for (std::size_t f = 0; f < a.size(); ++f) check_same_dims(a[f], b[f]);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double jaccard(const BinaryMap& pred, const BinaryMap& gt) {
  check_same_dims(pred, gt);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0;
    const bool g = gt.bits[i] != 0;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> jaccard_per_frame(const MaskStack& pred, const MaskStack& gt) {
  check_same_stack(pred, gt);
  std::vector<double> out(pred.size());
  for (std::size_t f = 0; f < pred.size(); ++f) out[f] = jaccard(pred[f], gt[f]);
  return out;
}

double jaccard_mean(const MaskStack& pred, const MaskStack& gt) { return mean_of(jaccard_per_frame(pred, gt)); }

BinaryMap boundary_map(const BinaryMap& m) {
  BinaryMap b(m.height, m.width);
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  for (int r = 0; r < m.height; ++r) {
    for (int c = 0; c < m.width; ++c) {
      if (!m.at(r, c)) continue;
      for (int k = 0; k < 4; ++k) {
        const int rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || cc < 0 || rr >= m.height || cc >= m.width) continue;
        if (!m.at(rr, cc)) {
          b.set(r, c);
          break;
        }
      }
    }
  }
  return b;
}

namespace {

// Fraction of set pixels in `from` with a set pixel of `to` inside the disk.
std::pair<std::size_t, std::size_t> matched(const BinaryMap& from, const BinaryMap& to, int radius) {
  std::size_t hits = 0, total = 0;
  for (int r = 0; r < from.height; ++r) {
    for (int c = 0; c < from.width; ++c) {
      if (!from.at(r, c)) continue;
      ++total;
      bool found = false;
      for (int dr = -radius; dr <= radius && !found; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc) {
          if (dr * dr + dc * dc > radius * radius) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= to.height || cc >= to.width) continue;
          if (to.at(rr, cc)) {
            found = true;
            break;
          }
        }
      }
      hits += found ? 1 : 0;
    }
  }
  return {hits, total};
}

}  // namespace

double boundary_f(const BinaryMap& pred, const BinaryMap& gt, double tol_frac) {
  check_same_dims(pred, gt);
  const BinaryMap pb = boundary_map(pred);
  const BinaryMap gb = boundary_map(gt);
  const double diag = std::hypot(static_cast<double>(pred.height), static_cast<double>(pred.width));
  const int radius = std::max(1, static_cast<int>(std::ceil(tol_frac * diag)));
  const auto [pred_hits, pred_total] = matched(pb, gb, radius);
  const auto [gt_hits, gt_total] = matched(gb, pb, radius);
  if (pred_total == 0 && gt_total == 0) return 1.0;
  if (pred_total == 0 || gt_total == 0) return 0.0;
  const double precision = static_cast<double>(pred_hits) / static_cast<double>(pred_total);
  const double recall = static_cast<double>(gt_hits) / static_cast<double>(gt_total);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::vector<double> boundary_f_per_frame(const MaskStack& pred, const MaskStack& gt, double tol_frac) {
  check_same_stack(pred, gt);
  std::vector<double> out(pred.size());
  const auto n = static_cast<std::int64_t>(pred.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t f = 0; f < n; ++f) {
    out[static_cast<std::size_t>(f)] = boundary_f(pred[static_cast<std::size_t>(f)], gt[static_cast<std::size_t>(f)], tol_frac);
  }
  return out;
}

double boundary_f(const MaskStack& pred, const MaskStack& gt, double tol_frac) {
  return mean_of(boundary_f_per_frame(pred, gt, tol_frac));
}

double recall_fraction(std::span<const double> per_frame) {
  if (per_frame.empty()) return 0.0;
  std::size_t n = 0;
  for (double v : per_frame) n += v > 0.5 ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(per_frame.size());
}

Sim3 align_similarity(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size()) throw ShapeError("trajectories differ in length");
  if (source.size() < 2) throw ShapeError("alignment needs at least two poses");
  const auto n = static_cast<Eigen::Index>(source.size());
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = source[static_cast<std::size_t>(i)];
    dst.col(i) = target[static_cast<std::size_t>(i)];
  }
  const Vec3 src_mean = src.rowwise().mean();
  const Vec3 dst_mean = dst.rowwise().mean();
  Sim3 s;
  if ((src.colwise() - src_mean).squaredNorm() <= 0.0) {
    s.t = dst_mean - src_mean;
    return s;
  }
  const Eigen::Matrix4d T = Eigen::umeyama(src, dst, true);
  const Mat3 sR = T.topLeftCorner<3, 3>();
  s.scale = std::cbrt(sR.determinant());
  s.R = sR / s.scale;
  s.t = T.topRightCorner<3, 1>();
  return s;
}

double ate(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  const Sim3 s = align_similarity(pred, gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (s.apply(pred[i]) - gt[i]).squaredNorm();
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

double ate(std::span<const CameraModel> pred, std::span<const CameraModel> gt) {
  std::vector<Vec3> pc, gc;
  for (const auto& c : pred) pc.push_back(c.center());
  for (const auto& c : gt) gc.push_back(c.center());
  return ate(pc, gc);
}

namespace {

class NearestGrid {
 public:
  explicit NearestGrid(std::span<const Vec3> ref) : ref_(ref) {
    lo_ = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo_;
    for (const auto& p : ref) {
      lo_ = lo_.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double extent = (hi - lo_).maxCoeff();
    const double per_axis = std::max(1.0, std::cbrt(static_cast<double>(ref.size())));
    cell_ = extent > 0.0 ? extent / per_axis : 1.0;
    for (int a = 0; a < 3; ++a) dims_[a] = static_cast<std::int64_t>(std::floor((hi(a) - lo_(a)) / cell_)) + 1;
    std::vector<std::int64_t> key(ref.size());
    start_.assign(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]) + 1, 0);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      key[i] = linear(cell_of(ref[i]));
      ++start_[static_cast<std::size_t>(key[i]) + 1];
    }
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    items_.resize(ref.size());
    auto fill = start_;
    for (std::size_t i = 0; i < ref.size(); ++i) items_[static_cast<std::size_t>(fill[static_cast<std::size_t>(key[i])]++)] = static_cast<std::uint32_t>(i);
  }

  double nearest(const Vec3& q) const {
    const auto k = cell_of(q);
    double best2 = std::numeric_limits<double>::infinity();
    std::int64_t max_shell = 0;
    std::int64_t first_shell = 0;
    for (int a = 0; a < 3; ++a) {
      max_shell = std::max({max_shell, std::abs(k[a]), std::abs(dims_[a] - 1 - k[a])});
      first_shell = std::max({first_shell, -k[a], k[a] - (dims_[a] - 1)});
    }
    auto scan = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
      const auto cell = static_cast<std::size_t>(linear({x, y, z}));
      for (auto it = start_[cell]; it < start_[cell + 1]; ++it) {
        best2 = std::min(best2, (ref_[items_[static_cast<std::size_t>(it)]] - q).squaredNorm());
      }
    };
    for (std::int64_t s = first_shell; s <= max_shell; ++s) {
      // Walk only the in-grid part of the shell at Chebyshev distance s.
      const std::int64_t x0 = std::max<std::int64_t>(0, k[0] - s), x1 = std::min(dims_[0] - 1, k[0] + s);
      const std::int64_t y0 = std::max<std::int64_t>(0, k[1] - s), y1 = std::min(dims_[1] - 1, k[1] + s);
      const std::int64_t z0 = std::max<std::int64_t>(0, k[2] - s), z1 = std::min(dims_[2] - 1, k[2] + s);
      for (std::int64_t x = x0; x <= x1; ++x) {
        for (std::int64_t y = y0; y <= y1; ++y) {
          if (std::abs(x - k[0]) == s || std::abs(y - k[1]) == s) {
            for (std::int64_t z = z0; z <= z1; ++z) scan(x, y, z);
          } else {
            if (k[2] - s >= 0 && k[2] - s < dims_[2]) scan(x, y, k[2] - s);
            if (s > 0 && k[2] + s >= 0 && k[2] + s < dims_[2]) scan(x, y, k[2] + s);
          }
        }
      }
      // Anything outside the searched cube is farther than s cells.
      const double reach = static_cast<double>(s) * cell_;
      if (best2 <= reach * reach) break;
    }
    return std::sqrt(best2);
  }

 private:
  std::array<std::int64_t, 3> cell_of(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor((p.x() - lo_.x()) / cell_)),
            static_cast<std::int64_t>(std::floor((p.y() - lo_.y()) / cell_)),
            static_cast<std::int64_t>(std::floor((p.z() - lo_.z()) / cell_))};
  }
  std::int64_t linear(const std::array<std::int64_t, 3>& k) const { return (k[0] * dims_[1] + k[1]) * dims_[2] + k[2]; }

  std::span<const Vec3> ref_;
  Vec3 lo_;
  double cell_ = 1.0;
  std::array<std::int64_t, 3> dims_{};
  std::vector<std::int64_t> start_;
  std::vector<std::uint32_t> items_;
};

}  // namespace

std::vector<double> nearest_distances(std::span<const Vec3> queries, std::span<const Vec3> reference) {
  if (reference.empty()) throw ShapeError("nearest neighbor search needs a non-empty reference set");
  const NearestGrid grid(reference);
  std::vector<double> out(queries.size());
  const auto n = static_cast<std::int64_t>(queries.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = grid.nearest(queries[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<double> nearest_distances_serial(std::span<const Vec3> queries, std::span<const Vec3> reference) {
  if (reference.empty()) throw ShapeError("nearest neighbor search needs a non-empty reference set");
  const NearestGrid grid(reference);
  std::vector<double> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) out[i] = grid.nearest(queries[i]);
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

CloudMetrics cloud_metrics(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  if (pred.empty() || gt.empty()) throw ShapeError("cloud metrics need non-empty point sets");
  const auto acc = nearest_distances(pred, gt);
  const auto comp = nearest_distances(gt, pred);
  CloudMetrics m;
  m.acc_mean = mean_of(acc);
  m.acc_median = median(acc);
  m.comp_mean = mean_of(comp);
  m.comp_median = median(comp);
  m.dist_mean = 0.5 * (m.acc_mean + m.comp_mean);
  m.dist_median = 0.5 * (m.acc_median + m.comp_median);
  return m;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j["jm"] = opt(jm);
  j["fm"] = opt(fm);
  j["jr"] = opt(jr);
  j["fr"] = opt(fr);
  j["jm_per_frame"] = jm_per_frame;
  j["fm_per_frame"] = fm_per_frame;
  j["ate"] = opt(ate);
  const char* keys[6] = {"acc_mean", "acc_median", "comp_mean", "comp_median", "dist_mean", "dist_median"};
  for (const char* k : keys) j[k] = nullptr;
  if (cloud) {
    j["acc_mean"] = cloud->acc_mean;
    j["acc_median"] = cloud->acc_median;
    j["comp_mean"] = cloud->comp_mean;
    j["comp_median"] = cloud->comp_median;
    j["dist_mean"] = cloud->dist_mean;
    j["dist_median"] = cloud->dist_median;
  }
  return j;
}

}  // namespace dsd
