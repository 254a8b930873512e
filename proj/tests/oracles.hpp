#pragma once

// Independent reference computations used only by the tests. Nothing here
// shares code paths with the library routines they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dsd/geometry.hpp"
#include "dsd/purification.hpp"

namespace dsd::oracle {

/// O(N^2) inclusive radius count over alive points.
inline std::vector<std::size_t> brute_neighbor_counts(const DynamicPointCloud& cloud, double r) {
  std::vector<std::size_t> out(cloud.points.size(), 0);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (!cloud.points[i].alive) continue;
    for (std::size_t j = 0; j < cloud.points.size(); ++j) {
      if (j == i || !cloud.points[j].alive) continue;
      if ((cloud.points[j].position - cloud.points[i].position).squaredNorm() <= r * r) ++out[i];
    }
  }
  return out;
}

/// Two-pass population variance.
inline double two_pass_variance(std::span<const double> v) {
  long double mean = 0.0L;
  for (double x : v) mean += x;
  mean /= static_cast<long double>(v.size());
  long double acc = 0.0L;
  for (double x : v) acc += (x - mean) * (x - mean);
  return static_cast<double>(acc / static_cast<long double>(v.size()));
}

/// O(N M) nearest-neighbor distances.
inline std::vector<double> brute_nearest(std::span<const Vec3> queries, std::span<const Vec3> ref) {
  std::vector<double> out;
  for (const auto& q : queries) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : ref) best = std::min(best, (p - q).norm());
    out.push_back(best);
  }
  return out;
}

inline Mat3 rodrigues(const Vec3& w) {
  const double th = w.norm();
  if (th < 1e-300) return Mat3::Identity();
  const Vec3 k = w / th;
  Mat3 K;
  K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return Mat3::Identity() + std::sin(th) * K + (1 - std::cos(th)) * K * K;
}

/// Similarity-aligned RMSE by direct search over rotations: for a fixed
/// rotation, optimal scale and translation are closed-form, so only the
/// rotation vector is searched (multi-start, shrinking pattern search).
inline double brute_ate(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  const std::size_t n = pred.size();
  Vec3 mp = Vec3::Zero(), mg = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mp += pred[i];
    mg += gt[i];
  }
  mp /= static_cast<double>(n);
  mg /= static_cast<double>(n);
  auto cost = [&](const Mat3& R) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      num += (gt[i] - mg).dot(R * (pred[i] - mp));
      den += (pred[i] - mp).squaredNorm();
    }
    const double s = std::max(0.0, num / den);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e += (s * (R * (pred[i] - mp)) - (gt[i] - mg)).squaredNorm();
    return std::sqrt(e / static_cast<double>(n));
  };
  // Multi-start over a coarse rotation grid, then a compass search on a local
  // perturbation R = exp(d) R0 so the search never crosses the |w| = pi seam.
  double best = std::numeric_limits<double>::infinity();
  const double pi = 3.14159265358979323846;
  for (int a = -2; a <= 2; ++a) {
    for (int b = -2; b <= 2; ++b) {
      for (int c = -2; c <= 2; ++c) {
        Mat3 R0 = rodrigues(Vec3(a * pi / 2.5, b * pi / 2.5, c * pi / 2.5));
        double cw = cost(R0);
        double step = 0.3;
        while (step > 1e-10) {
          bool improved = false;
          for (int axis = 0; axis < 3; ++axis) {
            for (double sgn : {-1.0, 1.0}) {
              Vec3 d = Vec3::Zero();
              d(axis) = sgn * step;
              const Mat3 trial = rodrigues(d) * R0;
              const double ct = cost(trial);
              if (ct < cw) {
                cw = ct;
                R0 = trial;
                improved = true;
              }
            }
          }
          if (!improved) step *= 0.5;
        }
        best = std::min(best, cw);
      }
    }
  }
  return best;
}

/// First-order epipolar residual (1/Z_r) n(x_r)^T dX_perp, with n = E x_hat_r
/// the epipolar-plane normal in target coordinates and dX_perp the component
/// of the displacement along it.
inline double first_order_residual(const Vec3& ref_normalized, double ref_depth, const Mat3& E, const Vec3& displacement) {
  const Vec3 n = E * ref_normalized;
  const double nn = n.squaredNorm();
  if (nn == 0.0) return 0.0;
  const Vec3 perp = (n.dot(displacement) / nn) * n;
  return n.dot(perp) / ref_depth;
}

}  // namespace dsd::oracle
