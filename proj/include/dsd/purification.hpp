#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "dsd/attention.hpp"
#include "dsd/geometry.hpp"
#include "dsd/mask.hpp"
#include "dsd/scene.hpp"

namespace dsd {

inline constexpr int kDefaultSupportThreshold = 16;
inline constexpr double kDefaultRadiusFactor = 0.02;

struct CloudPoint {
  Vec3 position = Vec3::Zero();
  int frame = 0;
  int row = 0;
  int col = 0;
  double saliency = 1.0;
  bool alive = true;
};

struct DynamicPointCloud {
  std::vector<CloudPoint> points;

  std::size_t alive_count() const;
};

/// Lifts every masked pixel with valid depth to world space,
/// X = R^T (d K^-1 x - t). `saliency` (optional, one map per frame) is
/// sampled at the pixel's patch; without it every point carries 1.
DynamicPointCloud unproject_mask(const SceneBundle& bundle, const MaskStack& masks,
                                 std::span<const SaliencyMap> saliency = {});

/// Diagonal of the axis-aligned bounding box of the alive points; 0 for fewer
/// than two alive points.
double scene_diagonal(const DynamicPointCloud& cloud);

/// Uniform voxel hash over the alive points with cell edge equal to the query
/// radius; a 27-cell scan covers every point within r.
class SpatialIndex {
 public:
  SpatialIndex(const DynamicPointCloud& cloud, double radius);

  double radius() const { return radius_; }

  /// |{ j != i alive : |p_i - p_j| <= r }|.
  std::size_t count_neighbors(std::size_t i) const;

  /// Indices of the alive points in the cell range around `p`.
  template <typename Fn>
  void for_each_candidate(const Vec3& p, Fn&& fn) const;

 private:
  struct Key {
    std::int64_t x, y, z;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };

  Key key_of(const Vec3& p) const;

  const DynamicPointCloud* cloud_;
  double radius_;
  double inv_cell_;
  std::vector<std::uint32_t> order_;
  std::unordered_map<Key, std::pair<std::uint32_t, std::uint32_t>, KeyHash> cells_;
};

/// Neighbor count of a single alive point.
std::size_t radius_neighbors(const DynamicPointCloud& cloud, const SpatialIndex& index, std::size_t i);

/// d_i for every point (0 for dead points). OpenMP-parallel over points.
std::vector<std::size_t> count_all_neighbors(const DynamicPointCloud& cloud, double radius);
/// Serial reference for count_all_neighbors.
std::vector<std::size_t> count_all_neighbors_serial(const DynamicPointCloud& cloud, double radius);

struct PurifyReport {
  double scene_diagonal = 0.0;
  double radius = 0.0;
  std::size_t before = 0;
  std::size_t after = 0;
};

/// One-shot support filter: every alive point with d_i < tau is marked dead,
/// all d_i taken against the pre-filter cloud.
DynamicPointCloud purify_with_radius(const DynamicPointCloud& cloud, int tau, double radius);

/// purify_with_radius with r = r_factor * scene_diagonal(cloud). A zero
/// diagonal gives r = 0, where only exactly coincident points count.
DynamicPointCloud purify(const DynamicPointCloud& cloud, int tau = kDefaultSupportThreshold,
                         double r_factor = kDefaultRadiusFactor, PurifyReport* report = nullptr);

/// Sets (frame, row, col) for every alive point.
MaskStack mask_from_cloud(const DynamicPointCloud& cloud, int frames, int height, int width);

/// ASCII PLY with x, y, z, saliency, alive per vertex.
void write_ply(const DynamicPointCloud& cloud, const std::filesystem::path& path);

template <typename Fn>
void SpatialIndex::for_each_candidate(const Vec3& p, Fn&& fn) const {
  const Key k = key_of(p);
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        const auto it = cells_.find(Key{k.x + dx, k.y + dy, k.z + dz});
        if (it == cells_.end()) continue;
        for (std::uint32_t s = it->second.first; s < it->second.second; ++s) fn(order_[s]);
      }
    }
  }
}

}  // namespace dsd
