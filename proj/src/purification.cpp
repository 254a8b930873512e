#include "dsd/purification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dsd/errors.hpp"
#include "dsd/tensor.hpp"

namespace dsd {

std::size_t DynamicPointCloud::alive_count() const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return p.alive; }));
}

DynamicPointCloud unproject_mask(const SceneBundle& bundle, const MaskStack& masks,
                                 std::span<const SaliencyMap> saliency) {
  if (static_cast<int>(masks.size()) != bundle.frames) throw ShapeError("one mask per frame required");
  DynamicPointCloud cloud;
  for (int f = 0; f < bundle.frames; ++f) {
    const auto& m = masks[static_cast<std::size_t>(f)];
    if (m.height != bundle.height || m.width != bundle.width) throw ShapeError("mask dims differ from image dims");
    const auto& depth = bundle.depths[static_cast<std::size_t>(f)];
    const auto& cam = bundle.cameras[static_cast<std::size_t>(f)];
    for (int r = 0; r < m.height; ++r) {
      for (int c = 0; c < m.width; ++c) {
        if (!m.at(r, c)) continue;
        const double d = depth.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        if (!(d > 0.0)) continue;
        CloudPoint p;
        p.position = unproject(Vec2(c, r), d, cam);
        p.frame = f;
        p.row = r;
        p.col = c;
        if (!saliency.empty()) p.saliency = saliency_at_pixel(saliency[static_cast<std::size_t>(f)], bundle.patch, r, c);
        cloud.points.push_back(p);
      }
    }
  }
  return cloud;
}

double scene_diagonal(const DynamicPointCloud& cloud) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  std::size_t n = 0;
  for (const auto& p : cloud.points) {
    if (!p.alive) continue;
    lo = lo.cwiseMin(p.position);
    hi = hi.cwiseMax(p.position);
    ++n;
  }
  if (n < 2) return 0.0;
  return (hi - lo).norm();
}

std::size_t SpatialIndex::KeyHash::operator()(const Key& k) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
  h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

SpatialIndex::SpatialIndex(const DynamicPointCloud& cloud, double radius) : cloud_(&cloud), radius_(radius) {
  if (!(radius > 0.0)) throw GeometryError("spatial index radius must be positive");
  // Padded cell so a pair at exactly r never lands two cells apart after rounding.
  inv_cell_ = 1.0 / (radius * (1.0 + 1e-9));
  std::vector<std::pair<Key, std::uint32_t>> keyed;
  keyed.reserve(cloud.points.size());
  for (std::uint32_t i = 0; i < cloud.points.size(); ++i) {
    if (cloud.points[i].alive) keyed.emplace_back(key_of(cloud.points[i].position), i);
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first.x != b.first.x) return a.first.x < b.first.x;
    if (a.first.y != b.first.y) return a.first.y < b.first.y;
    if (a.first.z != b.first.z) return a.first.z < b.first.z;
    return a.second < b.second;
  });
  order_.resize(keyed.size());
  for (std::uint32_t s = 0; s < keyed.size(); ++s) {
    order_[s] = keyed[s].second;
    if (s == 0 || !(keyed[s].first == keyed[s - 1].first)) {
      cells_[keyed[s].first] = {s, s + 1};
    } else {
      cells_[keyed[s].first].second = s + 1;
    }
  }
}

SpatialIndex::Key SpatialIndex::key_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() * inv_cell_)),
          static_cast<std::int64_t>(std::floor(p.y() * inv_cell_)),
          static_cast<std::int64_t>(std::floor(p.z() * inv_cell_))};
}

std::size_t SpatialIndex::count_neighbors(std::size_t i) const {
  const Vec3& p = cloud_->points[i].position;
  const double r2 = radius_ * radius_;
  std::size_t n = 0;
  for_each_candidate(p, [&](std::uint32_t j) {
    if (j != i && (cloud_->points[j].position - p).squaredNorm() <= r2) ++n;
  });
  return n;
}

std::size_t radius_neighbors(const DynamicPointCloud& cloud, const SpatialIndex& index, std::size_t i) {
  if (!cloud.points.at(i).alive) return 0;
  return index.count_neighbors(i);
}

namespace {

// r = 0: only exact duplicates are within the radius.
std::vector<std::size_t> count_coincident(const DynamicPointCloud& cloud) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (cloud.points[i].alive) idx.push_back(i);
  }
  auto less = [&](std::size_t a, std::size_t b) {
    const auto& pa = cloud.points[a].position;
    const auto& pb = cloud.points[b].position;
    return std::lexicographical_compare(pa.data(), pa.data() + 3, pb.data(), pb.data() + 3);
  };
  std::sort(idx.begin(), idx.end(), less);
  std::vector<std::size_t> counts(cloud.points.size(), 0);
  for (std::size_t s = 0; s < idx.size();) {
    std::size_t e = s + 1;
    while (e < idx.size() && cloud.points[idx[e]].position == cloud.points[idx[s]].position) ++e;
    for (std::size_t k = s; k < e; ++k) counts[idx[k]] = e - s - 1;
    s = e;
  }
  return counts;
}

}  // namespace

std::vector<std::size_t> count_all_neighbors(const DynamicPointCloud& cloud, double radius) {
  if (!(radius > 0.0)) return count_coincident(cloud);
  const SpatialIndex index(cloud, radius);
  const auto n = static_cast<std::int64_t>(cloud.points.size());
  std::vector<std::size_t> counts(cloud.points.size(), 0);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < n; ++i) {
    if (cloud.points[static_cast<std::size_t>(i)].alive) {
      counts[static_cast<std::size_t>(i)] = index.count_neighbors(static_cast<std::size_t>(i));
    }
  }
  return counts;
}

std::vector<std::size_t> count_all_neighbors_serial(const DynamicPointCloud& cloud, double radius) {
  if (!(radius > 0.0)) return count_coincident(cloud);
  const SpatialIndex index(cloud, radius);
  std::vector<std::size_t> counts(cloud.points.size(), 0);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (cloud.points[i].alive) counts[i] = index.count_neighbors(i);
  }
  return counts;
}

DynamicPointCloud purify_with_radius(const DynamicPointCloud& cloud, int tau, double radius) {
  if (tau < 0) throw std::invalid_argument("support threshold must be non-negative");
  const auto counts = count_all_neighbors(cloud, radius);
  DynamicPointCloud out = cloud;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (out.points[i].alive && counts[i] < static_cast<std::size_t>(tau)) out.points[i].alive = false;
  }
  return out;
}

DynamicPointCloud purify(const DynamicPointCloud& cloud, int tau, double r_factor, PurifyReport* report) {
  const double diag = scene_diagonal(cloud);
  const double radius = r_factor * diag;
  auto out = purify_with_radius(cloud, tau, radius);
  if (report) *report = {diag, radius, cloud.alive_count(), out.alive_count()};
  return out;
}

MaskStack mask_from_cloud(const DynamicPointCloud& cloud, int frames, int height, int width) {
  auto masks = empty_masks(frames, height, width);
  for (const auto& p : cloud.points) {
    if (!p.alive) continue;
    if (p.frame < 0 || p.frame >= frames || p.row < 0 || p.row >= height || p.col < 0 || p.col >= width) {
      throw ShapeError("cloud point references a pixel outside the mask stack");
    }
    masks[static_cast<std::size_t>(p.frame)].set(p.row, p.col);
  }
  return masks;
}

void write_ply(const DynamicPointCloud& cloud, const std::filesystem::path& path) {
  std::ostringstream os;
  os.precision(9);
  os << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
     << "\nproperty float x\nproperty float y\nproperty float z\nproperty float saliency\n"
        "property uchar alive\nend_header\n";
  for (const auto& p : cloud.points) {
    os << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' ' << p.saliency << ' '
       << (p.alive ? 1 : 0) << '\n';
  }
  write_text_atomic(path, os.str());
}

}  // namespace dsd
