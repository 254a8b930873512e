#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "dsd/geometry.hpp"
#include "dsd/mask.hpp"
#include "dsd/tensor.hpp"

namespace dsd {

/// A complete multi-view input package.
///
/// images: T tensors H x W x 3 in [0, 1]; depths: T tensors H x W (meters,
/// 0 = invalid); confidence_logits: T tensors H x W; attention: T tensors
/// heads x (H / patch) x (W / patch).
struct SceneBundle {
  int frames = 0;
  int height = 0;
  int width = 0;
  int heads = 0;
  int patch = 1;

  std::vector<TensorMap> images;
  std::vector<TensorMap> depths;
  std::vector<TensorMap> confidence_logits;
  std::vector<TensorMap> attention;
  std::vector<CameraModel> cameras;

  std::optional<MaskStack> gt_masks;
  std::optional<std::vector<CameraModel>> gt_cameras;

  int attention_height() const { return height / patch; }
  int attention_width() const { return width / patch; }

  bool depth_valid(int frame, int row, int col) const {
    return depths[static_cast<std::size_t>(frame)].at(static_cast<std::size_t>(row), static_cast<std::size_t>(col)) > 0.0f;
  }

  /// Checks every cross-tensor invariant; throws ShapeError / GeometryError.
  void validate() const;
};

/// Reads `scene.json` and every tensor it names, then validates the bundle.
SceneBundle load_scene(const std::filesystem::path& dir);

/// Writes the bundle as `scene.json` plus one container per tensor and one
/// PGM per ground-truth mask.
void save_scene(const SceneBundle& bundle, const std::filesystem::path& dir);

/// Extra ground truth emitted by the synthetic generator as `gt.json`.
struct MoverTruth {
  int id = 0;
  /// World-frame displacement per frame, meters.
  Vec3 velocity = Vec3::Zero();
};

struct GroundTruthExtras {
  std::vector<MoverTruth> movers;
  /// Noise-free depth, one H x W tensor per frame.
  std::vector<TensorMap> depths;
  /// Per-pixel mover id (0 = static background), one H x W tensor per frame.
  std::vector<TensorMap> labels;
};

void save_ground_truth(const GroundTruthExtras& gt, const std::filesystem::path& dir);
/// nullopt when `gt.json` is absent.
std::optional<GroundTruthExtras> load_ground_truth(const std::filesystem::path& dir, const SceneBundle& bundle);

}  // namespace dsd
