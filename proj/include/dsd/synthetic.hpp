#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsd/geometry.hpp"
#include "dsd/scene.hpp"

namespace dsd {

enum class MoverShape { sphere, box };

/// Rigid translator. `size` is the sphere radius or the box half-edge.
struct MoverSpec {
  MoverShape shape = MoverShape::sphere;
  double size = 0.5;
  Vec3 start = Vec3(0.0, 0.0, 4.0);
  /// World displacement per frame, meters.
  Vec3 velocity = Vec3::Zero();
  Vec3 color = Vec3(0.9, 0.15, 0.1);
};

/// Textured back wall at z = wall_depth and floor at y = floor_height
/// (world y points down, like camera y).
struct BackgroundSpec {
  double wall_depth = 8.0;
  double floor_height = 1.5;
  double texture_frequency = 1.3;
};

/// Axis-aligned image rectangle in normalized [0, 1] coordinates, optionally
/// restricted to a set of frames (empty = every frame).
struct NormalizedRect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  std::vector<int> frames;

  bool contains(double u, double v) const { return u >= x0 && u < x1 && v >= y0 && v < y1; }
  bool active(int frame) const;
};

struct NoiseSpec {
  double depth_sigma = 0.01;
  /// Sigma multiplier inside `noisy_regions`.
  double region_factor = 10.0;
  std::vector<NormalizedRect> noisy_regions;
  /// Pose perturbation of the emitted (non ground-truth) cameras.
  double pose_rotation_sigma = 0.0;
  double pose_translation_sigma = 0.0;
};

/// Signal heads carry the smoothed mover silhouette scaled by peak_gain plus
/// a little jitter; noise heads are a per-head constant plus uniform jitter.
struct AttentionSpec {
  int signal_heads = 2;
  int noise_heads = 6;
  double peak_gain = 1.0;
  double signal_jitter = 0.05;
  double noise_jitter = 0.4;
};

struct CameraPose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
};

/// World-to-camera pose of a camera at `center` looking at `target`.
CameraPose look_at(const Vec3& center, const Vec3& target);

struct SceneSpec {
  std::uint64_t seed = 1;
  int frames = 8;
  int height = 96;
  int width = 128;
  int patch = 8;
  /// Focal length as a multiple of the image width.
  double focal_factor = 0.9;
  BackgroundSpec background;
  std::vector<MoverSpec> movers;
  std::vector<CameraPose> camera_path;
  NoiseSpec noise;
  AttentionSpec attention;

  Intrinsics intrinsics() const;
  /// Throws std::invalid_argument on inconsistent fields.
  void validate() const;
};

/// Parses the generator spec. `camera_path` is either an array of
/// {"R": [9], "t": [3]} poses or {"start": [3], "step": [3], "look_at": [3]}.
SceneSpec scene_spec_from_json(const nlohmann::json& j);
nlohmann::json scene_spec_to_json(const SceneSpec& spec);

struct RayHit {
  /// Camera-space depth; 0 when nothing is hit.
  double depth = 0.0;
  /// 0 = background, k = movers[k - 1].
  int label = 0;
  Vec3 color = Vec3::Zero();
};

/// Analytic ray cast through a (sub)pixel of `cam` at time `frame`.
RayHit trace(const SceneSpec& spec, int frame, const CameraModel& cam, const Vec2& pixel);

struct GeneratedScene {
  SceneBundle bundle;
  GroundTruthExtras truth;
  std::vector<std::string> warnings;
};

/// Renders every frame; frames run in parallel when `parallel` is set and the
/// output is identical either way.
GeneratedScene generate(const SceneSpec& spec, bool parallel = true);

/// Writes scene.json, gt.json and all tensors / PGM masks.
void write_generated(const GeneratedScene& scene, const std::filesystem::path& dir);

struct PixelRef {
  int frame = 0;
  int row = 0;
  int col = 0;
  friend bool operator==(const PixelRef&, const PixelRef&) = default;
};

struct CorruptedScene {
  SceneBundle bundle;
  /// False-positive saliency pixels, each isolated from the ground-truth
  /// movers and from each other.
  std::vector<PixelRef> injected;
  std::size_t invalidated_pixels = 0;
};

/// Zeroes depth in random square patches until `occluder_fraction` of all
/// pixels are invalid, and picks `outlier_points` isolated static pixels.
CorruptedScene corrupt(const SceneBundle& bundle, double occluder_fraction, int outlier_points,
                       std::uint64_t seed);

/// Knobs for the randomized evaluation corpus.
struct CorpusOptions {
  int frames = 8;
  int height = 96;
  int width = 128;
  int patch = 8;
  int noise_heads = 6;
  int signal_heads = 2;
  double noise_jitter = 0.4;
  double depth_sigma = 0.01;
  /// Vertical bands with `region_factor` x sigma; empty for homoscedastic noise.
  std::vector<NormalizedRect> noisy_regions;
  int movers = 1;
  double speed = 0.12;
};

/// Deterministic random scene: lateral camera sweep, `movers` movers
/// translating roughly parallel to the image plane.
SceneSpec random_scene_spec(std::uint64_t seed, const CorpusOptions& options = {});

}  // namespace dsd
