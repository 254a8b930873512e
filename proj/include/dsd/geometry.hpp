#pragma once

#include <optional>

#include <Eigen/Core>

namespace dsd {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole intrinsics in pixels. Pixel (col, row) has its center at (x, y) = (col, row).
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Mat3 matrix() const;
  /// K^-1 [x, y, 1]^T.
  Vec3 normalize(const Vec2& pixel) const;
  /// K X dehomogenized; caller guarantees X.z() > 0.
  Vec2 to_pixel(const Vec3& camera_point) const;
};

/// World-to-camera pose plus intrinsics: X_cam = R X_world + t.
struct CameraModel {
  Intrinsics intrinsics;
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  /// Throws GeometryError unless R is a rotation within 1e-5 and fx, fy > 0.
  void validate() const;
  Vec3 center() const { return -R.transpose() * t; }
  Vec3 to_camera(const Vec3& world) const { return R * world + t; }
  Vec3 to_world(const Vec3& camera_point) const { return R.transpose() * (camera_point - t); }
};

inline constexpr double kOrthonormalTolerance = 1e-5;
inline constexpr double kBehindCameraEpsilon = 1e-9;
inline constexpr double kMinBaseline = 1e-9;

/// Maps reference-camera coordinates to target-camera coordinates.
struct RelativePose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static RelativePose between(const CameraModel& ref, const CameraModel& tgt);
};

struct EssentialMatrix {
  Mat3 E = Mat3::Zero();
};

struct PixelProjection {
  Vec2 pixel;
  /// Camera-space z in the target view before dehomogenization.
  double depth = 0.0;
};

Mat3 skew(const Vec3& v);

/// x_t = K_t [R_rel d K_r^-1 x_r + t_rel]. Throws GeometryError when the
/// projected depth is <= 1e-9.
PixelProjection project_rigid(const Vec2& ref_pixel, double depth, const CameraModel& ref,
                              const CameraModel& tgt);

/// Rigid projection with an extra displacement (target-camera coordinates,
/// meters) added inside the bracket, i.e. K_t M is added before
/// dehomogenization. With M = 0 this is bit-identical to project_rigid.
PixelProjection project_dynamic(const Vec2& ref_pixel, double depth, const CameraModel& ref,
                                const CameraModel& tgt, const Vec3& displacement);

/// Non-throwing projection of a world point; nullopt when behind the camera.
std::optional<PixelProjection> project_world(const Vec3& world, const CameraModel& cam);

/// X = R^T (d K^-1 x - t).
Vec3 unproject(const Vec2& pixel, double depth, const CameraModel& cam);

/// E = [t_rel]_x R_rel. Throws GeometryError for a baseline below 1e-9.
EssentialMatrix essential_from_poses(const CameraModel& ref, const CameraModel& tgt);

/// Bilinear form x_t^T E x_r on homogeneous vectors.
double epipolar_form(const Vec3& target, const EssentialMatrix& E, const Vec3& reference);

/// delta = x_hat_t^T E x_hat_r with x_hat = K^-1 [x, y, 1]; sign preserved.
double epipolar_residual(const Vec2& ref_pixel, const Vec2& tgt_pixel, const EssentialMatrix& E,
                         const Intrinsics& K);
double epipolar_residual(const Vec2& ref_pixel, const Vec2& tgt_pixel, const EssentialMatrix& E,
                         const Intrinsics& ref_k, const Intrinsics& tgt_k);

}  // namespace dsd
