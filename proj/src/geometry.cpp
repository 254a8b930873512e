#include "dsd/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "dsd/errors.hpp"

namespace dsd {

Mat3 Intrinsics::matrix() const {
  Mat3 K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

Vec3 Intrinsics::normalize(const Vec2& pixel) const {
  return {(pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0};
}

Vec2 Intrinsics::to_pixel(const Vec3& p) const {
  return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
}

void CameraModel::validate() const {
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0)) {
    throw GeometryError("focal lengths must be positive");
  }
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= kOrthonormalTolerance)) {
    throw GeometryError("rotation is not orthonormal (max deviation " + std::to_string(ortho) + ")");
  }
  const double det = R.determinant();
  if (!(std::abs(det - 1.0) <= kOrthonormalTolerance)) {
    throw GeometryError("rotation determinant " + std::to_string(det) + " is not 1");
  }
  if (!t.allFinite()) throw GeometryError("translation is not finite");
}

RelativePose RelativePose::between(const CameraModel& ref, const CameraModel& tgt) {
  RelativePose rel;
  rel.R = tgt.R == ref.R ? Mat3::Identity().eval() : (tgt.R * ref.R.transpose()).eval();
  rel.t = tgt.t - rel.R * ref.t;
  return rel;
}

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return S;
}

PixelProjection project_dynamic(const Vec2& ref_pixel, double depth, const CameraModel& ref,
                                const CameraModel& tgt, const Vec3& displacement) {
  const RelativePose rel = RelativePose::between(ref, tgt);
  const Vec3 shift = rel.t + displacement;
  if (rel.R == Mat3::Identity() && shift.isZero(0.0) && ref.intrinsics.fx == tgt.intrinsics.fx &&
      ref.intrinsics.fy == tgt.intrinsics.fy && ref.intrinsics.cx == tgt.intrinsics.cx &&
      ref.intrinsics.cy == tgt.intrinsics.cy) {
    if (depth <= kBehindCameraEpsilon) throw GeometryError("point projects behind target camera");
    return {ref_pixel, depth};
  }
  const Vec3 ray = ref.intrinsics.normalize(ref_pixel);
  const Vec3 target = rel.R * (depth * ray) + rel.t + displacement;
  if (target.z() <= kBehindCameraEpsilon) throw GeometryError("point projects behind target camera");
  return {tgt.intrinsics.to_pixel(target), target.z()};
}

PixelProjection project_rigid(const Vec2& ref_pixel, double depth, const CameraModel& ref,
                              const CameraModel& tgt) {
  return project_dynamic(ref_pixel, depth, ref, tgt, Vec3::Zero());
}

std::optional<PixelProjection> project_world(const Vec3& world, const CameraModel& cam) {
  const Vec3 p = cam.to_camera(world);
  if (p.z() <= kBehindCameraEpsilon) return std::nullopt;
  return PixelProjection{cam.intrinsics.to_pixel(p), p.z()};
}

Vec3 unproject(const Vec2& pixel, double depth, const CameraModel& cam) {
  return cam.to_world(depth * cam.intrinsics.normalize(pixel));
}

EssentialMatrix essential_from_poses(const CameraModel& ref, const CameraModel& tgt) {
  const RelativePose rel = RelativePose::between(ref, tgt);
  if (rel.t.norm() <= kMinBaseline) throw GeometryError("zero baseline: essential matrix undefined");
  return {skew(rel.t) * rel.R};
}

double epipolar_form(const Vec3& target, const EssentialMatrix& E, const Vec3& reference) {
  return target.dot(E.E * reference);
}

double epipolar_residual(const Vec2& ref_pixel, const Vec2& tgt_pixel, const EssentialMatrix& E,
                         const Intrinsics& K) {
  return epipolar_residual(ref_pixel, tgt_pixel, E, K, K);
}

double epipolar_residual(const Vec2& ref_pixel, const Vec2& tgt_pixel, const EssentialMatrix& E,
                         const Intrinsics& ref_k, const Intrinsics& tgt_k) {
  return epipolar_form(tgt_k.normalize(tgt_pixel), E, ref_k.normalize(ref_pixel));
}

}  // namespace dsd
