#include <doctest.h>

#include <cmath>

#include <Eigen/SVD>

#include "dsd/errors.hpp"
#include "dsd/geometry.hpp"
#include "dsd/rng.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace dsd;
using testing::make_camera;
using testing::rotation_xyz;

namespace {

struct Pair {
  CameraModel ref, tgt;
};

Pair random_pair(SplitMix64& rng) {
  const double f = rng.uniform(80, 300);
  const Mat3 R1 = rotation_xyz(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
  const Mat3 R2 = rotation_xyz(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
  const Vec3 t1(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2));
  Vec3 t2 = t1 + Vec3(rng.uniform(-0.6, 0.6), rng.uniform(-0.3, 0.3), rng.uniform(-0.1, 0.1));
  return {make_camera(f, 64, 48, R1, t1), make_camera(f, 64, 48, R2, t2)};
}

}  // namespace

TEST_CASE("identical cameras reproduce the source pixel") {
  SplitMix64 rng(1);
  const auto cam = make_camera(120, 64, 48, Mat3::Identity(), Vec3(0.3, -0.2, 0.1));
  for (int i = 0; i < 200; ++i) {
    const Vec2 x(rng.uniform(0, 128), rng.uniform(0, 96));
    const auto p = project_rigid(x, rng.uniform(0.5, 10), cam, cam);
    CHECK(p.pixel == x);
  }
  const auto rotated = make_camera(120, 64, 48, rotation_xyz(0.1, -0.2, 0.3), Vec3(0.3, -0.2, 0.1));
  for (int i = 0; i < 200; ++i) {
    const Vec2 x(rng.uniform(0, 128), rng.uniform(0, 96));
    CHECK(project_rigid(x, rng.uniform(0.5, 10), rotated, rotated).pixel == x);
  }
}

TEST_CASE("pure translation moves the principal point by f * t / depth") {
  const auto ref = make_camera(100, 50, 50, Mat3::Identity(), Vec3::Zero());
  const auto tgt = make_camera(100, 50, 50, Mat3::Identity(), Vec3(0.1, 0.0, 0.0));
  const auto p = project_rigid(Vec2(50, 50), 1.0, ref, tgt);
  // Hand evaluation: X_t = (0, 0, 1) + (0.1, 0, 0) -> u = 100 * 0.1 / 1 + 50.
  CHECK(p.pixel.x() == doctest::Approx(60.0).epsilon(1e-12));
  CHECK(p.pixel.y() == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(p.depth == doctest::Approx(1.0));
}

TEST_CASE("points behind the target camera are rejected") {
  const auto ref = make_camera(100, 50, 50, Mat3::Identity(), Vec3::Zero());
  const auto tgt = make_camera(100, 50, 50, Mat3::Identity(), Vec3(0, 0, -2.0));
  CHECK_THROWS_AS(project_rigid(Vec2(50, 50), 1.0, ref, tgt), GeometryError);
  CHECK_THROWS_AS(project_dynamic(Vec2(50, 50), 3.0, ref, tgt, Vec3(0, 0, -1.0 - 1e-12)), GeometryError);
}

TEST_CASE("zero displacement makes the dynamic projection bit-identical to the rigid one") {
  SplitMix64 rng(2);
  for (int i = 0; i < 300; ++i) {
    const auto pr = random_pair(rng);
    const Vec2 x(rng.uniform(0, 128), rng.uniform(0, 96));
    const double d = rng.uniform(1, 8);
    const auto a = project_rigid(x, d, pr.ref, pr.tgt);
    const auto b = project_dynamic(x, d, pr.ref, pr.tgt, Vec3::Zero());
    CHECK(a.pixel == b.pixel);
    CHECK(a.depth == b.depth);
  }
}

TEST_CASE("essential matrix of a unit x-baseline") {
  const auto ref = make_camera(100, 50, 50, Mat3::Identity(), Vec3::Zero());
  const auto tgt = make_camera(100, 50, 50, Mat3::Identity(), Vec3(1, 0, 0));
  const Mat3 E = essential_from_poses(ref, tgt).E;
  Mat3 expected;
  expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  CHECK(E == expected);
  CHECK_THROWS_AS(essential_from_poses(ref, ref), GeometryError);
}

TEST_CASE("static correspondences satisfy the epipolar constraint") {
  SplitMix64 rng(3);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto pr = random_pair(rng);
    const auto E = essential_from_poses(pr.ref, pr.tgt);
    const Vec2 x(rng.uniform(0, 128), rng.uniform(0, 96));
    const auto p = project_rigid(x, rng.uniform(0.5, 20), pr.ref, pr.tgt);
    worst = std::max(worst, std::abs(epipolar_residual(x, p.pixel, E, pr.ref.intrinsics)));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("essential matrix is rank two and transposes under ref/tgt swap") {
  SplitMix64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto pr = random_pair(rng);
    const Mat3 E = essential_from_poses(pr.ref, pr.tgt).E;
    const Eigen::JacobiSVD<Mat3> svd(E);
    const auto s = svd.singularValues();
    CHECK(s(2) / s(0) <= 1e-6);
    const Mat3 Es = essential_from_poses(pr.tgt, pr.ref).E;
    CHECK((Es - E.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

    const Vec2 x(rng.uniform(0, 128), rng.uniform(0, 96));
    const auto p = project_rigid(x, rng.uniform(1, 5), pr.ref, pr.tgt);
    const double forward = epipolar_residual(x, p.pixel, EssentialMatrix{E}, pr.ref.intrinsics);
    const double backward = epipolar_residual(p.pixel, x, EssentialMatrix{Es}, pr.ref.intrinsics);
    CHECK(forward == doctest::Approx(backward).epsilon(1e-9));
  }
}

TEST_CASE("the residual form is bilinear in the homogeneous vectors") {
  SplitMix64 rng(5);
  const auto pr = random_pair(rng);
  const auto E = essential_from_poses(pr.ref, pr.tgt);
  const Vec3 a(0.1, -0.2, 1.0), b(0.05, 0.3, 1.0);
  const double base = epipolar_form(b, E, a);
  for (double s : {0.5, 2.0, 7.0}) {
    CHECK(epipolar_form(s * b, E, s * a) == doctest::Approx(s * s * base).epsilon(1e-12));
  }
}

TEST_CASE("displacement inside the epipolar plane leaves no residual") {
  SplitMix64 rng(6);
  for (int i = 0; i < 500; ++i) {
    const auto pr = random_pair(rng);
    const auto rel = RelativePose::between(pr.ref, pr.tgt);
    const auto E = essential_from_poses(pr.ref, pr.tgt);
    const Vec2 x(rng.uniform(10, 118), rng.uniform(10, 86));
    const double depth = rng.uniform(2, 6);
    const Vec3 ray = rel.R * pr.ref.intrinsics.normalize(x);
    const Vec3 M = rng.uniform(-0.05, 0.05) * rel.t.normalized() + rng.uniform(-0.05, 0.05) * ray.normalized();
    const auto p = project_dynamic(x, depth, pr.ref, pr.tgt, M);
    CHECK(std::abs(epipolar_residual(x, p.pixel, E, pr.ref.intrinsics)) <= 1e-6);
  }
}

TEST_CASE("perpendicular displacement produces a residual matching the first-order form") {
  const auto ref = make_camera(100, 64, 48, Mat3::Identity(), Vec3::Zero());
  const auto tgt = make_camera(100, 64, 48, rotation_xyz(0.01, 0.03, 0.0), Vec3(-0.2, 0.0, 0.0));
  const auto E = essential_from_poses(ref, tgt);
  const Vec2 x(70, 40);
  const double depth = 2.0;
  const Vec3 n = (E.E * ref.intrinsics.normalize(x)).normalized();
  const Vec3 M = 0.05 * n;
  const auto p = project_dynamic(x, depth, ref, tgt, M);
  const double exact = epipolar_residual(x, p.pixel, E, ref.intrinsics);
  const double approx = oracle::first_order_residual(ref.intrinsics.normalize(x), depth, E.E, M);
  CHECK(std::abs(exact) > 1e-4);
  CHECK(exact * approx > 0.0);
  CHECK(std::abs(exact - approx) <= 0.15 * std::abs(exact));
}

TEST_CASE("first-order approximation holds within 15% for small displacements") {
  SplitMix64 rng(7);
  int ok = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    const auto pr = random_pair(rng);
    const auto E = essential_from_poses(pr.ref, pr.tgt);
    const Vec2 x(rng.uniform(0, 128), rng.uniform(0, 96));
    const double depth = rng.uniform(1, 10);
    const Vec3 xn = pr.ref.intrinsics.normalize(x);
    const Vec3 nrm = (E.E * xn).normalized();
    // Random direction with a guaranteed perpendicular share, |M| <= 0.02 Z.
    Vec3 dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
    dir = (dir.normalized() + (rng.uniform() < 0.5 ? 1.0 : -1.0) * nrm).normalized();
    const Vec3 M = rng.uniform(0.1, 1.0) * 0.02 * depth * dir;
    const auto p = project_dynamic(x, depth, pr.ref, pr.tgt, M);
    const double exact = epipolar_residual(x, p.pixel, E, pr.ref.intrinsics);
    const double approx = oracle::first_order_residual(xn, depth, E.E, M);
    if (std::abs(exact - approx) <= 0.15 * std::abs(exact)) ++ok;
  }
  CHECK(ok >= 0.95 * n);
}

TEST_CASE("unproject then project returns the source pixel") {
  SplitMix64 rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto pr = random_pair(rng);
    const Vec2 x(rng.uniform(0, 128), rng.uniform(0, 96));
    const double d = rng.uniform(0.5, 10);
    const Vec3 X = unproject(x, d, pr.ref);
    const auto p = project_world(X, pr.ref);
    REQUIRE(p.has_value());
    CHECK((p->pixel - x).norm() <= 1e-9);
    CHECK(p->depth == doctest::Approx(d).epsilon(1e-12));
  }
  const auto cam = make_camera(100, 50, 40, Mat3::Identity(), Vec3::Zero());
  const Vec3 X = unproject(Vec2(50, 40), 3.0, cam);
  CHECK(X == Vec3(0, 0, 3.0));
}

TEST_CASE("camera validation") {
  auto cam = make_camera(100, 50, 40, Mat3::Identity(), Vec3::Zero());
  CHECK_NOTHROW(cam.validate());
  cam.R(0, 0) = 1.0 + 2e-5;
  CHECK_THROWS_AS(cam.validate(), GeometryError);
  cam.R = -Mat3::Identity();
  CHECK_THROWS_AS(cam.validate(), GeometryError);
  cam.R = Mat3::Identity();
  cam.intrinsics.fx = 0.0;
  CHECK_THROWS_AS(cam.validate(), GeometryError);
}
