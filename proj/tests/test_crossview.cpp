#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dsd/crossview.hpp"
#include "dsd/errors.hpp"
#include "dsd/rng.hpp"
#include "dsd/synthetic.hpp"
#include "test_support.hpp"

using namespace dsd;

namespace {

ProjectionRecord rec(double residual, double confidence, Vec3 color_residual = Vec3::Zero()) {
  ProjectionRecord r;
  r.visible = true;
  r.projected_depth = 3.0 + residual;
  r.sampled_depth = 3.0;
  r.sampled_color = Vec3::Constant(0.5);
  r.projected_color = r.sampled_color + color_residual;
  r.confidence = confidence;
  return r;
}

double loss_at_variance(double residual, double var) {
  const std::vector<ProjectionRecord> r{rec(residual, 1.0 + 1.0 / var - 1e-12)};
  return mle_loss(r);
}

SceneSpec two_view_spec() {
  SceneSpec spec;
  spec.frames = 2;
  spec.height = 64;
  spec.width = 96;
  spec.patch = 8;
  spec.camera_path = {CameraPose{}, look_at(Vec3(1.5, 0, 0), Vec3(1.5, 0, 8))};
  MoverSpec sphere;
  sphere.size = 0.6;
  sphere.start = Vec3(1.5, 0.0, 3.0);
  spec.movers = {sphere};
  return spec;
}

}  // namespace

TEST_CASE("confidence activation examples") {
  const TensorMap logits({1, 4}, {0.0f, -40.0f, static_cast<float>(std::log(3.0)), 1000.0f});
  const auto c = activate_confidence(logits);
  CHECK(c.at(0, 0) == 2.0);
  // 1 + e^-40 rounds to 1 in double; the clamp still keeps it finite.
  CHECK(c.at(0, 1) >= 1.0);
  CHECK(activate_confidence(TensorMap({1, 1}, {-30.0f})).at(0, 0) > 1.0);
  CHECK(c.at(0, 2) == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(std::isfinite(c.at(0, 3)));
  CHECK(c.at(0, 3) == doctest::Approx(1.0 + std::exp(40.0)));
  CHECK(variance_from_confidence(2.0) == doctest::Approx(1.0));
  CHECK(variance_from_confidence(1.0) == doctest::Approx(1e12));
}

TEST_CASE("mle loss examples") {
  const std::vector<ProjectionRecord> zero{rec(0.0, 2.0)};
  CHECK(mle_loss(zero) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  const std::vector<ProjectionRecord> one{rec(1.0, 2.0)};
  CHECK(mle_loss(one) == doctest::Approx(0.5).epsilon(1e-9));
  std::vector<ProjectionRecord> hidden{rec(1.0, 2.0)};
  hidden[0].visible = false;
  CHECK_THROWS_AS(mle_loss(hidden), EmptyViewSetError);
  CHECK_THROWS_AS(dynamic_score(hidden), EmptyViewSetError);
}

TEST_CASE("mle loss is minimized at sigma squared equal to the squared residual") {
  for (double r : {0.05, 0.3, 1.0, 2.5}) {
    const double star = r * r;
    const double h = 1e-5 * star;
    const double slope = (loss_at_variance(r, star + h) - loss_at_variance(r, star - h)) / (2 * h);
    // Compare against the gradient scale 1 / (2 sigma^2).
    CHECK(std::abs(slope) * 2.0 * star <= 1e-3);
    CHECK(loss_at_variance(r, 0.8 * star) > loss_at_variance(r, star));
    CHECK(loss_at_variance(r, 1.25 * star) > loss_at_variance(r, star));
  }
}

TEST_CASE("dynamic score examples") {
  const std::vector<ProjectionRecord> perfect{rec(0.0, 2.0), rec(0.0, 9.0)};
  CHECK(dynamic_score(perfect) == 0.0);
  for (double c : {1.01, 2.0, 1e6}) {
    const std::vector<ProjectionRecord> single{rec(0.2, c)};
    CHECK(dynamic_score(single) == doctest::Approx(0.2).epsilon(1e-12));
  }
  const double c0 = 1.0 + std::exp(0.0), c1 = 1.0 + std::exp(4.0);
  const std::vector<ProjectionRecord> two{rec(1.0, c0), rec(0.0, c1)};
  // Hand evaluation: 2 / (2 + 1 + e^4).
  const double expected = c0 * 1.0 / (c0 + c1);
  CHECK(expected == doctest::Approx(2.0 / (3.0 + std::exp(4.0))));
  CHECK(dynamic_score(two) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(dynamic_score(two) < 0.05);

  const std::vector<ProjectionRecord> colored{rec(0.0, 2.0, Vec3(0.3, -0.3, 0.0))};
  CHECK(dynamic_score(colored, 0.5) == doctest::Approx(0.5 * 0.2).epsilon(1e-12));
}

TEST_CASE("dynamic score properties") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ProjectionRecord> rs;
    const int n = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i) {
      rs.push_back(rec(rng.uniform(-0.5, 0.5), 1.0 + std::exp(rng.uniform(-5, 5)),
                       Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2))));
    }
    const double s = dynamic_score(rs);
    CHECK(s >= 0.0);

    auto scaled = rs;
    const double k = std::exp(rng.uniform(-6, 6));
    for (auto& r : scaled) r.confidence *= k;
    CHECK(std::abs(dynamic_score(scaled) - s) <= 1e-9);

    auto bigger = rs;
    const auto idx = rng.below(static_cast<std::uint64_t>(n));
    bigger[idx].projected_depth += std::copysign(rng.uniform(0, 1), bigger[idx].depth_residual());
    CHECK(dynamic_score(bigger) >= s);

    auto flat = rs;
    double mean = 0.0;
    for (auto& r : flat) {
      r.confidence = 3.0;
      mean += std::abs(r.depth_residual()) + kDefaultLambda * (r.projected_color - r.sampled_color).cwiseAbs().sum() / 3.0;
    }
    mean /= n;
    CHECK(dynamic_score(flat) == doctest::Approx(mean).epsilon(1e-12));
    CHECK(dynamic_score(rs, kDefaultLambda, ViewWeighting::uniform) ==
          doctest::Approx(dynamic_score(flat)).epsilon(1e-12));
  }
}

TEST_CASE("higher confidence dominates equal residuals") {
  const std::vector<ProjectionRecord> rs{rec(0.4, 9.0), rec(-0.4, 2.0, Vec3(0.3, 0.3, 0.3))};
  // Weights 9/11 and 2/11; color term only in the low-confidence view.
  CHECK(dynamic_score(rs, 1.0) == doctest::Approx(0.4 + 0.3 * 2.0 / 11.0).epsilon(1e-12));
}

TEST_CASE("gathering a point in its source view reproduces the pixel and depth") {
  SceneSpec spec = two_view_spec();
  spec.movers.clear();
  const auto bundle = generate(spec).bundle;
  const auto conf = activate_all(bundle);
  SplitMix64 rng(32);
  for (int i = 0; i < 200; ++i) {
    CloudPoint p;
    p.frame = static_cast<int>(rng.below(2));
    p.row = static_cast<int>(rng.below(64));
    p.col = static_cast<int>(rng.below(96));
    const double d = bundle.depths[static_cast<std::size_t>(p.frame)].at(static_cast<std::size_t>(p.row), static_cast<std::size_t>(p.col));
    p.position = unproject(Vec2(p.col, p.row), d, bundle.cameras[static_cast<std::size_t>(p.frame)]);
    const auto records = gather_projections(p, 0, bundle, conf);
    REQUIRE(records.size() == 2);
    const auto& own = records[static_cast<std::size_t>(p.frame)];
    CHECK(own.visible);
    CHECK(std::abs(own.depth_residual()) <= 1e-4);
    CHECK((own.pixel - Vec2(p.col, p.row)).norm() <= 1e-4);
  }
}

TEST_CASE("points behind every camera have no visible view") {
  const auto bundle = generate(two_view_spec()).bundle;
  const auto conf = activate_all(bundle);
  CloudPoint p;
  p.position = Vec3(0.5, 0.0, -3.0);
  const auto records = gather_projections(p, 0, bundle, conf);
  for (const auto& r : records) CHECK_FALSE(r.visible);
  CHECK_THROWS_AS(dynamic_score(records), EmptyViewSetError);
}

TEST_CASE("nearer geometry occludes a wall point") {
  const auto spec = two_view_spec();
  const auto gen = generate(spec);
  const auto conf = activate_all(gen.bundle);
  // The wall point behind the sphere center as seen from camera 1.
  const Vec3 c1 = gen.bundle.cameras[1].center();
  const Vec3 dir = (spec.movers[0].start - c1).normalized();
  const double s = (spec.background.wall_depth - c1.z()) / dir.z();
  CloudPoint p;
  p.position = c1 + s * dir;
  const auto records = gather_projections(p, 0, gen.bundle, conf);
  CHECK(records[0].visible);
  CHECK_FALSE(records[1].visible);
}

TEST_CASE("theta zero keeps every scored point") {
  const auto spec = random_scene_spec(5);
  const auto bundle = generate(spec).bundle;
  const auto conf = activate_all(bundle);
  auto cloud = unproject_mask(bundle, *bundle.gt_masks);
  RefineOptions opt;
  opt.theta_dyn = 0.0;
  opt.close_masks = false;
  const auto out = refine_masks(cloud, bundle, conf, opt);
  CHECK(out.kept == cloud.alive_count());
  const auto back = mask_from_cloud(cloud, bundle.frames, bundle.height, bundle.width);
  for (int f = 0; f < bundle.frames; ++f) CHECK(out.masks[static_cast<std::size_t>(f)].bits == back[static_cast<std::size_t>(f)].bits);
}

TEST_CASE("injected static points are rejected") {
  std::size_t injected = 0, removed = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto bundle = generate(random_scene_spec(seed)).bundle;
    const auto corrupted = corrupt(bundle, 0.0, 40, seed);
    auto masks = empty_masks(bundle.frames, bundle.height, bundle.width);
    for (const auto& px : corrupted.injected) masks[static_cast<std::size_t>(px.frame)].set(px.row, px.col);
    const auto cloud = unproject_mask(corrupted.bundle, masks);
    const auto conf = activate_all(corrupted.bundle);
    const auto out = refine_masks(cloud, corrupted.bundle, conf);
    injected += cloud.points.size();
    for (const auto& v : out.verdicts) removed += v.kept ? 0 : 1;
  }
  MESSAGE("removed " << removed << " of " << injected);
  CHECK(injected >= 150);
  CHECK(removed >= 0.95 * static_cast<double>(injected));
}

TEST_CASE("parallel refinement equals the serial reference") {
  const auto bundle = generate(random_scene_spec(9)).bundle;
  const auto conf = activate_all(bundle);
  auto masks = *bundle.gt_masks;
  for (auto& m : masks) m = close3x3(m);
  const auto cloud = unproject_mask(bundle, masks);
  const auto a = refine_masks(cloud, bundle, conf);
  const auto b = refine_masks_serial(cloud, bundle, conf);
  CHECK(a.kept == b.kept);
  CHECK(a.unobserved == b.unobserved);
  for (std::size_t i = 0; i < a.verdicts.size(); ++i) {
    CHECK(a.verdicts[i].score == b.verdicts[i].score);
    CHECK(a.verdicts[i].kept == b.verdicts[i].kept);
  }
  for (std::size_t f = 0; f < a.masks.size(); ++f) CHECK(a.masks[f].bits == b.masks[f].bits);
}
