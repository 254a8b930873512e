#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "dsd/errors.hpp"
#include "dsd/rng.hpp"
#include "dsd/scene.hpp"
#include "dsd/synthetic.hpp"
#include "dsd/tensor.hpp"
#include "test_support.hpp"

using namespace dsd;
namespace fs = std::filesystem;

namespace {

void write_raw(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("smallest tensor encodes to header plus one zero float") {
  const auto dir = testing::scratch_dir("tensor_small");
  write_tensor(TensorMap({1}, {0.0f}), dir / "t.dmt");
  const auto bytes = read_file(dir / "t.dmt");
  const std::vector<std::uint8_t> expected = {'D', 'M', 'T', '1', 0x01, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00};
  CHECK(bytes == expected);
  CHECK(bytes.size() == container_size(std::vector<std::uint32_t>{1}));
}

TEST_CASE("2x2 tensor is row-major after a 13-byte header") {
  const auto bytes = encode_tensor(TensorMap({2, 2}, {1, 2, 3, 4}));
  REQUIRE(bytes.size() == 13 + 16);
  CHECK(bytes[4] == 2);
  CHECK(bytes[5] == 2);
  CHECK(bytes[9] == 2);
  for (int i = 0; i < 4; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t{bytes[13 + 4 * i + b]} << (8 * b);
    CHECK(std::bit_cast<float>(bits) == static_cast<float>(i + 1));
  }
}

TEST_CASE("write/read round trip is bit-identical and the size formula holds") {
  const auto dir = testing::scratch_dir("tensor_roundtrip");
  SplitMix64 rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    const auto rank = 1 + rng.below(5);
    std::vector<std::uint32_t> dims;
    for (std::uint64_t i = 0; i < rank; ++i) dims.push_back(static_cast<std::uint32_t>(1 + rng.below(6)));
    std::vector<float> data(product(dims));
    for (auto& v : data) {
      // Random bit patterns, skipping NaN; covers denormals, infinities and -0.
      std::uint32_t bits;
      do {
        bits = static_cast<std::uint32_t>(rng.next());
      } while (std::isnan(std::bit_cast<float>(bits)));
      v = std::bit_cast<float>(bits);
    }
    const TensorMap t(dims, data);
    const auto path = dir / "r.dmt";
    write_tensor(t, path);
    CHECK(fs::file_size(path) == 5 + 4 * dims.size() + 4 * data.size());
    const auto back = read_tensor(path);
    REQUIRE(back.dims() == dims);
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(std::bit_cast<std::uint32_t>(back.data()[i]) == std::bit_cast<std::uint32_t>(data[i]));
    }
  }
}

TEST_CASE("reader rejects bad magic, truncation, NaN and zero extents") {
  const auto dir = testing::scratch_dir("tensor_errors");
  auto good = encode_tensor(TensorMap({2, 2}, {1, 2, 3, 4}));

  auto bad_magic = good;
  bad_magic[0] = bad_magic[1] = bad_magic[2] = bad_magic[3] = 'X';
  write_raw(dir / "magic.dmt", bad_magic);
  CHECK_THROWS_AS(read_tensor(dir / "magic.dmt"), FormatError);

  auto truncated = good;
  truncated.resize(13 + 12);
  write_raw(dir / "trunc.dmt", truncated);
  CHECK_THROWS_AS(read_tensor(dir / "trunc.dmt"), FormatError);

  auto nan = good;
  const auto nan_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
  for (int b = 0; b < 4; ++b) nan[13 + b] = static_cast<std::uint8_t>(nan_bits >> (8 * b));
  write_raw(dir / "nan.dmt", nan);
  CHECK_THROWS_AS(read_tensor(dir / "nan.dmt"), FormatError);

  auto zero = good;
  zero[5] = 0;
  write_raw(dir / "zero.dmt", zero);
  CHECK_THROWS_AS(read_tensor(dir / "zero.dmt"), FormatError);

  CHECK_THROWS_AS(read_tensor(dir / "missing.dmt"), IoError);
}

TEST_CASE("NaN payload is rejected before any byte is written") {
  const auto dir = testing::scratch_dir("tensor_nan_write");
  const TensorMap t({3}, {1.0f, std::numeric_limits<float>::quiet_NaN(), 2.0f});
  CHECK_THROWS_AS(write_tensor(t, dir / "n.dmt"), FormatError);
  CHECK_FALSE(fs::exists(dir / "n.dmt"));
  CHECK_FALSE(fs::exists(dir / "n.dmt.tmp"));
}

TEST_CASE("tensor construction enforces rank and extents") {
  CHECK_THROWS_AS(TensorMap({}, {}), ShapeError);
  CHECK_THROWS_AS(TensorMap({1, 1, 1, 1, 1, 1}, {0.0f}), ShapeError);
  CHECK_THROWS_AS(TensorMap({2, 0}, {}), ShapeError);
  CHECK_THROWS_AS(TensorMap({2, 2}, {1, 2, 3}), ShapeError);
}

namespace {

SceneSpec small_spec() {
  CorpusOptions o;
  o.frames = 3;
  o.height = 32;
  o.width = 48;
  return random_scene_spec(5, o);
}

}  // namespace

TEST_CASE("generator output loads as a valid bundle, deterministically") {
  const auto dir = testing::scratch_dir("scene_load");
  const auto scene = generate(small_spec());
  write_generated(scene, dir);
  const auto a = load_scene(dir);
  const auto b = load_scene(dir);
  CHECK(a.frames == 3);
  CHECK(a.images == scene.bundle.images);
  CHECK(a.depths == scene.bundle.depths);
  CHECK(a.attention == scene.bundle.attention);
  REQUIRE(a.gt_masks.has_value());
  CHECK(*a.gt_masks == *scene.bundle.gt_masks);
  CHECK(a.images == b.images);
  CHECK(a.depths == b.depths);
  CHECK(a.confidence_logits == b.confidence_logits);
  for (int f = 0; f < 3; ++f) {
    CHECK(a.cameras[f].R == b.cameras[f].R);
    CHECK(a.cameras[f].t == b.cameras[f].t);
    CHECK(a.cameras[f].R == scene.bundle.cameras[f].R);
  }
}

TEST_CASE("manifest errors: shape mismatch, bad rotation, missing file, no ground truth") {
  const auto dir = testing::scratch_dir("scene_errors");
  const auto scene = generate(small_spec());
  write_generated(scene, dir);
  const auto manifest_path = dir / "scene.json";
  const auto original = nlohmann::json::parse(std::ifstream(manifest_path));

  SUBCASE("depth dims differ from image dims") {
    write_tensor(TensorMap::zeros({16, 48}), dir / "depth_bad.dmt");
    auto m = original;
    m["depths"][1] = "depth_bad.dmt";
    std::ofstream(manifest_path) << m.dump();
    CHECK_THROWS_AS(load_scene(dir), ShapeError);
  }
  SUBCASE("non-orthonormal rotation") {
    auto m = original;
    m["cameras"][0]["R"][0] = 1.001;
    std::ofstream(manifest_path) << m.dump();
    CHECK_THROWS_AS(load_scene(dir), GeometryError);
  }
  SUBCASE("missing tensor file") {
    auto m = original;
    m["images"][0] = "nope.dmt";
    std::ofstream(manifest_path) << m.dump();
    CHECK_THROWS_AS(load_scene(dir), IoError);
  }
  SUBCASE("ground truth omitted") {
    auto m = original;
    m.erase("gt_masks");
    m.erase("gt_cameras");
    std::ofstream(manifest_path) << m.dump();
    const auto b = load_scene(dir);
    CHECK_FALSE(b.gt_masks.has_value());
    CHECK_FALSE(b.gt_cameras.has_value());
  }
  SUBCASE("patch factor does not divide image dims") {
    auto m = original;
    m["patch"] = 5;
    std::ofstream(manifest_path) << m.dump();
    CHECK_THROWS_AS(load_scene(dir), ShapeError);
  }
}

TEST_CASE("ground-truth extras round trip") {
  const auto dir = testing::scratch_dir("gt_extras");
  const auto scene = generate(small_spec());
  write_generated(scene, dir);
  const auto bundle = load_scene(dir);
  const auto gt = load_ground_truth(dir, bundle);
  REQUIRE(gt.has_value());
  CHECK(gt->depths == scene.truth.depths);
  CHECK(gt->labels == scene.truth.labels);
  REQUIRE(gt->movers.size() == scene.truth.movers.size());
  CHECK(gt->movers[0].velocity == scene.truth.movers[0].velocity);
  fs::remove(dir / "gt.json");
  CHECK_FALSE(load_ground_truth(dir, bundle).has_value());
}
