#include "dsd/scene.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "dsd/errors.hpp"

namespace dsd {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string indexed(const char* prefix, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", prefix, i, ext);
  return buf;
}

void expect_dims(const TensorMap& t, std::vector<std::uint32_t> dims, const std::string& what) {
  if (t.dims() != dims) {
    std::string got, want;
    for (auto d : t.dims()) got += std::to_string(d) + " ";
    for (auto d : dims) want += std::to_string(d) + " ";
    throw ShapeError(what + ": dims [" + got + "] expected [" + want + "]");
  }
}

json camera_to_json(const CameraModel& c) {
  json j;
  j["fx"] = c.intrinsics.fx;
  j["fy"] = c.intrinsics.fy;
  j["cx"] = c.intrinsics.cx;
  j["cy"] = c.intrinsics.cy;
  std::vector<double> R(9), t(3);
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) R[r * 3 + k] = c.R(r, k);
    t[r] = c.t(r);
  }
  j["R"] = R;
  j["t"] = t;
  return j;
}

CameraModel camera_from_json(const json& j) {
  CameraModel c;
  c.intrinsics.fx = j.at("fx").get<double>();
  c.intrinsics.fy = j.at("fy").get<double>();
  c.intrinsics.cx = j.at("cx").get<double>();
  c.intrinsics.cy = j.at("cy").get<double>();
  const auto R = j.at("R").get<std::vector<double>>();
  const auto t = j.at("t").get<std::vector<double>>();
  if (R.size() != 9 || t.size() != 3) throw ShapeError("camera needs 9 rotation and 3 translation values");
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) c.R(r, k) = R[r * 3 + k];
    c.t(r) = t[r];
  }
  c.validate();
  return c;
}

json read_json(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<TensorMap> load_list(const fs::path& dir, const json& manifest, const char* key, int frames) {
  const auto names = manifest.at(key).get<std::vector<std::string>>();
  if (static_cast<int>(names.size()) != frames) {
    throw ShapeError(std::string(key) + ": expected " + std::to_string(frames) + " entries");
  }
  std::vector<TensorMap> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(read_tensor(dir / n));
  return out;
}

}  // namespace

void SceneBundle::validate() const {
  if (frames < 1 || height < 1 || width < 1 || heads < 1 || patch < 1) {
    throw ShapeError("scene extents must be positive");
  }
  if (height % patch != 0 || width % patch != 0) {
    throw ShapeError("patch factor must divide image dims exactly");
  }
  const auto T = static_cast<std::size_t>(frames);
  if (images.size() != T || depths.size() != T || confidence_logits.size() != T || attention.size() != T ||
      cameras.size() != T) {
    throw ShapeError("per-frame lists must all have " + std::to_string(frames) + " entries");
  }
  const auto H = static_cast<std::uint32_t>(height);
  const auto W = static_cast<std::uint32_t>(width);
  for (std::size_t f = 0; f < T; ++f) {
    const std::string tag = " (frame " + std::to_string(f) + ")";
    expect_dims(images[f], {H, W, 3}, "image" + tag);
    expect_dims(depths[f], {H, W}, "depth" + tag);
    expect_dims(confidence_logits[f], {H, W}, "confidence" + tag);
    expect_dims(attention[f],
                {static_cast<std::uint32_t>(heads), H / static_cast<std::uint32_t>(patch),
                 W / static_cast<std::uint32_t>(patch)},
                "attention" + tag);
    for (float v : images[f].data()) {
      if (!(v >= 0.0f && v <= 1.0f)) throw ShapeError("image value outside [0, 1]" + tag);
    }
    for (float v : depths[f].data()) {
      if (!(v >= 0.0f) || !std::isfinite(v)) throw ShapeError("depth must be finite and >= 0" + tag);
    }
    for (float v : attention[f].data()) {
      if (!std::isfinite(v)) throw ShapeError("attention must be finite" + tag);
    }
    cameras[f].validate();
  }
  if (gt_masks) {
    if (gt_masks->size() != T) throw ShapeError("gt_masks must have one mask per frame");
    for (const auto& m : *gt_masks) {
      if (m.height != height || m.width != width) throw ShapeError("gt mask dims differ from image dims");
    }
  }
  if (gt_cameras) {
    if (gt_cameras->size() != T) throw ShapeError("gt_cameras must have one pose per frame");
    for (const auto& c : *gt_cameras) c.validate();
  }
}

SceneBundle load_scene(const fs::path& dir) {
  const auto manifest_path = dir / "scene.json";
  if (!fs::exists(manifest_path)) throw IoError("missing " + manifest_path.string());
  const json m = read_json(manifest_path);
  SceneBundle b;
  try {
    b.frames = m.at("frames").get<int>();
    b.height = m.at("height").get<int>();
    b.width = m.at("width").get<int>();
    b.heads = m.at("heads").get<int>();
    b.patch = m.at("patch").get<int>();
    if (b.frames < 1) throw ShapeError("frames must be positive");
    b.images = load_list(dir, m, "images", b.frames);
    b.depths = load_list(dir, m, "depths", b.frames);
    b.confidence_logits = load_list(dir, m, "confidences", b.frames);
    b.attention = load_list(dir, m, "attentions", b.frames);
    for (const auto& c : m.at("cameras")) b.cameras.push_back(camera_from_json(c));
    if (m.contains("gt_masks")) {
      MaskStack masks;
      for (const auto& n : m["gt_masks"]) masks.push_back(read_pgm(dir / n.get<std::string>()));
      b.gt_masks = std::move(masks);
    }
    if (m.contains("gt_cameras")) {
      std::vector<CameraModel> cams;
      for (const auto& c : m["gt_cameras"]) cams.push_back(camera_from_json(c));
      b.gt_cameras = std::move(cams);
    }
  } catch (const json::exception& e) {
    throw FormatError("scene.json: " + std::string(e.what()));
  }
  b.validate();
  return b;
}

void save_scene(const SceneBundle& b, const fs::path& dir) {
  b.validate();
  fs::create_directories(dir);
  json m;
  m["frames"] = b.frames;
  m["height"] = b.height;
  m["width"] = b.width;
  m["heads"] = b.heads;
  m["patch"] = b.patch;
  std::vector<std::string> images, depths, confs, atts;
  json cams = json::array();
  for (int f = 0; f < b.frames; ++f) {
    const auto i = static_cast<std::size_t>(f);
    images.push_back(indexed("image", f, "dmt"));
    depths.push_back(indexed("depth", f, "dmt"));
    confs.push_back(indexed("confidence", f, "dmt"));
    atts.push_back(indexed("attention", f, "dmt"));
    write_tensor(b.images[i], dir / images.back());
    write_tensor(b.depths[i], dir / depths.back());
    write_tensor(b.confidence_logits[i], dir / confs.back());
    write_tensor(b.attention[i], dir / atts.back());
    cams.push_back(camera_to_json(b.cameras[i]));
  }
  m["images"] = images;
  m["depths"] = depths;
  m["confidences"] = confs;
  m["attentions"] = atts;
  m["cameras"] = cams;
  if (b.gt_masks) {
    std::vector<std::string> names;
    for (int f = 0; f < b.frames; ++f) {
      names.push_back(indexed("gt_mask", f, "pgm"));
      write_pgm((*b.gt_masks)[static_cast<std::size_t>(f)], dir / names.back());
    }
    m["gt_masks"] = names;
  }
  if (b.gt_cameras) {
    json gc = json::array();
    for (const auto& c : *b.gt_cameras) gc.push_back(camera_to_json(c));
    m["gt_cameras"] = gc;
  }
  write_text_atomic(dir / "scene.json", m.dump(2) + "\n");
}

void save_ground_truth(const GroundTruthExtras& gt, const fs::path& dir) {
  fs::create_directories(dir);
  json j;
  json movers = json::array();
  for (const auto& mv : gt.movers) {
    movers.push_back({{"id", mv.id}, {"velocity", {mv.velocity.x(), mv.velocity.y(), mv.velocity.z()}}});
  }
  j["movers"] = movers;
  std::vector<std::string> depths, labels;
  for (std::size_t f = 0; f < gt.depths.size(); ++f) {
    depths.push_back(indexed("gt_depth", static_cast<int>(f), "dmt"));
    write_tensor(gt.depths[f], dir / depths.back());
  }
  for (std::size_t f = 0; f < gt.labels.size(); ++f) {
    labels.push_back(indexed("gt_label", static_cast<int>(f), "dmt"));
    write_tensor(gt.labels[f], dir / labels.back());
  }
  j["depths"] = depths;
  j["labels"] = labels;
  write_text_atomic(dir / "gt.json", j.dump(2) + "\n");
}

std::optional<GroundTruthExtras> load_ground_truth(const fs::path& dir, const SceneBundle& bundle) {
  const auto path = dir / "gt.json";
  if (!fs::exists(path)) return std::nullopt;
  const json j = read_json(path);
  GroundTruthExtras gt;
  try {
    for (const auto& mv : j.at("movers")) {
      const auto v = mv.at("velocity").get<std::vector<double>>();
      if (v.size() != 3) throw ShapeError("mover velocity needs 3 values");
      gt.movers.push_back({mv.at("id").get<int>(), Vec3(v[0], v[1], v[2])});
    }
    gt.depths = load_list(dir, j, "depths", bundle.frames);
    gt.labels = load_list(dir, j, "labels", bundle.frames);
  } catch (const json::exception& e) {
    throw FormatError("gt.json: " + std::string(e.what()));
  }
  const auto H = static_cast<std::uint32_t>(bundle.height);
  const auto W = static_cast<std::uint32_t>(bundle.width);
  for (const auto& t : gt.depths) expect_dims(t, {H, W}, "gt depth");
  for (const auto& t : gt.labels) expect_dims(t, {H, W}, "gt label");
  return gt;
}

}  // namespace dsd
