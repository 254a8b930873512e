#include "dsd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Geometry>

#include "dsd/errors.hpp"
#include "dsd/rng.hpp"

namespace dsd {
using nlohmann::json;

namespace {

// Stream ids for substream(); frame streams use the frame index directly.
constexpr std::uint64_t kPoseStream = 1u << 20;

Vec3 vec3_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return {v[0], v[1], v[2]};
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

double ray_sphere(const Vec3& o, const Vec3& d, const Vec3& c, double radius) {
  const Vec3 oc = o - c;
  const double a = d.squaredNorm();
  const double b = 2.0 * d.dot(oc);
  const double k = oc.squaredNorm() - radius * radius;
  const double disc = b * b - 4.0 * a * k;
  if (disc < 0.0) return -1.0;
  const double s = std::sqrt(disc);
  const double t0 = (-b - s) / (2.0 * a);
  if (t0 > 1e-6) return t0;
  const double t1 = (-b + s) / (2.0 * a);
  return t1 > 1e-6 ? t1 : -1.0;
}

double ray_box(const Vec3& o, const Vec3& d, const Vec3& c, double half) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double lo = c(a) - half - o(a);
    const double hi = c(a) + half - o(a);
    if (std::abs(d(a)) < 1e-15) {
      if (lo > 0.0 || hi < 0.0) return -1.0;
      continue;
    }
    double t0 = lo / d(a);
    double t1 = hi / d(a);
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
  }
  if (tmax < tmin) return -1.0;
  if (tmin > 1e-6) return tmin;
  return tmax > 1e-6 ? tmax : -1.0;
}

Vec3 texture(double a, double b, double freq, double phase) {
  const double s = std::sin(freq * a + phase) * std::cos(freq * b - 0.5 * phase);
  const double u = std::cos(0.6 * freq * (a + b) + phase);
  return {0.5 + 0.18 * s + 0.08 * u, 0.5 + 0.15 * u - 0.05 * s, 0.45 + 0.12 * s * u + 0.1 * std::sin(0.4 * freq * b)};
}

}  // namespace

bool NormalizedRect::active(int frame) const { return frames.empty() || std::ranges::find(frames, frame) != frames.end(); }

namespace {

bool in_noisy_region(const SceneSpec& spec, int frame, int row, int col) {
  const double u = (col + 0.5) / spec.width;
  const double v = (row + 0.5) / spec.height;
  for (const auto& r : spec.noise.noisy_regions) {
    if (r.active(frame) && r.contains(u, v)) return true;
  }
  return false;
}

CameraModel camera_for(const SceneSpec& spec, const CameraPose& pose) {
  CameraModel c;
  c.intrinsics = spec.intrinsics();
  c.R = pose.R;
  c.t = pose.t;
  return c;
}

// Smoothing kernel [1 2 1] x [1 2 1], renormalized over in-bounds taps.
std::vector<double> smooth(const std::vector<double>& in, int h, int w) {
  std::vector<double> out(in.size());
  const double k[3] = {1.0, 2.0, 1.0};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0, norm = 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
          const double wt = k[dr + 1] * k[dc + 1];
          acc += wt * in[static_cast<std::size_t>(rr) * w + cc];
          norm += wt;
        }
      }
      out[static_cast<std::size_t>(r) * w + c] = acc / norm;
    }
  }
  return out;
}

struct FrameOutput {
  TensorMap image, depth, logits, attention, gt_depth, labels;
  BinaryMap mask;
};

FrameOutput render_frame(const SceneSpec& spec, int f) {
  const auto H = static_cast<std::uint32_t>(spec.height);
  const auto W = static_cast<std::uint32_t>(spec.width);
  const CameraModel cam = camera_for(spec, spec.camera_path[static_cast<std::size_t>(f)]);
  FrameOutput out{TensorMap::zeros({H, W, 3}), TensorMap::zeros({H, W}), TensorMap::zeros({H, W}),
                  TensorMap::zeros({static_cast<std::uint32_t>(spec.attention.signal_heads + spec.attention.noise_heads),
                                    H / static_cast<std::uint32_t>(spec.patch), W / static_cast<std::uint32_t>(spec.patch)}),
                  TensorMap::zeros({H, W}), TensorMap::zeros({H, W}), BinaryMap(spec.height, spec.width)};
  SplitMix64 rng = substream(spec.seed, static_cast<std::uint64_t>(f));
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      const auto ur = static_cast<std::size_t>(r);
      const auto uc = static_cast<std::size_t>(c);
      const RayHit hit = trace(spec, f, cam, Vec2(c, r));
      for (int k = 0; k < 3; ++k) out.image.at(ur, uc, static_cast<std::size_t>(k)) = static_cast<float>(std::clamp(hit.color(k), 0.0, 1.0));
      out.gt_depth.at(ur, uc) = static_cast<float>(hit.depth);
      out.labels.at(ur, uc) = static_cast<float>(hit.label);
      if (hit.label > 0) out.mask.set(r, c);
      const double sigma = spec.noise.depth_sigma * (in_noisy_region(spec, f, r, c) ? spec.noise.region_factor : 1.0);
      const double noise = rng.gaussian();
      double d = hit.depth;
      if (d > 0.0 && sigma > 0.0) d = std::max(1e-3, d + sigma * noise);
      out.depth.at(ur, uc) = static_cast<float>(d);
      // C - 1 = 1 / sigma^2, i.e. l = -2 ln(sigma).
      const double logit = sigma > 0.0 ? -2.0 * std::log(sigma) : 40.0;
      out.logits.at(ur, uc) = static_cast<float>(std::clamp(logit, -40.0, 40.0));
    }
  }

  const int ph = spec.height / spec.patch;
  const int pw = spec.width / spec.patch;
  std::vector<double> coverage(static_cast<std::size_t>(ph) * pw, 0.0);
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (out.mask.at(r, c)) coverage[static_cast<std::size_t>(r / spec.patch) * pw + c / spec.patch] += 1.0;
    }
  }
  for (auto& v : coverage) v /= static_cast<double>(spec.patch * spec.patch);
  const auto smoothed = smooth(coverage, ph, pw);
  const auto& a = spec.attention;
  int head = 0;
  for (int s = 0; s < a.signal_heads; ++s, ++head) {
    for (int i = 0; i < ph; ++i) {
      for (int j = 0; j < pw; ++j) {
        const double v = a.peak_gain * (smoothed[static_cast<std::size_t>(i) * pw + j] + rng.uniform(0.0, a.signal_jitter));
        out.attention.at(static_cast<std::size_t>(head), static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = static_cast<float>(v);
      }
    }
  }
  for (int s = 0; s < a.noise_heads; ++s, ++head) {
    const double level = rng.uniform(0.2, 0.8);
    for (int i = 0; i < ph; ++i) {
      for (int j = 0; j < pw; ++j) {
        const double v = a.peak_gain * (level + rng.uniform(0.0, a.noise_jitter));
        out.attention.at(static_cast<std::size_t>(head), static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = static_cast<float>(v);
      }
    }
  }
  return out;
}

}  // namespace

CameraPose look_at(const Vec3& center, const Vec3& target) {
  const Vec3 z = (target - center).normalized();
  const Vec3 down(0.0, 1.0, 0.0);
  const Vec3 x = down.cross(z).normalized();
  const Vec3 y = z.cross(x);
  CameraPose p;
  p.R.row(0) = x.transpose();
  p.R.row(1) = y.transpose();
  p.R.row(2) = z.transpose();
  p.t = -p.R * center;
  return p;
}

Intrinsics SceneSpec::intrinsics() const {
  const double f = focal_factor * width;
  return {f, f, 0.5 * (width - 1), 0.5 * (height - 1)};
}

void SceneSpec::validate() const {
  if (frames < 2) throw std::invalid_argument("scene needs at least 2 frames");
  if (height < 1 || width < 1 || patch < 1) throw std::invalid_argument("image dims and patch must be positive");
  if (height % patch != 0 || width % patch != 0) throw std::invalid_argument("patch must divide image dims");
  if (!(focal_factor > 0.0)) throw std::invalid_argument("focal_factor must be positive");
  if (static_cast<int>(camera_path.size()) != frames) throw std::invalid_argument("camera_path must have one pose per frame");
  if (attention.signal_heads < 0 || attention.noise_heads < 0 || attention.signal_heads + attention.noise_heads < 1) {
    throw std::invalid_argument("attention needs at least one head");
  }
  if (noise.depth_sigma < 0.0 || noise.region_factor <= 0.0) throw std::invalid_argument("invalid noise spec");
  for (const auto& m : movers) {
    if (!(m.size > 0.0)) throw std::invalid_argument("mover size must be positive");
  }
  for (const auto& p : camera_path) camera_for(*this, p).validate();
}

SceneSpec scene_spec_from_json(const json& j) {
  SceneSpec s;
  s.seed = j.value("seed", std::uint64_t{1});
  s.frames = j.value("frames", s.frames);
  s.height = j.value("height", s.height);
  s.width = j.value("width", s.width);
  s.patch = j.value("patch", s.patch);
  s.focal_factor = j.value("focal_factor", s.focal_factor);
  if (j.contains("background")) {
    const auto& b = j["background"];
    s.background.wall_depth = b.value("wall_depth", s.background.wall_depth);
    s.background.floor_height = b.value("floor_height", s.background.floor_height);
    s.background.texture_frequency = b.value("texture_frequency", s.background.texture_frequency);
  }
  for (const auto& m : j.value("movers", json::array())) {
    MoverSpec mv;
    const auto shape = m.value("shape", std::string("sphere"));
    if (shape == "sphere") {
      mv.shape = MoverShape::sphere;
    } else if (shape == "box") {
      mv.shape = MoverShape::box;
    } else {
      throw std::invalid_argument("unknown mover shape '" + shape + "'");
    }
    mv.size = m.value("size", mv.size);
    if (m.contains("start")) mv.start = vec3_from(m["start"]);
    if (m.contains("velocity")) mv.velocity = vec3_from(m["velocity"]);
    if (m.contains("color")) mv.color = vec3_from(m["color"]);
    s.movers.push_back(mv);
  }
  const auto& path = j.at("camera_path");
  if (path.is_array()) {
    for (const auto& p : path) {
      const auto R = p.at("R").get<std::vector<double>>();
      const auto t = p.at("t").get<std::vector<double>>();
      if (R.size() != 9 || t.size() != 3) throw std::invalid_argument("camera pose needs R[9] and t[3]");
      CameraPose pose;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) pose.R(r, c) = R[static_cast<std::size_t>(r * 3 + c)];
        pose.t(r) = t[static_cast<std::size_t>(r)];
      }
      s.camera_path.push_back(pose);
    }
  } else {
    const Vec3 start = vec3_from(path.at("start"));
    const Vec3 step = vec3_from(path.at("step"));
    const Vec3 target = vec3_from(path.at("look_at"));
    for (int f = 0; f < s.frames; ++f) s.camera_path.push_back(look_at(start + f * step, target));
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    s.noise.depth_sigma = n.value("depth_sigma", s.noise.depth_sigma);
    s.noise.region_factor = n.value("region_factor", s.noise.region_factor);
    s.noise.pose_rotation_sigma = n.value("pose_rotation_sigma", 0.0);
    s.noise.pose_translation_sigma = n.value("pose_translation_sigma", 0.0);
    for (const auto& r : n.value("noisy_regions", json::array())) {
      const auto v = (r.is_object() ? r.at("rect") : r).get<std::vector<double>>();
      if (v.size() != 4) throw std::invalid_argument("noisy region needs [x0, y0, x1, y1]");
      NormalizedRect rect{v[0], v[1], v[2], v[3]};
      if (r.is_object()) rect.frames = r.value("frames", std::vector<int>{});
      s.noise.noisy_regions.push_back(std::move(rect));
    }
  }
  if (j.contains("attention")) {
    const auto& a = j["attention"];
    s.attention.signal_heads = a.value("signal_heads", s.attention.signal_heads);
    s.attention.noise_heads = a.value("noise_heads", s.attention.noise_heads);
    s.attention.peak_gain = a.value("peak_gain", s.attention.peak_gain);
    s.attention.signal_jitter = a.value("signal_jitter", s.attention.signal_jitter);
    s.attention.noise_jitter = a.value("noise_jitter", s.attention.noise_jitter);
  }
  s.validate();
  return s;
}

json scene_spec_to_json(const SceneSpec& s) {
  json j;
  j["seed"] = s.seed;
  j["frames"] = s.frames;
  j["height"] = s.height;
  j["width"] = s.width;
  j["patch"] = s.patch;
  j["focal_factor"] = s.focal_factor;
  j["background"] = {{"wall_depth", s.background.wall_depth},
                     {"floor_height", s.background.floor_height},
                     {"texture_frequency", s.background.texture_frequency}};
  json movers = json::array();
  for (const auto& m : s.movers) {
    movers.push_back({{"shape", m.shape == MoverShape::sphere ? "sphere" : "box"},
                      {"size", m.size},
                      {"start", to_json(m.start)},
                      {"velocity", to_json(m.velocity)},
                      {"color", to_json(m.color)}});
  }
  j["movers"] = movers;
  json path = json::array();
  for (const auto& p : s.camera_path) {
    std::vector<double> R(9);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) R[static_cast<std::size_t>(r * 3 + c)] = p.R(r, c);
    }
    path.push_back({{"R", R}, {"t", to_json(p.t)}});
  }
  j["camera_path"] = path;
  json regions = json::array();
  for (const auto& r : s.noise.noisy_regions) {
    const json rect = {r.x0, r.y0, r.x1, r.y1};
    regions.push_back(r.frames.empty() ? rect : json{{"rect", rect}, {"frames", r.frames}});
  }
  j["noise"] = {{"depth_sigma", s.noise.depth_sigma},
                {"region_factor", s.noise.region_factor},
                {"noisy_regions", regions},
                {"pose_rotation_sigma", s.noise.pose_rotation_sigma},
                {"pose_translation_sigma", s.noise.pose_translation_sigma}};
  j["attention"] = {{"signal_heads", s.attention.signal_heads},
                    {"noise_heads", s.attention.noise_heads},
                    {"peak_gain", s.attention.peak_gain},
                    {"signal_jitter", s.attention.signal_jitter},
                    {"noise_jitter", s.attention.noise_jitter}};
  return j;
}

RayHit trace(const SceneSpec& spec, int frame, const CameraModel& cam, const Vec2& pixel) {
  const Vec3 o = cam.center();
  // Camera-space z of the direction is 1, so the ray parameter is the depth.
  const Vec3 d = cam.R.transpose() * cam.intrinsics.normalize(pixel);
  RayHit hit;
  double best = std::numeric_limits<double>::infinity();
  const auto& bg = spec.background;
  if (d.z() > 0.0) {
    const double t = (bg.wall_depth - o.z()) / d.z();
    if (t > 1e-6 && t < best) {
      best = t;
      const Vec3 p = o + t * d;
      hit.color = texture(p.x(), p.y(), bg.texture_frequency, 0.3);
      hit.label = 0;
    }
  }
  if (d.y() > 0.0) {
    const double t = (bg.floor_height - o.y()) / d.y();
    if (t > 1e-6 && t < best) {
      best = t;
      const Vec3 p = o + t * d;
      hit.color = texture(p.x(), p.z(), bg.texture_frequency, 1.7);
      hit.label = 0;
    }
  }
  for (std::size_t k = 0; k < spec.movers.size(); ++k) {
    const auto& m = spec.movers[k];
    const Vec3 c = m.start + static_cast<double>(frame) * m.velocity;
    const double t = m.shape == MoverShape::sphere ? ray_sphere(o, d, c, m.size) : ray_box(o, d, c, m.size);
    if (t > 1e-6 && t < best) {
      best = t;
      hit.color = m.color;
      hit.label = static_cast<int>(k) + 1;
    }
  }
  if (std::isfinite(best)) hit.depth = best;
  return hit;
}

GeneratedScene generate(const SceneSpec& spec, bool parallel) {
  spec.validate();
  GeneratedScene out;
  const int T = spec.frames;
  std::vector<FrameOutput> frames(static_cast<std::size_t>(T));
#pragma omp parallel for schedule(static) if (parallel)
  for (int f = 0; f < T; ++f) frames[static_cast<std::size_t>(f)] = render_frame(spec, f);

  auto& b = out.bundle;
  b.frames = T;
  b.height = spec.height;
  b.width = spec.width;
  b.heads = spec.attention.signal_heads + spec.attention.noise_heads;
  b.patch = spec.patch;
  MaskStack masks;
  std::vector<CameraModel> truth_cams;
  SplitMix64 pose_rng = substream(spec.seed, kPoseStream);
  for (int f = 0; f < T; ++f) {
    auto& fr = frames[static_cast<std::size_t>(f)];
    b.images.push_back(std::move(fr.image));
    b.depths.push_back(std::move(fr.depth));
    b.confidence_logits.push_back(std::move(fr.logits));
    b.attention.push_back(std::move(fr.attention));
    masks.push_back(std::move(fr.mask));
    out.truth.depths.push_back(std::move(fr.gt_depth));
    out.truth.labels.push_back(std::move(fr.labels));
    const CameraModel truth = camera_for(spec, spec.camera_path[static_cast<std::size_t>(f)]);
    truth_cams.push_back(truth);
    CameraModel noisy = truth;
    if (spec.noise.pose_rotation_sigma > 0.0 || spec.noise.pose_translation_sigma > 0.0) {
      const Vec3 w(pose_rng.gaussian(), pose_rng.gaussian(), pose_rng.gaussian());
      const Vec3 dt(pose_rng.gaussian(), pose_rng.gaussian(), pose_rng.gaussian());
      const Vec3 rv = spec.noise.pose_rotation_sigma * w;
      const Mat3 dR = rv.norm() > 0.0 ? Eigen::AngleAxisd(rv.norm(), rv.normalized()).toRotationMatrix() : Mat3::Identity();
      noisy.R = dR * truth.R;
      noisy.t = truth.t + spec.noise.pose_translation_sigma * dt;
    }
    b.cameras.push_back(noisy);
  }
  b.gt_masks = std::move(masks);
  b.gt_cameras = std::move(truth_cams);
  for (std::size_t k = 0; k < spec.movers.size(); ++k) {
    out.truth.movers.push_back({static_cast<int>(k) + 1, spec.movers[k].velocity});
  }
  double max_baseline = 0.0;
  for (int f = 1; f < T; ++f) {
    max_baseline = std::max(max_baseline, (b.cameras[static_cast<std::size_t>(f)].center() - b.cameras[0].center()).norm());
  }
  if (max_baseline <= kMinBaseline) out.warnings.push_back("degenerate camera path: zero baseline between all frames");
  b.validate();
  return out;
}

void write_generated(const GeneratedScene& scene, const std::filesystem::path& dir) {
  save_scene(scene.bundle, dir);
  save_ground_truth(scene.truth, dir);
}

CorruptedScene corrupt(const SceneBundle& bundle, double occluder_fraction, int outlier_points, std::uint64_t seed) {
  CorruptedScene out{bundle, {}, 0};
  if (occluder_fraction <= 0.0 && outlier_points <= 0) return out;
  SplitMix64 rng(seed);
  const int H = bundle.height;
  const int W = bundle.width;
  const std::size_t total = static_cast<std::size_t>(bundle.frames) * H * W;

  if (occluder_fraction > 0.0) {
    const int side = std::max(4, std::min(H, W) / 8);
    const auto target = static_cast<std::size_t>(std::ceil(std::min(occluder_fraction, 1.0) * static_cast<double>(total)));
    std::size_t invalid = 0;
    for (const auto& d : out.bundle.depths) {
      for (float v : d.data()) invalid += v > 0.0f ? 0 : 1;
    }
    while (invalid < target) {
      const int f = static_cast<int>(rng.below(static_cast<std::uint64_t>(bundle.frames)));
      const int r0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, H - side + 1))));
      const int c0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, W - side + 1))));
      auto& depth = out.bundle.depths[static_cast<std::size_t>(f)];
      for (int r = r0; r < std::min(H, r0 + side); ++r) {
        for (int c = c0; c < std::min(W, c0 + side); ++c) {
          float& v = depth.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
          if (v > 0.0f) {
            v = 0.0f;
            ++invalid;
            ++out.invalidated_pixels;
          }
        }
      }
    }
  }

  // Candidates keep a margin from the movers and from each other so every
  // injected pixel is isolated in the image and, through depth, in 3D.
  constexpr int kMoverMargin = 6;
  constexpr int kSpacing = 8;
  int attempts = 0;
  while (static_cast<int>(out.injected.size()) < outlier_points && attempts < 200000) {
    ++attempts;
    PixelRef p{static_cast<int>(rng.below(static_cast<std::uint64_t>(bundle.frames))),
               static_cast<int>(rng.below(static_cast<std::uint64_t>(H))),
               static_cast<int>(rng.below(static_cast<std::uint64_t>(W)))};
    if (!out.bundle.depth_valid(p.frame, p.row, p.col)) continue;
    bool ok = true;
    if (bundle.gt_masks) {
      const auto& m = (*bundle.gt_masks)[static_cast<std::size_t>(p.frame)];
      for (int r = std::max(0, p.row - kMoverMargin); ok && r <= std::min(H - 1, p.row + kMoverMargin); ++r) {
        for (int c = std::max(0, p.col - kMoverMargin); c <= std::min(W - 1, p.col + kMoverMargin); ++c) {
          if (m.at(r, c)) {
            ok = false;
            break;
          }
        }
      }
    }
    for (const auto& q : out.injected) {
      if (!ok) break;
      if (q.frame == p.frame && std::abs(q.row - p.row) < kSpacing && std::abs(q.col - p.col) < kSpacing) ok = false;
    }
    if (ok) out.injected.push_back(p);
  }
  return out;
}

SceneSpec random_scene_spec(std::uint64_t seed, const CorpusOptions& o) {
  SplitMix64 rng = substream(seed, kPoseStream + 1);
  SceneSpec s;
  s.seed = seed;
  s.frames = o.frames;
  s.height = o.height;
  s.width = o.width;
  s.patch = o.patch;
  s.noise.depth_sigma = o.depth_sigma;
  s.noise.noisy_regions = o.noisy_regions;
  s.attention.signal_heads = o.signal_heads;
  s.attention.noise_heads = o.noise_heads;
  s.attention.noise_jitter = o.noise_jitter;

  const double sweep = rng.uniform(0.5, 0.9);
  const double height = rng.uniform(-0.3, 0.0);
  const Vec3 target(rng.uniform(-0.3, 0.3), rng.uniform(0.0, 0.4), s.background.wall_depth);
  const Vec3 start(-0.5 * sweep, height, 0.0);
  const Vec3 step(sweep / (o.frames - 1), 0.0, 0.0);
  for (int f = 0; f < o.frames; ++f) s.camera_path.push_back(look_at(start + f * step, target));

  const Vec3 palette[3] = {Vec3(0.9, 0.15, 0.1), Vec3(0.1, 0.25, 0.9), Vec3(0.95, 0.85, 0.1)};
  for (int k = 0; k < o.movers; ++k) {
    MoverSpec m;
    m.shape = rng.uniform() < 0.7 ? MoverShape::sphere : MoverShape::box;
    m.size = rng.uniform(0.45, 0.65);
    const double depth = rng.uniform(3.5, 5.0);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Vec3 dir(std::cos(angle), 0.6 * std::sin(angle), 0.15 * rng.uniform(-1.0, 1.0));
    m.velocity = o.speed * dir.normalized();
    // Centered at mid-sequence, with movers spread horizontally.
    const double lane = o.movers == 1 ? 0.0 : -0.9 + 1.8 * k / (o.movers - 1);
    const Vec3 mid(lane + rng.uniform(-0.2, 0.2), rng.uniform(-0.1, 0.3), depth);
    m.start = mid - 0.5 * (o.frames - 1) * m.velocity;
    m.color = palette[k % 3];
    s.movers.push_back(m);
  }
  s.validate();
  return s;
}

}  // namespace dsd
