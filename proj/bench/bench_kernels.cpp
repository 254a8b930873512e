// Serial vs OpenMP timings for the data-parallel kernels.
//
//   dsd_bench [--seed N] [--repeats N] [--height H] [--width W]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsd/crossview.hpp"
#include "dsd/evaluation.hpp"
#include "dsd/pipeline.hpp"
#include "dsd/purification.hpp"
#include "dsd/synthetic.hpp"

using namespace dsd;

namespace {

double best_of(int repeats, const std::function<void()>& fn) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, std::size_t items, double serial, double parallel) {
  std::printf("%-22s %9zu %12.4f %12.4f %8.2fx\n", name, items, serial * 1e3, parallel * 1e3, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel benchmark"};
  std::uint64_t seed = 1;
  int repeats = 3;
  CorpusOptions options;
  options.height = 192;
  options.width = 256;
  app.add_option("--seed", seed);
  app.add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  app.add_option("--height", options.height)->check(CLI::PositiveNumber);
  app.add_option("--width", options.width)->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const SceneSpec spec = random_scene_spec(seed, options);
  std::printf("threads %d, scene %dx%d x %d frames, best of %d\n", omp_get_max_threads(), spec.width, spec.height,
              spec.frames, repeats);
  std::printf("%-22s %9s %12s %12s %9s\n", "kernel", "items", "serial ms", "parallel ms", "speedup");

  GeneratedScene scene;
  const double gen_s = best_of(repeats, [&] { scene = generate(spec, false); });
  const double gen_p = best_of(repeats, [&] { scene = generate(spec, true); });
  report("generate", static_cast<std::size_t>(spec.frames), gen_s, gen_p);

  const auto& bundle = scene.bundle;
  PipelineConfig config;
  config.uncertainty = false;
  config.purification = false;
  const auto initial = run_pipeline(bundle, config);
  const auto cloud = unproject_mask(bundle, initial.masks, initial.saliency);
  const double radius = kDefaultRadiusFactor * scene_diagonal(cloud);

  const double cnt_s = best_of(repeats, [&] { (void)count_all_neighbors_serial(cloud, radius); });
  const double cnt_p = best_of(repeats, [&] { (void)count_all_neighbors(cloud, radius); });
  report("count_all_neighbors", cloud.points.size(), cnt_s, cnt_p);

  const auto confidence = activate_all(bundle);
  const RefineOptions refine;
  const double ref_s = best_of(repeats, [&] { (void)refine_masks_serial(cloud, bundle, confidence, refine); });
  const double ref_p = best_of(repeats, [&] { (void)refine_masks(cloud, bundle, confidence, refine); });
  report("refine_masks", cloud.points.size(), ref_s, ref_p);

  std::vector<Vec3> query, reference;
  for (const auto& p : cloud.points) query.push_back(p.position);
  for (int f = 0; f < bundle.frames; ++f) {
    const auto& cam = bundle.cameras[static_cast<std::size_t>(f)];
    const auto& depth = bundle.depths[static_cast<std::size_t>(f)];
    for (int r = 0; r < bundle.height; r += 2) {
      for (int c = 0; c < bundle.width; c += 2) {
        const double d = depth.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        if (d > 0.0) reference.push_back(unproject(Vec2(c, r), d, cam));
      }
    }
  }
  const double nn_s = best_of(repeats, [&] { (void)nearest_distances_serial(query, reference); });
  const double nn_p = best_of(repeats, [&] { (void)nearest_distances(query, reference); });
  report("nearest_distances", query.size(), nn_s, nn_p);
  return 0;
}
