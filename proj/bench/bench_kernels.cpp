#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "vesselkit/kernels.hpp"
#include "vesselkit/skeleton.hpp"
#include "vesselkit/synthgen.hpp"

using namespace vesselkit;

namespace {

// Best of `reps` wall-clock runs, in ms.
double best_ms(int reps, const std::function<void()> &f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

template <typename P, typename S> bool row(const char *name, int reps, P &&parallel, S &&serial) {
  decltype(parallel()) a, b;
  const double tp = best_ms(reps, [&] { a = parallel(); });
  const double ts = best_ms(reps, [&] { b = serial(); });
  const bool same = a == b;
  std::printf("%-22s %10.2f %10.2f %8.2fx  %s\n", name, ts, tp, ts / tp, same ? "identical" : "MISMATCH");
  return same;
}

bool same_components(const Components &a, const Components &b) { return a.ids == b.ids && a.sizes == b.sizes; }

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"OpenMP versus serial kernel timings on a synthetic vessel volume"};
  int size = 160, reps = 3, threads = 0;
  app.add_option("--size", size, "Grid edge in voxels")->capture_default_str()->check(CLI::Range(48, 512));
  app.add_option("--reps", reps, "Repetitions per kernel (best is reported)")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "OpenMP threads (0: default)")->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  SyntheticTreeSpec spec;
  spec.depth = size >= 128 ? 5 : 3; // deeper trees leave small grids
  spec.dims = {size, size, size};
  spec.trunk_length_mm = size * 0.3;
  spec.trunk_radius_mm = size / 40.0;
  spec.second_tree = true;
  const auto gt = generate(spec);
  const auto mask = gt.support();
  std::printf("grid %d^3, %zu foreground voxels, %d threads\n", size, mask.count(), omp_get_max_threads());
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial ms", "openmp ms", "speedup");

  bool ok = true;
  ok &= row("distance_transform", reps, [&] { return distance_transform(mask); },
            [&] { return kernels::serial::distance_transform(mask); });
  ok &= row("feature_transform", reps, [&] { return feature_transform(mask).nearest; },
            [&] { return kernels::serial::feature_transform(mask).nearest; });
  ok &= row("dilate r=2", reps, [&] { return dilate(mask, 2); }, [&] { return kernels::serial::dilate(mask, 2); });
  {
    Components a, b;
    const double tp = best_ms(reps, [&] { a = connected_components(mask); });
    const double ts = best_ms(reps, [&] { b = kernels::serial::connected_components(mask); });
    const bool same = same_components(a, b);
    std::printf("%-22s %10.2f %10.2f %8.2fx  %s\n", "connected_components", ts, tp, ts / tp,
                same ? "identical" : "MISMATCH");
    ok &= same;
  }
  ok &= row("skeletonize_lee", 1, [&] { return skeletonize_lee(mask).mask; },
            [&] { return kernels::serial::skeletonize_lee(mask).mask; });
  const auto soft = to_soft(mask);
  ok &= row("skeletonize_soft", reps, [&] { return skeletonize_soft(soft); },
            [&] { return kernels::serial::skeletonize_soft(soft); });
  return ok ? 0 : 1;
}
