// Serial reference step vs the parallel engine step at several thread counts.
// Usage: mbo_bench [--size N] [--phases P] [--reps R] [--threads T]...

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mbo/initial_conditions.hpp"
#include "mbo/kernel_synthesis.hpp"
#include "mbo/thresholding.hpp"

using namespace mbo;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thresholding step timing: serial reference vs parallel engine"};
  int size = 512;
  int phases = 8;
  int reps = 5;
  std::vector<int> threads;
  app.add_option("--size", size, "Grid size per axis (2D)")->check(CLI::Range(8, 8192));
  app.add_option("--phases", phases, "Number of phases")->check(CLI::Range(2, kMaxPhases));
  app.add_option("--reps", reps, "Repetitions (best time reported)")->check(CLI::Range(1, 1000));
  app.add_option("--threads", threads, "Thread counts for the parallel step (repeatable)");
  CLI11_PARSE(app, argc, argv);
  if (threads.empty()) {
    for (int t = 1; t <= omp_get_max_threads(); t *= 2) threads.push_back(t);
    if (threads.back() != omp_get_max_threads()) threads.push_back(omp_get_max_threads());
  }

  const auto spec = MaterialSpec::uniform(phases, 1.0, 1.0);
  const Scales s = suggest_scales(spec);
  const auto coeffs = certify(spec, compute_coefficients(spec, s.gamma, s.beta));
  const GridSpec grid = GridSpec::square(size);
  const double h = std::pow(2.0 / size, 2) / s.beta;
  const LabelField init = voronoi_labels(grid, phases, 4 * phases, 1);

  fmt::print("grid={}x{} phases={} h={:.3e} reps={} hardware_threads={}\n", size, size, phases, h, reps,
             omp_get_num_procs());
  StepResult ref;
  const double serial = best_of(reps, [&] { ref = reference::threshold_step_serial(init, coeffs, h); });
  fmt::print("{:<22}{:>12}{:>10}\n", "variant", "seconds", "speedup");
  fmt::print("{:<22}{:>12.4f}{:>10.2f}\n", "serial reference", serial, 1.0);
  for (int t : threads) {
    omp_set_num_threads(t);
    StepResult par;
    const double secs = best_of(reps, [&] { par = threshold_step(init, coeffs, h); });
    const bool same = par.labels == ref.labels;
    fmt::print("{:<22}{:>12.4f}{:>10.2f}{}\n", fmt::format("parallel threads={}", t), secs, serial / secs,
               same ? "" : "  (labels differ from reference)");
  }
  return 0;
}
