#include "mbo/initial_conditions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mbo/errors.hpp"
#include "mbo/field_io.hpp"

namespace mbo {

namespace {

// Signed minimal-image offset on the unit circle.
double periodic_offset(double a, double b) {
  double d = a - b;
  d -= std::round(d);
  return d;
}

void check_phase_param(const char* key, int phase, int num_phases) {
  if (phase < 0 || phase >= num_phases) {
    throw ConfigError(fmt::format("initial.{}: phase {} out of range [0, {})", key, phase, num_phases));
  }
}

}  // namespace

std::vector<std::string> available_presets() { return {"disk", "stripe", "mercedes", "voronoi", "raw"}; }

std::vector<std::string> preset_parameters(const std::string& preset) {
  if (preset == "disk") return {"r", "cx", "cy", "cz", "inside", "outside"};
  if (preset == "stripe") return {"lo", "hi", "axis", "inside", "outside"};
  if (preset == "mercedes") return {"cx", "cy", "angle"};
  if (preset == "voronoi") return {"seeds"};
  if (preset == "raw") return {};
  throw ConfigError(fmt::format("initial.preset: unknown preset '{}' (available: {})", preset,
                                fmt::join(available_presets(), ", ")));
}

LabelField disk_labels(const GridSpec& grid, int num_phases, std::array<double, 3> center, double radius, int inside,
                       int outside) {
  check_phase_param("inside", inside, num_phases);
  check_phase_param("outside", outside, num_phases);
  if (!(radius > 0.0 && radius < 0.5)) throw ConfigError(fmt::format("initial.r: radius {} not in (0, 0.5)", radius));
  LabelField f(grid, num_phases, static_cast<std::uint8_t>(outside));
  for (std::size_t x = 0; x < grid.cells(); ++x) {
    const auto p = grid.center(x);
    double r2 = 0.0;
    for (int a = 0; a < grid.dim; ++a) {
      const double d = periodic_offset(p[a], center[a]);
      r2 += d * d;
    }
    if (r2 < radius * radius) f[x] = static_cast<std::uint8_t>(inside);
  }
  return f;
}

LabelField stripe_labels(const GridSpec& grid, int num_phases, double lo, double hi, int axis, int inside,
                         int outside) {
  check_phase_param("inside", inside, num_phases);
  check_phase_param("outside", outside, num_phases);
  if (axis < 0 || axis >= grid.dim) throw ConfigError(fmt::format("initial.axis: {} not a grid axis", axis));
  if (!(lo < hi)) throw ConfigError("initial.lo: must be below initial.hi");
  LabelField f(grid, num_phases, static_cast<std::uint8_t>(outside));
  for (std::size_t x = 0; x < grid.cells(); ++x) {
    const double v = grid.center(x)[axis];
    if (v >= lo && v < hi) f[x] = static_cast<std::uint8_t>(inside);
  }
  return f;
}

LabelField mercedes_labels(const GridSpec& grid, int num_phases, std::array<double, 2> center,
                           double angle_degrees) {
  if (num_phases < 3) throw ConfigError("initial.preset: mercedes needs at least three phases");
  LabelField f(grid, num_phases);
  const double start = angle_degrees * std::numbers::pi / 180.0;
  for (std::size_t x = 0; x < grid.cells(); ++x) {
    const auto p = grid.center(x);
    const double d0 = periodic_offset(p[0], center[0]);
    const double d1 = periodic_offset(p[1], center[1]);
    double rel = std::atan2(d1, d0) - start;
    rel -= 2.0 * std::numbers::pi * std::floor(rel / (2.0 * std::numbers::pi));
    const int sector = std::min(2, static_cast<int>(rel / (2.0 * std::numbers::pi / 3.0)));
    f[x] = static_cast<std::uint8_t>(sector);
  }
  return f;
}

LabelField voronoi_labels(const GridSpec& grid, int num_phases, int seeds, std::uint64_t rng_seed) {
  if (seeds < 1) throw ConfigError(fmt::format("initial.seeds: need at least one seed, got {}", seeds));
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::array<double, 3>> sites(seeds);
  for (auto& s : sites)
    for (int a = 0; a < grid.dim; ++a) s[a] = unit(rng);

  LabelField f(grid, num_phases);
  const auto cells = static_cast<std::int64_t>(grid.cells());
#pragma omp parallel for schedule(static)
  for (std::int64_t x = 0; x < cells; ++x) {
    const auto p = grid.center(static_cast<std::size_t>(x));
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < seeds; ++k) {
      double d2 = 0.0;
      for (int a = 0; a < grid.dim; ++a) {
        const double d = periodic_offset(p[a], sites[k][a]);
        d2 += d * d;
      }
      if (d2 < best_d) {
        best_d = d2;
        best = k;
      }
    }
    f.labels[x] = static_cast<std::uint8_t>(best % num_phases);
  }
  return f;
}

LabelField make_initial(const InitialCondition& ic, const GridSpec& grid, int num_phases) {
  const auto allowed = preset_parameters(ic.preset);
  for (const auto& [key, value] : ic.params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(fmt::format("initial.{}: not a parameter of preset '{}' (accepted: {})", key, ic.preset,
                                    allowed.empty() ? std::string("path only") : fmt::format("{}", fmt::join(allowed, ", "))));
    }
  }
  auto get = [&](const std::string& key, double fallback) {
    const auto it = ic.params.find(key);
    return it == ic.params.end() ? fallback : it->second;
  };
  auto get_int = [&](const std::string& key, int fallback) {
    const double v = get(key, fallback);
    if (v != std::floor(v)) throw ConfigError(fmt::format("initial.{}: expected an integer, got {}", key, v));
    return static_cast<int>(v);
  };

  if (ic.preset == "disk") {
    return disk_labels(grid, num_phases, {get("cx", 0.5), get("cy", 0.5), get("cz", 0.5)}, get("r", 0.25),
                       get_int("inside", 1), get_int("outside", 0));
  }
  if (ic.preset == "stripe") {
    return stripe_labels(grid, num_phases, get("lo", 0.25), get("hi", 0.75), get_int("axis", 0),
                         get_int("inside", 1), get_int("outside", 0));
  }
  if (ic.preset == "mercedes") return mercedes_labels(grid, num_phases, {get("cx", 0.5), get("cy", 0.5)}, get("angle", 90.0));
  if (ic.preset == "voronoi") return voronoi_labels(grid, num_phases, get_int("seeds", num_phases), ic.seed);
  // raw
  if (ic.path.empty()) throw ConfigError("initial.path: raw preset needs a snapshot path");
  LabelSnapshot snap = read_labels(ic.path);
  if (!(snap.labels.grid == grid)) {
    throw ConfigError(fmt::format("initial.path: snapshot grid {} differs from grid {}", snap.labels.grid.to_string(),
                                  grid.to_string()));
  }
  if (snap.labels.num_phases != num_phases) {
    throw ConfigError(fmt::format("initial.path: snapshot has {} phases, material has {}", snap.labels.num_phases,
                                  num_phases));
  }
  return snap.labels;
}

}  // namespace mbo
