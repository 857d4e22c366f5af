#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mbo/grid.hpp"

namespace mbo {

/// A named preset plus its numeric parameters.
///
///   disk      r (0.25), cx, cy, cz (0.5), inside (1), outside (0)
///   stripe    lo (0.25), hi (0.75), axis (0), inside (1), outside (0)
///   mercedes  cx, cy (0.5), angle (90, degrees); phases 0, 1, 2 in
///             counter-clockwise 120 degree sectors, first sector starting at
///             `angle`
///   voronoi   seeds (N); seed k gets phase k mod N
///   raw       path to a label snapshot
struct InitialCondition {
  std::string preset = "disk";
  std::map<std::string, double> params;
  std::string path;
  std::uint64_t seed = 0;
};

std::vector<std::string> available_presets();
/// Parameter names accepted by a preset (ConfigError for unknown presets).
std::vector<std::string> preset_parameters(const std::string& preset);

/// Throws ConfigError naming "initial.<key>" for bad parameters.
LabelField make_initial(const InitialCondition& ic, const GridSpec& grid, int num_phases);

LabelField disk_labels(const GridSpec& grid, int num_phases, std::array<double, 3> center, double radius,
                       int inside = 1, int outside = 0);
LabelField stripe_labels(const GridSpec& grid, int num_phases, double lo, double hi, int axis = 0, int inside = 1,
                         int outside = 0);
LabelField mercedes_labels(const GridSpec& grid, int num_phases, std::array<double, 2> center,
                           double angle_degrees = 90.0);
/// Nearest seed in the periodic metric; seeds uniform on the torus.
LabelField voronoi_labels(const GridSpec& grid, int num_phases, int seeds, std::uint64_t rng_seed);

}  // namespace mbo
