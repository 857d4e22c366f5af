#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mbo/grid.hpp"
#include "mbo/initial_conditions.hpp"
#include "mbo/kernel_synthesis.hpp"
#include "mbo/thresholding.hpp"

namespace mbo {

/// Fully resolved run description.
///
/// Text form: flat `[section]` blocks of `key = value` lines, `#` comments.
/// Values are numbers, bare words, quoted strings or JSON-style lists.
///
///   [material]  N, sigma, mu          (N x N row lists, or one number for
///                                      a uniform material)
///   [scales]    gamma, beta           (numbers, or `auto` for both)
///   [grid]      dim, sizes            (sizes: list, or one number per axis)
///   [scheme]    h, steps, tie_break, record_every
///   [initial]   preset, seed, path, preset parameters
///   [output]    dir, probes           (probes: list of "radius:P",
///                                      "length:I:J", "junctions")
struct RunConfig {
  MaterialSpec material;
  bool auto_scales = true;
  Scales scales;
  GridSpec grid;
  SchemeConfig scheme;
  InitialCondition initial;
  std::string output_dir = "run";
  std::vector<std::string> probes;

  /// Coefficients for (material, scales), certified.
  KernelCoefficients coefficients() const;
  /// Canonical text with scales resolved; parse_config(echo()) reproduces
  /// this config.
  std::string echo() const;
};

/// Throws ParseError ("line L: ...") on malformed text and ConfigError
/// ("<section>.<key>: ...") on semantic problems.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace mbo
