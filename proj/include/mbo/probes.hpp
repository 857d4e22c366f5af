#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mbo/grid.hpp"
#include "mbo/kernel_synthesis.hpp"

namespace mbo {

/// Measurement requested on a label field:
///   "radius:P"       disk_radius of phase P
///   "length:I:J"     interface_length between phases I and J
///   "junctions"      junction_angles, one row per sector, Young target
///                    from the material's tensions
struct Probe {
  enum class Kind { Radius, Length, Junctions };
  Kind kind = Kind::Radius;
  int i = 0;
  int j = 0;

  std::string to_string() const;
};

/// Throws ConfigError naming "output.probes" on malformed text or phase
/// indices outside [0, num_phases).
Probe parse_probe(const std::string& text, int num_phases);

/// One probes.csv row. `target` and `error` are NaN when the quantity has
/// no analytic target.
struct ProbeRow {
  std::string kind;
  std::int64_t step = 0;
  double value = 0.0;
  double target = 0.0;
  double error = 0.0;
};

/// Radius of an empty phase is reported as 0. Junction rows are named
/// "junction[k]:angle:P" for the sector of phase P of junction k.
std::vector<ProbeRow> evaluate_probe(const Probe& probe, const LabelField& labels, std::int64_t step,
                                     const MaterialSpec& material);

/// "kind,step,value,target,error"
std::string probe_csv_header();
std::string probe_csv_row(const ProbeRow& row);

}  // namespace mbo
