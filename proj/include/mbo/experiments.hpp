#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mbo/geometry.hpp"
#include "mbo/kernel_synthesis.hpp"

namespace mbo {

/// One checked quantity of an experiment. Supplementary lines report extra
/// diagnostic runs and do not enter the verdict.
struct CriterionLine {
  std::string name;
  bool pass = false;
  std::string detail;
  bool supplementary = false;
};

struct ExperimentResult {
  std::string name;
  std::vector<CriterionLine> lines;
  double seconds = 0.0;

  /// All non-supplementary lines pass.
  bool pass() const;
  /// One "PASS|FAIL|INFO <name>: <detail>" line per criterion, then the verdict.
  std::string to_text() const;
};

struct ExperimentOptions {
  std::uint64_t seed = 1;
  bool supplementary = true;
  std::ostream* log = nullptr;
};

std::vector<std::string> available_experiments();

/// Throws ConfigError for unknown names.
ExperimentResult run_experiment(const std::string& name, const ExperimentOptions& opts = {});

/// Checks shared by every driven run: the energy ledger
/// E_h(chi^n) + sum (1/2h) d_h^2 <= E_h(chi^0) (1 + 1e-9) and a valid
/// partition after every step.
struct RunHealth {
  std::int64_t steps = 0;
  std::int64_t ledger_violations = 0;
  double worst_ledger_excess = 0.0;  // max (lhs - rhs) / |rhs|
  std::int64_t partition_violations = 0;
  double seconds = 0.0;

  bool ok() const { return ledger_violations == 0 && partition_violations == 0; }
  std::string to_text() const;
};

inline constexpr double kLedgerTolerance = 1e-9;

struct DiskShrinkRun {
  double mu = 1.0;
  double h = 0.0;
  ShrinkFit fit;
  double target = 0.0;  // -2 sigma mu
  double relative_error = 0.0;
  std::int64_t flipped_cells = 0;  // total label changes over the run
  RunHealth health;
};

/// Two-phase disk of radius r0 in a uniform (sigma = 1, mu) material on an
/// n x n grid, run until r^2 has nominally halved.
DiskShrinkRun shrinking_disk(double mu, double h, int n = 512, double r0 = 0.35);

struct HerringRun {
  double s23 = 1.0;
  double h = 0.0;
  int steps = 0;
  int window = 0;
  YoungAngles target;
  bool found = false;
  std::array<double, 3> angles{};  // sectors of phases 0, 1, 2
  double max_error = 0.0;          // degrees
  RunHealth health;
};

/// Mercedes start (phase 0 sector bisected by the axis-0 direction) with
/// tensions (s01, s02, s12) = (1, 1, s23); angles of the junction nearest the
/// domain center after `steps` steps.
HerringRun herring_junction(double s23, double h, int steps, int window, int n = 512);

struct ConsistencyPoint {
  double h = 0.0;
  double energy = 0.0;
  double relative_error = 0.0;
};

/// E_h of a fixed disk of radius r in a uniform unit material for each h,
/// against 2 * 2 pi r.
std::vector<ConsistencyPoint> consistency_sweep(const std::vector<double>& hs, int n = 1024, double r = 0.25);

}  // namespace mbo
