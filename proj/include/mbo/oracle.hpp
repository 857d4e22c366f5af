#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mbo/grid.hpp"
#include "mbo/kernel_synthesis.hpp"
#include "mbo/thresholding.hpp"

namespace mbo {

inline constexpr std::uint64_t kMaxEnumeration = 100000;
inline constexpr std::size_t kMaxOracleCells = 16;
inline constexpr std::size_t kMaxRealspaceCells = 4096;

/// One tiny minimizing-movements problem: previous state, kernel and step.
struct OracleCase {
  LabelField prev;
  KernelCoefficients coeffs;
  double h = 0.0;
  TieBreak tie = TieBreak::LowestIndex;

  /// N^cells, saturating at UINT64_MAX.
  std::uint64_t enumeration_count() const;
};

struct OracleVerdict {
  double best_value = 0.0;
  std::vector<LabelField> best_configs;  // lexicographic order
  LabelField thresholded;
  double threshold_value = 0.0;
  bool is_minimizer = false;
  double gap = 0.0;  // threshold_value - best_value
};

/// Evaluates (1/2h) d_h^2(u, prev) + E_h(u) for every hard labeling u and
/// compares the minimum with one thresholding step from prev.
/// Throws EnumerationTooLarge past kMaxEnumeration or kMaxOracleCells.
OracleVerdict exhaustive_minimize(const OracleCase& c);

/// Largest threshold_value - objective(u) over `samples` random relaxed
/// states u (independent uniform simplex points per cell). 0 when
/// samples == 0.
double relaxed_sampling_check(const OracleCase& c, int samples, std::uint64_t seed);

/// The pointwise linear form (2/sqrt(h)) integral sum_i u_i psi_i minus
/// (prev, prev), with psi the comparison fields of prev.
double linear_objective_from_psi(std::span<const ScalarField> u, const OracleCase& c);

/// Values from the direct real-space double sum with a periodized kernel
/// tabulated from image sources.
struct RealspaceValues {
  double energy_u = 0.0;
  double energy_v = 0.0;
  double dist_sq = 0.0;           // -2h E_h(u - v)
  double dist_sq_halftime = 0.0;  // half-time smoothed quadratic form
};

/// Throws GuardViolation above kMaxRealspaceCells.
RealspaceValues realspace_crosscheck(std::span<const ScalarField> u, std::span<const ScalarField> v,
                                     const KernelCoefficients& coeffs, double h);

/// Periodized heat kernel on the unit torus, sampled at the grid offsets
/// (index = grid index of the displacement). Image sums stop once a term
/// drops below 1e-16 of the leading one.
std::vector<double> periodized_heat_kernel(const GridSpec& grid, double t);

/// Random material with entries sigma in [0.5, 1.5], mu in [0.5, 2],
/// scales from suggest_scales (inadmissible draws are redrawn), h such that
/// sqrt(beta h) = 1.5 cells, and uniformly random previous labels.
OracleCase random_oracle_case(const GridSpec& grid, int phases, std::mt19937_64& rng);

struct OracleSuiteOptions {
  int cases = 100;
  std::vector<GridSpec> grids;
  std::vector<int> phases;
  std::uint64_t seed = 1;
  int relaxed_samples = 0;
};

struct OracleSuiteResult {
  int cases = 0;
  int failures = 0;
  double max_gap = 0.0;
  double max_relaxed_violation = 0.0;
  double seconds = 0.0;

  std::string summary() const;  // "cases=... failures=... max_gap=..."
};

/// Case k draws grid k % grids, phase count (k / grids) % phases, and its
/// own RNG stream from (seed, k). Writes one verdict line per case to `log`
/// when given.
OracleSuiteResult run_oracle_suite(const OracleSuiteOptions& opts, std::ostream* log = nullptr);

}  // namespace mbo
