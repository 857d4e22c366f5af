#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "mbo/grid.hpp"
#include "mbo/kernel_synthesis.hpp"
#include "mbo/spectral.hpp"

namespace mbo {

/// Approximate energy split into ordered-pair terms
///   e_ij = h^{-1/2} * integral of u_i K^h_ij * u_j.
/// Every physical interface appears twice (once as (i,j), once as (j,i)).
struct EnergyBreakdown {
  double total = 0.0;
  Matrix per_pair;
};

/// The kernel bilinear form on a fixed grid, evaluated through Parseval:
///   (u, v) = h^{-1/2} sum_ij integral u_i K^h_ij * v_j.
/// Holds the per-mode Gaussian multipliers for (gamma h, beta h).
class SpectralEnergy {
 public:
  SpectralEnergy(const GridSpec& grid, const KernelCoefficients& coeffs, double h);

  using Spectra = std::vector<AlignedVector<Complex>>;

  Spectra transform(std::span<const ScalarField> u) const;
  Spectra transform(const LabelField& labels) const;

  EnergyBreakdown energy(const Spectra& u) const;
  double bilinear(const Spectra& u, const Spectra& v) const;
  /// h^{-1/2} integral u_i K^h_ij * v_j for one ordered pair.
  double pair_term(const AlignedVector<Complex>& ui, int i, int j, const AlignedVector<Complex>& vj) const;

  const FourierTransform& transform() const { return transform_; }
  const KernelCoefficients& coefficients() const { return coeffs_; }
  double h() const { return h_; }

 private:
  FourierTransform transform_;
  KernelCoefficients coeffs_;
  double h_;
  std::vector<double> wide_;
  std::vector<double> narrow_;
};

/// Throws DomainError unless every component lies in [0,1] and the
/// components sum to one within 1e-9 at every cell.
void check_relaxed_partition(std::span<const ScalarField> u);

EnergyBreakdown approximate_energy(std::span<const ScalarField> u, const KernelCoefficients& coeffs, double h);
EnergyBreakdown approximate_energy(const LabelField& labels, const KernelCoefficients& coeffs, double h);

/// (u, v) for arbitrary real phase fields; no membership check.
double bilinear_form(std::span<const ScalarField> u, std::span<const ScalarField> v,
                     const KernelCoefficients& coeffs, double h);

/// Values of -2h E_h(w) below this are reported as NegativeSquareError.
inline constexpr double kNegativeSquareTolerance = 1e-10;

/// d_h^2(u, v) = -2h E_h(u - v), via Parseval.
double distance_squared(std::span<const ScalarField> u, std::span<const ScalarField> v,
                        const KernelCoefficients& coeffs, double h);
/// The same quantity through half-time smoothing and pointwise quadratic
/// forms: 2 sqrt(h) integral |G_{gamma h/2} * w|_A^2 + |G_{beta h/2} * w|_B^2.
double distance_squared_halftime(std::span<const ScalarField> u, std::span<const ScalarField> v,
                                 const KernelCoefficients& coeffs, double h);
double distance(std::span<const ScalarField> u, std::span<const ScalarField> v, const KernelCoefficients& coeffs,
                double h);

/// (1/2h) d_h^2(u, prev) + E_h(u).
double movement_objective(std::span<const ScalarField> u, const LabelField& prev, const KernelCoefficients& coeffs,
                          double h);
/// 2 (prev, u) - (prev, prev), equal to movement_objective for every u.
double movement_objective_linear(std::span<const ScalarField> u, const LabelField& prev,
                                 const KernelCoefficients& coeffs, double h);

/// Sums of the per-phase convolutions over the cells of each phase:
///   wide(i, j) = sum_{x : labels(x) = i} wide_j(x), same for narrow.
struct PairSums {
  Matrix wide;
  Matrix narrow;
};
PairSums pair_sums(const LabelField& labels, const PhaseStack& wide, const PhaseStack& narrow);

/// Ordered-pair energies of `labels` from convolutions of the same labels.
EnergyBreakdown energy_from_pair_sums(const PairSums& sums, const KernelCoefficients& coeffs, double h,
                                      std::size_t cells);
/// (u, v) where the sums were taken over the cells of u with the
/// convolutions of v.
double bilinear_from_pair_sums(const PairSums& sums, const KernelCoefficients& coeffs, double h,
                               std::size_t cells);

struct StepEvent {
  enum class Kind { VanishedPhase };
  Kind kind = Kind::VanishedPhase;
  int phase = 0;
};

struct StepReport {
  std::int64_t step = 0;
  double time = 0.0;
  EnergyBreakdown energy_before;
  EnergyBreakdown energy_after;
  double dist_sq = 0.0;     // d_h^2(chi^n, chi^{n-1})
  double ledger_lhs = 0.0;  // E_h(chi^n) + sum_k (1/2h) d_h^2(chi^k, chi^{k-1})
  double ledger_rhs = 0.0;  // E_h(chi^0)
  std::vector<std::int64_t> phase_volumes;
  std::vector<StepEvent> events;
  double wall_seconds = 0.0;
};

/// metrics.csv: step,time,E_h_before,E_h_after,dist_sq,ledger_lhs,ledger_rhs,
/// vol_0..vol_{N-1}, e_i_j for i<j, then any extra columns. 12 significant
/// digits.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, int num_phases, std::vector<std::string> extra_columns = {});
  void write(const StepReport& report, std::span<const double> extra = {});
  static std::string header(int num_phases, std::span<const std::string> extra_columns = {});
  static std::string row(const StepReport& report, std::span<const double> extra = {});

 private:
  std::ofstream out_;
  int num_phases_;
  std::size_t extra_count_;
};

}  // namespace mbo
