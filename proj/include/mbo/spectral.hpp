#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "mbo/grid.hpp"
#include "mbo/kernel_synthesis.hpp"

namespace mbo {

namespace detail {
struct PlanSet;
}

/// Real-to-complex discrete Fourier transform on a GridSpec.
///
/// forward() is normalized so the zero mode equals the grid mean; inverse()
/// is its exact inverse. Plans are shared between instances on the same grid
/// and execution is safe from several threads at once.
class FourierTransform {
 public:
  explicit FourierTransform(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  std::size_t spectrum_size() const { return spectrum_size_; }

  void forward(const double* in, Complex* out) const;
  /// Overwrites `in`.
  void inverse(Complex* in, double* out) const;

  SpectralField forward(const ScalarField& f) const;
  ScalarField inverse(SpectralField s) const;

  /// 4 pi^2 |k|^2 for every stored coefficient.
  std::span<const double> squared_wavenumbers() const { return k2_; }
  /// Multiplicity of each stored coefficient in the full spectrum (1 or 2),
  /// so that sum_k w_k Re(conj(F_k) G_k) is the grid mean of f*g.
  std::span<const double> parseval_weights() const { return weights_; }

  /// Grid mean of f*g computed from the two half spectra.
  double inner_product(const Complex* f, const Complex* g) const;

 private:
  GridSpec grid_;
  std::size_t spectrum_size_ = 0;
  std::shared_ptr<const detail::PlanSet> plans_;
  std::vector<double> k2_;
  std::vector<double> weights_;
};

/// exp(-4 pi^2 t |k|^2) given the precomputed 4 pi^2 |k|^2.
inline double heat_multiplier(double t, double k2) { return std::exp(-t * k2); }

ScalarField indicator(const LabelField& field, int phase);
std::vector<ScalarField> indicators(const LabelField& field);

/// Periodized heat-kernel convolution G_t * f, exact in Fourier.
ScalarField gaussian_convolve(const ScalarField& f, double t);

/// psi_i = sum_{j != i} a_ij G_{gamma h} * f_j + b_ij G_{beta h} * f_j,
/// built from the two per-phase convolutions.
ScalarField weighted_kernel_convolve(std::span<const ScalarField> fields, const KernelCoefficients& coeffs,
                                     double h, int phase);

/// Same quantity through the single combined multiplier
/// a_ij exp(-4 pi^2 gamma h |k|^2) + b_ij exp(-4 pi^2 beta h |k|^2).
ScalarField combined_kernel_convolve(std::span<const ScalarField> fields, const KernelCoefficients& coeffs,
                                     double h, int phase);

enum class Resolution { Resolved, UnderResolved };

/// Narrow kernel width sqrt(beta h) against the grid spacing: under-resolved
/// below two cells, ResolutionError below half a cell.
Resolution check_resolution(const GridSpec& grid, double beta, double h);

/// Gaussian convolutions of every phase field at two times, the building
/// block of one thresholding step. Workspace is kept between calls.
class TwoScaleConvolver {
 public:
  explicit TwoScaleConvolver(const GridSpec& grid);

  const FourierTransform& transform() const { return transform_; }

  /// Forward transforms of the indicator of every phase into spectra_.
  void load_indicators(const LabelField& labels);
  /// Forward transforms of arbitrary phase fields.
  void load_fields(const PhaseStack& fields);

  /// wide_p = G_{t_wide} * f_p, narrow_p = G_{t_narrow} * f_p for all p.
  void convolve(double t_wide, double t_narrow, PhaseStack& wide, PhaseStack& narrow);

  const Complex* spectrum(int p) const { return spectra_.data() + static_cast<std::size_t>(p) * spectrum_stride_; }
  int phases() const { return phases_; }

 private:
  void reserve(int phases);
  Complex* spectrum_mut(int p) { return spectra_.data() + static_cast<std::size_t>(p) * spectrum_stride_; }

  FourierTransform transform_;
  std::size_t spectrum_stride_;
  int phases_ = 0;
  AlignedVector<Complex> spectra_;
  std::vector<AlignedVector<Complex>> scratch_;  // one per thread
  std::vector<AlignedVector<double>> real_scratch_;
};

/// psi = A phi_wide + B phi_narrow per cell (the comparison functions).
/// Data-parallel over cell blocks.
void combine_comparison(const KernelCoefficients& coeffs, const PhaseStack& wide, const PhaseStack& narrow,
                        PhaseStack& psi);

}  // namespace mbo
