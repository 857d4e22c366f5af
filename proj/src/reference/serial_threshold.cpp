// Straightforward single-threaded thresholding step: one convolution per
// phase and scale through the public API, then a per-cell loop. No blocking,
// no shared workspace. Tests compare the parallel engine against it.

#include <fmt/format.h>

#include "mbo/errors.hpp"
#include "mbo/spectral.hpp"
#include "mbo/thresholding.hpp"

namespace mbo::reference {

StepResult threshold_step_serial(const LabelField& labels, const KernelCoefficients& coeffs, double h,
                                 TieBreak tie) {
  if (!coeffs.validated) throw ValidationError("kernel coefficients have not been validated");
  check_resolution(labels.grid, coeffs.beta, h);
  labels.check();
  const int n = coeffs.num_phases();
  if (labels.num_phases != n) throw DimensionError("label phase count does not match coefficients");

  std::vector<ScalarField> wide, narrow;
  for (int j = 0; j < n; ++j) {
    const ScalarField chi = indicator(labels, j);
    wide.push_back(gaussian_convolve(chi, coeffs.gamma * h));
    narrow.push_back(gaussian_convolve(chi, coeffs.beta * h));
  }

  const std::size_t cells = labels.size();
  StepResult result{LabelField(labels.grid, n), ComparisonFields(labels.grid, n)};
  for (std::size_t x = 0; x < cells; ++x) {
    int arg = -1;
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
      double psi = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        psi += coeffs.a(i, j) * wide[j].values[x] + coeffs.b(i, j) * narrow[j].values[x];
      }
      result.psi.phase(i)[x] = psi;
      const bool better = tie == TieBreak::LowestIndex ? psi < best : psi <= best;
      if (arg < 0 || better) {
        arg = i;
        best = psi;
      }
    }
    result.labels.labels[x] = static_cast<std::uint8_t>(arg);
  }
  return result;
}

}  // namespace mbo::reference
