#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mbo/energetics.hpp"
#include "mbo/grid.hpp"
#include "mbo/kernel_synthesis.hpp"
#include "mbo/spectral.hpp"

namespace mbo {

/// Which phase wins a cell whose comparison values tie exactly.
enum class TieBreak { LowestIndex, HighestIndex };

TieBreak parse_tie_break(const std::string& name);
std::string to_string(TieBreak t);

struct SchemeConfig {
  double h = 0.0;
  std::int64_t steps = 1;
  TieBreak tie_break = TieBreak::LowestIndex;
  std::int64_t record_every = 1;  // snapshot cadence; 0 keeps only the final state
  bool retain_reports = true;
};

/// Comparison functions psi_0..psi_{N-1} of one step.
using ComparisonFields = PhaseStack;

struct StepResult {
  LabelField labels;
  ComparisonFields psi;
};

/// Per-cell argmin of psi with the given tie rule. Strict < comparisons, no
/// tolerance band.
void threshold_labels(const ComparisonFields& psi, TieBreak tie, LabelField& out);

/// One convolve / compare / threshold step. Requires certified coefficients
/// (ValidationError otherwise) and a resolved narrow kernel
/// (ResolutionError).
StepResult threshold_step(const LabelField& labels, const KernelCoefficients& coeffs, double h,
                          TieBreak tie = TieBreak::LowestIndex);

struct Snapshot {
  std::int64_t step = 0;
  double time = 0.0;
  LabelField labels;
};

struct Trajectory {
  LabelField initial;
  std::vector<Snapshot> snapshots;
  std::vector<StepReport> reports;
  LabelField final_state;
};

/// Called after every step with the new labels and its report.
using StepObserver = std::function<void(const LabelField&, const StepReport&)>;

/// Multi-step driver. Keeps the convolution workspace between steps and
/// evaluates the energy ledger from the same convolutions that drive the
/// thresholding.
class ThresholdingEngine {
 public:
  ThresholdingEngine(const GridSpec& grid, const KernelCoefficients& coeffs, double h,
                     TieBreak tie = TieBreak::LowestIndex);

  /// Convolutions of `labels`; afterwards comparison() and energy() refer to it.
  void load(const LabelField& labels);
  /// Thresholds the loaded state into `next` (does not load it).
  void threshold(LabelField& next);

  const ComparisonFields& comparison() const { return psi_; }
  const PhaseStack& wide() const { return wide_; }
  const PhaseStack& narrow() const { return narrow_; }
  EnergyBreakdown energy() const;
  /// (loaded, other) through the loaded convolutions.
  double pairing_with(const LabelField& other) const;

  Trajectory run(const LabelField& initial, const SchemeConfig& cfg, const StepObserver& observer = {});

  Resolution resolution() const { return resolution_; }

 private:
  GridSpec grid_;
  KernelCoefficients coeffs_;
  double h_;
  TieBreak tie_;
  Resolution resolution_;
  TwoScaleConvolver convolver_;
  PhaseStack wide_;
  PhaseStack narrow_;
  ComparisonFields psi_;
  const LabelField* loaded_ = nullptr;
  LabelField loaded_copy_;
};

Trajectory run(const LabelField& initial, const KernelCoefficients& coeffs, const SchemeConfig& cfg,
               const StepObserver& observer = {});

namespace reference {

/// Single-threaded, unblocked implementation of one step built from the
/// public single-field convolution. Kept as the test oracle for the
/// parallel kernels.
StepResult threshold_step_serial(const LabelField& labels, const KernelCoefficients& coeffs, double h,
                                 TieBreak tie = TieBreak::LowestIndex);

}  // namespace reference

}  // namespace mbo
