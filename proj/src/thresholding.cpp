#include "mbo/thresholding.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>

#include "mbo/errors.hpp"

namespace mbo {

TieBreak parse_tie_break(const std::string& name) {
  if (name == "lowest-index") return TieBreak::LowestIndex;
  if (name == "highest-index") return TieBreak::HighestIndex;
  throw ConfigError(fmt::format("scheme.tie_break: unknown rule '{}' (available: lowest-index, highest-index)", name));
}

std::string to_string(TieBreak t) { return t == TieBreak::LowestIndex ? "lowest-index" : "highest-index"; }

void threshold_labels(const ComparisonFields& psi, TieBreak tie, LabelField& out) {
  const int n = psi.phases();
  const std::size_t cells = psi.cells();
  if (out.size() != cells || out.num_phases != n) throw DimensionError("threshold output does not match psi");
  constexpr std::size_t kBlock = 2048;
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((cells + kBlock - 1) / kBlock);
  std::uint8_t* lab = out.labels.data();

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t begin = static_cast<std::size_t>(blk) * kBlock;
    const std::size_t len = std::min(kBlock, cells - begin);
    double best[kBlock];
    std::uint8_t arg[kBlock];
    const double* p0 = psi.phase(0) + begin;
    for (std::size_t x = 0; x < len; ++x) {
      best[x] = p0[x];
      arg[x] = 0;
    }
    for (int p = 1; p < n; ++p) {
      const double* pp = psi.phase(p) + begin;
      const auto label = static_cast<std::uint8_t>(p);
      if (tie == TieBreak::LowestIndex) {
        for (std::size_t x = 0; x < len; ++x) {
          if (pp[x] < best[x]) {
            best[x] = pp[x];
            arg[x] = label;
          }
        }
      } else {
        for (std::size_t x = 0; x < len; ++x) {
          if (pp[x] <= best[x]) {
            best[x] = pp[x];
            arg[x] = label;
          }
        }
      }
    }
    std::copy_n(arg, len, lab + begin);
  }
}

ThresholdingEngine::ThresholdingEngine(const GridSpec& grid, const KernelCoefficients& coeffs, double h,
                                       TieBreak tie)
    : grid_(grid),
      coeffs_(coeffs),
      h_(h),
      tie_(tie),
      resolution_(check_resolution(grid, coeffs.beta, h)),
      convolver_(grid),
      wide_(grid, coeffs.num_phases()),
      narrow_(grid, coeffs.num_phases()),
      psi_(grid, coeffs.num_phases()) {
  if (!coeffs.validated) {
    throw ValidationError("kernel coefficients have not been validated; pass them through certify() first");
  }
  if (coeffs.num_phases() > kMaxPhases) throw DimensionError("too many phases for one-byte labels");
}

void ThresholdingEngine::load(const LabelField& labels) {
  if (!(labels.grid == grid_)) throw DimensionError("label grid does not match engine grid");
  if (labels.num_phases != coeffs_.num_phases()) {
    throw DimensionError(fmt::format("labels have {} phases, coefficients {}", labels.num_phases,
                                     coeffs_.num_phases()));
  }
  convolver_.load_indicators(labels);
  convolver_.convolve(coeffs_.gamma * h_, coeffs_.beta * h_, wide_, narrow_);
  combine_comparison(coeffs_, wide_, narrow_, psi_);
  loaded_copy_ = labels;
  loaded_ = &loaded_copy_;
}

void ThresholdingEngine::threshold(LabelField& next) {
  if (!loaded_) throw DomainError("no state loaded");
  if (!(next.grid == grid_) || next.num_phases != coeffs_.num_phases()) next = LabelField(grid_, coeffs_.num_phases());
  threshold_labels(psi_, tie_, next);
}

EnergyBreakdown ThresholdingEngine::energy() const {
  if (!loaded_) throw DomainError("no state loaded");
  return energy_from_pair_sums(pair_sums(*loaded_, wide_, narrow_), coeffs_, h_, grid_.cells());
}

double ThresholdingEngine::pairing_with(const LabelField& other) const {
  if (!loaded_) throw DomainError("no state loaded");
  return bilinear_from_pair_sums(pair_sums(other, wide_, narrow_), coeffs_, h_, grid_.cells());
}

Trajectory ThresholdingEngine::run(const LabelField& initial, const SchemeConfig& cfg, const StepObserver& observer) {
  if (!(cfg.h == h_)) throw DomainError("scheme time step differs from the engine time step");
  if (cfg.steps < 0) throw DomainError("scheme.steps must be non-negative");
  initial.check();

  Trajectory traj;
  traj.initial = initial;
  if (cfg.record_every > 0) traj.snapshots.push_back({0, 0.0, initial});

  load(initial);
  EnergyBreakdown current_energy = energy();
  const double e0 = current_energy.total;
  double dissipation = 0.0;
  std::vector<std::int64_t> volumes = initial.volumes();
  LabelField next(grid_, coeffs_.num_phases());

  for (std::int64_t step = 1; step <= cfg.steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    threshold(next);
    const double cross = pairing_with(next);
    load(next);
    EnergyBreakdown next_energy = energy();

    double d2 = 2.0 * h_ * (2.0 * cross - current_energy.total - next_energy.total);
    if (d2 < 0.0) {
      if (d2 < -1e-9 * h_ * (1.0 + std::abs(current_energy.total))) {
        throw NegativeSquareError(fmt::format("step {}: d_h^2 evaluated to {:.6g}", step, d2));
      }
      d2 = 0.0;
    }
    dissipation += d2 / (2.0 * h_);

    StepReport report;
    report.step = step;
    report.time = static_cast<double>(step) * h_;
    report.energy_before = std::move(current_energy);
    report.energy_after = next_energy;
    report.dist_sq = d2;
    report.ledger_lhs = next_energy.total + dissipation;
    report.ledger_rhs = e0;
    report.phase_volumes = next.volumes();
    for (int p = 0; p < coeffs_.num_phases(); ++p) {
      if (report.phase_volumes[p] == 0 && volumes[p] > 0) report.events.push_back({StepEvent::Kind::VanishedPhase, p});
    }
    volumes = report.phase_volumes;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (cfg.record_every > 0 && step % cfg.record_every == 0) traj.snapshots.push_back({step, report.time, next});
    if (observer) observer(next, report);
    if (cfg.retain_reports) {
      traj.reports.push_back(std::move(report));
    }
    current_energy = std::move(next_energy);
  }
  traj.final_state = *loaded_;
  return traj;
}

StepResult threshold_step(const LabelField& labels, const KernelCoefficients& coeffs, double h, TieBreak tie) {
  ThresholdingEngine engine(labels.grid, coeffs, h, tie);
  engine.load(labels);
  StepResult result{LabelField(labels.grid, labels.num_phases), engine.comparison()};
  engine.threshold(result.labels);
  return result;
}

Trajectory run(const LabelField& initial, const KernelCoefficients& coeffs, const SchemeConfig& cfg,
               const StepObserver& observer) {
  ThresholdingEngine engine(initial.grid, coeffs, cfg.h, cfg.tie_break);
  return engine.run(initial, cfg, observer);
}

}  // namespace mbo
