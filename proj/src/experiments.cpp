#include "mbo/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "mbo/errors.hpp"
#include "mbo/initial_conditions.hpp"
#include "mbo/thresholding.hpp"

namespace mbo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

KernelCoefficients certified(const MaterialSpec& spec) {
  const Scales s = suggest_scales(spec);
  return certify(spec, compute_coefficients(spec, s.gamma, s.beta));
}

bool valid_partition(const LabelField& labels) {
  if (labels.labels.size() != labels.grid.cells()) return false;
  return std::all_of(labels.labels.begin(), labels.labels.end(),
                     [&](std::uint8_t l) { return l < labels.num_phases; });
}

// Step observer that accumulates RunHealth.
class HealthMonitor {
 public:
  explicit HealthMonitor(RunHealth& health) : health_(health) {}

  void operator()(const LabelField& labels, const StepReport& r) {
    ++health_.steps;
    const double scale = std::abs(r.ledger_rhs);
    if (r.ledger_lhs > r.ledger_rhs + kLedgerTolerance * scale) ++health_.ledger_violations;
    if (scale > 0.0) {
      health_.worst_ledger_excess = std::max(health_.worst_ledger_excess, (r.ledger_lhs - r.ledger_rhs) / scale);
    }
    std::int64_t total = 0;
    for (auto v : r.phase_volumes) total += v;
    if (!valid_partition(labels) || total != static_cast<std::int64_t>(labels.size())) {
      ++health_.partition_violations;
    }
  }

 private:
  RunHealth& health_;
};

CriterionLine health_line(const std::string& name, const RunHealth& h) {
  return {name + " ledger+partition", h.ok(), h.to_text()};
}

void log_line(const ExperimentOptions& opts, const std::string& text) {
  if (opts.log) *opts.log << text << '\n' << std::flush;
}

CriterionLine disk_line(const DiskShrinkRun& run, bool supplementary) {
  const std::string name = fmt::format("{}disk mu={:g} h={:g}", supplementary ? "supplementary " : "", run.mu, run.h);
  const std::string detail =
      fmt::format("slope={:.6g} target={:.6g} rel_err={:.4f} (tol 0.05) samples={} flipped_cells={} steps={} {:.1f}s",
                  run.fit.slope, run.target, run.relative_error, run.fit.samples, run.flipped_cells,
                  run.health.steps, run.health.seconds);
  return {name, std::abs(run.relative_error) <= 0.05 && run.health.seconds < 180.0, detail, supplementary};
}

// Disk runs as stated (h = 2e-5) plus, optionally, runs at mu h = 1e-4 where
// the interface moves a resolvable fraction of a cell per step.
ExperimentResult disk_experiment(const std::string& name, const std::vector<double>& mus,
                                 const ExperimentOptions& opts) {
  ExperimentResult res{name, {}, 0.0};
  constexpr double kStatedH = 2e-5;
  constexpr double kResolvedMuH = 1e-4;

  auto run_set = [&](bool supplementary) {
    std::vector<DiskShrinkRun> runs;
    for (double mu : mus) {
      const double h = supplementary ? kResolvedMuH / mu : kStatedH;
      runs.push_back(shrinking_disk(mu, h));
      res.lines.push_back(disk_line(runs.back(), supplementary));
      log_line(opts, res.lines.back().name + ": " + res.lines.back().detail);
      res.lines.push_back(health_line(res.lines[res.lines.size() - 1].name, runs.back().health));
      res.lines.back().supplementary = supplementary;
    }
    if (mus.size() > 1) {
      const double lo = runs.front().fit.slope;
      const double hi = runs.back().fit.slope;
      const double expected = mus.back() / mus.front();
      const double ratio = lo != 0.0 ? hi / lo : std::nan("");
      const double rel = (ratio - expected) / expected;
      res.lines.push_back({fmt::format("{}slope ratio mu={:g}/mu={:g}", supplementary ? "supplementary " : "",
                                       mus.back(), mus.front()),
                           std::isfinite(rel) && std::abs(rel) <= 0.05,
                           fmt::format("ratio={:.6g} target={:g} rel_err={:.4f} (tol 0.05)", ratio, expected, rel),
                           supplementary});
    }
  };
  run_set(false);
  if (opts.supplementary) run_set(true);
  return res;
}

constexpr double kHerringH = 1e-4;
constexpr int kHerringSteps = 200;
constexpr int kHerringWindow = 32;

ExperimentResult herring_experiment(const ExperimentOptions& opts) {
  ExperimentResult res{"herring-angles", {}, 0.0};
  const struct {
    double s23;
    double tol;
  } cases[] = {{1.0, 3.0}, {1.2, 4.0}};
  for (const auto& c : cases) {
    const HerringRun run = herring_junction(c.s23, kHerringH, kHerringSteps, kHerringWindow);
    const std::string name = fmt::format("junction sigma=(1,1,{:g})", c.s23);
    std::string detail;
    if (run.found) {
      detail = fmt::format(
          "angles=({:.2f}, {:.2f}, {:.2f}) target=({:.2f}, {:.2f}, {:.2f}) max_err={:.2f} deg (tol {:g}) "
          "young_residual={:.1e} h={:g} steps={} window={} {:.1f}s",
          run.angles[0], run.angles[1], run.angles[2], run.target.angles[0], run.target.angles[1],
          run.target.angles[2], run.max_error, c.tol, run.target.residual, run.h, run.steps, run.window,
          run.health.seconds);
    } else {
      detail = "no triple junction found near the center";
    }
    const bool pass = run.found && run.max_error <= c.tol && run.target.residual < 1e-10 &&
                      run.health.seconds < 180.0;
    res.lines.push_back({name, pass, detail});
    log_line(opts, name + ": " + detail);
    res.lines.push_back(health_line(name, run.health));
  }
  return res;
}

ExperimentResult consistency_experiment(const ExperimentOptions&) {
  ExperimentResult res{"consistency-sweep", {}, 0.0};
  const auto start = Clock::now();
  const auto points = consistency_sweep({4e-4, 2e-4, 1e-4});
  const double secs = seconds_since(start);
  bool decreasing = true;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    const std::string line = fmt::format("E_h(h={:g})={:.8f} rel_err={:+.5f}", p.h, p.energy, p.relative_error);
    res.lines.push_back({fmt::format("disk energy h={:g}", p.h), true, line, true});
    if (k > 0 && std::abs(p.relative_error) >= std::abs(points[k - 1].relative_error)) decreasing = false;
  }
  res.lines.push_back({"error decreases across sweep", decreasing,
                       fmt::format("|err| = {:.5f}, {:.5f}, {:.5f}", std::abs(points[0].relative_error),
                                   std::abs(points[1].relative_error), std::abs(points[2].relative_error))});
  const double final_err = std::abs(points.back().relative_error);
  res.lines.push_back({"final relative error < 2%", final_err < 0.02,
                       fmt::format("{:.5f} (target 2*2*pi*0.25 = {:.6f})", final_err, 4.0 * std::numbers::pi * 0.25)});
  res.lines.push_back({"runtime < 60 s", secs < 60.0, fmt::format("{:.2f}s", secs)});
  return res;
}

ExperimentResult grain_growth_experiment(const ExperimentOptions& opts) {
  ExperimentResult res{"grain-growth", {}, 0.0};
  constexpr int kPhases = 64;
  constexpr int kSteps = 200;
  constexpr double kH = 1e-4;
  const auto coeffs = certified(MaterialSpec::uniform(kPhases, 1.0, 1.0));
  const GridSpec grid = GridSpec::square(512);
  const LabelField init = voronoi_labels(grid, kPhases, kPhases, opts.seed);

  RunHealth health;
  HealthMonitor monitor(health);
  int vanished = 0;
  const auto start = Clock::now();
  ThresholdingEngine engine(grid, coeffs, kH);
  SchemeConfig cfg;
  cfg.h = kH;
  cfg.steps = kSteps;
  cfg.record_every = 0;
  cfg.retain_reports = false;
  double e0 = 0.0, e1 = 0.0;
  engine.run(init, cfg, [&](const LabelField& l, const StepReport& r) {
    monitor(l, r);
    if (r.step == 1) e0 = r.energy_before.total;
    e1 = r.energy_after.total;
    vanished += static_cast<int>(r.events.size());
    if (r.step % 50 == 0) log_line(opts, fmt::format("step {} E_h={:.6f} vanished={}", r.step, e1, vanished));
  });
  health.seconds = seconds_since(start);
  res.lines.push_back(health_line("64 phases 512^2 200 steps", health));
  res.lines.push_back({"runtime < 300 s", health.seconds < 300.0, fmt::format("{:.1f}s", health.seconds)});
  res.lines.push_back({"energy", true, fmt::format("E_h: {:.6f} -> {:.6f}, vanished grains {}", e0, e1, vanished),
                       true});
  return res;
}

}  // namespace

bool ExperimentResult::pass() const {
  return std::all_of(lines.begin(), lines.end(), [](const CriterionLine& l) { return l.supplementary || l.pass; });
}

std::string ExperimentResult::to_text() const {
  std::string out;
  for (const auto& l : lines) {
    const char* tag = l.supplementary ? "INFO" : (l.pass ? "PASS" : "FAIL");
    const char* flag = l.supplementary && !l.pass ? " [outside tolerance]" : "";
    out += fmt::format("{} {}: {}{}\n", tag, l.name, l.detail, flag);
  }
  out += fmt::format("{} {} ({:.1f}s)\n", pass() ? "PASS" : "FAIL", name, seconds);
  return out;
}

std::string RunHealth::to_text() const {
  return fmt::format("steps={} ledger_violations={} worst_excess={:.2e} partition_violations={}", steps,
                     ledger_violations, worst_ledger_excess, partition_violations);
}

std::vector<std::string> available_experiments() {
  return {"shrinking-disk", "mobility-ratio", "herring-angles", "consistency-sweep", "grain-growth"};
}

ExperimentResult run_experiment(const std::string& name, const ExperimentOptions& opts) {
  const auto start = Clock::now();
  ExperimentResult res;
  if (name == "shrinking-disk") {
    res = disk_experiment(name, {1.0}, opts);
  } else if (name == "mobility-ratio") {
    res = disk_experiment(name, {0.5, 1.0, 2.0}, opts);
  } else if (name == "herring-angles") {
    res = herring_experiment(opts);
  } else if (name == "consistency-sweep") {
    res = consistency_experiment(opts);
  } else if (name == "grain-growth") {
    res = grain_growth_experiment(opts);
  } else {
    std::string known;
    for (const auto& n : available_experiments()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError(fmt::format("experiment: unknown name '{}' (available: {})", name, known));
  }
  res.seconds = seconds_since(start);
  return res;
}

DiskShrinkRun shrinking_disk(double mu, double h, int n, double r0) {
  DiskShrinkRun out;
  out.mu = mu;
  out.h = h;
  out.target = -2.0 * mu;
  const auto coeffs = certified(MaterialSpec::uniform(2, 1.0, mu));
  const GridSpec grid = GridSpec::square(n);
  const LabelField init = disk_labels(grid, 2, {0.5, 0.5, 0.5}, r0);

  // r^2 halves after r0^2 / (4 mu) in the sharp-interface limit.
  const double duration = r0 * r0 / (4.0 * mu);
  SchemeConfig cfg;
  cfg.h = h;
  cfg.steps = static_cast<std::int64_t>(std::ceil(duration / h));
  cfg.record_every = 0;
  cfg.retain_reports = true;

  HealthMonitor monitor(out.health);
  LabelField prev = init;
  const auto start = Clock::now();
  ThresholdingEngine engine(grid, coeffs, h);
  const Trajectory traj = engine.run(init, cfg, [&](const LabelField& l, const StepReport& r) {
    monitor(l, r);
    for (std::size_t x = 0; x < l.size(); ++x) out.flipped_cells += l[x] != prev[x];
    prev = l;
  });
  out.health.seconds = seconds_since(start);
  out.fit = shrink_rate_fit(traj, 1);
  out.relative_error = (out.fit.slope - out.target) / std::abs(out.target);
  return out;
}

HerringRun herring_junction(double s23, double h, int steps, int window, int n) {
  HerringRun out;
  out.s23 = s23;
  out.h = h;
  out.steps = steps;
  out.window = window;
  out.target = young_angles(1.0, 1.0, s23);

  Matrix sigma = Matrix::Ones(3, 3);
  sigma.diagonal().setZero();
  sigma(1, 2) = sigma(2, 1) = s23;
  Matrix mu = Matrix::Ones(3, 3);
  mu.diagonal().setZero();
  const auto coeffs = certified(MaterialSpec::from_matrices(sigma, mu));
  const GridSpec grid = GridSpec::square(n);
  // Sectors start at -60 degrees, so phase 0 is symmetric about axis 0 and
  // the 1|2 interface runs along the grid.
  const LabelField init = mercedes_labels(grid, 3, {0.5, 0.5}, -60.0);

  SchemeConfig cfg;
  cfg.h = h;
  cfg.steps = steps;
  cfg.record_every = 0;
  cfg.retain_reports = false;
  HealthMonitor monitor(out.health);
  const auto start = Clock::now();
  ThresholdingEngine engine(grid, coeffs, h);
  const Trajectory traj = engine.run(init, cfg, [&](const LabelField& l, const StepReport& r) { monitor(l, r); });
  out.health.seconds = seconds_since(start);

  double best = 1e300;
  for (const auto& j : junction_angles(traj.final_state, window)) {
    if (j.phases != std::array<int, 3>{0, 1, 2}) continue;
    const double dx = j.location[0] - 0.5;
    const double dy = j.location[1] - 0.5;
    const double d2 = dx * dx + dy * dy;
    if (d2 >= best) continue;
    best = d2;
    out.found = true;
    out.angles = j.angles;
  }
  if (out.found) {
    for (int k = 0; k < 3; ++k) {
      out.max_error = std::max(out.max_error, std::abs(out.angles[k] - out.target.angles[k]));
    }
  }
  return out;
}

std::vector<ConsistencyPoint> consistency_sweep(const std::vector<double>& hs, int n, double r) {
  const auto coeffs = certified(MaterialSpec::uniform(2, 1.0, 1.0));
  const GridSpec grid = GridSpec::square(n);
  const LabelField disk = disk_labels(grid, 2, {0.5, 0.5, 0.5}, r);
  const double target = 2.0 * 2.0 * std::numbers::pi * r;
  std::vector<ConsistencyPoint> out;
  for (double h : hs) {
    const double e = approximate_energy(disk, coeffs, h).total;
    out.push_back({h, e, (e - target) / target});
  }
  return out;
}

}  // namespace mbo
