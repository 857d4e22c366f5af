#include <omp.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mbo/config.hpp"
#include "mbo/errors.hpp"
#include "mbo/experiments.hpp"
#include "mbo/field_io.hpp"
#include "mbo/geometry.hpp"
#include "mbo/initial_conditions.hpp"
#include "mbo/oracle.hpp"
#include "mbo/probes.hpp"
#include "mbo/thresholding.hpp"

namespace fs = std::filesystem;
using namespace mbo;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

// Last line of output on every error: `error kind=<Kind> message="<text>"`.
int report_error(std::string_view kind, const std::string& message) {
  std::string flat;
  for (char c : message) {
    if (c == '\n') flat += " | ";
    else if (c == '"') flat += '\'';
    else flat += c;
  }
  std::cout << std::flush;
  std::cerr << fmt::format("error kind={} message=\"{}\"", kind, flat) << std::endl;
  return kExitUsage;
}

struct Common {
  std::string config;
  std::string out;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c, bool with_config) {
  if (with_config) app->add_option("--config", c.config, "Run configuration file")->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "Output directory (overrides [output] dir)");
  app->add_option("--threads", c.threads, "OpenMP threads (0 keeps the runtime default)")->check(CLI::NonNegativeNumber);
  app->add_option("--seed", c.seed, "RNG seed (overrides the config)");
}

void apply_threads(const Common& c) {
  if (c.threads > 0) omp_set_num_threads(c.threads);
}

std::string snapshot_stem(std::int64_t step) { return fmt::format("step_{:08d}", step); }

int cmd_run(const Common& c) {
  if (c.config.empty()) throw ConfigError("run: --config is required");
  RunConfig cfg = load_config(c.config);
  if (c.seed) cfg.initial.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;

  const KernelCoefficients coeffs = cfg.coefficients();
  const int n = cfg.material.num_phases;
  const LabelField initial = make_initial(cfg.initial, cfg.grid, n);

  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  {
    std::ofstream echo(dir / "config.echo");
    if (!echo) throw IoError(fmt::format("cannot write {}", (dir / "config.echo").string()));
    echo << cfg.echo();
  }

  std::vector<Probe> probes;
  std::vector<std::string> extra_columns;
  std::vector<int> radius_phases;
  for (const auto& text : cfg.probes) {
    probes.push_back(parse_probe(text, n));
    if (probes.back().kind == Probe::Kind::Radius) {
      radius_phases.push_back(probes.back().i);
      extra_columns.push_back(fmt::format("radius_{}", probes.back().i));
    }
  }

  MetricsWriter metrics(dir / "metrics.csv", n, extra_columns);
  std::optional<std::ofstream> probe_out;
  if (!probes.empty()) {
    probe_out.emplace(dir / "probes.csv");
    if (!*probe_out) throw IoError(fmt::format("cannot write {}", (dir / "probes.csv").string()));
    *probe_out << probe_csv_header() << '\n';
  }
  auto measure = [&](const LabelField& labels, std::int64_t step) {
    if (!probe_out) return;
    for (const auto& p : probes) {
      for (const auto& row : evaluate_probe(p, labels, step, cfg.material)) *probe_out << probe_csv_row(row) << '\n';
    }
  };

  const std::int64_t cadence = cfg.scheme.record_every;
  const fs::path snaps = dir / "snapshots";
  auto snapshot = [&](const LabelField& labels, std::int64_t step, double time) {
    fs::create_directories(snaps);
    write_labels(snaps / snapshot_stem(step), labels, step, time);
    if (labels.grid.dim == 2) write_pgm(snaps / (snapshot_stem(step) + ".pgm"), labels);
  };
  if (cadence > 0) snapshot(initial, 0, 0.0);
  measure(initial, 0);

  SchemeConfig scheme = cfg.scheme;
  scheme.record_every = 0;
  scheme.retain_reports = false;
  ThresholdingEngine engine(cfg.grid, coeffs, scheme.h, scheme.tie_break);
  if (engine.resolution() == Resolution::UnderResolved) {
    std::cout << fmt::format("warning: sqrt(beta h) is below two cells on {}\n", cfg.grid.to_string());
  }
  std::int64_t violations = 0;
  const double cell = cfg.grid.cell_volume();
  std::vector<double> extra(radius_phases.size());
  StepReport last;
  const Trajectory traj = engine.run(initial, scheme, [&](const LabelField& labels, const StepReport& r) {
    for (std::size_t k = 0; k < radius_phases.size(); ++k) {
      const double vol = static_cast<double>(r.phase_volumes[radius_phases[k]]) * cell;
      extra[k] = labels.grid.dim == 2 ? std::sqrt(vol / std::numbers::pi) : std::cbrt(3.0 * vol / (4.0 * std::numbers::pi));
    }
    metrics.write(r, extra);
    if (r.ledger_lhs > r.ledger_rhs + kLedgerTolerance * std::abs(r.ledger_rhs)) ++violations;
    for (const auto& e : r.events) {
      if (e.kind == StepEvent::Kind::VanishedPhase) std::cout << fmt::format("step {}: phase {} vanished\n", r.step, e.phase);
    }
    if (cadence > 0 && r.step % cadence == 0) {
      snapshot(labels, r.step, r.time);
      measure(labels, r.step);
    }
    last = r;
  });

  const std::int64_t steps = scheme.steps;
  write_labels(dir / "final", traj.final_state, steps, last.time);
  if (cfg.grid.dim == 2) write_pgm(dir / "final.pgm", traj.final_state);
  if (cadence == 0 || steps % cadence != 0) measure(traj.final_state, steps);

  std::cout << fmt::format("run: {} steps on {}, N={}, gamma={:g}, beta={:g}, h={:g}\n", steps, cfg.grid.to_string(),
                           n, coeffs.gamma, coeffs.beta, scheme.h);
  std::cout << fmt::format("E_h: {:.10g} -> {:.10g}; ledger violations: {}\n", last.ledger_rhs,
                           last.energy_after.total, violations);
  std::cout << fmt::format("output: {}\n", dir.string());
  return kExitPass;
}

struct ValidateArgs {
  int phases = 3;
  double sigma = 1.0;
  double mu = 1.0;
  std::optional<double> gamma;
  std::optional<double> beta;
};

int cmd_validate(const Common& c, const ValidateArgs& v) {
  MaterialSpec spec;
  KernelCoefficients coeffs;
  if (!c.config.empty()) {
    const RunConfig cfg = load_config(c.config);
    spec = cfg.material;
    coeffs = compute_coefficients(spec, cfg.scales.gamma, cfg.scales.beta);
  } else {
    spec = MaterialSpec::uniform(v.phases, v.sigma, v.mu);
    Scales s = suggest_scales(spec);
    if (v.gamma.has_value() != v.beta.has_value()) throw ConfigError("validate: give both --gamma and --beta or neither");
    if (v.gamma) s = {*v.gamma, *v.beta};
    coeffs = compute_coefficients(spec, s.gamma, s.beta);
  }
  const ValidationReport report = validate(spec, coeffs);
  std::cout << fmt::format("N={} gamma={:g} beta={:g}\n", spec.num_phases, coeffs.gamma, coeffs.beta);
  std::cout << report.to_text();
  if (!report.to_text().empty() && report.to_text().back() != '\n') std::cout << '\n';
  std::cout << (report.all_pass() ? "PASS" : "FAIL") << '\n';
  return report.all_pass() ? kExitPass : kExitFail;
}

struct OracleArgs {
  int cases = 100;
  std::vector<std::string> grids{"2x2", "3x3"};
  std::vector<int> phases{2, 3};
  int relaxed = 0;
  bool verbose = false;
};

GridSpec parse_grid(const std::string& text) {
  std::vector<int> sizes;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find('x', start);
    const std::string part = text.substr(start, pos - start);
    try {
      std::size_t used = 0;
      sizes.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::logic_error&) {
      throw ConfigError(fmt::format("oracle.grid: cannot parse '{}' (expected e.g. 3x3)", text));
    }
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return GridSpec::make(sizes);
}

int cmd_oracle(const Common& c, const OracleArgs& a) {
  OracleSuiteOptions opts;
  opts.cases = a.cases;
  for (const auto& g : a.grids) opts.grids.push_back(parse_grid(g));
  opts.phases = a.phases;
  opts.seed = c.seed.value_or(1);
  opts.relaxed_samples = a.relaxed;
  const OracleSuiteResult res = run_oracle_suite(opts, a.verbose ? &std::cout : nullptr);
  std::cout << res.summary() << '\n';
  return res.failures == 0 ? kExitPass : kExitFail;
}

struct ProbeArgs {
  std::string snapshot;
  std::vector<std::string> probes;
  std::string config;
  int window = kDefaultJunctionWindow;
};

int cmd_probe(const ProbeArgs& a) {
  const LabelSnapshot snap = read_labels(a.snapshot);
  const int n = snap.labels.num_phases;
  MaterialSpec material = MaterialSpec::uniform(n, 1.0, 1.0);
  if (!a.config.empty()) {
    material = load_config(a.config).material;
    if (material.num_phases != n) {
      throw ConfigError(fmt::format("material.N: config has {} phases, snapshot has {}", material.num_phases, n));
    }
  }
  std::vector<std::string> texts = a.probes;
  if (texts.empty()) {
    for (int p = 0; p < n; ++p) texts.push_back(fmt::format("radius:{}", p));
    if (snap.labels.grid.dim == 2) texts.push_back("junctions");
  }
  std::cout << probe_csv_header() << '\n';
  for (const auto& t : texts) {
    for (const auto& row : evaluate_probe(parse_probe(t, n), snap.labels, snap.step, material)) {
      std::cout << probe_csv_row(row) << '\n';
    }
  }
  return kExitPass;
}

int cmd_experiment(const Common& c, const std::string& name, bool no_supplementary) {
  ExperimentOptions opts;
  opts.seed = c.seed.value_or(1);
  opts.supplementary = !no_supplementary;
  opts.log = &std::cout;
  const ExperimentResult res = run_experiment(name, opts);
  std::cout << res.to_text();
  return res.pass() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiphase thresholding scheme with independent surface tensions and mobilities"};
  app.require_subcommand(1);

  Common common;
  auto* run = app.add_subcommand("run", "Run a configuration and write its artifacts");
  add_common(run, common, true);

  ValidateArgs vargs;
  auto* val = app.add_subcommand("validate", "Check kernel admissibility for a material and scales");
  add_common(val, common, true);
  val->add_option("--phases", vargs.phases, "Number of phases (uniform material)")->check(CLI::Range(2, kMaxPhases));
  val->add_option("--sigma", vargs.sigma, "Uniform surface tension")->check(CLI::PositiveNumber);
  val->add_option("--mu", vargs.mu, "Uniform mobility")->check(CLI::PositiveNumber);
  val->add_option("--gamma", vargs.gamma, "Wide kernel scale (default: suggested)");
  val->add_option("--beta", vargs.beta, "Narrow kernel scale (default: suggested)");

  OracleArgs oargs;
  auto* ora = app.add_subcommand("oracle", "Exhaustive minimizing-movement check on tiny grids");
  add_common(ora, common, false);
  ora->add_option("--cases", oargs.cases, "Number of random cases")->check(CLI::PositiveNumber);
  ora->add_option("--grid", oargs.grids, "Grid sizes, e.g. 3x3 (repeatable)");
  ora->add_option("--phases", oargs.phases, "Phase counts (repeatable)");
  ora->add_option("--relaxed-samples", oargs.relaxed, "Random relaxed competitors per case")->check(CLI::NonNegativeNumber);
  ora->add_flag("--verbose", oargs.verbose, "Print one line per case");

  ProbeArgs pargs;
  auto* pro = app.add_subcommand("probe", "Measure a label snapshot");
  pro->add_option("snapshot", pargs.snapshot, "Snapshot header or stem")->required();
  pro->add_option("--probe", pargs.probes, "radius:P, length:I:J or junctions (repeatable)");
  pro->add_option("--config", pargs.config, "Config supplying tensions for junction targets")->check(CLI::ExistingFile);
  pro->add_option("--threads", common.threads, "OpenMP threads")->check(CLI::NonNegativeNumber);

  std::string experiment;
  bool no_supplementary = false;
  auto* exp = app.add_subcommand("experiment", "Run a named acceptance experiment");
  add_common(exp, common, false);
  exp->add_option("name", experiment, "Experiment name")->required()->check(CLI::IsMember(available_experiments()));
  exp->add_flag("--no-supplementary", no_supplementary, "Skip the supplementary diagnostic runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what());
  }

  try {
    apply_threads(common);
    if (*run) return cmd_run(common);
    if (*val) return cmd_validate(common, vargs);
    if (*ora) return cmd_oracle(common, oargs);
    if (*pro) return cmd_probe(pargs);
    if (*exp) return cmd_experiment(common, experiment, no_supplementary);
  } catch (const Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error("IoError", e.what());
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what());
  }
  return kExitUsage;
}
