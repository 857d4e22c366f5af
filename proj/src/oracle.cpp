#include "mbo/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "mbo/energetics.hpp"
#include "mbo/errors.hpp"
#include "mbo/spectral.hpp"

namespace mbo {

std::uint64_t OracleCase::enumeration_count() const {
  const auto base = static_cast<std::uint64_t>(coeffs.num_phases());
  std::uint64_t count = 1;
  for (std::size_t x = 0; x < prev.size(); ++x) {
    if (base != 0 && count > std::numeric_limits<std::uint64_t>::max() / base) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    count *= base;
  }
  return count;
}

namespace {

// Objective of hard labelings, assembled from per-cell impulse spectra so the
// enumeration needs no transforms.
class LabelingObjective {
 public:
  explicit LabelingObjective(const OracleCase& c)
      : energy_(c.prev.grid, c.coeffs, c.h), h_(c.h), phases_(c.coeffs.num_phases()) {
    const GridSpec& grid = c.prev.grid;
    const std::size_t cells = grid.cells();
    for (std::size_t x = 0; x < cells; ++x) {
      ScalarField impulse(grid);
      impulse[x] = 1.0;
      impulses_.push_back(energy_.transform().forward(impulse).coeffs);
    }
    prev_ = energy_.transform(c.prev);
  }

  double operator()(const std::uint8_t* labels) const {
    const std::size_t spec = impulses_.front().size();
    SpectralEnergy::Spectra u(phases_, AlignedVector<Complex>(spec, Complex(0.0, 0.0)));
    for (std::size_t x = 0; x < impulses_.size(); ++x) {
      auto& target = u[labels[x]];
      const auto& src = impulses_[x];
      for (std::size_t k = 0; k < spec; ++k) target[k] += src[k];
    }
    SpectralEnergy::Spectra w(u);
    for (int p = 0; p < phases_; ++p)
      for (std::size_t k = 0; k < spec; ++k) w[p][k] -= prev_[p][k];
    double d2 = -2.0 * h_ * energy_.energy(w).total;
    if (d2 < -kNegativeSquareTolerance) {
      throw NegativeSquareError(fmt::format("oracle: d_h^2 evaluated to {:.6g}", d2));
    }
    d2 = std::max(d2, 0.0);
    return d2 / (2.0 * h_) + energy_.energy(u).total;
  }

 private:
  SpectralEnergy energy_;
  double h_;
  int phases_;
  std::vector<AlignedVector<Complex>> impulses_;
  SpectralEnergy::Spectra prev_;
};

void decode(std::uint64_t index, int base, std::size_t cells, std::uint8_t* out) {
  // Cell 0 is the most significant digit, so increasing index is
  // lexicographic order of the labeling.
  for (std::size_t x = cells; x-- > 0;) {
    out[x] = static_cast<std::uint8_t>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
  }
}

void check_case(const OracleCase& c) {
  c.prev.check();
  if (!c.coeffs.validated) throw ValidationError("oracle case coefficients are not validated");
  if (c.prev.num_phases != c.coeffs.num_phases()) throw DimensionError("oracle case phase counts disagree");
  if (!(c.h > 0.0)) throw NonpositiveTimeError("oracle case time step must be positive");
}

std::vector<ScalarField> one_hot(const LabelField& labels) { return indicators(labels); }

}  // namespace

OracleVerdict exhaustive_minimize(const OracleCase& c) {
  check_case(c);
  const std::size_t cells = c.prev.size();
  const std::uint64_t count = c.enumeration_count();
  if (cells > kMaxOracleCells || count > kMaxEnumeration) {
    throw EnumerationTooLarge(fmt::format("{} cells with {} phases exceeds the enumeration guard ({} configurations)",
                                          cells, c.coeffs.num_phases(), kMaxEnumeration));
  }
  const int n = c.coeffs.num_phases();
  const LabelingObjective objective(c);

  std::vector<double> values(count);
#pragma omp parallel
  {
    std::vector<std::uint8_t> labels(cells);
#pragma omp for schedule(static)
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(count); ++k) {
      decode(static_cast<std::uint64_t>(k), n, cells, labels.data());
      values[k] = objective(labels.data());
    }
  }

  OracleVerdict v;
  v.best_value = *std::min_element(values.begin(), values.end());
  const double tie_band = 1e-12 * (1.0 + std::abs(v.best_value));
  for (std::uint64_t k = 0; k < count; ++k) {
    if (values[k] <= v.best_value + tie_band) {
      LabelField config(c.prev.grid, n);
      decode(k, n, cells, config.labels.data());
      v.best_configs.push_back(std::move(config));
    }
  }

  v.thresholded = threshold_step(c.prev, c.coeffs, c.h, c.tie).labels;
  v.threshold_value = objective(v.thresholded.labels.data());
  v.gap = v.threshold_value - v.best_value;
  v.is_minimizer = v.gap <= 1e-10 * (1.0 + std::abs(v.best_value));
  return v;
}

double relaxed_sampling_check(const OracleCase& c, int samples, std::uint64_t seed) {
  check_case(c);
  if (samples <= 0) return 0.0;
  const int n = c.coeffs.num_phases();
  const LabelField next = threshold_step(c.prev, c.coeffs, c.h, c.tie).labels;
  const auto chi = one_hot(next);
  const double threshold_value = movement_objective(chi, c.prev, c.coeffs, c.h);

  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<ScalarField> u(n, ScalarField(c.prev.grid));
  for (int s = 0; s < samples; ++s) {
    for (std::size_t x = 0; x < c.prev.size(); ++x) {
      double total = 0.0;
      for (int p = 0; p < n; ++p) total += (u[p][x] = expo(rng));
      for (int p = 0; p < n; ++p) u[p][x] /= total;
    }
    worst = std::max(worst, threshold_value - movement_objective(u, c.prev, c.coeffs, c.h));
  }
  return worst;
}

double linear_objective_from_psi(std::span<const ScalarField> u, const OracleCase& c) {
  check_case(c);
  const int n = c.coeffs.num_phases();
  if (static_cast<int>(u.size()) != n) throw DimensionError("phase count does not match coefficients");
  const StepResult step = threshold_step(c.prev, c.coeffs, c.h, c.tie);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* psi = step.psi.phase(i);
    for (std::size_t x = 0; x < c.prev.size(); ++x) sum += u[i][x] * psi[x];
  }
  const double pairing = 2.0 / std::sqrt(c.h) * sum * c.prev.grid.cell_volume();
  return pairing - approximate_energy(c.prev, c.coeffs, c.h).total;
}

std::vector<double> periodized_heat_kernel(const GridSpec& grid, double t) {
  if (!(t > 0.0)) throw NonpositiveTimeError("kernel time must be positive");
  const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
  std::array<std::vector<double>, 3> axis;
  for (int a = 0; a < grid.dim; ++a) {
    const int n = grid.sizes[a];
    axis[a].resize(n);
    for (int d = 0; d < n; ++d) {
      const double z = static_cast<double>(d) / n;
      double sum = 0.0;
      // Images at z + m, both directions, until the Gaussian tail is gone.
      for (int m = 0; m < 100000; ++m) {
        const double right = std::exp(-(z + m) * (z + m) / (4.0 * t));
        const double left = m > 0 ? std::exp(-(z - m) * (z - m) / (4.0 * t)) : 0.0;
        sum += right + left;
        if (m > 0 && right < 1e-16 && left < 1e-16) break;
      }
      axis[a][d] = norm * sum;
    }
  }
  std::vector<double> kernel(grid.cells());
  for (std::size_t idx = 0; idx < kernel.size(); ++idx) {
    const auto c = grid.coords(idx);
    double v = 1.0;
    for (int a = 0; a < grid.dim; ++a) v *= axis[a][c[a]];
    kernel[idx] = v;
  }
  return kernel;
}

namespace {

// cell_volume * sum_y G(x - y) f(y) for every x.
std::vector<double> realspace_convolve(const GridSpec& grid, const std::vector<double>& kernel,
                                       const ScalarField& f) {
  const std::size_t cells = grid.cells();
  std::vector<std::array<int, 3>> coords(cells);
  for (std::size_t x = 0; x < cells; ++x) coords[x] = grid.coords(x);
  std::vector<double> out(cells, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t xi = 0; xi < static_cast<std::int64_t>(cells); ++xi) {
    const auto& cx = coords[xi];
    double sum = 0.0;
    for (std::size_t y = 0; y < cells; ++y) {
      const auto& cy = coords[y];
      std::array<int, 3> d{0, 0, 0};
      for (int a = 0; a < grid.dim; ++a) d[a] = cx[a] - cy[a];
      sum += kernel[grid.wrapped_index(d)] * f.values[y];
    }
    out[xi] = sum * grid.cell_volume();
  }
  return out;
}

double realspace_energy(std::span<const ScalarField> u, const KernelCoefficients& coeffs, double h,
                        const std::vector<double>& wide, const std::vector<double>& narrow) {
  const GridSpec& grid = u.front().grid;
  const int n = coeffs.num_phases();
  std::vector<std::vector<double>> cw(n), cn(n);
  for (int j = 0; j < n; ++j) {
    cw[j] = realspace_convolve(grid, wide, u[j]);
    cn[j] = realspace_convolve(grid, narrow, u[j]);
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      for (std::size_t x = 0; x < grid.cells(); ++x) {
        sum += u[i][x] * (coeffs.a(i, j) * cw[j][x] + coeffs.b(i, j) * cn[j][x]);
      }
    }
  return sum * grid.cell_volume() / std::sqrt(h);
}

}  // namespace

RealspaceValues realspace_crosscheck(std::span<const ScalarField> u, std::span<const ScalarField> v,
                                     const KernelCoefficients& coeffs, double h) {
  const int n = coeffs.num_phases();
  if (static_cast<int>(u.size()) != n || static_cast<int>(v.size()) != n) {
    throw DimensionError("phase count does not match coefficients");
  }
  const GridSpec& grid = u.front().grid;
  if (grid.cells() > kMaxRealspaceCells) {
    throw GuardViolation(fmt::format("real-space cross-check limited to {} cells, got {}", kMaxRealspaceCells,
                                     grid.cells()));
  }
  for (int p = 0; p < n; ++p) {
    if (!(u[p].grid == grid) || !(v[p].grid == grid)) throw DimensionError("fields differ in grid");
  }
  if (!(h > 0.0)) throw NonpositiveTimeError("time step must be positive");

  const auto wide = periodized_heat_kernel(grid, coeffs.gamma * h);
  const auto narrow = periodized_heat_kernel(grid, coeffs.beta * h);
  RealspaceValues r;
  r.energy_u = realspace_energy(u, coeffs, h, wide, narrow);
  r.energy_v = realspace_energy(v, coeffs, h, wide, narrow);

  std::vector<ScalarField> w(n, ScalarField(grid));
  for (int p = 0; p < n; ++p)
    for (std::size_t x = 0; x < grid.cells(); ++x) w[p][x] = u[p][x] - v[p][x];
  r.dist_sq = -2.0 * h * realspace_energy(w, coeffs, h, wide, narrow);

  const auto half_wide = periodized_heat_kernel(grid, coeffs.gamma * h / 2.0);
  const auto half_narrow = periodized_heat_kernel(grid, coeffs.beta * h / 2.0);
  std::vector<std::vector<double>> sw(n), sn(n);
  for (int p = 0; p < n; ++p) {
    sw[p] = realspace_convolve(grid, half_wide, w[p]);
    sn[p] = realspace_convolve(grid, half_narrow, w[p]);
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      for (std::size_t x = 0; x < grid.cells(); ++x) {
        sum -= coeffs.a(i, j) * sw[i][x] * sw[j][x] + coeffs.b(i, j) * sn[i][x] * sn[j][x];
      }
    }
  r.dist_sq_halftime = 2.0 * std::sqrt(h) * sum * grid.cell_volume();
  return r;
}

OracleCase random_oracle_case(const GridSpec& grid, int phases, std::mt19937_64& rng) {
  if (phases < 2) throw DimensionError("oracle cases need at least two phases");
  std::uniform_real_distribution<double> sigma_dist(0.5, 1.5);
  std::uniform_real_distribution<double> mu_dist(0.5, 2.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Matrix sigma = Matrix::Zero(phases, phases);
    Matrix mu = Matrix::Zero(phases, phases);
    for (int i = 0; i < phases; ++i)
      for (int j = i + 1; j < phases; ++j) {
        sigma(i, j) = sigma(j, i) = sigma_dist(rng);
        mu(i, j) = mu(j, i) = mu_dist(rng);
      }
    const MaterialSpec spec = MaterialSpec::from_matrices(sigma, mu);
    KernelCoefficients coeffs;
    try {
      const Scales s = suggest_scales(spec);
      coeffs = certify(spec, compute_coefficients(spec, s.gamma, s.beta));
    } catch (const InadmissibleMaterialError&) {
      continue;
    } catch (const ValidationError&) {
      continue;
    }
    OracleCase c;
    c.coeffs = coeffs;
    const double width = 1.5 * grid.max_spacing();
    c.h = width * width / coeffs.beta;
    c.prev = LabelField(grid, phases);
    std::uniform_int_distribution<int> label_dist(0, phases - 1);
    for (auto& l : c.prev.labels) l = static_cast<std::uint8_t>(label_dist(rng));
    return c;
  }
  throw DomainError("could not draw an admissible material");
}

std::string OracleSuiteResult::summary() const {
  return fmt::format("cases={} failures={} max_gap={:.3e}", cases, failures, max_gap);
}

OracleSuiteResult run_oracle_suite(const OracleSuiteOptions& opts, std::ostream* log) {
  if (opts.grids.empty() || opts.phases.empty()) throw ConfigError("oracle suite needs grids and phase counts");
  const auto t0 = std::chrono::steady_clock::now();
  OracleSuiteResult result;
  const auto g = static_cast<int>(opts.grids.size());
  const auto p = static_cast<int>(opts.phases.size());
  for (int k = 0; k < opts.cases; ++k) {
    const GridSpec& grid = opts.grids[k % g];
    const int phases = opts.phases[(k / g) % p];
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    const OracleCase c = random_oracle_case(grid, phases, rng);
    const OracleVerdict v = exhaustive_minimize(c);
    double relaxed = 0.0;
    bool relaxed_ok = true;
    if (opts.relaxed_samples > 0) {
      relaxed = relaxed_sampling_check(c, opts.relaxed_samples, rng());
      relaxed_ok = relaxed <= 1e-10 * (1.0 + std::abs(v.best_value));
      result.max_relaxed_violation = std::max(result.max_relaxed_violation, relaxed);
    }
    const bool ok = v.is_minimizer && relaxed_ok;
    ++result.cases;
    if (!ok) ++result.failures;
    result.max_gap = std::max(result.max_gap, v.gap);
    if (log) {
      *log << fmt::format("case={} grid={} N={} configs={} best={:.15g} threshold={:.15g} gap={:.3e} minimizers={}{} {}\n",
                          k, grid.to_string(), phases, c.enumeration_count(), v.best_value, v.threshold_value, v.gap,
                          v.best_configs.size(),
                          opts.relaxed_samples > 0 ? fmt::format(" relaxed={:.3e}", relaxed) : std::string(),
                          ok ? "PASS" : "FAIL");
    }
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace mbo
