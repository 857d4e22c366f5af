#include "mbo/energetics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mbo/errors.hpp"

namespace mbo {

namespace {

void check_h(double h) {
  if (!(h > 0.0)) throw NonpositiveTimeError(fmt::format("time step must be positive, got {}", h));
}

void check_same_shape(std::span<const ScalarField> u, std::span<const ScalarField> v) {
  if (u.size() != v.size() || u.empty()) throw DimensionError("phase field lists differ in length");
  for (std::size_t p = 0; p < u.size(); ++p) {
    if (!(u[p].grid == u[0].grid) || !(v[p].grid == u[0].grid)) {
      throw DimensionError("phase fields live on different grids");
    }
  }
}

std::vector<ScalarField> difference(std::span<const ScalarField> u, std::span<const ScalarField> v) {
  check_same_shape(u, v);
  std::vector<ScalarField> w;
  w.reserve(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) {
    ScalarField d(u[p].grid);
    for (std::size_t x = 0; x < d.size(); ++x) d.values[x] = u[p].values[x] - v[p].values[x];
    w.push_back(std::move(d));
  }
  return w;
}

double checked_square(double value) {
  if (value < -kNegativeSquareTolerance) {
    throw NegativeSquareError(fmt::format(
        "d_h^2 evaluated to {:.6g}; the coefficient matrices are not conditionally positive definite", value));
  }
  return std::max(value, 0.0);
}

}  // namespace

SpectralEnergy::SpectralEnergy(const GridSpec& grid, const KernelCoefficients& coeffs, double h)
    : transform_(grid), coeffs_(coeffs), h_(h) {
  check_h(h);
  const auto k2 = transform_.squared_wavenumbers();
  wide_.resize(k2.size());
  narrow_.resize(k2.size());
  const auto w = transform_.parseval_weights();
  for (std::size_t k = 0; k < k2.size(); ++k) {
    wide_[k] = w[k] * heat_multiplier(coeffs.gamma * h, k2[k]);
    narrow_[k] = w[k] * heat_multiplier(coeffs.beta * h, k2[k]);
  }
}

SpectralEnergy::Spectra SpectralEnergy::transform(std::span<const ScalarField> u) const {
  Spectra out(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) {
    if (!(u[p].grid == transform_.grid())) throw DimensionError("field grid does not match energy grid");
    out[p].resize(transform_.spectrum_size());
    transform_.forward(u[p].values.data(), out[p].data());
  }
  return out;
}

SpectralEnergy::Spectra SpectralEnergy::transform(const LabelField& labels) const {
  const auto fields = indicators(labels);
  return transform(fields);
}

double SpectralEnergy::pair_term(const AlignedVector<Complex>& ui, int i, int j,
                                 const AlignedVector<Complex>& vj) const {
  const double a = coeffs_.a(i, j);
  const double b = coeffs_.b(i, j);
  if (a == 0.0 && b == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < wide_.size(); ++k) {
    const double re = ui[k].real() * vj[k].real() + ui[k].imag() * vj[k].imag();
    sum += re * (a * wide_[k] + b * narrow_[k]);
  }
  return sum / std::sqrt(h_);
}

EnergyBreakdown SpectralEnergy::energy(const Spectra& u) const {
  const int n = coeffs_.num_phases();
  if (static_cast<int>(u.size()) != n) throw DimensionError("phase count does not match coefficients");
  EnergyBreakdown e;
  e.per_pair = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) e.per_pair(i, j) = pair_term(u[i], i, j, u[j]);
  e.total = e.per_pair.sum();
  return e;
}

double SpectralEnergy::bilinear(const Spectra& u, const Spectra& v) const {
  const int n = coeffs_.num_phases();
  if (static_cast<int>(u.size()) != n || static_cast<int>(v.size()) != n) {
    throw DimensionError("phase count does not match coefficients");
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) sum += pair_term(u[i], i, j, v[j]);
  return sum;
}

void check_relaxed_partition(std::span<const ScalarField> u) {
  if (u.empty()) throw DimensionError("no phase fields");
  const std::size_t cells = u.front().size();
  for (const auto& f : u) {
    if (f.size() != cells || !(f.grid == u.front().grid)) throw DimensionError("phase fields differ in grid");
  }
  for (std::size_t x = 0; x < cells; ++x) {
    double sum = 0.0;
    for (const auto& f : u) {
      const double v = f.values[x];
      if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) {
        throw DomainError(fmt::format("phase value {} outside [0,1] at cell {}", v, x));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DomainError(fmt::format("phases sum to {} at cell {}", sum, x));
  }
}

EnergyBreakdown approximate_energy(std::span<const ScalarField> u, const KernelCoefficients& coeffs, double h) {
  check_h(h);
  check_relaxed_partition(u);
  if (static_cast<int>(u.size()) != coeffs.num_phases()) {
    throw DimensionError("phase count does not match coefficients");
  }
  const SpectralEnergy se(u.front().grid, coeffs, h);
  return se.energy(se.transform(u));
}

EnergyBreakdown approximate_energy(const LabelField& labels, const KernelCoefficients& coeffs, double h) {
  const auto u = indicators(labels);
  return approximate_energy(u, coeffs, h);
}

double bilinear_form(std::span<const ScalarField> u, std::span<const ScalarField> v,
                     const KernelCoefficients& coeffs, double h) {
  check_h(h);
  check_same_shape(u, v);
  const SpectralEnergy se(u.front().grid, coeffs, h);
  return se.bilinear(se.transform(u), se.transform(v));
}

double distance_squared(std::span<const ScalarField> u, std::span<const ScalarField> v,
                        const KernelCoefficients& coeffs, double h) {
  check_h(h);
  const auto w = difference(u, v);
  const SpectralEnergy se(u.front().grid, coeffs, h);
  const auto ws = se.transform(w);
  return checked_square(-2.0 * h * se.energy(ws).total);
}

double distance_squared_halftime(std::span<const ScalarField> u, std::span<const ScalarField> v,
                                 const KernelCoefficients& coeffs, double h) {
  check_h(h);
  const auto w = difference(u, v);
  const int n = coeffs.num_phases();
  if (static_cast<int>(w.size()) != n) throw DimensionError("phase count does not match coefficients");
  std::vector<ScalarField> wide, narrow;
  for (const auto& f : w) {
    wide.push_back(gaussian_convolve(f, 0.5 * coeffs.gamma * h));
    narrow.push_back(gaussian_convolve(f, 0.5 * coeffs.beta * h));
  }
  const std::size_t cells = w.front().size();
  double integral = 0.0;
  for (std::size_t x = 0; x < cells; ++x) {
    double q = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        q -= coeffs.a(i, j) * wide[i].values[x] * wide[j].values[x];
        q -= coeffs.b(i, j) * narrow[i].values[x] * narrow[j].values[x];
      }
    }
    integral += q;
  }
  integral /= static_cast<double>(cells);
  return checked_square(2.0 * std::sqrt(h) * integral);
}

double distance(std::span<const ScalarField> u, std::span<const ScalarField> v, const KernelCoefficients& coeffs,
                double h) {
  return std::sqrt(distance_squared(u, v, coeffs, h));
}

double movement_objective(std::span<const ScalarField> u, const LabelField& prev, const KernelCoefficients& coeffs,
                          double h) {
  check_relaxed_partition(u);
  const auto chi = indicators(prev);
  const SpectralEnergy se(prev.grid, coeffs, h);
  const auto us = se.transform(u);
  const auto cs = se.transform(std::span<const ScalarField>(chi));
  SpectralEnergy::Spectra ws(us.size());
  for (std::size_t p = 0; p < us.size(); ++p) {
    ws[p].resize(us[p].size());
    for (std::size_t k = 0; k < us[p].size(); ++k) ws[p][k] = us[p][k] - cs[p][k];
  }
  const double d2 = checked_square(-2.0 * h * se.energy(ws).total);
  return d2 / (2.0 * h) + se.energy(us).total;
}

double movement_objective_linear(std::span<const ScalarField> u, const LabelField& prev,
                                 const KernelCoefficients& coeffs, double h) {
  check_relaxed_partition(u);
  const auto chi = indicators(prev);
  const SpectralEnergy se(prev.grid, coeffs, h);
  const auto us = se.transform(u);
  const auto cs = se.transform(std::span<const ScalarField>(chi));
  return 2.0 * se.bilinear(cs, us) - se.bilinear(cs, cs);
}

PairSums pair_sums(const LabelField& labels, const PhaseStack& wide, const PhaseStack& narrow) {
  const int n = wide.phases();
  if (narrow.phases() != n || labels.num_phases != n || labels.size() != wide.cells()) {
    throw DimensionError("pair sums: labels and convolution stacks disagree");
  }
  PairSums s{Matrix::Zero(n, n), Matrix::Zero(n, n)};
  const std::uint8_t* lab = labels.labels.data();
  const std::size_t cells = labels.size();
  // One task per convolved phase j; each owns column j, so the result does
  // not depend on the schedule.
#pragma omp parallel for schedule(dynamic, 1)
  for (int j = 0; j < n; ++j) {
    std::vector<double> w(n, 0.0), nw(n, 0.0);
    const double* wj = wide.phase(j);
    const double* nj = narrow.phase(j);
    for (std::size_t x = 0; x < cells; ++x) {
      w[lab[x]] += wj[x];
      nw[lab[x]] += nj[x];
    }
    for (int i = 0; i < n; ++i) {
      s.wide(i, j) = w[i];
      s.narrow(i, j) = nw[i];
    }
  }
  return s;
}

EnergyBreakdown energy_from_pair_sums(const PairSums& sums, const KernelCoefficients& coeffs, double h,
                                      std::size_t cells) {
  const int n = coeffs.num_phases();
  const double scale = 1.0 / (std::sqrt(h) * static_cast<double>(cells));
  EnergyBreakdown e;
  e.per_pair = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) e.per_pair(i, j) = (coeffs.a(i, j) * sums.wide(i, j) + coeffs.b(i, j) * sums.narrow(i, j)) * scale;
  e.total = e.per_pair.sum();
  return e;
}

double bilinear_from_pair_sums(const PairSums& sums, const KernelCoefficients& coeffs, double h,
                               std::size_t cells) {
  return energy_from_pair_sums(sums, coeffs, h, cells).total;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, int num_phases, std::vector<std::string> extra)
    : out_(path), num_phases_(num_phases), extra_count_(extra.size()) {
  if (!out_) throw IoError("cannot write " + path.string());
  out_ << header(num_phases, extra) << '\n';
}

std::string MetricsWriter::header(int num_phases, std::span<const std::string> extra) {
  std::string h = "step,time,E_h_before,E_h_after,dist_sq,ledger_lhs,ledger_rhs";
  for (int p = 0; p < num_phases; ++p) h += fmt::format(",vol_{}", p);
  for (int i = 0; i < num_phases; ++i)
    for (int j = i + 1; j < num_phases; ++j) h += fmt::format(",e_{}_{}", i, j);
  for (const auto& c : extra) h += "," + c;
  return h;
}

std::string MetricsWriter::row(const StepReport& r, std::span<const double> extra) {
  std::string s = fmt::format("{},{:.12g},{:.12g},{:.12g},{:.12g},{:.12g},{:.12g}", r.step, r.time,
                              r.energy_before.total, r.energy_after.total, r.dist_sq, r.ledger_lhs, r.ledger_rhs);
  for (auto v : r.phase_volumes) s += fmt::format(",{}", v);
  const auto& pp = r.energy_after.per_pair;
  for (Eigen::Index i = 0; i < pp.rows(); ++i)
    for (Eigen::Index j = i + 1; j < pp.cols(); ++j) s += fmt::format(",{:.12g}", pp(i, j));
  for (double v : extra) s += fmt::format(",{:.12g}", v);
  return s;
}

void MetricsWriter::write(const StepReport& report, std::span<const double> extra) {
  if (extra.size() != extra_count_) throw DimensionError("metrics row has the wrong number of extra columns");
  out_ << row(report, extra) << '\n';
}

}  // namespace mbo
