#include "mbo/kernel_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

namespace mbo {

namespace {

constexpr double kSymmetryTolerance = 1e-12;

bool is_symmetric(const Matrix& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTolerance * scale;
}

void check_pair_matrix(const Matrix& m, int n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    throw DimensionError(fmt::format("material.{}: expected {}x{} matrix, got {}x{}", name, n, n,
                                     m.rows(), m.cols()));
  }
  if (!is_symmetric(m)) throw DimensionError(fmt::format("material.{}: matrix is not symmetric", name));
  for (int i = 0; i < n; ++i) {
    if (m(i, i) != 0.0) throw DimensionError(fmt::format("material.{}: diagonal must be zero", name));
    for (int j = 0; j < n; ++j) {
      if (i != j && !(m(i, j) > 0.0 && std::isfinite(m(i, j)))) {
        throw DimensionError(
            fmt::format("material.{}: off-diagonal entry ({},{}) must be positive", name, i, j));
      }
    }
  }
}

// Orthonormal basis of (1,...,1)^perp (Helmert columns).
Matrix helmert_basis(int n) {
  Matrix q = Matrix::Zero(n, n - 1);
  for (int k = 1; k < n; ++k) {
    const double norm = std::sqrt(static_cast<double>(k) * (k + 1));
    for (int i = 0; i < k; ++i) q(i, k - 1) = 1.0 / norm;
    q(k, k - 1) = -static_cast<double>(k) / norm;
  }
  return q;
}

TriangleCheck triangle_check(const Matrix& m) {
  const TriangleSpread spread = triangle_spread(m);
  TriangleCheck check;
  check.vacuous = spread.vacuous;
  if (spread.vacuous) return check;
  check.margin = spread.min;
  check.worst = spread.argmin;
  check.pass = spread.min > 0.0;
  return check;
}

DefinitenessCheck definiteness_check(const Matrix& coefficient) {
  DefinitenessCheck check;
  const Eigen::VectorXd ev = conditional_eigenvalues(-coefficient);
  check.min_eigenvalue = ev.size() > 0 ? ev(0) : 0.0;
  check.pass = check.min_eigenvalue > kEigenvalueTolerance;
  return check;
}

}  // namespace

MaterialSpec MaterialSpec::uniform(int num_phases, double sigma, double mu) {
  if (num_phases < 2) throw DimensionError("material.N: need at least two phases");
  Matrix s = Matrix::Constant(num_phases, num_phases, sigma);
  Matrix m = Matrix::Constant(num_phases, num_phases, mu);
  s.diagonal().setZero();
  m.diagonal().setZero();
  return from_matrices(std::move(s), std::move(m));
}

MaterialSpec MaterialSpec::from_matrices(Matrix sigma, Matrix mu) {
  MaterialSpec spec;
  spec.num_phases = static_cast<int>(sigma.rows());
  spec.sigma = std::move(sigma);
  spec.mu = std::move(mu);
  spec.check();
  return spec;
}

Matrix MaterialSpec::inverse_mobility() const {
  Matrix inv = Matrix::Zero(num_phases, num_phases);
  for (int i = 0; i < num_phases; ++i)
    for (int j = 0; j < num_phases; ++j)
      if (i != j) inv(i, j) = 1.0 / mu(i, j);
  return inv;
}

void MaterialSpec::check() const {
  if (num_phases < 2) throw DimensionError("material.N: need at least two phases");
  check_pair_matrix(sigma, num_phases, "sigma");
  check_pair_matrix(mu, num_phases, "mu");
}

KernelCoefficients compute_coefficients(const MaterialSpec& spec, double gamma, double beta) {
  if (!(beta > 0.0) || !std::isfinite(gamma)) {
    throw ScaleOrderError(fmt::format("scales must satisfy gamma > beta > 0 (gamma={}, beta={})", gamma, beta));
  }
  if (!(gamma > beta)) {
    throw ScaleOrderError(fmt::format("gamma must exceed beta (gamma={}, beta={})", gamma, beta));
  }
  spec.check();

  const int n = spec.num_phases;
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  const double ca = sqrt_pi * std::sqrt(gamma) / (gamma - beta);
  const double cb = sqrt_pi * std::sqrt(beta) / (gamma - beta);
  const Matrix inv_mu = spec.inverse_mobility();

  KernelCoefficients k;
  k.gamma = gamma;
  k.beta = beta;
  k.a = Matrix::Zero(n, n);
  k.b = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      k.a(i, j) = ca * (spec.sigma(i, j) - beta * inv_mu(i, j));
      k.b(i, j) = cb * (-spec.sigma(i, j) + gamma * inv_mu(i, j));
    }
  }
  return k;
}

std::pair<Matrix, Matrix> reconstruct_material(const KernelCoefficients& coeffs) {
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  const double sg = std::sqrt(coeffs.gamma);
  const double sb = std::sqrt(coeffs.beta);
  Matrix sigma = (coeffs.a * sg + coeffs.b * sb) / sqrt_pi;
  Matrix inv_mu = coeffs.a / (sqrt_pi * sg) + coeffs.b / (sqrt_pi * sb);
  return {std::move(sigma), std::move(inv_mu)};
}

TriangleSpread triangle_spread(const Matrix& m) {
  TriangleSpread spread;
  const int n = static_cast<int>(m.rows());
  spread.min = std::numeric_limits<double>::infinity();
  spread.max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double value = m(i, k) + m(k, j) - m(i, j);
        spread.vacuous = false;
        if (value < spread.min) {
          spread.min = value;
          spread.argmin = {i, k, j};
        }
        spread.max = std::max(spread.max, value);
      }
    }
  }
  if (spread.vacuous) spread.min = spread.max = 0.0;
  return spread;
}

Eigen::VectorXd conditional_eigenvalues(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  if (n < 2) return Eigen::VectorXd();
  const Matrix q = helmert_basis(n);
  const Matrix sym = 0.5 * (m + m.transpose());
  const Matrix restricted = q.transpose() * sym * q;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(restricted, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

bool ValidationReport::admissible() const {
  return triangle_a.pass && triangle_b.pass && posdef_a.pass && posdef_b.pass;
}

bool ValidationReport::all_pass() const { return admissible() && fourier_positive.pass; }

std::string ValidationReport::to_text() const {
  std::ostringstream out;
  auto verdict = [](bool pass) { return pass ? "PASS" : "FAIL"; };
  auto triangle_line = [&](const char* name, const TriangleCheck& c) {
    if (c.vacuous) {
      out << fmt::format("{} {} margin=inf (no distinct triple)\n", name, verdict(c.pass));
    } else {
      out << fmt::format("{} {} margin={:.12g} worst=({},{},{})\n", name, verdict(c.pass), c.margin,
                         c.worst[0], c.worst[1], c.worst[2]);
    }
  };
  triangle_line("triangle_a", triangle_a);
  triangle_line("triangle_b", triangle_b);
  out << fmt::format("posdef_a {} margin={:.12g}\n", verdict(posdef_a.pass), posdef_a.min_eigenvalue);
  out << fmt::format("posdef_b {} margin={:.12g}\n", verdict(posdef_b.pass), posdef_b.min_eigenvalue);
  out << fmt::format("fourier_positive {} max_sigma_mu={:.12g} min_sigma_mu={:.12g}\n",
                     verdict(fourier_positive.pass), fourier_positive.max_sigma_mu,
                     fourier_positive.min_sigma_mu);
  for (const auto& w : coefficient_signs) {
    out << fmt::format("warning negative {}[{}][{}]={:.12g}\n", w.matrix, w.i, w.j, w.value);
  }
  return out.str();
}

ValidationReport validate(const MaterialSpec& spec, const KernelCoefficients& coeffs) {
  ValidationReport report;
  report.triangle_a = triangle_check(coeffs.a);
  report.triangle_b = triangle_check(coeffs.b);
  report.posdef_a = definiteness_check(coeffs.a);
  report.posdef_b = definiteness_check(coeffs.b);

  const int n = spec.num_phases;
  double max_sm = -std::numeric_limits<double>::infinity();
  double min_sm = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double sm = spec.sigma(i, j) * spec.mu(i, j);
      max_sm = std::max(max_sm, sm);
      min_sm = std::min(min_sm, sm);
      if (i < j) {
        if (coeffs.a(i, j) < 0.0) report.coefficient_signs.push_back({'a', i, j, coeffs.a(i, j)});
        if (coeffs.b(i, j) < 0.0) report.coefficient_signs.push_back({'b', i, j, coeffs.b(i, j)});
      }
    }
  }
  report.fourier_positive.max_sigma_mu = max_sm;
  report.fourier_positive.min_sigma_mu = min_sm;
  report.fourier_positive.pass = coeffs.gamma > max_sm && coeffs.beta < min_sm;
  return report;
}

KernelCoefficients certify(const MaterialSpec& spec, KernelCoefficients coeffs) {
  const ValidationReport report = validate(spec, coeffs);
  if (!report.admissible()) {
    throw ValidationError("kernel coefficients are not admissible:\n" + report.to_text());
  }
  coeffs.validated = true;
  return coeffs;
}

Scales suggest_scales(const MaterialSpec& spec) {
  spec.check();
  const Matrix inv_mu = spec.inverse_mobility();
  const TriangleSpread ts = triangle_spread(spec.sigma);
  const TriangleSpread tm = triangle_spread(inv_mu);
  if (!ts.vacuous && !(ts.min > 0.0)) {
    throw InadmissibleMaterialError(
        fmt::format("surface tensions violate the strict triangle inequality (m_sigma={})", ts.min));
  }
  if (!tm.vacuous && !(tm.min > 0.0)) {
    throw InadmissibleMaterialError(
        fmt::format("inverse mobilities violate the strict triangle inequality (m_inv_mu={})", tm.min));
  }

  const int n = spec.num_phases;
  double max_sm = 0.0;
  double min_sm = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      max_sm = std::max(max_sm, spec.sigma(i, j) * spec.mu(i, j));
      min_sm = std::min(min_sm, spec.sigma(i, j) * spec.mu(i, j));
    }
  }

  double gamma_bound = max_sm;
  double beta_bound = min_sm;
  if (!ts.vacuous) {
    gamma_bound = std::max(gamma_bound, ts.max / tm.min);
    beta_bound = std::min(beta_bound, ts.min / tm.max);
    // Exact window on the complement of (1, ..., 1): with S = -sigma and
    // I = -1/mu restricted there, -a > 0 iff beta < min eig(S, I) and
    // -b > 0 iff gamma > max eig(S, I).
    const Matrix q = helmert_basis(n);
    const Matrix s_r = -(q.transpose() * spec.sigma * q);
    const Matrix i_r = -(q.transpose() * inv_mu * q);
    const double s_min = conditional_eigenvalues(-spec.sigma).minCoeff();
    const double i_min = conditional_eigenvalues(-inv_mu).minCoeff();
    if (!(s_min > 0.0) || !(i_min > 0.0)) {
      throw InadmissibleMaterialError(fmt::format(
          "sigma or 1/mu is not negative definite on the complement of (1, ..., 1) (min eigenvalues {}, {})",
          -s_min, -i_min));
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> gen(s_r, i_r, Eigen::EigenvaluesOnly);
    gamma_bound = std::max(gamma_bound, gen.eigenvalues().maxCoeff());
    beta_bound = std::min(beta_bound, gen.eigenvalues().minCoeff());
  }

  const Scales scales{2.0 * gamma_bound, 0.5 * beta_bound};
  const ValidationReport report = validate(spec, compute_coefficients(spec, scales.gamma, scales.beta));
  if (!report.all_pass()) {
    throw InadmissibleMaterialError(
        fmt::format("suggested scales (gamma={}, beta={}) fail direct validation", scales.gamma, scales.beta),
        report);
  }
  return scales;
}

}  // namespace mbo
