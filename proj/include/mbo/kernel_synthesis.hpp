#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mbo/errors.hpp"

namespace mbo {

using Matrix = Eigen::MatrixXd;

/// Surface tensions and mobilities of an N-phase system.
///
/// Both matrices are symmetric with zero diagonal and strictly positive
/// off-diagonal entries. The inverse-mobility matrix also has a zero
/// diagonal.
struct MaterialSpec {
  int num_phases = 0;
  Matrix sigma;
  Matrix mu;

  static MaterialSpec uniform(int num_phases, double sigma, double mu);
  static MaterialSpec from_matrices(Matrix sigma, Matrix mu);

  /// Entrywise 1/mu off the diagonal, zero on it.
  Matrix inverse_mobility() const;

  /// Throws DimensionError on shape, symmetry or sign problems.
  void check() const;
};

/// Weights of the two Gaussians in K_ij = a_ij G_gamma + b_ij G_beta.
struct KernelCoefficients {
  double gamma = 0.0;
  double beta = 0.0;
  Matrix a;
  Matrix b;
  // Set by certify() once the direct admissibility checks have passed.
  bool validated = false;

  int num_phases() const { return static_cast<int>(a.rows()); }
};

KernelCoefficients compute_coefficients(const MaterialSpec& spec, double gamma, double beta);

/// Reconstructs (sigma, 1/mu) from the coefficients through the 2x2 linear
/// system the coefficients solve. Used for round-trip checks.
std::pair<Matrix, Matrix> reconstruct_material(const KernelCoefficients& coeffs);

struct TriangleCheck {
  bool pass = true;
  bool vacuous = false;           // N = 2: no distinct triple exists
  double margin = 0.0;            // min over (i,k,j) of m_ik + m_kj - m_ij
  std::array<int, 3> worst{-1, -1, -1};
};

struct DefinitenessCheck {
  bool pass = true;
  double min_eigenvalue = 0.0;    // smallest eigenvalue on (1,...,1)^perp
};

struct FourierCheck {
  bool pass = true;
  double max_sigma_mu = 0.0;
  double min_sigma_mu = 0.0;
};

struct CoefficientWarning {
  char matrix = 'a';  // 'a' or 'b'
  int i = 0;
  int j = 0;
  double value = 0.0;
};

struct ValidationReport {
  TriangleCheck triangle_a;
  TriangleCheck triangle_b;
  DefinitenessCheck posdef_a;
  DefinitenessCheck posdef_b;
  FourierCheck fourier_positive;
  std::vector<CoefficientWarning> coefficient_signs;

  /// Conditions the scheme itself needs: triangle inequality and
  /// conditional definiteness for both coefficient matrices.
  bool admissible() const;
  /// admissible() and positivity of the kernel transforms.
  bool all_pass() const;
  /// One line per check: name, PASS/FAIL, margin.
  std::string to_text() const;
};

/// Absolute tolerance on the smallest conditional eigenvalue; zero fails.
inline constexpr double kEigenvalueTolerance = 1e-10;

ValidationReport validate(const MaterialSpec& spec, const KernelCoefficients& coeffs);

/// Runs validate() and returns the coefficients marked as validated.
/// Throws ValidationError when the report is not admissible.
KernelCoefficients certify(const MaterialSpec& spec, KernelCoefficients coeffs);

/// min / max over distinct triples (i,k,j) of m_ik + m_kj - m_ij.
struct TriangleSpread {
  double min = 0.0;
  double max = 0.0;
  std::array<int, 3> argmin{-1, -1, -1};
  bool vacuous = true;
};
TriangleSpread triangle_spread(const Matrix& m);

/// Eigenvalues of the quadratic form v -> v.M v restricted to (1,...,1)^perp,
/// ascending.
Eigen::VectorXd conditional_eigenvalues(const Matrix& m);

class InadmissibleMaterialError : public Error {
 public:
  InadmissibleMaterialError(const std::string& what, std::optional<ValidationReport> report = {})
      : Error(what), report_(std::move(report)) {}
  std::string_view kind() const noexcept override { return "InadmissibleMaterialError"; }
  const std::optional<ValidationReport>& report() const { return report_; }

 private:
  std::optional<ValidationReport> report_;
};

struct Scales {
  double gamma = 0.0;
  double beta = 0.0;
};

/// Picks (gamma, beta) a factor 2 beyond the triangle-inequality and
/// kernel-positivity bounds, then checks the result directly.
Scales suggest_scales(const MaterialSpec& spec);

}  // namespace mbo
