#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "mbo/energetics.hpp"
#include "mbo/experiments.hpp"
#include "mbo/initial_conditions.hpp"
#include "mbo/thresholding.hpp"
#include "test_support.hpp"

using namespace mbo;

namespace {

std::vector<ScalarField> mix(const std::vector<ScalarField>& u, const std::vector<ScalarField>& v, double a) {
  std::vector<ScalarField> out = u;
  for (std::size_t p = 0; p < u.size(); ++p) {
    for (std::size_t x = 0; x < u[p].size(); ++x) out[p][x] = a * u[p][x] + (1 - a) * v[p][x];
  }
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace

TEST(Energy, SinglePhaseIsZero) {
  const auto c = support::certified_uniform(3);
  const auto e = approximate_energy(LabelField(GridSpec::square(16), 3, 2), c, 1e-3);
  EXPECT_NEAR(e.total, 0.0, 1e-13);
}

TEST(Energy, FlatStripeGivesFourSigma) {
  const auto spec = MaterialSpec::uniform(2, 1.0, 1.0);
  const auto c = certify(spec, compute_coefficients(spec, 2.0, 0.5));
  const auto stripe = stripe_labels(GridSpec::square(512), 2, 0.25, 0.75);
  const auto e = approximate_energy(stripe, c, 1e-4);
  EXPECT_NEAR(e.total, 4.0, 0.02 * 4.0);
  EXPECT_NEAR(e.per_pair(0, 1), 2.0, 0.02 * 2.0);
}

TEST(Energy, BreakdownSymmetricAndSums) {
  std::mt19937_64 rng(31);
  const auto c = support::certified(support::random_material(4, rng));
  const GridSpec g = GridSpec::square(32);
  const auto u = support::random_relaxed(g, 4, rng);
  const auto e = approximate_energy(u, c, 2e-3);
  EXPECT_NEAR(e.total, e.per_pair.sum(), 1e-12 * std::abs(e.total));
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(e.per_pair(i, i), 0.0);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(e.per_pair(i, j), e.per_pair(j, i), 1e-12 * std::abs(e.total));
  }
  EXPECT_GT(e.total, 0.0);
}

TEST(Energy, RejectsNonPartition) {
  const auto c = support::certified_uniform(2);
  const GridSpec g = GridSpec::square(8);
  std::vector<ScalarField> u{ScalarField(g, 0.6), ScalarField(g, 0.6)};
  EXPECT_THROW(approximate_energy(u, c, 1e-2), DomainError);
  u = {ScalarField(g, 1.5), ScalarField(g, -0.5)};
  EXPECT_THROW(check_relaxed_partition(u), DomainError);
}

TEST(Energy, PairSumPathMatchesSpectral) {
  std::mt19937_64 rng(32);
  const auto c = support::certified(support::random_material(3, rng));
  const GridSpec g = GridSpec::square(48);
  const auto labels = support::random_labels(g, 3, rng);
  const double h = 1e-3;
  TwoScaleConvolver conv(g);
  PhaseStack wide(g, 3), narrow(g, 3);
  conv.load_indicators(labels);
  conv.convolve(c.gamma * h, c.beta * h, wide, narrow);
  const auto fast = energy_from_pair_sums(pair_sums(labels, wide, narrow), c, h, g.cells());
  const auto ref = approximate_energy(labels, c, h);
  EXPECT_LT(rel(fast.total, ref.total), 1e-12);
  EXPECT_LT((fast.per_pair - ref.per_pair).cwiseAbs().maxCoeff(), 1e-12 * ref.total);
}

TEST(Energy, Bilinearity) {
  std::mt19937_64 rng(33);
  const auto c = support::certified(support::random_material(3, rng));
  const GridSpec g = GridSpec::square(24);
  const auto u = support::random_relaxed(g, 3, rng);
  const auto v = support::random_relaxed(g, 3, rng);
  const double h = 3e-3;
  const double eu = approximate_energy(u, c, h).total;
  const double ev = approximate_energy(v, c, h).total;
  const double uv = bilinear_form(u, v, c, h);
  EXPECT_LT(rel(bilinear_form(u, u, c, h), eu), 1e-12);
  EXPECT_LT(rel(uv, bilinear_form(v, u, c, h)), 1e-12);
  for (double a : {0.0, 0.5, 1.0}) {
    const double direct = approximate_energy(mix(u, v, a), c, h).total;
    const double expanded = a * a * eu + 2 * a * (1 - a) * uv + (1 - a) * (1 - a) * ev;
    EXPECT_LT(rel(direct, expanded), 1e-12) << a;
  }
}

TEST(Distance, ZeroSymmetricAndTwoFormulas) {
  std::mt19937_64 rng(34);
  const GridSpec g = GridSpec::square(16);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3;
    const auto c = support::certified(support::random_material(n, rng));
    const double h = std::pow(2.0 / 16, 2) / c.beta;
    const auto u = support::random_relaxed(g, n, rng);
    const auto v = support::random_relaxed(g, n, rng);
    EXPECT_EQ(distance(u, u, c, h), 0.0);
    EXPECT_NEAR(distance(u, v, c, h), distance(v, u, c, h), 1e-12 * distance(u, v, c, h));
    const double d2 = distance_squared(u, v, c, h);
    EXPECT_GT(d2, 0.0);
    EXPECT_LT(rel(distance_squared_halftime(u, v, c, h), d2), 1e-10);
    // d^2 = -2h E_h(u - v) with the unrestricted bilinear form.
    const double direct = -2.0 * h * (bilinear_form(u, u, c, h) - 2 * bilinear_form(u, v, c, h) + bilinear_form(v, v, c, h));
    EXPECT_LT(std::abs(direct - d2), 1e-10 * (std::abs(d2) + 2 * h * approximate_energy(u, c, h).total));
  }
}

TEST(Distance, TriangleInequality) {
  std::mt19937_64 rng(35);
  const GridSpec g = GridSpec::square(16);
  const auto c = support::certified(support::random_material(3, rng));
  const double h = std::pow(2.0 / 16, 2) / c.beta;
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto u = support::random_relaxed(g, 3, rng);
    const auto v = support::random_relaxed(g, 3, rng);
    const auto w = support::random_relaxed(g, 3, rng);
    if (distance(u, w, c, h) > distance(u, v, c, h) + distance(v, w, c, h) + 1e-9) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(Distance, NegativeSquareWithoutDefiniteness) {
  // sqrt(sigma) violates the triangle inequality, so -sigma is indefinite on
  // the complement of (1, 1, 1). Push the difference along the negative
  // conditional eigenvector of the combined weight a + b.
  Matrix sigma(3, 3);
  sigma << 0, 1, 1, 1, 0, 9, 1, 9, 0;
  Matrix mu = Matrix::Ones(3, 3);
  mu.diagonal().setZero();
  const auto c = compute_coefficients(MaterialSpec::from_matrices(sigma, mu), 20.0, 0.05);
  const Matrix m = -(c.a + c.b);
  Matrix q(3, 2);
  q << 1 / std::sqrt(2.0), 1 / std::sqrt(6.0), -1 / std::sqrt(2.0), 1 / std::sqrt(6.0), 0, -2 / std::sqrt(6.0);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(q.transpose() * m * q);
  ASSERT_LT(solver.eigenvalues()(0), 0.0);
  const Eigen::VectorXd w = q * solver.eigenvectors().col(0);
  const GridSpec g = GridSpec::square(16);
  std::vector<ScalarField> u, v;
  for (int p = 0; p < 3; ++p) {
    u.emplace_back(g, 1.0 / 3 + 0.2 * w(p));
    v.emplace_back(g, 1.0 / 3);
  }
  EXPECT_THROW(distance_squared(u, v, c, 1e-2), NegativeSquareError);
}

TEST(MovementObjective, IdentitiesAndThresholdDescent) {
  std::mt19937_64 rng(36);
  const GridSpec g = GridSpec::square(32);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 3;
    const auto c = support::certified(support::random_material(n, rng));
    const double h = std::pow(1.5 / 32, 2) / c.beta;
    const auto prev = support::random_labels(g, n, rng);
    const auto chi = indicators(prev);
    const double e_prev = approximate_energy(prev, c, h).total;
    EXPECT_LT(rel(movement_objective(chi, prev, c, h), e_prev), 1e-12);
    const auto u = support::random_relaxed(g, n, rng);
    const double quad = movement_objective(u, prev, c, h);
    const double lin = movement_objective_linear(u, prev, c, h);
    EXPECT_LT(std::abs(quad - lin), 1e-10 * std::max(1.0, std::abs(quad)));
    const auto next = indicators(threshold_step(prev, c, h).labels);
    EXPECT_LE(movement_objective(next, prev, c, h), e_prev + 1e-10 * e_prev);
    EXPECT_LE(movement_objective(next, prev, c, h), quad + 1e-10 * std::abs(quad));
  }
}

TEST(Energy, MonotoneInH) {
  std::mt19937_64 rng(37);
  const auto c = support::certified_uniform(3);
  const GridSpec g = GridSpec::square(128);
  const double h = 1e-4, h0 = 4e-4;
  const double factor = std::pow(std::sqrt(h0) / (std::sqrt(h) + std::sqrt(h0)), 3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = support::random_labels(g, 3, rng);
    EXPECT_GE(approximate_energy(f, c, h).total, factor * approximate_energy(f, c, h0).total * (1 - 0.01));
  }
}

TEST(Energy, DiskConsistency) {
  const auto points = consistency_sweep({4e-4, 2e-4, 1e-4});
  ASSERT_EQ(points.size(), 3u);
  EXPECT_LT(std::abs(points[2].relative_error), 0.02);
  EXPECT_LT(std::abs(points[1].relative_error), std::abs(points[0].relative_error));
  EXPECT_LT(std::abs(points[2].relative_error), std::abs(points[1].relative_error));
  EXPECT_NEAR(points[2].energy, 4 * std::numbers::pi * 0.25, 0.02 * std::numbers::pi);
}

TEST(MetricsWriter, HeaderAndRow) {
  EXPECT_EQ(MetricsWriter::header(3),
            "step,time,E_h_before,E_h_after,dist_sq,ledger_lhs,ledger_rhs,vol_0,vol_1,vol_2,e_0_1,e_0_2,e_1_2");
  StepReport r;
  r.step = 4;
  r.time = 0.1;
  r.energy_before.total = 1.0 / 3.0;
  r.energy_before.per_pair = Matrix::Zero(2, 2);
  r.energy_after.total = 2.0;
  r.energy_after.per_pair = Matrix::Zero(2, 2);
  r.energy_after.per_pair(0, 1) = r.energy_after.per_pair(1, 0) = 1.0;
  r.phase_volumes = {10, 6};
  const std::vector<std::string> extra_names{"radius_1"};
  EXPECT_EQ(MetricsWriter::header(2, extra_names),
            "step,time,E_h_before,E_h_after,dist_sq,ledger_lhs,ledger_rhs,vol_0,vol_1,e_0_1,radius_1");
  const double extra[1] = {0.25};
  EXPECT_EQ(MetricsWriter::row(r, extra), "4,0.1,0.333333333333,2,0,0,0,10,6,1,0.25");

  const auto path = std::filesystem::temp_directory_path() / "mbo_metrics_test.csv";
  {
    MetricsWriter w(path, 2);
    w.write(r);
  }
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, MetricsWriter::header(2));
  std::getline(in, line);
  EXPECT_EQ(line, MetricsWriter::row(r));
  std::filesystem::remove(path);
}
