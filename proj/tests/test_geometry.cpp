#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "mbo/experiments.hpp"
#include "mbo/geometry.hpp"
#include "mbo/initial_conditions.hpp"
#include "mbo/thresholding.hpp"
#include "test_support.hpp"

using namespace mbo;

namespace {

constexpr double kPi = std::numbers::pi;

// Rotation by 90 degrees: (i, j) -> (j, n - 1 - i).
LabelField rotate90(const LabelField& f) {
  const int n = f.grid.sizes[0];
  LabelField out(f.grid, f.num_phases);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out[f.grid.index(j, n - 1 - i)] = f[f.grid.index(i, j)];
  }
  return out;
}

std::optional<JunctionReport> nearest(const std::vector<JunctionReport>& js, double x, double y) {
  std::optional<JunctionReport> best;
  double bd = 1e300;
  for (const auto& j : js) {
    const double d = std::hypot(j.location[0] - x, j.location[1] - y);
    if (d < bd) {
      bd = d;
      best = j;
    }
  }
  return best;
}

}  // namespace

TEST(DiskRadius, AreaFormula) {
  const GridSpec g = GridSpec::square(64);
  const auto disk = disk_labels(g, 2, {0.5, 0.5, 0.5}, 0.3);
  const double area = static_cast<double>(disk.volumes()[1]) / g.cells();
  EXPECT_DOUBLE_EQ(disk_radius(disk, 1), std::sqrt(area / kPi));
  EXPECT_NEAR(disk_radius(disk, 1), 0.3, 0.01);

  const GridSpec c = GridSpec::cube(32);
  const auto ball = disk_labels(c, 2, {0.5, 0.5, 0.5}, 0.3);
  const double vol = static_cast<double>(ball.volumes()[1]) / c.cells();
  EXPECT_DOUBLE_EQ(disk_radius(ball, 1), std::cbrt(3 * vol / (4 * kPi)));

  EXPECT_THROW(disk_radius(LabelField(g, 2, 0), 1), EmptyPhase);
  EXPECT_THROW(disk_radius(disk, 2), IndexError);
}

TEST(InterfaceLength, StripeAndNoContact) {
  for (int n : {64, 128}) {
    const auto stripe = stripe_labels(GridSpec::square(n), 3, 0.25, 0.75, 1, 1, 0);
    const auto m = interface_length(stripe, 0, 1);
    EXPECT_NEAR(m.length, 2.0, 2.0 / n);
    EXPECT_EQ(interface_length(stripe, 0, 2).length, 0.0);
    EXPECT_EQ(interface_length(stripe, 1, 0).length, m.length);
    for (const auto& s : m.segments) EXPECT_GE(s.length(), 0.0);
  }
}

TEST(InterfaceLength, DiskOn256) {
  const auto disk = disk_labels(GridSpec::square(256), 2, {0.5, 0.5, 0.5}, 0.25);
  EXPECT_NEAR(interface_length(disk, 0, 1).length, 2 * kPi * 0.25, 0.03 * 2 * kPi * 0.25);
}

TEST(InterfaceLength, ErrorHalvesUnderRefinement) {
  const double target = 2 * kPi * 0.25;
  std::vector<double> errors;
  for (int n : {64, 128, 256, 512}) {
    const auto disk = disk_labels(GridSpec::square(n), 2, {0.5, 0.5, 0.5}, 0.25);
    errors.push_back(std::abs(interface_length(disk, 0, 1).length - target));
  }
  for (std::size_t k = 1; k < errors.size(); ++k) {
    EXPECT_NEAR(errors[k] / errors[k - 1], 0.5, 0.1) << k;
  }
}

TEST(InterfaceLength, ThreeDimensionalFaceCount) {
  const int s[3] = {16, 16, 16};
  const auto slab = stripe_labels(GridSpec::make(s), 2, 0.25, 0.75, 2);
  EXPECT_NEAR(interface_length(slab, 0, 1).length, 2.0, 1e-12);
}

TEST(Junctions, TwoPhaseFieldHasNone) {
  const auto disk = disk_labels(GridSpec::square(64), 2, {0.5, 0.5, 0.5}, 0.25);
  EXPECT_TRUE(junction_angles(disk).empty());
  EXPECT_THROW(junction_angles(disk, 4), DomainError);
}

TEST(Junctions, MercedesStartAndRelaxation) {
  const auto c = support::certified_uniform(3);
  const GridSpec g = GridSpec::square(256);
  const auto init = mercedes_labels(g, 3, {0.5, 0.5}, 90.0);
  const auto j0 = nearest(junction_angles(init), 0.5, 0.5);
  ASSERT_TRUE(j0.has_value());
  for (double a : j0->angles) EXPECT_NEAR(a, 120.0, 3.0);
  EXPECT_NEAR(j0->angle_sum(), 360.0, 1.0);

  SchemeConfig cfg;
  cfg.h = std::pow(2.0 / 256, 2) / c.beta;
  cfg.steps = 40;
  cfg.record_every = 0;
  const auto traj = run(init, c, cfg);
  const auto js = junction_angles(traj.final_state);
  const auto j = nearest(js, 0.5, 0.5);
  ASSERT_TRUE(j.has_value());
  EXPECT_EQ(j->phases, (std::array<int, 3>{0, 1, 2}));
  for (int p = 0; p < 3; ++p) EXPECT_NEAR(j->angle_of(p), 120.0, 3.0);
  EXPECT_THROW(j->angle_of(3), DomainError);
  for (const auto& jr : js) EXPECT_NEAR(jr.angle_sum(), 360.0, 1.0);
}

TEST(Junctions, RotationByQuarterTurnIsExact) {
  const GridSpec g = GridSpec::square(128);
  const auto f = mercedes_labels(g, 3, {0.5, 0.5}, 70.0);
  const auto a = nearest(junction_angles(f), 0.5, 0.5);
  const auto rf = rotate90(f);
  const auto b = nearest(junction_angles(rf), 0.5, 0.5);
  ASSERT_TRUE(a.has_value());
  ASSERT_TRUE(b.has_value());
  for (int p = 0; p < 3; ++p) EXPECT_NEAR(a->angle_of(p), b->angle_of(p), 1e-9);
}

TEST(Junctions, RigidRotationWithinTwoDegrees) {
  // A 16-cell window cannot resolve a digitized ray direction to better than
  // about atan(0.5 / 13) per ray; a 32-cell window is used here.
  const GridSpec g = GridSpec::square(256);
  constexpr int kWindow = 32;
  // Asymmetric sectors: phase 0 [0, 100), phase 1 [100, 230), phase 2 [230, 360).
  auto sectors = [&](double rot) {
    LabelField f(g, 3);
    for (std::size_t x = 0; x < g.cells(); ++x) {
      const auto p = g.center(x);
      double ang = std::atan2(p[1] - 0.5, p[0] - 0.5) * 180 / kPi - rot;
      ang = std::fmod(ang + 720.0, 360.0);
      f[x] = ang < 100 ? 0 : (ang < 230 ? 1 : 2);
    }
    return f;
  };
  const double truth[3] = {100.0, 130.0, 130.0};
  const auto ref = nearest(junction_angles(sectors(0.0), kWindow), 0.5, 0.5);
  ASSERT_TRUE(ref.has_value());
  for (int p = 0; p < 3; ++p) EXPECT_NEAR(ref->angle_of(p), truth[p], 1.5);
  for (double rot : {5.0, 17.0, 33.0, 47.0, 61.0, 79.0, 88.0}) {
    const auto j = nearest(junction_angles(sectors(rot), kWindow), 0.5, 0.5);
    ASSERT_TRUE(j.has_value());
    for (int p = 0; p < 3; ++p) {
      EXPECT_NEAR(j->angle_of(p), ref->angle_of(p), 2.0) << rot;
      EXPECT_NEAR(j->angle_of(p), truth[p], 1.5) << rot;
    }
  }
}

TEST(Junctions, StaticYoungSectorsAreRecovered) {
  const GridSpec g = GridSpec::square(512);
  const auto y = young_angles(1, 1, 1.2);
  for (double rot : {0.0, 20.0, 45.0}) {
    LabelField f(g, 3);
    for (std::size_t x = 0; x < g.cells(); ++x) {
      const auto p = g.center(x);
      double ang = std::atan2(p[1] - 0.5, p[0] - 0.5) * 180 / kPi - rot;
      ang = std::fmod(ang + 720.0, 360.0);
      f[x] = ang < y.angles[0] ? 0 : (ang < y.angles[0] + y.angles[1] ? 1 : 2);
    }
    const auto j = nearest(junction_angles(f, 32), 0.5, 0.5);
    ASSERT_TRUE(j.has_value());
    for (int p = 0; p < 3; ++p) EXPECT_NEAR(j->angle_of(p), y.angles[p], 0.5) << rot;
  }
}

TEST(YoungAngles, Examples) {
  const auto eq = young_angles(1, 1, 1);
  for (double a : eq.angles) EXPECT_NEAR(a, 120.0, 1e-9);
  const auto y = young_angles(1, 1, 1.2);
  EXPECT_NEAR(y.angles[0], 106.260, 5e-4);
  EXPECT_NEAR(y.angles[1], 126.870, 5e-4);
  EXPECT_NEAR(y.angles[2], 126.870, 5e-4);
  // Closed form for the symmetric pair: cos(theta_2) = -sigma_23 / 2.
  EXPECT_NEAR(std::cos(y.angles[1] * kPi / 180), -0.6, 1e-10);
  EXPECT_LT(y.residual, 1e-10);
  EXPECT_THROW(young_angles(1, 1, 2.5), InadmissibleTensions);
  EXPECT_THROW(young_angles(1, 1, 2.0), InadmissibleTensions);
}

TEST(YoungAngles, LawOfSinesAndForceBalance) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> d(0.3, 2.0);
  int checked = 0;
  while (checked < 500) {
    const double s12 = d(rng), s13 = d(rng), s23 = d(rng);
    if (!(s12 + s13 > s23 && s12 + s23 > s13 && s13 + s23 > s12)) continue;
    const auto y = young_angles(s12, s13, s23);
    EXPECT_NEAR(y.angles[0] + y.angles[1] + y.angles[2], 360.0, 1e-9);
    EXPECT_LT(y.residual, 1e-10);
    const double r1 = std::sin(y.angles[0] * kPi / 180) / s23;
    const double r2 = std::sin(y.angles[1] * kPi / 180) / s13;
    const double r3 = std::sin(y.angles[2] * kPi / 180) / s12;
    EXPECT_NEAR(r1, r2, 1e-9);
    EXPECT_NEAR(r1, r3, 1e-9);
    ++checked;
  }
}

TEST(ShrinkFit, ExactLineAndGuards) {
  std::vector<RadiusSample> s;
  for (int k = 0; k < 45; ++k) {
    const double t = 1e-3 * k;
    s.push_back({t, std::sqrt(0.09 - 2.0 * t)});
  }
  const auto fit = shrink_rate_fit(s, 0.05);
  EXPECT_NEAR(fit.slope, -2.0, 1e-10);
  EXPECT_NEAR(fit.intercept, 0.09, 1e-12);
  EXPECT_LT(fit.residual, 1e-12);
  // First radius below 0.05 at t = 0.044 (k = 44): samples 5..43 are used.
  EXPECT_EQ(fit.samples, 39);
  std::vector<RadiusSample> short_run(s.begin(), s.begin() + 12);
  EXPECT_THROW(shrink_rate_fit(short_run, 0.05), WindowTooShort);
}

TEST(ShrinkFit, StationaryStripe) {
  const auto c = support::certified_uniform(2);
  const GridSpec g = GridSpec::square(128);
  SchemeConfig cfg;
  cfg.h = std::pow(2.0 / 128, 2) / c.beta;
  cfg.steps = 30;
  cfg.record_every = 0;
  const auto traj = run(stripe_labels(g, 2, 0.3, 0.7), c, cfg);
  EXPECT_LT(std::abs(shrink_rate_fit(traj, 1).slope), 0.05 * 2.0);
}

TEST(ShrinkFit, DiskSlopeFollowsMobility) {
  // Resolved steps (mu h = 1e-4), r0 = 0.35 on 512^2.
  for (double mu : {1.0, 2.0}) {
    const auto r = shrinking_disk(mu, 1e-4 / mu);
    EXPECT_NEAR(r.fit.slope, -2.0 * mu, 0.05 * 2.0 * mu) << mu;
    EXPECT_TRUE(r.health.ok());
  }
}
