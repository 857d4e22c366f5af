#pragma once

#include <array>
#include <span>
#include <vector>

#include "mbo/grid.hpp"
#include "mbo/thresholding.hpp"

namespace mbo {

/// Radius of the ball with the phase's volume: sqrt(A / pi) in 2D,
/// cbrt(3V / 4pi) in 3D. Throws EmptyPhase.
double disk_radius(const LabelField& labels, int phase);

struct Segment {
  std::array<double, 2> a;
  std::array<double, 2> b;
  double length() const;
};

struct InterfaceMeasurement {
  int i = 0;
  int j = 0;
  double length = 0.0;  // area in 3D
  std::vector<Segment> segments;  // 2D only
};

/// Passing this as the smoothing width selects 0.5 * sqrt(spacing).
inline constexpr double kAutoSmoothing = -1.0;

/// 2D: zero contour of G * (chi_i - chi_j), traced by marching squares over
/// the cell-center lattice with linear interpolation on edges. Segments are
/// kept only where i and j are the two dominant phases (smoothed chi_i at
/// the crossing above 1/3). `smoothing` is the Gaussian standard deviation
/// in domain units (0 disables it). The default grows like sqrt(spacing):
/// wide enough in cells to iron out the staircase, narrow enough that the
/// curvature bias of the smoothed level set (about w^2 / 2r) is first order.
/// 3D: i|j face count times face area, which overestimates tilted
/// interfaces by up to a factor sqrt(3).
InterfaceMeasurement interface_length(const LabelField& labels, int i, int j, double smoothing = kAutoSmoothing);

struct JunctionReport {
  std::array<double, 2> location{};  // unit-torus coordinates
  std::array<int, 3> phases{};       // ascending
  /// angles[k]: opening angle (degrees) of the sector of phases[k].
  std::array<double, 3> angles{};
  /// Unit ray direction fitted to the interface between the other two phases.
  std::array<std::array<double, 2>, 3> rays{};

  double angle_sum() const { return angles[0] + angles[1] + angles[2]; }
  /// Angle of the sector occupied by `phase`; DomainError if not incident.
  double angle_of(int phase) const;
};

inline constexpr int kDefaultJunctionWindow = 16;

/// Triple junctions of a 2D field: 2x2 stencils holding three phases,
/// clustered, with one ray per incident interface fitted by total least
/// squares to the midpoints of the i|j contour segments (interface_length
/// with a two-cell smoothing) between 3 and `window` cells away. window >= 8.
std::vector<JunctionReport> junction_angles(const LabelField& labels, int window = kDefaultJunctionWindow);

struct YoungAngles {
  /// Sector angles in degrees of phases 1, 2, 3.
  std::array<double, 3> angles{};
  /// |sigma_12 n_12 + sigma_13 n_13 + sigma_23 n_23| at the solution.
  double residual = 0.0;
};

/// Equilibrium junction angles for tensions sigma_12, sigma_13, sigma_23.
/// Throws InadmissibleTensions unless they satisfy the strict triangle
/// inequality.
YoungAngles young_angles(double s12, double s13, double s23);

struct RadiusSample {
  double time = 0.0;
  double radius = 0.0;
};

struct ShrinkFit {
  double slope = 0.0;      // d(r^2)/dt
  double intercept = 0.0;  // r^2 at t = 0
  double residual = 0.0;   // rms of the r^2 misfit
  int samples = 0;
};

inline constexpr int kShrinkSkipSteps = 5;
inline constexpr double kShrinkMinRadiusCells = 8.0;

/// Least-squares line through (t, r^2), dropping the first `skip` samples
/// and everything from the first radius below `min_radius` on. Throws
/// WindowTooShort with fewer than 10 usable samples.
ShrinkFit shrink_rate_fit(std::span<const RadiusSample> samples, double min_radius, int skip = kShrinkSkipSteps);

/// Radii from the per-step phase volumes of the retained reports (or the
/// snapshots when reports were not kept); min radius is 8 cells.
ShrinkFit shrink_rate_fit(const Trajectory& trajectory, int phase);

}  // namespace mbo
