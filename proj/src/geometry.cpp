#include "mbo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <map>
#include <queue>
#include <utility>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "mbo/errors.hpp"
#include "mbo/spectral.hpp"

namespace mbo {

namespace {

constexpr double kPi = std::numbers::pi;

double radius_from_volume(double volume, int dim) {
  return dim == 2 ? std::sqrt(volume / kPi) : std::cbrt(3.0 * volume / (4.0 * kPi));
}

void check_phase(const LabelField& labels, int phase) {
  if (phase < 0 || phase >= labels.num_phases) {
    throw IndexError(fmt::format("phase {} out of range [0, {})", phase, labels.num_phases));
  }
}

int wrap(int i, int n) { return ((i % n) + n) % n; }

// Junction ray fits: contour smoothing (cells) and the radius (cells) inside
// which the third phase distorts the smoothed contour.
constexpr double kJunctionSmoothing = 2.0;
constexpr double kJunctionInnerRadius = 3.0;

}  // namespace

double disk_radius(const LabelField& labels, int phase) {
  check_phase(labels, phase);
  const auto count = std::count(labels.labels.begin(), labels.labels.end(), static_cast<std::uint8_t>(phase));
  if (count == 0) throw EmptyPhase(fmt::format("phase {} is empty", phase));
  return radius_from_volume(static_cast<double>(count) * labels.grid.cell_volume(), labels.grid.dim);
}

double Segment::length() const { return std::hypot(b[0] - a[0], b[1] - a[1]); }

InterfaceMeasurement interface_length(const LabelField& labels, int i, int j, double smoothing) {
  check_phase(labels, i);
  check_phase(labels, j);
  if (i == j) throw DomainError("interface_length needs two distinct phases");
  InterfaceMeasurement m;
  m.i = i;
  m.j = j;
  const GridSpec& g = labels.grid;

  if (g.dim == 3) {
    double area = 0.0;
    for (std::size_t x = 0; x < g.cells(); ++x) {
      const auto c = g.coords(x);
      const int lx = labels[x];
      if (lx != i && lx != j) continue;
      for (int a = 0; a < 3; ++a) {
        auto nb = c;
        nb[a] += 1;
        const int ln = labels[g.wrapped_index(nb)];
        if ((lx == i && ln == j) || (lx == j && ln == i)) area += g.cell_volume() / g.spacing(a);
      }
    }
    m.length = area;
    return m;
  }

  ScalarField si = indicator(labels, i);
  ScalarField sj = indicator(labels, j);
  const double sd = smoothing < 0.0 ? 0.5 * std::sqrt(g.max_spacing()) : smoothing;
  if (sd > 0.0) {
    si = gaussian_convolve(si, sd * sd / 2.0);
    sj = gaussian_convolve(sj, sd * sd / 2.0);
  }

  const int n0 = g.sizes[0];
  const int n1 = g.sizes[1];
  struct Crossing {
    std::array<double, 2> p;
    double share;
  };
  for (int r = 0; r < n0; ++r) {
    for (int c = 0; c < n1; ++c) {
      // Corners counter-clockwise: (r,c), (r,c+1), (r+1,c+1), (r+1,c).
      const int dr[4] = {0, 0, 1, 1};
      const int dc[4] = {0, 1, 1, 0};
      double f[4], share[4];
      std::array<double, 2> pos[4];
      for (int k = 0; k < 4; ++k) {
        const std::size_t idx = g.index(wrap(r + dr[k], n0), wrap(c + dc[k], n1));
        f[k] = si[idx] - sj[idx];
        share[k] = si[idx];
        pos[k] = {(r + dr[k] + 0.5) / n0, (c + dc[k] + 0.5) / n1};
      }
      Crossing cross[4];
      bool has[4] = {false, false, false, false};
      int count = 0;
      for (int e = 0; e < 4; ++e) {
        const int k = e;
        const int l = (e + 1) % 4;
        if ((f[k] > 0.0) == (f[l] > 0.0)) continue;
        const double lambda = f[k] / (f[k] - f[l]);
        cross[e].p = {pos[k][0] + lambda * (pos[l][0] - pos[k][0]), pos[k][1] + lambda * (pos[l][1] - pos[k][1])};
        cross[e].share = share[k] + lambda * (share[l] - share[k]);
        has[e] = true;
        ++count;
      }
      if (count == 0) continue;
      auto emit = [&](int e0, int e1) {
        if (0.5 * (cross[e0].share + cross[e1].share) <= 1.0 / 3.0) return;
        m.segments.push_back({cross[e0].p, cross[e1].p});
      };
      if (count == 2) {
        int e0 = -1, e1 = -1;
        for (int e = 0; e < 4; ++e) {
          if (!has[e]) continue;
          (e0 < 0 ? e0 : e1) = e;
        }
        emit(e0, e1);
      } else {
        const double center = 0.25 * (f[0] + f[1] + f[2] + f[3]);
        if ((center > 0.0) == (f[0] > 0.0)) {
          emit(0, 1);
          emit(2, 3);
        } else {
          emit(3, 0);
          emit(1, 2);
        }
      }
    }
  }
  for (const auto& s : m.segments) m.length += s.length();
  return m;
}

double JunctionReport::angle_of(int phase) const {
  for (int k = 0; k < 3; ++k)
    if (phases[k] == phase) return angles[k];
  throw DomainError(fmt::format("phase {} does not meet at this junction", phase));
}

std::vector<JunctionReport> junction_angles(const LabelField& labels, int window) {
  const GridSpec& g = labels.grid;
  if (g.dim != 2) throw UnsupportedDimension("junction angles are measured on 2D fields only");
  if (window < 8) throw DomainError(fmt::format("junction window must be at least 8 cells, got {}", window));
  const int n0 = g.sizes[0];
  const int n1 = g.sizes[1];
  auto label_at = [&](int r, int c) { return static_cast<int>(labels[g.index(wrap(r, n0), wrap(c, n1))]); };
  auto unwrap = [](double d, int n) { return d - n * std::round(d / n); };
  // Smoothed i|j contours, computed once per pair.
  std::map<std::pair<int, int>, std::vector<Segment>> contours;
  auto contour = [&](int i, int j) -> const std::vector<Segment>& {
    const auto key = std::minmax(i, j);
    auto it = contours.find(key);
    if (it == contours.end()) {
      it = contours.emplace(key, interface_length(labels, key.first, key.second, kJunctionSmoothing * g.max_spacing())
                                     .segments).first;
    }
    return it->second;
  };

  // 2x2 stencils holding at least three phases.
  std::vector<char> flagged(g.cells(), 0);
  for (int r = 0; r < n0; ++r)
    for (int c = 0; c < n1; ++c) {
      const int v[4] = {label_at(r, c), label_at(r, c + 1), label_at(r + 1, c), label_at(r + 1, c + 1)};
      int distinct = 1;
      for (int k = 1; k < 4; ++k) {
        bool seen = false;
        for (int l = 0; l < k; ++l) seen = seen || v[l] == v[k];
        if (!seen) ++distinct;
      }
      if (distinct >= 3) flagged[g.index(r, c)] = 1;
    }

  std::vector<JunctionReport> out;
  std::vector<char> visited(g.cells(), 0);
  for (int r = 0; r < n0; ++r) {
    for (int c = 0; c < n1; ++c) {
      if (!flagged[g.index(r, c)] || visited[g.index(r, c)]) continue;
      // Cluster stencils within two cells of each other; positions unwrapped
      // relative to the first member.
      std::vector<std::array<int, 2>> members;
      std::queue<std::array<int, 2>> todo;
      todo.push({r, c});
      visited[g.index(r, c)] = 1;
      while (!todo.empty()) {
        const auto cur = todo.front();
        todo.pop();
        members.push_back(cur);
        for (int a = -2; a <= 2; ++a)
          for (int b = -2; b <= 2; ++b) {
            const int rr = cur[0] + a;
            const int cc = cur[1] + b;
            const std::size_t idx = g.index(wrap(rr, n0), wrap(cc, n1));
            if (!flagged[idx] || visited[idx]) continue;
            visited[idx] = 1;
            todo.push({rr, cc});
          }
      }

      std::vector<int> counts(labels.num_phases, 0);
      double cr = 0.0, cc = 0.0;
      for (const auto& mbr : members) {
        cr += mbr[0] + 1.0;  // stencil center in cell-center units is +1/2 from (r+1/2)
        cc += mbr[1] + 1.0;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) ++counts[label_at(mbr[0] + a, mbr[1] + b)];
      }
      cr /= static_cast<double>(members.size());
      cc /= static_cast<double>(members.size());

      std::vector<int> order(labels.num_phases);
      for (int p = 0; p < labels.num_phases; ++p) order[p] = p;
      std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return counts[x] > counts[y]; });
      if (labels.num_phases < 3 || counts[order[2]] == 0) continue;
      JunctionReport rep;
      rep.phases = {order[0], order[1], order[2]};
      std::sort(rep.phases.begin(), rep.phases.end());
      rep.location = {std::fmod(cr / n0, 1.0), std::fmod(cc / n1, 1.0)};

      bool ok = true;
      std::array<double, 3> ray_angle{};
      for (int k = 0; k < 3 && ok; ++k) {
        const int p = rep.phases[(k + 1) % 3];
        const int q = rep.phases[(k + 2) % 3];
        const auto& segs = contour(p, q);
        // Length-weighted segment midpoints, relative to the junction in cell
        // units (cr, cc have cell (r, c) centered at (r + 1/2, c + 1/2)).
        std::vector<std::array<double, 3>> pts;
        for (const auto& sg : segs) {
          const double mr = 0.5 * (sg.a[0] + sg.b[0]) * n0;
          const double mc = 0.5 * (sg.a[1] + sg.b[1]) * n1;
          const double vr = unwrap(mr - cr, n0);
          const double vc = unwrap(mc - cc, n1);
          const double dist = std::hypot(vr, vc);
          if (dist < kJunctionInnerRadius || dist > window) continue;
          pts.push_back({vr, vc, sg.length() * std::max(n0, n1)});
        }
        if (pts.size() < 3) {
          ok = false;
          break;
        }
        // Total least squares: principal axis of the weighted covariance about
        // the weighted centroid, oriented away from the junction.
        double w = 0.0, mx = 0.0, my = 0.0;
        for (const auto& v : pts) {
          w += v[2];
          mx += v[2] * v[0];
          my += v[2] * v[1];
        }
        mx /= w;
        my /= w;
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (const auto& v : pts) {
          sxx += v[2] * (v[0] - mx) * (v[0] - mx);
          sxy += v[2] * (v[0] - mx) * (v[1] - my);
          syy += v[2] * (v[1] - my) * (v[1] - my);
        }
        const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
        double dx = std::cos(theta), dy = std::sin(theta);
        if (dx * mx + dy * my < 0.0) {
          dx = -dx;
          dy = -dy;
        }
        rep.rays[k] = {dx, dy};
      }
      if (!ok) continue;

      for (int k = 0; k < 3; ++k) ray_angle[k] = std::atan2(rep.rays[k][1], rep.rays[k][0]);

      // Ray k separates the two phases other than phases[k]; the sector
      // between rays k and l belongs to the remaining phase.
      std::array<int, 3> idx{0, 1, 2};
      std::sort(idx.begin(), idx.end(), [&](int x, int y) { return ray_angle[x] < ray_angle[y]; });
      for (int s = 0; s < 3; ++s) {
        const int k = idx[s];
        const int l = idx[(s + 1) % 3];
        double gap = ray_angle[l] - ray_angle[k];
        if (gap <= 0.0) gap += 2.0 * kPi;
        rep.angles[3 - k - l] = gap * 180.0 / kPi;
      }
      out.push_back(rep);
    }
  }
  return out;
}

YoungAngles young_angles(double s12, double s13, double s23) {
  const bool triangle = s12 > 0.0 && s13 > 0.0 && s23 > 0.0 && s12 + s13 > s23 && s12 + s23 > s13 &&
                        s13 + s23 > s12;
  if (!triangle) {
    throw InadmissibleTensions(
        fmt::format("tensions ({}, {}, {}) violate the strict triangle inequality; no equilibrium angles", s12,
                    s13, s23));
  }
  // Interface 12 along angle 0, interface 13 at theta1 (phase 1 in between).
  // |s12 e(0) + s13 e(theta1)| decreases in theta1 on (0, pi); find where it
  // equals s23, then interface 23 points along the negated sum.
  auto resultant = [&](double t) { return std::hypot(s12 + s13 * std::cos(t), s13 * std::sin(t)); };
  double lo = 0.0, hi = kPi;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (resultant(mid) > s23 ? lo : hi) = mid;
  }
  const double theta1 = 0.5 * (lo + hi);
  const double rx = s12 + s13 * std::cos(theta1);
  const double ry = s13 * std::sin(theta1);
  double phi = std::atan2(-ry, -rx);
  if (phi < 0.0) phi += 2.0 * kPi;

  YoungAngles y;
  // Counter-clockwise from interface 12: phase 1, interface 13, phase 3,
  // interface 23, phase 2.
  y.angles = {theta1 * 180.0 / kPi, (2.0 * kPi - phi) * 180.0 / kPi, (phi - theta1) * 180.0 / kPi};
  const double fx = s12 + s13 * std::cos(theta1) + s23 * std::cos(phi);
  const double fy = s13 * std::sin(theta1) + s23 * std::sin(phi);
  y.residual = std::hypot(fx, fy);
  return y;
}

ShrinkFit shrink_rate_fit(std::span<const RadiusSample> samples, double min_radius, int skip) {
  std::vector<double> t, r2;
  for (std::size_t k = static_cast<std::size_t>(std::max(skip, 0)); k < samples.size(); ++k) {
    if (samples[k].radius < min_radius) break;
    t.push_back(samples[k].time);
    r2.push_back(samples[k].radius * samples[k].radius);
  }
  if (t.size() < 10) {
    throw WindowTooShort(fmt::format("only {} samples left in the fit window (need 10)", t.size()));
  }
  const double n = static_cast<double>(t.size());
  double mt = 0.0, mr = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    mt += t[k];
    mr += r2[k];
  }
  mt /= n;
  mr /= n;
  double stt = 0.0, str = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    stt += (t[k] - mt) * (t[k] - mt);
    str += (t[k] - mt) * (r2[k] - mr);
  }
  ShrinkFit fit;
  fit.slope = str / stt;
  fit.intercept = mr - fit.slope * mt;
  double ss = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double e = r2[k] - (fit.intercept + fit.slope * t[k]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / n);
  fit.samples = static_cast<int>(t.size());
  return fit;
}

ShrinkFit shrink_rate_fit(const Trajectory& trajectory, int phase) {
  const GridSpec& g = trajectory.initial.grid;
  check_phase(trajectory.initial, phase);
  std::vector<RadiusSample> samples;
  if (!trajectory.reports.empty()) {
    for (const auto& rep : trajectory.reports) {
      const double vol = static_cast<double>(rep.phase_volumes.at(phase)) * g.cell_volume();
      samples.push_back({rep.time, radius_from_volume(vol, g.dim)});
    }
  } else {
    for (const auto& snap : trajectory.snapshots) {
      if (snap.step == 0) continue;
      const auto count = std::count(snap.labels.labels.begin(), snap.labels.labels.end(),
                                    static_cast<std::uint8_t>(phase));
      samples.push_back({snap.time, radius_from_volume(static_cast<double>(count) * g.cell_volume(), g.dim)});
    }
  }
  return shrink_rate_fit(samples, kShrinkMinRadiusCells * g.max_spacing());
}

}  // namespace mbo
