#include "mbo/grid.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "mbo/errors.hpp"

namespace mbo {

namespace {

std::size_t round_up(std::size_t n, std::size_t multiple) { return (n + multiple - 1) / multiple * multiple; }

int wrap(int v, int n) {
  const int r = v % n;
  return r < 0 ? r + n : r;
}

}  // namespace

GridSpec GridSpec::make(std::span<const int> sizes, int min_size) {
  if (sizes.size() < 2 || sizes.size() > 3) {
    throw DimensionError(fmt::format("grid.dim: only 2 or 3 dimensions are supported, got {}", sizes.size()));
  }
  GridSpec g;
  g.dim = static_cast<int>(sizes.size());
  for (int a = 0; a < g.dim; ++a) {
    if (sizes[a] < min_size) {
      throw DimensionError(fmt::format("grid.sizes: axis {} has {} cells, need at least {}", a, sizes[a], min_size));
    }
    g.sizes[a] = sizes[a];
  }
  return g;
}

std::size_t GridSpec::cells() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(sizes[a]);
  return n;
}

double GridSpec::max_spacing() const {
  double h = 0.0;
  for (int a = 0; a < dim; ++a) h = std::max(h, spacing(a));
  return h;
}

std::size_t GridSpec::wrapped_index(std::array<int, 3> c) const {
  std::size_t idx = 0;
  for (int a = 0; a < dim; ++a) idx = idx * sizes[a] + wrap(c[a], sizes[a]);
  return idx;
}

std::array<int, 3> GridSpec::coords(std::size_t index) const {
  std::array<int, 3> c{0, 0, 0};
  for (int a = dim - 1; a >= 0; --a) {
    c[a] = static_cast<int>(index % sizes[a]);
    index /= sizes[a];
  }
  return c;
}

std::array<double, 3> GridSpec::center(std::size_t index) const {
  const auto c = coords(index);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) x[a] = (c[a] + 0.5) / sizes[a];
  return x;
}

std::string GridSpec::to_string() const {
  std::string s = std::to_string(sizes[0]);
  for (int a = 1; a < dim; ++a) s += "x" + std::to_string(sizes[a]);
  return s;
}

LabelField::LabelField(const GridSpec& g, int phases, std::uint8_t fill)
    : grid(g), num_phases(phases), labels(g.cells(), fill) {
  if (phases < 1 || phases > kMaxPhases) {
    throw DimensionError(fmt::format("phase count {} outside [1, {}]", phases, kMaxPhases));
  }
}

std::vector<std::int64_t> LabelField::volumes() const {
  std::vector<std::int64_t> v(num_phases, 0);
  for (auto l : labels) ++v[l];
  return v;
}

void LabelField::check() const {
  if (labels.size() != grid.cells()) {
    throw DimensionError(fmt::format("label field has {} cells, grid {} needs {}", labels.size(),
                                     grid.to_string(), grid.cells()));
  }
  for (auto l : labels) {
    if (l >= num_phases) throw IndexError(fmt::format("label {} out of range for {} phases", l, num_phases));
  }
}

LabelField LabelField::shifted(std::array<int, 3> offset) const {
  LabelField out(grid, num_phases);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto c = grid.coords(i);
    for (int a = 0; a < grid.dim; ++a) c[a] += offset[a];
    out.labels[grid.wrapped_index(c)] = labels[i];
  }
  return out;
}

double ScalarField::mean() const {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double ScalarField::min() const { return *std::min_element(values.begin(), values.end()); }
double ScalarField::max() const { return *std::max_element(values.begin(), values.end()); }

ScalarField ScalarField::shifted(std::array<int, 3> offset) const {
  ScalarField out(grid);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto c = grid.coords(i);
    for (int a = 0; a < grid.dim; ++a) c[a] += offset[a];
    out.values[grid.wrapped_index(c)] = values[i];
  }
  return out;
}

std::size_t half_spectrum_size(const GridSpec& grid) {
  std::size_t n = 1;
  for (int a = 0; a < grid.dim - 1; ++a) n *= static_cast<std::size_t>(grid.sizes[a]);
  return n * (static_cast<std::size_t>(grid.sizes[grid.dim - 1]) / 2 + 1);
}

PhaseStack::PhaseStack(const GridSpec& grid, int phases)
    : grid_(grid),
      phases_(phases),
      cells_(grid.cells()),
      stride_(round_up(grid.cells(), AlignedAllocator<double>::kAlignment / sizeof(double))),
      data_(stride_ * static_cast<std::size_t>(phases), 0.0) {}

ScalarField PhaseStack::field(int p) const {
  ScalarField f(grid_);
  std::copy_n(phase(p), cells_, f.values.begin());
  return f;
}

PhaseStack PhaseStack::from_fields(std::span<const ScalarField> fields) {
  if (fields.empty()) throw DimensionError("empty field list");
  PhaseStack stack(fields.front().grid, static_cast<int>(fields.size()));
  for (std::size_t p = 0; p < fields.size(); ++p) {
    if (!(fields[p].grid == stack.grid_) || fields[p].size() != stack.cells_) {
      throw DimensionError("phase fields live on different grids");
    }
    std::copy(fields[p].values.begin(), fields[p].values.end(), stack.phase(static_cast<int>(p)));
  }
  return stack;
}

}  // namespace mbo
