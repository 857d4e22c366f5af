#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace mbo {

/// 64-byte aligned storage so that every buffer handed to the transform
/// library has the same (SIMD friendly) alignment.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlignment = 64;

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    const std::size_t bytes = ((n * sizeof(T) + kAlignment - 1) / kAlignment) * kAlignment;
    void* p = std::aligned_alloc(kAlignment, bytes == 0 ? kAlignment : bytes);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

using Complex = std::complex<double>;

/// Uniform periodic grid on the unit torus [0,1)^d, d in {2,3}.
/// Storage is row-major: axis 0 varies slowest, the last axis fastest.
/// Samples sit at cell centers (i + 1/2) / n.
struct GridSpec {
  int dim = 2;
  std::array<int, 3> sizes{1, 1, 1};

  /// Throws DimensionError unless 2 <= dim <= 3 and every size >= min_size.
  static GridSpec make(std::span<const int> sizes, int min_size = 2);
  static GridSpec square(int n) { const int s[2] = {n, n}; return make(s); }
  static GridSpec cube(int n) { const int s[3] = {n, n, n}; return make(s); }

  std::size_t cells() const;
  double spacing(int axis) const { return 1.0 / sizes[axis]; }
  double max_spacing() const;
  double cell_volume() const { return 1.0 / static_cast<double>(cells()); }

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * sizes[1] + j; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * sizes[1] + j) * sizes[2] + k;
  }
  /// Index of a (possibly out of range) coordinate, wrapped periodically.
  std::size_t wrapped_index(std::array<int, 3> c) const;
  std::array<int, 3> coords(std::size_t index) const;
  std::array<double, 3> center(std::size_t index) const;

  std::string to_string() const;  // e.g. "512x512"

  bool operator==(const GridSpec&) const = default;
};

/// Smallest per-axis size accepted for simulation grids. The exhaustive
/// oracle works on smaller grids and bypasses this.
inline constexpr int kMinSimulationSize = 8;

/// Largest phase count representable in the one-byte label format.
inline constexpr int kMaxPhases = 256;

/// Discrete partition: one phase index per cell.
struct LabelField {
  GridSpec grid;
  int num_phases = 0;
  std::vector<std::uint8_t> labels;

  LabelField() = default;
  LabelField(const GridSpec& grid, int num_phases, std::uint8_t fill = 0);

  std::size_t size() const { return labels.size(); }
  std::uint8_t operator[](std::size_t i) const { return labels[i]; }
  std::uint8_t& operator[](std::size_t i) { return labels[i]; }

  /// Cell counts per phase.
  std::vector<std::int64_t> volumes() const;
  /// Throws DimensionError / IndexError when the field is inconsistent.
  void check() const;
  /// Periodic translation by a whole number of cells per axis.
  LabelField shifted(std::array<int, 3> offset) const;

  bool operator==(const LabelField&) const = default;
};

/// Real grid function sampled at cell centers.
struct ScalarField {
  GridSpec grid;
  AlignedVector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& grid, double fill = 0.0)
      : grid(grid), values(grid.cells(), fill) {}

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  double mean() const;
  double min() const;
  double max() const;
  ScalarField shifted(std::array<int, 3> offset) const;
};

/// Half-spectrum (real-to-complex layout) discrete Fourier coefficients of
/// a real field, normalized so that the zero mode is the grid mean.
struct SpectralField {
  GridSpec grid;
  AlignedVector<Complex> coeffs;
};

/// Number of stored coefficients in the real-to-complex half spectrum.
std::size_t half_spectrum_size(const GridSpec& grid);

/// A set of same-grid real fields stored contiguously, one per phase. Each
/// phase block is padded to keep 64-byte alignment.
class PhaseStack {
 public:
  PhaseStack() = default;
  PhaseStack(const GridSpec& grid, int phases);

  const GridSpec& grid() const { return grid_; }
  int phases() const { return phases_; }
  std::size_t cells() const { return cells_; }
  std::size_t stride() const { return stride_; }

  double* phase(int p) { return data_.data() + static_cast<std::size_t>(p) * stride_; }
  const double* phase(int p) const { return data_.data() + static_cast<std::size_t>(p) * stride_; }
  std::span<const double> view(int p) const { return {phase(p), cells_}; }

  ScalarField field(int p) const;
  static PhaseStack from_fields(std::span<const ScalarField> fields);

 private:
  GridSpec grid_;
  int phases_ = 0;
  std::size_t cells_ = 0;
  std::size_t stride_ = 0;
  AlignedVector<double> data_;
};

}  // namespace mbo
