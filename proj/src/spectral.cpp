#include "mbo/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <fftw3.h>
#include <fmt/format.h>
#include <omp.h>

#include "mbo/errors.hpp"

namespace mbo {

namespace detail {

// FFTW planning is not thread-safe; execution through the new-array
// interface is. Plans are created once per grid under this mutex and kept for
// the lifetime of the process. FFTW_ESTIMATE keeps the chosen algorithm, and
// therefore every output bit, independent of timing.
struct PlanSet {
  fftw_plan forward_aligned = nullptr;
  fftw_plan inverse_aligned = nullptr;
  fftw_plan forward_unaligned = nullptr;
  fftw_plan inverse_unaligned = nullptr;

  ~PlanSet() {
    for (fftw_plan p : {forward_aligned, inverse_aligned, forward_unaligned, inverse_unaligned}) {
      if (p) fftw_destroy_plan(p);
    }
  }
};

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::shared_ptr<const PlanSet> plans_for(const GridSpec& grid) {
  static std::map<std::array<int, 4>, std::shared_ptr<const PlanSet>> cache;
  const std::array<int, 4> key{grid.dim, grid.sizes[0], grid.sizes[1], grid.sizes[2]};

  std::lock_guard lock(planner_mutex());
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const std::size_t cells = grid.cells();
  const std::size_t spectrum = half_spectrum_size(grid);
  double* real = fftw_alloc_real(cells);
  fftw_complex* cplx = fftw_alloc_complex(spectrum);
  const int* n = grid.sizes.data();

  auto set = std::make_shared<PlanSet>();
  const unsigned base = FFTW_ESTIMATE;
  set->forward_aligned = fftw_plan_dft_r2c(grid.dim, n, real, cplx, base | FFTW_PRESERVE_INPUT);
  set->inverse_aligned = fftw_plan_dft_c2r(grid.dim, n, cplx, real, base | FFTW_DESTROY_INPUT);
  set->forward_unaligned =
      fftw_plan_dft_r2c(grid.dim, n, real, cplx, base | FFTW_PRESERVE_INPUT | FFTW_UNALIGNED);
  set->inverse_unaligned =
      fftw_plan_dft_c2r(grid.dim, n, cplx, real, base | FFTW_DESTROY_INPUT | FFTW_UNALIGNED);
  fftw_free(real);
  fftw_free(cplx);
  if (!set->forward_aligned || !set->inverse_aligned || !set->forward_unaligned || !set->inverse_unaligned) {
    throw DimensionError("could not create transform plans for grid " + grid.to_string());
  }
  cache.emplace(key, set);
  return set;
}

bool aligned(const void* a, const void* b) {
  return fftw_alignment_of(const_cast<double*>(static_cast<const double*>(a))) == 0 &&
         fftw_alignment_of(const_cast<double*>(static_cast<const double*>(b))) == 0;
}

}  // namespace
}  // namespace detail

FourierTransform::FourierTransform(const GridSpec& grid)
    : grid_(grid), spectrum_size_(half_spectrum_size(grid)), plans_(detail::plans_for(grid)) {
  k2_.resize(spectrum_size_);
  weights_.resize(spectrum_size_);
  const int last = grid.dim - 1;
  const int n_last = grid.sizes[last];
  const int half = n_last / 2 + 1;
  const double four_pi2 = 4.0 * std::numbers::pi * std::numbers::pi;

  std::array<int, 3> c{0, 0, 0};
  for (std::size_t idx = 0; idx < spectrum_size_; ++idx) {
    std::size_t rem = idx;
    c[last] = static_cast<int>(rem % half);
    rem /= half;
    for (int a = last - 1; a >= 0; --a) {
      c[a] = static_cast<int>(rem % grid.sizes[a]);
      rem /= grid.sizes[a];
    }
    double k2 = 0.0;
    for (int a = 0; a < grid.dim; ++a) {
      const int n = grid.sizes[a];
      const int k = c[a] <= n / 2 ? c[a] : c[a] - n;
      k2 += static_cast<double>(k) * k;
    }
    k2_[idx] = four_pi2 * k2;
    const bool self_conjugate = c[last] == 0 || (n_last % 2 == 0 && c[last] == n_last / 2);
    weights_[idx] = self_conjugate ? 1.0 : 2.0;
  }
}

void FourierTransform::forward(const double* in, Complex* out) const {
  auto* o = reinterpret_cast<fftw_complex*>(out);
  auto* i = const_cast<double*>(in);
  fftw_execute_dft_r2c(detail::aligned(in, out) ? plans_->forward_aligned : plans_->forward_unaligned, i, o);
  const double scale = 1.0 / static_cast<double>(grid_.cells());
  for (std::size_t k = 0; k < spectrum_size_; ++k) out[k] *= scale;
}

void FourierTransform::inverse(Complex* in, double* out) const {
  auto* i = reinterpret_cast<fftw_complex*>(in);
  fftw_execute_dft_c2r(detail::aligned(in, out) ? plans_->inverse_aligned : plans_->inverse_unaligned, i, out);
}

SpectralField FourierTransform::forward(const ScalarField& f) const {
  if (!(f.grid == grid_)) throw DimensionError("field grid does not match transform grid");
  SpectralField s{grid_, AlignedVector<Complex>(spectrum_size_)};
  forward(f.values.data(), s.coeffs.data());
  return s;
}

ScalarField FourierTransform::inverse(SpectralField s) const {
  if (!(s.grid == grid_) || s.coeffs.size() != spectrum_size_) {
    throw DimensionError("spectrum does not match transform grid");
  }
  ScalarField f(grid_);
  inverse(s.coeffs.data(), f.values.data());
  return f;
}

double FourierTransform::inner_product(const Complex* f, const Complex* g) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < spectrum_size_; ++k) {
    sum += weights_[k] * (f[k].real() * g[k].real() + f[k].imag() * g[k].imag());
  }
  return sum;
}

ScalarField indicator(const LabelField& field, int phase) {
  if (phase < 0 || phase >= field.num_phases) {
    throw IndexError(fmt::format("phase {} out of range for {} phases", phase, field.num_phases));
  }
  ScalarField f(field.grid);
  for (std::size_t i = 0; i < field.size(); ++i) f.values[i] = field.labels[i] == phase ? 1.0 : 0.0;
  return f;
}

std::vector<ScalarField> indicators(const LabelField& field) {
  std::vector<ScalarField> out;
  out.reserve(field.num_phases);
  for (int p = 0; p < field.num_phases; ++p) out.push_back(indicator(field, p));
  return out;
}

ScalarField gaussian_convolve(const ScalarField& f, double t) {
  if (!(t > 0.0)) throw NonpositiveTimeError(fmt::format("convolution time must be positive, got {}", t));
  const FourierTransform ft(f.grid);
  SpectralField s = ft.forward(f);
  const auto k2 = ft.squared_wavenumbers();
  for (std::size_t k = 0; k < s.coeffs.size(); ++k) s.coeffs[k] *= heat_multiplier(t, k2[k]);
  return ft.inverse(std::move(s));
}

namespace {

void check_phase_fields(std::span<const ScalarField> fields, const KernelCoefficients& coeffs, double h,
                        int phase) {
  if (!(h > 0.0)) throw NonpositiveTimeError(fmt::format("time step must be positive, got {}", h));
  if (fields.empty() || static_cast<int>(fields.size()) != coeffs.num_phases()) {
    throw DimensionError(fmt::format("expected {} phase fields, got {}", coeffs.num_phases(), fields.size()));
  }
  if (phase < 0 || phase >= coeffs.num_phases()) throw IndexError(fmt::format("phase {} out of range", phase));
  const std::size_t cells = fields.front().size();
  for (const auto& f : fields) {
    if (!(f.grid == fields.front().grid)) throw DimensionError("phase fields live on different grids");
  }
  for (std::size_t x = 0; x < cells; ++x) {
    double sum = 0.0;
    for (const auto& f : fields) sum += f.values[x];
    if (std::abs(sum - 1.0) > 1e-9) {
      throw DomainError(fmt::format("phase fields do not sum to one at cell {} (sum={})", x, sum));
    }
  }
}

}  // namespace

ScalarField weighted_kernel_convolve(std::span<const ScalarField> fields, const KernelCoefficients& coeffs,
                                     double h, int phase) {
  check_phase_fields(fields, coeffs, h, phase);
  ScalarField psi(fields.front().grid, 0.0);
  for (int j = 0; j < coeffs.num_phases(); ++j) {
    if (j == phase) continue;
    const ScalarField wide = gaussian_convolve(fields[j], coeffs.gamma * h);
    const ScalarField narrow = gaussian_convolve(fields[j], coeffs.beta * h);
    const double a = coeffs.a(phase, j);
    const double b = coeffs.b(phase, j);
    for (std::size_t x = 0; x < psi.size(); ++x) psi.values[x] += a * wide.values[x] + b * narrow.values[x];
  }
  return psi;
}

ScalarField combined_kernel_convolve(std::span<const ScalarField> fields, const KernelCoefficients& coeffs,
                                     double h, int phase) {
  check_phase_fields(fields, coeffs, h, phase);
  const FourierTransform ft(fields.front().grid);
  const auto k2 = ft.squared_wavenumbers();
  SpectralField acc{ft.grid(), AlignedVector<Complex>(ft.spectrum_size(), Complex{})};
  for (int j = 0; j < coeffs.num_phases(); ++j) {
    if (j == phase) continue;
    const SpectralField s = ft.forward(fields[j]);
    const double a = coeffs.a(phase, j);
    const double b = coeffs.b(phase, j);
    for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
      const double m = a * heat_multiplier(coeffs.gamma * h, k2[k]) + b * heat_multiplier(coeffs.beta * h, k2[k]);
      acc.coeffs[k] += m * s.coeffs[k];
    }
  }
  return ft.inverse(std::move(acc));
}

Resolution check_resolution(const GridSpec& grid, double beta, double h) {
  if (!(h > 0.0)) throw NonpositiveTimeError(fmt::format("time step must be positive, got {}", h));
  const double width = std::sqrt(beta * h);
  const double dx = grid.max_spacing();
  if (width < 0.5 * dx) {
    throw ResolutionError(fmt::format(
        "narrow kernel width sqrt(beta*h)={:.4g} is below half a cell ({:.4g}); increase h or refine the grid",
        width, dx));
  }
  return width < 2.0 * dx ? Resolution::UnderResolved : Resolution::Resolved;
}

TwoScaleConvolver::TwoScaleConvolver(const GridSpec& grid)
    : transform_(grid), spectrum_stride_((transform_.spectrum_size() + 3) / 4 * 4) {
  reserve(0);
}

void TwoScaleConvolver::reserve(int phases) {
  const auto threads = static_cast<std::size_t>(omp_get_max_threads());
  if (scratch_.size() < threads) scratch_.resize(threads);
  if (real_scratch_.size() < threads) real_scratch_.resize(threads);
  phases_ = phases;
  const std::size_t needed = spectrum_stride_ * static_cast<std::size_t>(phases);
  if (spectra_.size() < needed) spectra_.resize(needed);
}

void TwoScaleConvolver::load_indicators(const LabelField& labels) {
  if (!(labels.grid == transform_.grid())) throw DimensionError("label grid does not match convolver grid");
  reserve(labels.num_phases);
  const std::size_t cells = labels.size();
  const std::uint8_t* lab = labels.labels.data();
#pragma omp parallel for schedule(dynamic, 1)
  for (int p = 0; p < phases_; ++p) {
    auto& buf = real_scratch_[omp_get_thread_num()];
    if (buf.size() < cells) buf.resize(cells);
    for (std::size_t x = 0; x < cells; ++x) buf[x] = lab[x] == p ? 1.0 : 0.0;
    transform_.forward(buf.data(), spectrum_mut(p));
  }
}

void TwoScaleConvolver::load_fields(const PhaseStack& fields) {
  if (!(fields.grid() == transform_.grid())) throw DimensionError("field grid does not match convolver grid");
  reserve(fields.phases());
#pragma omp parallel for schedule(dynamic, 1)
  for (int p = 0; p < phases_; ++p) transform_.forward(fields.phase(p), spectrum_mut(p));
}

void TwoScaleConvolver::convolve(double t_wide, double t_narrow, PhaseStack& wide, PhaseStack& narrow) {
  if (!(t_wide > 0.0) || !(t_narrow > 0.0)) throw NonpositiveTimeError("convolution times must be positive");
  if (wide.phases() != phases_ || narrow.phases() != phases_ || !(wide.grid() == transform_.grid()) ||
      !(narrow.grid() == transform_.grid())) {
    throw DimensionError("output stacks do not match the loaded spectra");
  }
  reserve(phases_);
  const std::size_t ns = transform_.spectrum_size();
  const auto k2 = transform_.squared_wavenumbers();
  std::vector<double> m_wide(ns), m_narrow(ns);
  for (std::size_t k = 0; k < ns; ++k) {
    m_wide[k] = heat_multiplier(t_wide, k2[k]);
    m_narrow[k] = heat_multiplier(t_narrow, k2[k]);
  }

  const int tasks = 2 * phases_;
#pragma omp parallel for schedule(dynamic, 1)
  for (int task = 0; task < tasks; ++task) {
    const int p = task / 2;
    const bool is_wide = task % 2 == 0;
    auto& buf = scratch_[omp_get_thread_num()];
    if (buf.size() < ns) buf.resize(ns);
    const Complex* src = spectrum(p);
    const double* m = is_wide ? m_wide.data() : m_narrow.data();
    for (std::size_t k = 0; k < ns; ++k) buf[k] = src[k] * m[k];
    transform_.inverse(buf.data(), is_wide ? wide.phase(p) : narrow.phase(p));
  }
}

void combine_comparison(const KernelCoefficients& coeffs, const PhaseStack& wide, const PhaseStack& narrow,
                        PhaseStack& psi) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ConstMap = Eigen::Map<const RowMajor, 0, Eigen::OuterStride<>>;
  using MutMap = Eigen::Map<RowMajor, 0, Eigen::OuterStride<>>;

  const int n = coeffs.num_phases();
  if (wide.phases() != n || narrow.phases() != n || psi.phases() != n) {
    throw DimensionError("phase stacks do not match coefficient size");
  }
  const RowMajor a = coeffs.a;
  const RowMajor b = coeffs.b;
  const std::size_t cells = wide.cells();
  const Eigen::Index stride = static_cast<Eigen::Index>(wide.stride());
  // Fixed block boundaries keep the per-cell arithmetic independent of the
  // thread count.
  constexpr std::size_t kBlock = 2048;
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((cells + kBlock - 1) / kBlock);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t begin = static_cast<std::size_t>(blk) * kBlock;
    const Eigen::Index len = static_cast<Eigen::Index>(std::min(kBlock, cells - begin));
    ConstMap w(wide.phase(0) + begin, n, len, Eigen::OuterStride<>(stride));
    ConstMap nw(narrow.phase(0) + begin, n, len, Eigen::OuterStride<>(stride));
    MutMap out(psi.phase(0) + begin, n, len, Eigen::OuterStride<>(stride));
    out.noalias() = a * w;
    out.noalias() += b * nw;
  }
}

}  // namespace mbo
