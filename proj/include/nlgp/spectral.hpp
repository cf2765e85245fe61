#pragma once

// Periodic pseudospectral toolkit on [-L, L): grid, FFT, derivatives,
// Fourier-multiplier convolution and quadrature.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace nlgp {

using Complex = std::complex<double>;
using RealField = std::vector<double>;
using ComplexField = std::vector<Complex>;

class Grid {
 public:
  Grid() = default;

  Grid(double half_length, std::size_t size) : half_length_(half_length), size_(size) {
    if (!(half_length > 0.0) || !std::isfinite(half_length))
      throw std::invalid_argument("grid half-length must be positive");
    if (size < 4 || (size & (size - 1)) != 0)
      throw std::invalid_argument("grid size must be a power of two >= 4");
  }

  double half_length() const { return half_length_; }
  std::size_t size() const { return size_; }
  double spacing() const { return 2.0 * half_length_ / static_cast<double>(size_); }
  double x(std::size_t j) const { return -half_length_ + spacing() * static_cast<double>(j); }

  // Frequency of FFT bin k, with k >= N/2 wrapped to negative values.
  double xi(std::size_t k) const {
    const auto n = static_cast<long long>(size_);
    auto kk = static_cast<long long>(k);
    if (kk >= n / 2) kk -= n;
    return std::numbers::pi * static_cast<double>(kk) / half_length_;
  }

  double xi_step() const { return std::numbers::pi / half_length_; }
  double xi_max() const { return std::numbers::pi * static_cast<double>(size_ / 2) / half_length_; }
  std::size_t nyquist() const { return size_ / 2; }
  std::size_t center() const { return size_ / 2; }

  RealField nodes() const {
    RealField out(size_);
    for (std::size_t j = 0; j < size_; ++j) out[j] = x(j);
    return out;
  }

  // FFT-ordered frequencies.
  RealField frequencies() const {
    RealField out(size_);
    for (std::size_t k = 0; k < size_; ++k) out[k] = xi(k);
    return out;
  }

  Grid refined() const { return Grid(2.0 * half_length_, 2 * size_); }

  bool operator==(const Grid& o) const { return half_length_ == o.half_length_ && size_ == o.size_; }

 private:
  double half_length_ = 1.0;
  std::size_t size_ = 4;
};

// Grid samples tied to their grid; used for serialization.
template <class T>
struct GridFunction {
  Grid grid;
  std::vector<T> values;

  GridFunction() = default;
  GridFunction(Grid g, std::vector<T> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw std::invalid_argument("grid function length mismatch");
  }
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// FFTW planning is not thread-safe, execution on fresh arrays is. Plans are
// created under a global lock and cached per thread.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    auto* in = fftw_alloc_complex(n);
    auto* out = fftw_alloc_complex(n);
    const int ni = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_1d(ni, in, out, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft_1d(ni, in, out, FFTW_BACKWARD, flags);
    fftw_free(in);
    fftw_free(out);
    if (forward_ == nullptr || backward_ == nullptr) throw std::runtime_error("FFTW planning failed");
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void forward(const Complex* in, Complex* out) const {
    fftw_execute_dft(forward_, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }
  void backward(const Complex* in, Complex* out) const {
    fftw_execute_dft(backward_, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }

 private:
  std::size_t n_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

inline const FftPlan& plan_for(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::unique_ptr<FftPlan>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FftPlan>(n);
  return *slot;
}

inline void check_length(const Grid& grid, std::size_t n) {
  if (n != grid.size()) throw std::invalid_argument("field length does not match grid size");
}

}  // namespace detail

// Unnormalized forward DFT: F_k = sum_j f_j e^{-2 pi i jk/N}.
inline ComplexField fft(std::span<const Complex> f) {
  ComplexField out(f.size());
  detail::plan_for(f.size()).forward(f.data(), out.data());
  return out;
}

inline ComplexField fft(std::span<const double> f) {
  ComplexField tmp(f.begin(), f.end());
  return fft(std::span<const Complex>(tmp));
}

// Inverse DFT including the 1/N factor.
inline ComplexField ifft(std::span<const Complex> F) {
  ComplexField out(F.size());
  detail::plan_for(F.size()).backward(F.data(), out.data());
  const double s = 1.0 / static_cast<double>(F.size());
  for (auto& z : out) z *= s;
  return out;
}

inline RealField real_part(std::span<const Complex> z) {
  RealField out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].real();
  return out;
}

// Applies the Fourier multiplier m(xi_k) (FFT order) to a real field.
inline RealField apply_multiplier(const Grid& grid, std::span<const double> multiplier,
                                  std::span<const double> f) {
  detail::check_length(grid, f.size());
  detail::check_length(grid, multiplier.size());
  auto F = fft(f);
  for (std::size_t k = 0; k < F.size(); ++k) F[k] *= multiplier[k];
  return real_part(ifft(F));
}

// Spectral derivative of order k: inverse transform of (i xi)^k f^.
// The Nyquist mode is dropped for odd orders so real data stays real.
inline ComplexField derivative(const Grid& grid, std::span<const Complex> f, int order) {
  detail::check_length(grid, f.size());
  if (order < 0 || order > 4) throw std::invalid_argument("derivative order must be in 0..4");
  auto F = fft(f);
  for (std::size_t k = 0; k < F.size(); ++k) {
    if (order % 2 == 1 && k == grid.nyquist()) {
      F[k] = 0.0;
      continue;
    }
    Complex factor(1.0, 0.0);
    const Complex ik(0.0, grid.xi(k));
    for (int p = 0; p < order; ++p) factor *= ik;
    F[k] *= factor;
  }
  return ifft(F);
}

inline RealField derivative(const Grid& grid, std::span<const double> f, int order) {
  ComplexField tmp(f.begin(), f.end());
  return real_part(derivative(grid, std::span<const Complex>(tmp), order));
}

// Trapezoid rule h * sum f_j, the spectral quadrature on a periodic grid.
inline double integrate(const Grid& grid, std::span<const double> f) {
  detail::check_length(grid, f.size());
  double s = 0.0;
  for (double v : f) s += v;
  return grid.spacing() * s;
}

inline double inner(const Grid& grid, std::span<const double> f, std::span<const double> g) {
  detail::check_length(grid, f.size());
  detail::check_length(grid, g.size());
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) s += f[j] * g[j];
  return grid.spacing() * s;
}

inline double l2_norm(const Grid& grid, std::span<const double> f) { return std::sqrt(inner(grid, f, f)); }

inline double sup_norm(std::span<const double> f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

inline double sup_norm(std::span<const Complex> f) {
  double m = 0.0;
  for (const auto& v : f) m = std::max(m, std::abs(v));
  return m;
}

// Discrete Plancherel pairing (1/2pi) int g(xi)|f^(xi)|^2 d xi = (h/N) sum g_k |F_k|^2.
inline double spectral_quadratic(const Grid& grid, std::span<const double> weight, std::span<const double> f) {
  detail::check_length(grid, weight.size());
  const auto F = fft(f);
  double s = 0.0;
  for (std::size_t k = 0; k < F.size(); ++k) s += weight[k] * std::norm(F[k]);
  return grid.spacing() * s / static_cast<double>(grid.size());
}

struct CumulativeIntegral {
  RealField values;  // int_{-L}^{x_j} f
  double total = 0.0;  // int_{-L}^{L} f
};

// Spectrally accurate running integral from -L: mean part integrated
// exactly, zero-mean part by its periodic antiderivative.
inline CumulativeIntegral cumulative_integral(const Grid& grid, std::span<const double> f) {
  detail::check_length(grid, f.size());
  const std::size_t n = f.size();
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(n);
  auto F = fft(f);
  F[0] = 0.0;
  F[grid.nyquist()] = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    if (k == grid.nyquist()) continue;
    F[k] /= Complex(0.0, grid.xi(k));
  }
  const auto G = real_part(ifft(F));
  CumulativeIntegral out;
  out.values.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.values[j] = mean * (grid.x(j) + grid.half_length()) + G[j] - G[0];
  out.total = mean * 2.0 * grid.half_length();
  return out;
}

// x_j -> -x_j, i.e. j -> (N - j) mod N.
template <class T>
std::vector<T> reflect(std::span<const T> f) {
  const std::size_t n = f.size();
  std::vector<T> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = f[(n - j) % n];
  return out;
}

inline RealField reflect(const RealField& f) { return reflect(std::span<const double>(f)); }

inline void even_project(std::span<double> f) {
  const std::size_t n = f.size();
  for (std::size_t j = 1; j < n / 2; ++j) {
    const double m = 0.5 * (f[j] + f[n - j]);
    f[j] = m;
    f[n - j] = m;
  }
}

template <class T>
std::vector<T> circular_shift(std::span<const T> f, long long shift) {
  const auto n = static_cast<long long>(f.size());
  std::vector<T> out(f.size());
  for (long long j = 0; j < n; ++j) out[static_cast<std::size_t>(((j + shift) % n + n) % n)] = f[static_cast<std::size_t>(j)];
  return out;
}

}  // namespace nlgp
