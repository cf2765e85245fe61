#pragma once

// Interaction kernels defined by their Fourier symbol W^(xi), with the
// hypothesis checks, dispersion and multiplier tools built on top of them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "nlgp/errors.hpp"
#include "nlgp/spectral.hpp"

namespace nlgp {

namespace kind {
struct Delta {};
struct ExpRepulsive {
  double alpha, beta;
};
struct ShiftedDeltas {
  double lambda;
};
struct Gaussian {
  double lambda;
};
struct SoftCore {
  double lambda;
};
struct BochnerRiesz {
  double kappa;
};
struct Berloff {
  double a, b, lambda;
};
struct MeasureCombo {
  std::vector<double> weights, shifts;
};
struct Tabulated {
  std::shared_ptr<const std::vector<double>> xi, values;
};
}  // namespace kind

// (||mu+||, ||mu-||, A) for W = A(delta_0 + mu).
struct MeasureDecomposition {
  double mu_plus = 0.0;
  double mu_minus = 0.0;
  double amplitude = 1.0;
};

namespace detail {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0 + x * x * x * x / 120.0;
  return std::sin(x) / x;
}

inline Complex sinc(Complex z) {
  if (std::abs(z) < 1e-4) return 1.0 - z * z / 6.0 + z * z * z * z / 120.0;
  return std::sin(z) / z;
}

// d/dx sin(x)/x
inline double sinc_deriv(double x) {
  if (std::abs(x) < 1e-4) return -x / 3.0 + x * x * x / 30.0;
  return (x * std::cos(x) - std::sin(x)) / (x * x);
}
}  // namespace detail

class PotentialSpec {
 public:
  using Variant = std::variant<kind::Delta, kind::ExpRepulsive, kind::ShiftedDeltas, kind::Gaussian, kind::SoftCore,
                               kind::BochnerRiesz, kind::Berloff, kind::MeasureCombo, kind::Tabulated>;

  PotentialSpec() : v_(kind::Delta{}) {}

  static PotentialSpec delta() { return PotentialSpec(kind::Delta{}); }

  static PotentialSpec exp_repulsive(double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 2.0 * alpha)) throw std::invalid_argument("exp_repulsive needs beta > 2 alpha > 0");
    return PotentialSpec(kind::ExpRepulsive{alpha, beta});
  }

  static PotentialSpec shifted_deltas(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("shifted_deltas needs lambda > 0");
    return PotentialSpec(kind::ShiftedDeltas{lambda});
  }

  static PotentialSpec gaussian(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("gaussian needs lambda > 0");
    return PotentialSpec(kind::Gaussian{lambda});
  }

  static PotentialSpec soft_core(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("soft_core needs lambda > 0");
    return PotentialSpec(kind::SoftCore{lambda});
  }

  static PotentialSpec bochner_riesz(double kappa) {
    if (!(kappa > 0.0)) throw std::invalid_argument("bochner_riesz needs kappa > 0");
    return PotentialSpec(kind::BochnerRiesz{kappa});
  }

  static PotentialSpec berloff(double a, double b, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("berloff needs lambda > 0");
    return PotentialSpec(kind::Berloff{a, b, lambda});
  }

  // W = A(delta_0 + sum_j w_j (delta_{s_j} + delta_{-s_j})/2), A = 1/(1 + sum w_j).
  static PotentialSpec measure_combo(std::vector<double> weights, std::vector<double> shifts) {
    if (weights.size() != shifts.size()) throw std::invalid_argument("measure_combo weights/shifts length mismatch");
    double total = 1.0, neg = 0.0;
    for (double w : weights) {
      total += w;
      if (w < 0) neg -= w;
    }
    if (!(neg < 1.0)) throw std::invalid_argument("measure_combo needs ||mu-|| < 1");
    if (!(total > 0.0)) throw std::invalid_argument("measure_combo needs 1 + mu^(0) > 0");
    return PotentialSpec(kind::MeasureCombo{std::move(weights), std::move(shifts)});
  }

  // Samples on xi >= 0, strictly increasing from xi = 0; extended evenly.
  static PotentialSpec tabulated(std::vector<double> xi, std::vector<double> values) {
    if (xi.size() != values.size() || xi.size() < 2) throw std::invalid_argument("tabulated symbol needs >= 2 samples");
    if (xi.front() != 0.0) throw std::invalid_argument("tabulated symbol must start at xi = 0");
    for (std::size_t i = 1; i < xi.size(); ++i)
      if (!(xi[i] > xi[i - 1])) throw std::invalid_argument("tabulated xi must be strictly increasing");
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument("tabulated symbol must be finite");
    return PotentialSpec(kind::Tabulated{std::make_shared<const std::vector<double>>(std::move(xi)),
                                         std::make_shared<const std::vector<double>>(std::move(values))});
  }

  static PotentialSpec tabulated_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open symbol table '" + path + "'");
    std::vector<double> xi, w;
    std::string line;
    while (std::getline(in, line)) {
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      double a, b;
      if (ss >> a >> b) {
        xi.push_back(a);
        w.push_back(b);
      }
    }
    return tabulated(std::move(xi), std::move(w));
  }

  const Variant& variant() const { return v_; }

  std::string name() const {
    return std::visit(detail::overloaded{
                          [](const kind::Delta&) { return std::string("delta"); },
                          [](const kind::ExpRepulsive&) { return std::string("exp_repulsive"); },
                          [](const kind::ShiftedDeltas&) { return std::string("shifted_deltas"); },
                          [](const kind::Gaussian&) { return std::string("gaussian"); },
                          [](const kind::SoftCore&) { return std::string("soft_core"); },
                          [](const kind::BochnerRiesz&) { return std::string("bochner_riesz"); },
                          [](const kind::Berloff&) { return std::string("berloff"); },
                          [](const kind::MeasureCombo&) { return std::string("measure_combo"); },
                          [](const kind::Tabulated&) { return std::string("tabulated"); },
                      },
                      v_);
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(6);
    os << name();
    std::visit(detail::overloaded{
                   [](const kind::Delta&) {},
                   [&](const kind::ExpRepulsive& k) { os << "(alpha=" << k.alpha << ", beta=" << k.beta << ")"; },
                   [&](const kind::ShiftedDeltas& k) { os << "(lambda=" << k.lambda << ")"; },
                   [&](const kind::Gaussian& k) { os << "(lambda=" << k.lambda << ")"; },
                   [&](const kind::SoftCore& k) { os << "(lambda=" << k.lambda << ")"; },
                   [&](const kind::BochnerRiesz& k) { os << "(kappa=" << k.kappa << ")"; },
                   [&](const kind::Berloff& k) { os << "(a=" << k.a << ", b=" << k.b << ", lambda=" << k.lambda << ")"; },
                   [&](const kind::MeasureCombo& k) { os << "(" << k.weights.size() << " atoms)"; },
                   [&](const kind::Tabulated& k) { os << "(" << k.xi->size() << " samples)"; },
               },
               v_);
    return os.str();
  }

  double symbol(double xi) const {
    return std::visit(detail::overloaded{
                          [](const kind::Delta&) { return 1.0; },
                          [&](const kind::ExpRepulsive& k) {
                            const double A = k.beta / (k.beta - 2.0 * k.alpha);
                            return A * (1.0 - 2.0 * k.alpha * k.beta / (xi * xi + k.beta * k.beta));
                          },
                          [&](const kind::ShiftedDeltas& k) { return 2.0 - std::cos(k.lambda * xi); },
                          [&](const kind::Gaussian& k) { return std::exp(-k.lambda * xi * xi); },
                          [&](const kind::SoftCore& k) { return detail::sinc(k.lambda * xi); },
                          [&](const kind::BochnerRiesz& k) { return std::max(0.0, 1.0 - k.kappa * xi * xi); },
                          [&](const kind::Berloff& k) {
                            const double x2 = xi * xi;
                            return (1.0 + k.a * x2 + k.b * x2 * x2) * std::exp(-k.lambda * x2);
                          },
                          [&](const kind::MeasureCombo& k) {
                            double s = 1.0, tot = 1.0;
                            for (std::size_t j = 0; j < k.weights.size(); ++j) {
                              s += k.weights[j] * std::cos(k.shifts[j] * xi);
                              tot += k.weights[j];
                            }
                            return s / tot;
                          },
                          [&](const kind::Tabulated& k) { return table_value(k, std::abs(xi)); },
                      },
                      v_);
  }

  double symbol_deriv(double xi) const {
    return std::visit(
        detail::overloaded{
            [](const kind::Delta&) { return 0.0; },
            [&](const kind::ExpRepulsive& k) {
              const double A = k.beta / (k.beta - 2.0 * k.alpha);
              const double d = xi * xi + k.beta * k.beta;
              return A * 4.0 * k.alpha * k.beta * xi / (d * d);
            },
            [&](const kind::ShiftedDeltas& k) { return k.lambda * std::sin(k.lambda * xi); },
            [&](const kind::Gaussian& k) { return -2.0 * k.lambda * xi * std::exp(-k.lambda * xi * xi); },
            [&](const kind::SoftCore& k) { return k.lambda * detail::sinc_deriv(k.lambda * xi); },
            [&](const kind::BochnerRiesz& k) { return std::abs(xi) * std::sqrt(k.kappa) < 1.0 ? -2.0 * k.kappa * xi : 0.0; },
            [&](const kind::Berloff& k) {
              const double x2 = xi * xi;
              const double p = 1.0 + k.a * x2 + k.b * x2 * x2;
              const double dp = 2.0 * k.a * xi + 4.0 * k.b * x2 * xi;
              return (dp - 2.0 * k.lambda * xi * p) * std::exp(-k.lambda * x2);
            },
            [&](const kind::MeasureCombo& k) {
              double s = 0.0, tot = 1.0;
              for (std::size_t j = 0; j < k.weights.size(); ++j) {
                s -= k.weights[j] * k.shifts[j] * std::sin(k.shifts[j] * xi);
                tot += k.weights[j];
              }
              return s / tot;
            },
            [&](const kind::Tabulated& k) {
              const double sgn = xi < 0 ? -1.0 : 1.0;
              return sgn * table_deriv(k, std::abs(xi));
            },
        },
        v_);
  }

  // Analytic continuation of the symbol, for kinds where it exists.
  std::optional<Complex> symbol_complex(Complex z) const {
    return std::visit(detail::overloaded{
                          [](const kind::Delta&) -> std::optional<Complex> { return Complex(1.0); },
                          [&](const kind::ExpRepulsive& k) -> std::optional<Complex> {
                            const double A = k.beta / (k.beta - 2.0 * k.alpha);
                            return A * (1.0 - 2.0 * k.alpha * k.beta / (z * z + k.beta * k.beta));
                          },
                          [&](const kind::ShiftedDeltas& k) -> std::optional<Complex> { return 2.0 - std::cos(k.lambda * z); },
                          [&](const kind::Gaussian& k) -> std::optional<Complex> { return std::exp(-k.lambda * z * z); },
                          [&](const kind::SoftCore& k) -> std::optional<Complex> { return detail::sinc(k.lambda * z); },
                          [](const kind::BochnerRiesz&) -> std::optional<Complex> { return std::nullopt; },
                          [&](const kind::Berloff& k) -> std::optional<Complex> {
                            const Complex z2 = z * z;
                            return (1.0 + k.a * z2 + k.b * z2 * z2) * std::exp(-k.lambda * z2);
                          },
                          [&](const kind::MeasureCombo& k) -> std::optional<Complex> {
                            Complex s = 1.0;
                            double tot = 1.0;
                            for (std::size_t j = 0; j < k.weights.size(); ++j) {
                              s += k.weights[j] * std::cos(k.shifts[j] * z);
                              tot += k.weights[j];
                            }
                            return s / tot;
                          },
                          [](const kind::Tabulated&) -> std::optional<Complex> { return std::nullopt; },
                      },
                      v_);
  }

  bool is_analytic() const { return symbol_complex(Complex(0.0)).has_value(); }

  // W^''(0): closed forms where available, finite differences otherwise.
  double second_derivative_at_zero() const {
    return std::visit(detail::overloaded{
                          [](const kind::Delta&) { return 0.0; },
                          [](const kind::ExpRepulsive& k) {
                            return 4.0 * k.alpha / (k.beta * k.beta * (k.beta - 2.0 * k.alpha));
                          },
                          [](const kind::ShiftedDeltas& k) { return k.lambda * k.lambda; },
                          [](const kind::Gaussian& k) { return -2.0 * k.lambda; },
                          [](const kind::SoftCore& k) { return -k.lambda * k.lambda / 3.0; },
                          [](const kind::BochnerRiesz& k) { return -2.0 * k.kappa; },
                          [](const kind::Berloff& k) { return 2.0 * k.a - 2.0 * k.lambda; },
                          [](const kind::MeasureCombo& k) {
                            double s = 0.0, tot = 1.0;
                            for (std::size_t j = 0; j < k.weights.size(); ++j) {
                              s -= k.weights[j] * k.shifts[j] * k.shifts[j];
                              tot += k.weights[j];
                            }
                            return s / tot;
                          },
                          [&](const kind::Tabulated& k) {
                            const double d = (*k.xi)[1];
                            return 2.0 * (table_value(k, d) - table_value(k, 0.0)) / (d * d);
                          },
                      },
                      v_);
  }

  std::optional<MeasureDecomposition> measure_decomposition() const {
    return std::visit(detail::overloaded{
                          [](const kind::Delta&) -> std::optional<MeasureDecomposition> {
                            return MeasureDecomposition{0.0, 0.0, 1.0};
                          },
                          [](const kind::ExpRepulsive& k) -> std::optional<MeasureDecomposition> {
                            return MeasureDecomposition{0.0, 2.0 * k.alpha / k.beta, k.beta / (k.beta - 2.0 * k.alpha)};
                          },
                          [](const kind::ShiftedDeltas&) -> std::optional<MeasureDecomposition> {
                            return MeasureDecomposition{0.0, 0.5, 2.0};
                          },
                          [](const kind::MeasureCombo& k) -> std::optional<MeasureDecomposition> {
                            MeasureDecomposition d;
                            double tot = 1.0;
                            for (double w : k.weights) {
                              (w >= 0 ? d.mu_plus : d.mu_minus) += std::abs(w);
                              tot += w;
                            }
                            d.amplitude = 1.0 / tot;
                            return d;
                          },
                          [](const auto&) -> std::optional<MeasureDecomposition> { return std::nullopt; },
                      },
                      v_);
  }

  // Total-variation norm ||W|| when W is a known finite measure.
  std::optional<double> total_variation() const {
    return std::visit(detail::overloaded{
                          [](const kind::Gaussian&) -> std::optional<double> { return 1.0; },
                          [](const kind::SoftCore&) -> std::optional<double> { return 1.0; },
                          [&](const auto&) -> std::optional<double> {
                            if (auto d = measure_decomposition()) return d->amplitude * (1.0 + d->mu_plus + d->mu_minus);
                            return std::nullopt;
                          },
                      },
                      v_);
  }

  // ||W^||_inf: exact for the closed-form kinds, sampled otherwise.
  double symbol_sup() const {
    return std::visit(detail::overloaded{
                          [](const kind::Delta&) { return 1.0; },
                          [](const kind::ExpRepulsive& k) { return k.beta / (k.beta - 2.0 * k.alpha); },
                          [](const kind::ShiftedDeltas&) { return 3.0; },
                          [](const kind::Gaussian&) { return 1.0; },
                          [](const kind::SoftCore&) { return 1.0; },
                          [](const kind::BochnerRiesz&) { return 1.0; },
                          [&](const kind::MeasureCombo&) { return *total_variation(); },
                          [&](const kind::Tabulated& k) {
                            double m = 0.0;
                            for (double v : *k.values) m = std::max(m, std::abs(v));
                            return m;
                          },
                          [&](const kind::Berloff&) {
                            double m = 0.0;
                            for (int i = 0; i <= 200000; ++i) m = std::max(m, std::abs(symbol(i * 1e-4)));
                            return m;
                          },
                      },
                      v_);
  }

  // Largest xi with a valid symbol value (infinite except for tables).
  double symbol_range() const {
    if (const auto* t = std::get_if<kind::Tabulated>(&v_)) return t->xi->back();
    return std::numeric_limits<double>::infinity();
  }

 private:
  explicit PotentialSpec(Variant v) : v_(std::move(v)) {}

  static double table_value(const kind::Tabulated& k, double x) {
    const auto& xs = *k.xi;
    const auto& ws = *k.values;
    if (x > xs.back() * (1.0 + 1e-14)) throw OutOfRangeError("tabulated symbol queried outside sample range");
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.end()) return ws.back();
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return (1.0 - t) * ws[i - 1] + t * ws[i];
  }

  static double table_deriv(const kind::Tabulated& k, double x) {
    const auto& xs = *k.xi;
    if (x > xs.back() * (1.0 + 1e-14)) throw OutOfRangeError("tabulated symbol queried outside sample range");
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t i = std::min<std::size_t>(std::max<std::size_t>(static_cast<std::size_t>(it - xs.begin()), 1), xs.size() - 1);
    const double d = xs[i] - xs[i - 1];
    const double lo = std::max(0.0, x - d), hi = std::min(xs.back(), x + d);
    if (x - d < 0.0) return (table_value(k, hi) - table_value(k, d - x)) / (hi - (x - d));  // even reflection
    return (table_value(k, hi) - table_value(k, lo)) / (hi - lo);
  }

  Variant v_;
};

inline double symbol(const PotentialSpec& spec, double xi) { return spec.symbol(xi); }

inline double sound_speed(const PotentialSpec& spec) {
  const double w0 = spec.symbol(0.0);
  if (!(w0 > 0.0)) throw NoSoundSpeedError("W^(0) <= 0: no speed of sound");
  return std::sqrt(2.0 * w0);
}

inline double mc_symbol(const PotentialSpec& spec, double c, double xi) { return xi * xi + 2.0 * spec.symbol(xi) - c * c; }

inline double dispersion_radicand(const PotentialSpec& spec, double xi) {
  return xi * xi * xi * xi + 2.0 * spec.symbol(xi) * xi * xi;
}

struct DispersionValue {
  double value = 0.0;
  bool imaginary = false;  // radicand < 0; value holds sqrt|radicand|
};

inline DispersionValue dispersion(const PotentialSpec& spec, double xi) {
  const double r = dispersion_radicand(spec, xi);
  return {std::sqrt(std::abs(r)), r < 0.0};
}

// Default certification lattice: 8192 points on [0, 8c*] and a logarithmic
// tail to 10^3 c*. Sampled checks cannot prove a.e. statements.
inline std::vector<double> certification_lattice(const PotentialSpec& spec, std::size_t n_core = 8192,
                                                 std::size_t n_tail = 512) {
  double cs = std::sqrt(2.0);
  try {
    cs = sound_speed(spec);
  } catch (const NoSoundSpeedError&) {
  }
  const double top = std::min(8.0 * cs, spec.symbol_range());
  const double far = std::min(1e3 * cs, spec.symbol_range());
  std::vector<double> xi;
  xi.reserve(n_core + n_tail);
  for (std::size_t i = 0; i < n_core; ++i) xi.push_back(top * static_cast<double>(i) / static_cast<double>(n_core - 1));
  if (far > top) {
    const double r = std::log(far / top);
    for (std::size_t i = 1; i <= n_tail; ++i) xi.push_back(top * std::exp(r * static_cast<double>(i) / static_cast<double>(n_tail)));
  }
  return xi;
}

enum class H2Class { W2inf, XiDerivBounded, Fails };

inline const char* to_string(H2Class c) {
  switch (c) {
    case H2Class::W2inf: return "W2inf";
    case H2Class::XiDerivBounded: return "XiDerivBounded";
    default: return "Fails";
  }
}

struct HypothesisCertificate {
  double sigma = 0.0;
  double kappa = 0.0;
  std::optional<double> m;
  double sound_speed = 0.0;
  bool normalized = false;
  H2Class h2_class = H2Class::Fails;
  std::optional<double> h4_norm;
  // kappa = 1/2 route available when W^ >= 0 on the lattice.
  std::optional<double> critical_sigma;
  std::size_t lattice_size = 0;
  bool sampled = true;

  double best_sigma() const { return std::max(sigma, critical_sigma.value_or(0.0)); }
  // Speeds below this have a positive multiplier M_c.
  double guaranteed_speed() const { return std::sqrt(2.0 * best_sigma()); }
};

namespace detail {
inline double sampled_sigma(const std::vector<double>& w, const std::vector<double>& xi, double kappa) {
  double m = 1.0;
  for (std::size_t i = 0; i < xi.size(); ++i) m = std::min(m, w[i] + kappa * xi[i] * xi[i]);
  return m;
}

inline H2Class h2_class_of(const PotentialSpec& spec) {
  if (std::holds_alternative<kind::BochnerRiesz>(spec.variant()) || std::holds_alternative<kind::Tabulated>(spec.variant()))
    return H2Class::XiDerivBounded;
  return H2Class::W2inf;
}
}  // namespace detail

// Sweeps kappa = 0, 0.01, ..., 0.49 and keeps the largest sampled sigma,
// then bisects for the smallest kappa reaching it.
inline HypothesisCertificate certify_h1(const PotentialSpec& spec, const std::vector<double>& lattice) {
  const double cs = sound_speed(spec);
  double xmax = 0.0;
  for (double x : lattice) xmax = std::max(xmax, x);
  if (xmax < 4.0 * cs * (1.0 - 1e-12)) throw CertificationError("certification lattice must reach 4 c*");

  std::vector<double> w(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i) w[i] = spec.symbol(lattice[i]);

  constexpr int n_kappa = 50;
  constexpr double dk = 0.01;
  constexpr double tol = 1e-12;
  std::vector<double> sig(n_kappa);
  for (int i = 0; i < n_kappa; ++i) sig[i] = detail::sampled_sigma(w, lattice, dk * i);
  const double best = *std::max_element(sig.begin(), sig.end());

  HypothesisCertificate cert;
  cert.sound_speed = cs;
  cert.normalized = std::abs(spec.symbol(0.0) - 1.0) < 1e-12;
  cert.h2_class = detail::h2_class_of(spec);
  cert.h4_norm = spec.total_variation();
  cert.lattice_size = lattice.size();

  const double wmin = *std::min_element(w.begin(), w.end());
  if (wmin >= 0.0) {
    const double s = detail::sampled_sigma(w, lattice, 0.5);
    if (s > 0.0) cert.critical_sigma = s;
  }

  if (best > 0.0) {
    int first = 0;
    while (sig[first] < best - tol) ++first;
    double hi = dk * first;
    if (first > 0) {
      double lo = dk * (first - 1);
      while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        if (detail::sampled_sigma(w, lattice, mid) >= best - tol)
          hi = mid;
        else
          lo = mid;
      }
    }
    cert.sigma = best;
    cert.kappa = hi;
  } else if (!cert.critical_sigma) {
    throw CertificationError("no (sigma, kappa) pair passes on the lattice");
  } else {
    cert.sigma = *cert.critical_sigma;
    cert.kappa = 0.5;
  }
  return cert;
}

inline HypothesisCertificate certify_h1(const PotentialSpec& spec) { return certify_h1(spec, certification_lattice(spec)); }

struct H3Result {
  double m = 0.0;
  // Sampled check of the implied bound W^(xi) >= 1 - m xi^2 / 2.
  bool implied_bound_holds = false;
  double implied_bound_margin = 0.0;
};

inline H3Result certify_h3(const PotentialSpec& spec, const std::vector<double>& lattice) {
  H3Result r;
  // The xi -> 0 limit of -W^'/xi is -W^''(0).
  r.m = std::max(0.0, -spec.second_derivative_at_zero());
  auto q = [&](double xi) { return -spec.symbol_deriv(xi) / xi; };
  std::size_t best = 0;
  double qbest = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    if (lattice[i] <= 0.0) continue;
    const double v = q(lattice[i]);
    if (v > qbest) {
      qbest = v;
      best = i;
    }
  }
  if (qbest > -std::numeric_limits<double>::infinity()) {
    r.m = std::max(r.m, qbest);
    // Polish the sampled maximum between its lattice neighbours.
    if (best > 0 && best + 1 < lattice.size() && lattice[best - 1] > 0.0) {
      const auto [x, negq] = boost::math::tools::brent_find_minima([&](double xi) { return -q(xi); }, lattice[best - 1],
                                                                   lattice[best + 1], std::numeric_limits<double>::digits / 2);
      (void)x;
      r.m = std::max(r.m, -negq);
    }
  }
  if (!(r.m < 1.0)) throw CertificationError("(H3) fails: sampled m = " + std::to_string(r.m) + " is not below 1");
  const double w0 = spec.symbol(0.0);
  r.implied_bound_margin = std::numeric_limits<double>::infinity();
  for (double xi : lattice) r.implied_bound_margin = std::min(r.implied_bound_margin, spec.symbol(xi) - (w0 - 0.5 * r.m * xi * xi));
  r.implied_bound_holds = r.implied_bound_margin >= -1e-12;
  return r;
}

inline H3Result certify_h3(const PotentialSpec& spec) { return certify_h3(spec, certification_lattice(spec)); }

// Sampled check of 3 xi^2 + 2 W^ + 2 xi W^' >= 2; returns the minimum margin.
inline double nonvanishing_condition_margin(const PotentialSpec& spec, const std::vector<double>& lattice) {
  double m = std::numeric_limits<double>::infinity();
  for (double xi : lattice)
    m = std::min(m, 3.0 * xi * xi + 2.0 * spec.symbol(xi) + 2.0 * xi * spec.symbol_deriv(xi) - 2.0);
  return m;
}

enum class CriticalType { Max, Min };

struct CriticalPoint {
  double xi = 0.0;
  double w = 0.0;
  CriticalType type = CriticalType::Max;
};

inline double dispersion_slope(const PotentialSpec& spec, double xi) {
  const double r = dispersion_radicand(spec, xi);
  const double dr = 4.0 * xi * xi * xi + 4.0 * spec.symbol(xi) * xi + 2.0 * spec.symbol_deriv(xi) * xi * xi;
  return dr / (2.0 * std::sqrt(std::max(r, 1e-300)));
}

// Interior critical points of w(xi) from sign changes of dw/dxi, bisected.
inline std::vector<CriticalPoint> roton_maxon(const PotentialSpec& spec, const std::vector<double>& lattice) {
  std::vector<CriticalPoint> out;
  double prev_x = 0.0, prev_s = 0.0;
  bool have_prev = false;
  for (double xi : lattice) {
    if (xi <= 0.0 || dispersion_radicand(spec, xi) <= 0.0) {
      have_prev = false;
      continue;
    }
    const double s = dispersion_slope(spec, xi);
    if (have_prev && ((prev_s > 0.0 && s <= 0.0) || (prev_s < 0.0 && s >= 0.0))) {
      double lo = prev_x, hi = xi;
      const bool falling = prev_s > 0.0;
      for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((dispersion_slope(spec, mid) > 0.0) == falling)
          lo = mid;
        else
          hi = mid;
      }
      const double x = 0.5 * (lo + hi);
      out.push_back({x, dispersion(spec, x).value, falling ? CriticalType::Max : CriticalType::Min});
    }
    if (s != 0.0) {
      prev_x = xi;
      prev_s = s;
      have_prev = true;
    }
  }
  return out;
}

// W^ sampled on the grid's frequencies (FFT order).
inline RealField sample_symbol(const PotentialSpec& spec, const Grid& grid) {
  if (grid.xi_max() > spec.symbol_range() * (1.0 + 1e-14))
    throw OutOfRangeError("grid frequencies exceed the tabulated symbol range");
  RealField w(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) w[k] = spec.symbol(grid.xi(k));
  return w;
}

inline RealField convolve(const PotentialSpec& spec, const Grid& grid, std::span<const double> f) {
  const auto w = sample_symbol(spec, grid);
  return apply_multiplier(grid, w, f);
}

// Symbol sampled once on a grid.
struct SampledSymbol {
  Grid grid;
  RealField w;

  SampledSymbol() = default;
  SampledSymbol(const PotentialSpec& spec, const Grid& g) : grid(g), w(sample_symbol(spec, g)) {}

  RealField convolve(std::span<const double> f) const { return apply_multiplier(grid, w, f); }
};

inline RealField sample_mc(const PotentialSpec& spec, double c, const Grid& grid) {
  RealField m(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) m[k] = mc_symbol(spec, c, grid.xi(k));
  return m;
}

inline void check_multiplier_positive(const RealField& mc) {
  for (double v : mc)
    if (!(v > 0.0)) throw SupersonicMultiplierError("M_c is not positive on the frequency lattice");
}

// Inverse DFT of 1/M_c(xi_k), scaled so that h * sum_j L_j f_{i-j} is the
// discrete convolution L_c * f.
inline RealField lc_kernel(const PotentialSpec& spec, double c, const Grid& grid) {
  const auto mc = sample_mc(spec, c, grid);
  check_multiplier_positive(mc);
  ComplexField F(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) F[k] = 1.0 / mc[k];
  auto L = real_part(ifft(F));
  const double s = 1.0 / grid.spacing();
  // Samples are centered at x = 0, i.e. index N/2.
  auto shifted = circular_shift(std::span<const double>(L), static_cast<long long>(grid.center()));
  for (auto& v : shifted) v *= s;
  return shifted;
}

enum class DecayModel { Exponential, Algebraic, Unknown };

inline const char* to_string(DecayModel m) {
  switch (m) {
    case DecayModel::Exponential: return "exponential";
    case DecayModel::Algebraic: return "algebraic";
    default: return "unknown";
  }
}

struct DecayPrediction {
  DecayModel model = DecayModel::Unknown;
  double value = 0.0;  // rate (exponential) or power bound (algebraic)
  std::optional<Complex> zero;  // nearest strip zero of M_c
  bool exclusive = false;  // algebraic: every power strictly below value
  bool lower_bound_only = false;  // no zero found inside the search rectangle
};

namespace detail {
inline Complex mc_complex(const PotentialSpec& spec, double c, Complex z) { return z * z + 2.0 * *spec.symbol_complex(z) - c * c; }

inline std::optional<Complex> polish_zero(const PotentialSpec& spec, double c, Complex z) {
  for (int it = 0; it < 60; ++it) {
    const double h = 1e-6 * std::max(1.0, std::abs(z));
    const Complex f = mc_complex(spec, c, z);
    const Complex df = (mc_complex(spec, c, z + h) - mc_complex(spec, c, z - h)) / (2.0 * h);
    if (std::abs(df) == 0.0) return std::nullopt;
    const Complex dz = f / df;
    z -= dz;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return std::nullopt;
    if (std::abs(dz) < 1e-14 * (1.0 + std::abs(z))) break;
  }
  if (std::abs(mc_complex(spec, c, z)) > 1e-9 * (1.0 + std::norm(z))) return std::nullopt;
  return z;
}
}  // namespace detail

// Width of the zero-free strip of M_c around the real axis. The rectangle
// [0, 4c*] x (0, 4] is sampled on a 1024 x 256 mesh; local minima of |M_c|
// seed a complex Newton polish.
inline DecayPrediction decay_prediction(const PotentialSpec& spec, double c) {
  DecayPrediction out;
  if (const auto* br = std::get_if<kind::BochnerRiesz>(&spec.variant())) {
    (void)br;
    out.model = DecayModel::Algebraic;
    out.value = 1.0;
    out.exclusive = true;
    return out;
  }
  if (!spec.is_analytic()) return out;

  const double cs = sound_speed(spec);
  constexpr int nx = 1024, ny = 256;
  const double xmax = 4.0 * cs, ymax = 4.0;
  std::vector<double> mag(static_cast<std::size_t>(nx) * ny);
  auto at = [&](int i, int j) -> double& { return mag[static_cast<std::size_t>(j) * nx + i]; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Complex z(xmax * i / (nx - 1), ymax * (j + 1) / ny);
      at(i, j) = std::abs(detail::mc_complex(spec, c, z));
    }

  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double v = at(i, j);
      if (!std::isfinite(v)) continue;
      bool is_min = true;
      for (int dj = -1; dj <= 1 && is_min; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          int ii = i + di, jj = j + dj;
          if (ii < 0) ii = -ii;  // even in Re z
          if (ii >= nx || jj < 0 || jj >= ny) continue;
          if (at(ii, jj) < v) {
            is_min = false;
            break;
          }
        }
      if (!is_min) continue;
      const Complex seed(xmax * i / (nx - 1), ymax * (j + 1) / ny);
      if (auto z = detail::polish_zero(spec, c, seed)) {
        const Complex zz(std::abs(z->real()), std::abs(z->imag()));
        if (zz.imag() > 1e-10 && zz.imag() < best) {
          best = zz.imag();
          out.zero = zz;
        }
      }
    }

  out.model = DecayModel::Exponential;
  if (std::isfinite(best)) {
    out.value = best;
  } else {
    out.value = ymax;
    out.lower_bound_only = true;
  }
  return out;
}

}  // namespace nlgp
