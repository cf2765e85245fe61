#pragma once

// Post-processing of solutions: tail fits, phase limits, symmetry metrics and
// the spectral analyticity proxy.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "nlgp/errors.hpp"
#include "nlgp/hydro.hpp"
#include "nlgp/spectral.hpp"

namespace nlgp {

struct DecayFit {
  DecayModel model = DecayModel::Exponential;
  double rate_or_power = 0.0;
  double r_squared = 0.0;
  double x_lo = 0.0, x_hi = 0.0;
  double floor = 0.0;
  std::size_t points = 0;  // per tail, minimum of the two
  bool oscillatory = false;
  double frequency = 0.0;  // oscillation frequency of the tail, if any
  double tail_discrepancy = 0.0;  // |fit(+) - fit(-)|
};

namespace detail {

struct TailSamples {
  std::vector<double> x;  // |x|, increasing
  std::vector<double> y;
};

// Samples of one tail (side = +1 or -1) inside [lo, hi] * L.
inline TailSamples tail_samples(const Grid& g, std::span<const double> f, int side, double lo, double hi) {
  TailSamples t;
  const double L = g.half_length();
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.x(j);
    if (side * x <= 0.0) continue;
    const double ax = std::abs(x);
    if (ax >= lo * L && ax <= hi * L) {
      t.x.push_back(ax);
      t.y.push_back(f[j]);
    }
  }
  if (side < 0) {
    std::reverse(t.x.begin(), t.x.end());
    std::reverse(t.y.begin(), t.y.end());
  }
  return t;
}

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return f;
}

struct TailFit {
  double rate = 0.0, r2 = 0.0, frequency = 0.0;
  bool oscillatory = false;
  std::size_t points = 0;
};

// Order-2 linear prediction y_{i+2s} = a1 y_{i+s} + a2 y_i; the dominant root
// z of z^2 - a1 z - a2 gives rate -ln|z|/(s h) and frequency arg z/(s h).
// Suited to a single strongly damped oscillating mode.
inline TailFit prony_fit(const TailSamples& t, double h) {
  const std::size_t s = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.25 / h)));
  double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  const std::size_t m = t.y.size();
  for (std::size_t i = 0; i + 2 * s < m; ++i) {
    const double p = t.y[i + s], q = t.y[i], r = t.y[i + 2 * s];
    a11 += p * p;
    a12 += p * q;
    a22 += q * q;
    b1 += p * r;
    b2 += q * r;
  }
  const double det = a11 * a22 - a12 * a12;
  if (det == 0.0) throw UnderresolvedTailError("degenerate tail samples");
  const double c1 = (b1 * a22 - b2 * a12) / det;
  const double c2 = (a11 * b2 - a12 * b1) / det;
  const std::complex<double> disc = std::sqrt(std::complex<double>(c1 * c1 + 4.0 * c2, 0.0));
  const std::complex<double> z1 = 0.5 * (c1 + disc), z2 = 0.5 * (c1 - disc);
  const auto z = std::abs(z1) >= std::abs(z2) ? z1 : z2;
  const double step = static_cast<double>(s) * h;
  TailFit f;
  f.oscillatory = true;
  f.rate = -std::log(std::abs(z)) / step;
  f.frequency = std::abs(std::arg(z)) / step;
  double mean = 0.0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i + 2 * s < m; ++i, ++cnt) mean += t.y[i + 2 * s];
  mean /= static_cast<double>(std::max<std::size_t>(cnt, 1));
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i + 2 * s < m; ++i) {
    const double pred = c1 * t.y[i + s] + c2 * t.y[i];
    ss_res += (t.y[i + 2 * s] - pred) * (t.y[i + 2 * s] - pred);
    ss_tot += (t.y[i + 2 * s] - mean) * (t.y[i + 2 * s] - mean);
  }
  f.r2 = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  f.points = m;
  return f;
}

// Log-linear fit through the local maxima of |y|. The frequency comes from
// the mean spacing of the maxima, which are half a period apart.
inline std::size_t count_peaks(const TailSamples& t, double floor) {
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < t.y.size(); ++i) {
    const double a = std::abs(t.y[i]);
    if (a >= floor && a >= std::abs(t.y[i - 1]) && a >= std::abs(t.y[i + 1])) ++n;
  }
  return n;
}

inline TailFit envelope_fit(const TailSamples& t, double floor) {
  std::vector<double> xs, ls;
  for (std::size_t i = 1; i + 1 < t.y.size(); ++i) {
    const double a = std::abs(t.y[i]);
    if (a >= floor && a >= std::abs(t.y[i - 1]) && a >= std::abs(t.y[i + 1])) {
      xs.push_back(t.x[i]);
      ls.push_back(std::log(a));
    }
  }
  TailFit f;
  f.oscillatory = true;
  if (xs.size() < 3) throw UnderresolvedTailError("too few tail oscillations in the fit window; enlarge L");
  const auto lf = least_squares(xs, ls);
  f.rate = -lf.slope;
  f.r2 = lf.r2;
  f.points = t.y.size();
  f.frequency = std::numbers::pi * static_cast<double>(xs.size() - 1) / (xs.back() - xs.front());
  return f;
}

inline TailFit exponential_tail(TailSamples t, double floor, double h) {
  // Keep the samples up to the last one above the floor.
  std::size_t last = 0;
  bool any = false;
  for (std::size_t i = 0; i < t.y.size(); ++i)
    if (std::abs(t.y[i]) >= floor) {
      last = i;
      any = true;
    }
  if (!any) throw UnderresolvedTailError("tail below the roundoff floor; enlarge L");
  t.x.resize(last + 1);
  t.y.resize(last + 1);
  bool sign_change = false;
  for (std::size_t i = 1; i < t.y.size(); ++i)
    if (std::abs(t.y[i]) >= floor && std::abs(t.y[i - 1]) >= floor && (t.y[i] > 0) != (t.y[i - 1] > 0)) sign_change = true;
  if (t.y.size() < 20) throw UnderresolvedTailError("fewer than 20 tail samples above the floor; enlarge L");
  if (sign_change) return count_peaks(t, floor) >= 6 ? envelope_fit(t, floor) : prony_fit(t, h);
  std::vector<double> xs, ls;
  for (std::size_t i = 0; i < t.y.size(); ++i)
    if (std::abs(t.y[i]) >= floor) {
      xs.push_back(t.x[i]);
      ls.push_back(std::log(std::abs(t.y[i])));
    }
  if (xs.size() < 20) throw UnderresolvedTailError("fewer than 20 tail samples above the floor; enlarge L");
  const auto lf = least_squares(xs, ls);
  TailFit f;
  f.rate = -lf.slope;
  f.r2 = lf.r2;
  f.points = xs.size();
  return f;
}

inline double fit_floor(std::span<const double> f) { return 100.0 * std::numeric_limits<double>::epsilon() * sup_norm(f); }

}  // namespace detail

// Decay rate from the tail window [lo L, hi L] on both sides. Monotone tails
// use the least-squares slope of log|eta|; oscillating tails (complex strip
// zeros of M_c) use the envelope of local maxima of |eta| when the window
// holds enough oscillations, and two-term linear prediction otherwise.
inline DecayFit fit_exponential(const Grid& g, std::span<const double> eta, double lo = 0.55, double hi = 0.85) {
  DecayFit out;
  out.model = DecayModel::Exponential;
  out.floor = detail::fit_floor(eta);
  out.x_lo = lo * g.half_length();
  out.x_hi = hi * g.half_length();
  if (!(out.floor > 0.0)) throw UnderresolvedTailError("field vanishes identically");
  const auto fp = detail::exponential_tail(detail::tail_samples(g, eta, +1, lo, hi), out.floor, g.spacing());
  const auto fm = detail::exponential_tail(detail::tail_samples(g, eta, -1, lo, hi), out.floor, g.spacing());
  out.rate_or_power = 0.5 * (fp.rate + fm.rate);
  out.r_squared = std::min(fp.r2, fm.r2);
  out.points = std::min(fp.points, fm.points);
  out.oscillatory = fp.oscillatory || fm.oscillatory;
  out.frequency = 0.5 * (fp.frequency + fm.frequency);
  out.tail_discrepancy = std::abs(fp.rate - fm.rate);
  return out;
}

// Window chosen from amplitude levels instead of fixed fractions of L:
// from where |eta| first drops below `start` * ||eta|| to where it drops
// below `stop` * ||eta||.
inline DecayFit fit_exponential_levels(const Grid& g, std::span<const double> eta, double start = 1e-4,
                                       double stop = 1e-11) {
  const double m = sup_norm(eta);
  if (!(m > 0.0)) throw UnderresolvedTailError("field vanishes identically");
  const double L = g.half_length();
  double a = -1.0, b = L;
  for (std::size_t j = g.center(); j < g.size(); ++j) {
    const double v = std::abs(eta[j]);
    if (a < 0.0 && v < start * m) a = g.x(j);
    if (a >= 0.0 && v < stop * m) {
      b = g.x(j);
      break;
    }
  }
  if (a < 0.0) throw UnderresolvedTailError("tail never decays below the start level");
  return fit_exponential(g, eta, a / L, std::min(b / L, 0.999));
}

inline DecayFit fit_algebraic(const Grid& g, std::span<const double> eta, double lo = 0.55, double hi = 0.85) {
  DecayFit out;
  out.model = DecayModel::Algebraic;
  out.floor = detail::fit_floor(eta);
  out.x_lo = lo * g.half_length();
  out.x_hi = hi * g.half_length();
  if (!(out.floor > 0.0)) throw UnderresolvedTailError("field vanishes identically");
  double power = 0.0, r2 = 1.0;
  std::size_t pts = std::numeric_limits<std::size_t>::max();
  for (int side : {+1, -1}) {
    const auto t = detail::tail_samples(g, eta, side, lo, hi);
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < t.y.size(); ++i)
      if (std::abs(t.y[i]) >= out.floor) {
        lx.push_back(std::log(t.x[i]));
        ly.push_back(std::log(std::abs(t.y[i])));
      }
    if (lx.size() < 20) throw UnderresolvedTailError("fewer than 20 tail samples above the floor; enlarge L");
    const auto lf = detail::least_squares(lx, ly);
    power += -0.5 * lf.slope;
    r2 = std::min(r2, lf.r2);
    pts = std::min(pts, lx.size());
  }
  out.rate_or_power = power;
  out.r_squared = r2;
  out.points = pts;
  return out;
}

// Log-linear fits in x and in log x on the same window, compared by r^2
// with a 0.02 margin. Unknown means inconclusive. The window is wider than
// the fitting window: over [0.55 L, 0.85 L] log x is nearly affine in x and
// both fits reach r^2 > 0.996 on either kind of tail.
inline DecayModel select_decay_model(const Grid& g, std::span<const double> eta, double lo = 0.1, double hi = 0.9) {
  const double floor = detail::fit_floor(eta);
  double r_exp = 1.0, r_alg = 1.0;
  for (int side : {+1, -1}) {
    const auto t = detail::tail_samples(g, eta, side, lo, hi);
    std::vector<double> x, lx, ly;
    for (std::size_t i = 0; i < t.y.size(); ++i)
      if (std::abs(t.y[i]) >= floor) {
        x.push_back(t.x[i]);
        lx.push_back(std::log(t.x[i]));
        ly.push_back(std::log(std::abs(t.y[i])));
      }
    if (x.size() < 20) throw UnderresolvedTailError("fewer than 20 tail samples above the floor; enlarge L");
    r_exp = std::min(r_exp, detail::least_squares(x, ly).r2);
    r_alg = std::min(r_alg, detail::least_squares(lx, ly).r2);
  }
  if (r_exp > r_alg + 0.02) return DecayModel::Exponential;
  if (r_alg > r_exp + 0.02) return DecayModel::Algebraic;
  return DecayModel::Unknown;
}

// max |x|^ell |eta| over consecutive sub-windows of the tail window; the
// check passes when these envelopes do not increase outward.
struct AlgebraicEnvelope {
  double ell = 0.0;
  std::vector<double> envelope_plus, envelope_minus;
  bool decreasing = false;
};

inline AlgebraicEnvelope algebraic_envelope(const Grid& g, std::span<const double> eta, double ell, std::size_t parts = 4,
                                            double lo = 0.55, double hi = 0.85) {
  AlgebraicEnvelope out;
  out.ell = ell;
  out.decreasing = true;
  for (int side : {+1, -1}) {
    const auto t = detail::tail_samples(g, eta, side, lo, hi);
    std::vector<double> env(parts, 0.0);
    const double a = lo * g.half_length(), w = (hi - lo) * g.half_length() / static_cast<double>(parts);
    for (std::size_t i = 0; i < t.x.size(); ++i) {
      const auto k = std::min<std::size_t>(parts - 1, static_cast<std::size_t>((t.x[i] - a) / w));
      env[k] = std::max(env[k], std::pow(t.x[i], ell) * std::abs(t.y[i]));
    }
    for (std::size_t k = 1; k < parts; ++k)
      if (env[k] > env[k - 1]) out.decreasing = false;
    (side > 0 ? out.envelope_plus : out.envelope_minus) = env;
  }
  return out;
}

struct PhaseLimits {
  double theta_minus = 0.0;
  double theta_plus = 0.0;
  double jump = 0.0;
  Complex u_minus{1.0, 0.0};
  Complex u_plus{1.0, 0.0};
  bool zero_jump = false;  // int eta/(1 - eta) vanishes
  bool tail_warning = false;
};

// theta(+-inf) = theta(0) + (c/2) int_0^{+-inf} eta/(1 - eta).
inline PhaseLimits phase_limits(const WaveFields& f) {
  const Grid& g = f.grid;
  const std::size_t n = g.size();
  RealField q(n);
  for (std::size_t j = 0; j < n; ++j) q[j] = f.eta[j] / (1.0 - f.eta[j]);
  const auto ci = cumulative_integral(g, q);
  const std::size_t mid = g.center();
  const double theta0 = f.theta[mid];
  PhaseLimits out;
  out.theta_minus = theta0 - 0.5 * f.c * ci.values[mid];
  out.theta_plus = theta0 + 0.5 * f.c * (ci.total - ci.values[mid]);
  out.jump = out.theta_plus - out.theta_minus;
  out.u_minus = std::polar(1.0, out.theta_minus);
  out.u_plus = std::polar(1.0, out.theta_plus);
  double scale = 0.0;
  for (double v : q) scale += std::abs(v);
  scale *= g.spacing();
  out.zero_jump = std::abs(ci.total) <= 1e-13 * scale;
  const double floor = detail::fit_floor(f.eta);
  out.tail_warning = std::abs(f.eta.front()) > std::max(floor, 1e-10);
  return out;
}

struct SymmetryMetrics {
  double rho_asymmetry = 0.0;  // ||rho - rho o R||_inf
  double theta_asymmetry = 0.0;  // ||theta + theta o R - 2 theta(0)||_inf
};

inline SymmetryMetrics symmetry_metrics(const WaveFields& f) {
  const std::size_t n = f.rho.size();
  SymmetryMetrics m;
  const double t0 = f.theta[f.grid.center()];
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t r = (n - j) % n;
    m.rho_asymmetry = std::max(m.rho_asymmetry, std::abs(f.rho[j] - f.rho[r]));
    // theta(-x_0) = theta(L) = theta(-L) + jump.
    const double tr = j == 0 ? f.theta[0] + f.phase_jump : f.theta[r];
    m.theta_asymmetry = std::max(m.theta_asymmetry, std::abs(f.theta[j] + tr - 2.0 * t0));
  }
  return m;
}

struct AnalyticityProxy {
  std::vector<double> mu;
  std::vector<double> sums;
  double radius = 0.0;
};

// S(mu) = sum |eta^(xi_k)|^2 e^{2 mu |xi_k|} over modes above the roundoff
// floor; the radius is the largest mu (scanned upward) with S(mu) <= 10^3 S(0).
inline AnalyticityProxy analyticity_proxy(const Grid& g, std::span<const double> eta, const std::vector<double>& mu_list) {
  const auto F = fft(eta);
  double fmax = 0.0;
  for (const auto& z : F) fmax = std::max(fmax, std::abs(z));
  const double cut = 100.0 * std::numeric_limits<double>::epsilon() * fmax;
  AnalyticityProxy out;
  out.mu = mu_list;
  const double h = g.spacing();
  for (double mu : mu_list) {
    double s = 0.0;
    for (std::size_t k = 0; k < F.size(); ++k)
      if (std::abs(F[k]) > cut) s += h * h * std::norm(F[k]) * std::exp(2.0 * mu * std::abs(g.xi(k)));
    out.sums.push_back(s);
  }
  double s0 = 0.0;
  for (const auto& z : F)
    if (std::abs(z) > cut) s0 += h * h * std::norm(z);
  for (std::size_t i = 0; i < mu_list.size(); ++i) {
    if (out.sums[i] <= 1e3 * s0)
      out.radius = mu_list[i];
    else
      break;
  }
  return out;
}

inline std::vector<double> default_mu_list() {
  std::vector<double> mu;
  for (int i = 0; i <= 120; ++i) mu.push_back(0.05 * i);
  return mu;
}

inline double mass(const Grid& g, std::span<const double> eta) {
  double s = 0.0;
  for (double v : eta) s += std::abs(v);
  return g.spacing() * s;
}

}  // namespace nlgp
