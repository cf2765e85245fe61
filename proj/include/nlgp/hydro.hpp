#pragma once

// Hydrodynamic variables u = rho e^{i theta}, eta = 1 - rho^2, K = |u'|^2,
// traveling-wave residuals and the identity battery satisfied by solitons.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "nlgp/errors.hpp"
#include "nlgp/potentials.hpp"
#include "nlgp/spectral.hpp"

namespace nlgp {

struct WaveFields {
  Grid grid;
  double c = 0.0;
  RealField rho;
  RealField theta;  // int_{-L}^{x} theta', never wrapped
  ComplexField u;
  ComplexField u_prime;
  RealField eta;
  RealField K;
  double phase_jump = 0.0;  // theta(L) - theta(-L)
};

struct PhaseProfile {
  RealField theta;
  double jump = 0.0;
};

inline void require_positive(std::span<const double> rho, double floor = 0.0) {
  for (double r : rho)
    if (!(r > floor)) throw VortexError("amplitude is not positive; the phase cannot be lifted");
}

// theta(x) = (c/2) int_a^x (1/rho^2 - 1), anchored at theta(a) = 0.
inline PhaseProfile phase_from_rho(const Grid& grid, std::span<const double> rho, double c, double anchor) {
  detail::check_length(grid, rho.size());
  require_positive(rho);
  RealField g(rho.size());
  for (std::size_t j = 0; j < rho.size(); ++j) g[j] = 0.5 * c * (1.0 / (rho[j] * rho[j]) - 1.0);
  auto ci = cumulative_integral(grid, g);
  // Evaluate the running integral at the anchor by trigonometric interpolation.
  double at_anchor = 0.0;
  const double L = grid.half_length();
  if (anchor > -L) {
    const double pos = (anchor + L) / grid.spacing();
    const double rounded = std::round(pos);
    if (std::abs(pos - rounded) < 1e-12 && rounded < static_cast<double>(grid.size())) {
      at_anchor = ci.values[static_cast<std::size_t>(rounded)];
    } else {
      const std::size_t n = grid.size();
      RealField periodic(n);
      const double mean = ci.total / (2.0 * L);
      for (std::size_t j = 0; j < n; ++j) periodic[j] = ci.values[j] - mean * (grid.x(j) + L);
      const auto P = fft(periodic);
      Complex s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == grid.nyquist()) continue;
        s += P[k] * std::exp(Complex(0.0, grid.xi(k) * (anchor + L)));
      }
      at_anchor = s.real() / static_cast<double>(n) + mean * (anchor + L);
    }
  }
  for (auto& v : ci.values) v -= at_anchor;
  return {std::move(ci.values), ci.total};
}

inline PhaseProfile phase_from_rho(const Grid& grid, std::span<const double> rho, double c) {
  return phase_from_rho(grid, rho, c, -grid.half_length());
}

// u' for a field whose phase gains `jump` across the period: w = u e^{-isx}
// with s = jump/2L is periodic, and u' = e^{isx}(w' + i s w).
inline void twisted_derivatives(const Grid& grid, std::span<const Complex> u, double jump, ComplexField* du,
                                ComplexField* d2u) {
  const std::size_t n = u.size();
  const double s = jump / (2.0 * grid.half_length());
  ComplexField w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = u[j] * std::exp(Complex(0.0, -s * grid.x(j)));
  const auto w1 = derivative(grid, std::span<const Complex>(w), 1);
  if (du) {
    du->resize(n);
    for (std::size_t j = 0; j < n; ++j)
      (*du)[j] = std::exp(Complex(0.0, s * grid.x(j))) * (w1[j] + Complex(0.0, s) * w[j]);
  }
  if (d2u) {
    const auto w2 = derivative(grid, std::span<const Complex>(w), 2);
    d2u->resize(n);
    for (std::size_t j = 0; j < n; ++j)
      (*d2u)[j] = std::exp(Complex(0.0, s * grid.x(j))) * (w2[j] + Complex(0.0, 2.0 * s) * w1[j] - s * s * w[j]);
  }
}

inline WaveFields fields_from_phase(const Grid& grid, RealField rho, RealField theta, double phase_jump, double c) {
  detail::check_length(grid, rho.size());
  detail::check_length(grid, theta.size());
  WaveFields f;
  f.grid = grid;
  f.c = c;
  f.phase_jump = phase_jump;
  const std::size_t n = rho.size();
  f.u.resize(n);
  f.eta.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    f.u[j] = std::polar(rho[j], theta[j]);
    f.eta[j] = 1.0 - rho[j] * rho[j];
  }
  twisted_derivatives(grid, f.u, phase_jump, &f.u_prime, nullptr);
  f.K.resize(n);
  for (std::size_t j = 0; j < n; ++j) f.K[j] = std::norm(f.u_prime[j]);
  f.rho = std::move(rho);
  f.theta = std::move(theta);
  return f;
}

inline WaveFields assemble(const Grid& grid, RealField rho, double c) {
  auto ph = phase_from_rho(grid, rho, c);
  return fields_from_phase(grid, std::move(rho), std::move(ph.theta), ph.jump, c);
}

// Multiplies u by e^{i phi}; every observable must be unchanged.
inline WaveFields rotate_phase(const WaveFields& f, double phi) {
  RealField theta = f.theta;
  for (auto& t : theta) t += phi;
  return fields_from_phase(f.grid, f.rho, std::move(theta), f.phase_jump, f.c);
}

struct ResidualNorms {
  double sup = 0.0;
  double l2 = 0.0;
};

// i c u' + u'' + u (W * (1 - |u|^2)).
inline ComplexField tw_residual_field(const WaveFields& f, const SampledSymbol& sym) {
  ComplexField d2u;
  twisted_derivatives(f.grid, f.u, f.phase_jump, nullptr, &d2u);
  const auto weta = sym.convolve(f.eta);
  ComplexField r(f.u.size());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = Complex(0.0, f.c) * f.u_prime[j] + d2u[j] + f.u[j] * weta[j];
  return r;
}

inline ResidualNorms residual_tw(const WaveFields& f, const SampledSymbol& sym) {
  const auto r = tw_residual_field(f, sym);
  ResidualNorms out;
  double s2 = 0.0;
  for (const auto& z : r) {
    out.sup = std::max(out.sup, std::abs(z));
    s2 += std::norm(z);
  }
  out.l2 = std::sqrt(f.grid.spacing() * s2);
  return out;
}

inline ResidualNorms residual_tw(const WaveFields& f, const PotentialSpec& spec) {
  return residual_tw(f, SampledSymbol(spec, f.grid));
}

// F(rho) = -rho'' + (c^2/4)(1 - rho^4)/rho^3 - rho (W * (1 - rho^2)).
inline RealField rho_residual_field(const Grid& grid, std::span<const double> rho, double c, const SampledSymbol& sym) {
  detail::check_length(grid, rho.size());
  require_positive(rho);
  const std::size_t n = rho.size();
  RealField eta(n);
  for (std::size_t j = 0; j < n; ++j) eta[j] = 1.0 - rho[j] * rho[j];
  const auto weta = sym.convolve(eta);
  // rho'' = (rho - 1)'' keeps the transform of a decaying field.
  RealField v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = rho[j] - 1.0;
  const auto d2 = derivative(grid, v, 2);
  RealField F(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r = rho[j], r2 = r * r;
    F[j] = -d2[j] + 0.25 * c * c * (1.0 - r2 * r2) / (r2 * r) - r * weta[j];
  }
  return F;
}

inline ResidualNorms residual_rho(const Grid& grid, std::span<const double> rho, double c, const SampledSymbol& sym) {
  const auto F = rho_residual_field(grid, rho, c, sym);
  return {sup_norm(F), l2_norm(grid, F)};
}

inline ResidualNorms residual_rho(const Grid& grid, std::span<const double> rho, double c, const PotentialSpec& spec) {
  return residual_rho(grid, rho, c, SampledSymbol(spec, grid));
}

struct IdentityEntry {
  std::string name;
  double lhs_norm = 0.0;
  double rhs_norm = 0.0;
  double residual_rel = 0.0;
  bool pass = true;
};

struct IdentityReport {
  std::vector<IdentityEntry> entries;
  double tolerance = 1e-6;

  bool all_pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const IdentityEntry& e) { return e.pass; });
  }
  double worst() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.residual_rel);
    return m;
  }
  const IdentityEntry* find(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  }
};

namespace detail {
inline IdentityEntry pointwise_entry(std::string name, const RealField& lhs, const RealField& rhs, double tol) {
  IdentityEntry e;
  e.name = std::move(name);
  e.lhs_norm = sup_norm(lhs);
  e.rhs_norm = sup_norm(rhs);
  double diff = 0.0;
  for (std::size_t j = 0; j < lhs.size(); ++j) diff = std::max(diff, std::abs(lhs[j] - rhs[j]));
  const double scale = std::max(e.lhs_norm, e.rhs_norm);
  e.residual_rel = scale > 0.0 ? diff / scale : 0.0;
  e.pass = e.residual_rel <= tol;
  return e;
}

inline IdentityEntry scalar_entry(std::string name, double lhs, double rhs, double tol) {
  IdentityEntry e;
  e.name = std::move(name);
  e.lhs_norm = lhs;
  e.rhs_norm = rhs;
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  e.residual_rel = scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
  e.pass = e.residual_rel <= tol;
  return e;
}
}  // namespace detail

// Seven identities, in order: eta1, elliptic, kprime, local, quadratic,
// pohozaev, jc_after_pohozaev.
inline IdentityReport identity_suite(const WaveFields& f, const SampledSymbol& sym, double tol = 1e-6) {
  const Grid& g = f.grid;
  const std::size_t n = f.rho.size();
  const double c = f.c;
  IdentityReport rep;
  rep.tolerance = tol;

  const auto weta = sym.convolve(f.eta);
  const auto deta = derivative(g, f.eta, 1);
  const auto d2eta = derivative(g, f.eta, 2);
  const auto dK = derivative(g, f.K, 1);

  RealField lhs(n), rhs(n);
  for (std::size_t j = 0; j < n; ++j) {
    lhs[j] = 0.5 * c * f.eta[j];
    rhs[j] = -(Complex(0.0, 1.0) * f.u_prime[j] * std::conj(f.u[j])).real();
  }
  rep.entries.push_back(detail::pointwise_entry("eta1", lhs, rhs, tol));

  for (std::size_t j = 0; j < n; ++j) {
    lhs[j] = -d2eta[j] + 2.0 * weta[j] - c * c * f.eta[j];
    rhs[j] = 2.0 * f.K[j] + 2.0 * f.eta[j] * weta[j];
  }
  rep.entries.push_back(detail::pointwise_entry("elliptic", lhs, rhs, tol));

  for (std::size_t j = 0; j < n; ++j) {
    lhs[j] = dK[j];
    rhs[j] = deta[j] * weta[j];
  }
  rep.entries.push_back(detail::pointwise_entry("kprime", lhs, rhs, tol));

  for (std::size_t j = 0; j < n; ++j) {
    lhs[j] = c * c * f.eta[j] * f.eta[j] + deta[j] * deta[j];
    rhs[j] = 4.0 * f.K[j] * (1.0 - f.eta[j]);
  }
  rep.entries.push_back(detail::pointwise_entry("local", lhs, rhs, tol));

  for (std::size_t j = 0; j < n; ++j) {
    lhs[j] = 2.0 * f.K[j];
    rhs[j] = (c * c * f.eta[j] * f.eta[j] + deta[j] * deta[j]) / (2.0 * (1.0 - f.eta[j]));
  }
  rep.entries.push_back(detail::pointwise_entry("quadratic", lhs, rhs, tol));

  // Virial form: (1/2) int (W^ - xi W^')|eta^|^2 = -int x eta' (W * eta), which
  // avoids sampling W^' where the symbol is not smooth.
  RealField xdw(n), weta_eta(n);
  for (std::size_t j = 0; j < n; ++j) {
    xdw[j] = g.x(j) * deta[j] * weta[j];
    weta_eta[j] = weta[j] * f.eta[j];
  }
  const double virial = integrate(g, xdw);
  const double pot = integrate(g, weta_eta);
  const double kinetic = integrate(g, f.K);
  rep.entries.push_back(detail::scalar_entry("pohozaev", kinetic, -virial, tol));

  RealField v(n), drho2(n), b(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = f.rho[j] - 1.0;
  const auto drho = derivative(g, v, 1);
  for (std::size_t j = 0; j < n; ++j) {
    drho2[j] = drho[j] * drho[j];
    b[j] = f.eta[j] * f.eta[j] / (f.rho[j] * f.rho[j]);
  }
  const double rho_kin = integrate(g, drho2);
  const double J = 0.5 * rho_kin + 0.25 * pot - 0.125 * c * c * integrate(g, b);
  // (1/4) int xi W^' |eta^|^2 = (1/4) int (W * eta) eta + (1/2) int x eta' (W * eta).
  const double rhs_j = rho_kin + 0.25 * pot + 0.5 * virial;
  rep.entries.push_back(detail::scalar_entry("jc_after_pohozaev", J, rhs_j, tol));
  return rep;
}

inline IdentityReport identity_suite(const WaveFields& f, const PotentialSpec& spec, double tol = 1e-6) {
  return identity_suite(f, SampledSymbol(spec, f.grid), tol);
}

struct EnergyForms {
  double defining = 0.0;  // (1/2) int |u'|^2 + (1/4) int (W * eta) eta
  double eta_form = 0.0;  // in terms of eta only
};

struct MomentumForms {
  double defining = 0.0;  // -(1/2) int <iu', u> eta/(1 - eta)
  double eta_form = 0.0;  // (c/4) int eta^2/(1 - eta)
  bool ill_conditioned = false;  // min rho < 0.05
};

inline EnergyForms energy(const WaveFields& f, const SampledSymbol& sym) {
  const Grid& g = f.grid;
  const std::size_t n = f.eta.size();
  require_positive(f.rho);
  const auto weta = sym.convolve(f.eta);
  const auto deta = derivative(g, f.eta, 1);
  double pot = 0.0, kin = 0.0, a = 0.0, b = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    pot += weta[j] * f.eta[j];
    kin += f.K[j];
    const double q = 1.0 / (1.0 - f.eta[j]);
    a += f.eta[j] * f.eta[j] * q;
    b += deta[j] * deta[j] * q;
  }
  const double h = g.spacing();
  EnergyForms e;
  e.defining = h * (0.5 * kin + 0.25 * pot);
  e.eta_form = h * (f.c * f.c / 8.0 * a + b / 8.0 + 0.25 * pot);
  return e;
}

inline EnergyForms energy(const WaveFields& f, const PotentialSpec& spec) { return energy(f, SampledSymbol(spec, f.grid)); }

inline MomentumForms momentum(const WaveFields& f) {
  require_positive(f.rho);
  double d = 0.0, e = 0.0, rmin = 1e300;
  for (std::size_t j = 0; j < f.eta.size(); ++j) {
    const double q = f.eta[j] / (1.0 - f.eta[j]);
    d += (Complex(0.0, 1.0) * f.u_prime[j] * std::conj(f.u[j])).real() * q;
    e += f.eta[j] * q;
    rmin = std::min(rmin, f.rho[j]);
  }
  const double h = f.grid.spacing();
  MomentumForms m;
  m.defining = -0.5 * h * d;
  m.eta_form = 0.25 * f.c * h * e;
  m.ill_conditioned = rmin < 0.05;
  return m;
}

struct NonvanishingReport {
  double measured = 0.0;  // ||W * eta||_inf
  double bound = 0.0;  // (2 - c^2)/4
  bool pass = false;
};

inline NonvanishingReport nonvanishing_check(const WaveFields& f, const SampledSymbol& sym) {
  NonvanishingReport r;
  r.measured = sup_norm(sym.convolve(f.eta));
  r.bound = (2.0 - f.c * f.c) / 4.0;
  r.pass = r.measured >= r.bound;
  return r;
}

inline NonvanishingReport nonvanishing_check(const WaveFields& f, const PotentialSpec& spec) {
  return nonvanishing_check(f, SampledSymbol(spec, f.grid));
}

struct BoundCheck {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

// Universal estimates for W = A(delta_0 + mu):
//   ||u||_inf^2 <= B0 (1 + c^2/4),  ||u'||_inf <= B1 (1 + c^2/4)^2,
//   min |u| >= (sqrt(1 + 4c^2/V1) - 1)/(sqrt(1 + 4c^2/V1) + 1).
struct AprioriReport {
  double B0 = 0.0, B1 = 0.0, V1 = 0.0;
  std::vector<BoundCheck> checks;
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& b) { return b.pass; });
  }
};

inline AprioriReport apriori_bounds(const WaveFields& f, const SampledSymbol& sym, const MeasureDecomposition& mu) {
  AprioriReport r;
  const double c = f.c, q = 1.0 + c * c / 4.0;
  r.B0 = 1.0 + mu.mu_plus / (1.0 - mu.mu_minus);
  r.B1 = std::sqrt(r.B0) * (1.0 + 2.0 * std::sqrt(2.0) * std::sqrt(r.B0));
  r.V1 = r.B1 * q * q;

  const double umax = sup_norm(std::span<const Complex>(f.u));
  r.checks.push_back({"sup_u_squared", umax * umax, r.B0 * q, umax * umax <= r.B0 * q});
  const double dumax = sup_norm(std::span<const Complex>(f.u_prime));
  r.checks.push_back({"sup_u_prime", dumax, r.V1, dumax <= r.V1});
  double umin = 1e300;
  for (double v : f.rho) umin = std::min(umin, v);
  const double s = std::sqrt(1.0 + 4.0 * c * c / r.V1);
  const double lower = (s - 1.0) / (s + 1.0);
  r.checks.push_back({"min_u", umin, lower, umin >= lower});
  const auto nv = nonvanishing_check(f, sym);
  r.checks.push_back({"nonvanishing", nv.measured, nv.bound, nv.pass});
  return r;
}

// Lower bound J_c(1 - rho) >= int (1 - m rho^2)(rho')^2 under (H3).
struct SignIdentityReport {
  double J = 0.0;
  double lower = 0.0;
  bool applicable = false;  // m ||u||_inf^2 < 1
  bool pass = false;
};

inline SignIdentityReport sign_identity(const WaveFields& f, const SampledSymbol& sym, double m) {
  const Grid& g = f.grid;
  const std::size_t n = f.rho.size();
  RealField v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = f.rho[j] - 1.0;
  const auto dr = derivative(g, v, 1);
  const auto weta = sym.convolve(f.eta);
  double kin = 0.0, low = 0.0, pot = 0.0, sing = 0.0, umax = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double r2 = f.rho[j] * f.rho[j];
    kin += dr[j] * dr[j];
    low += (1.0 - m * r2) * dr[j] * dr[j];
    pot += weta[j] * f.eta[j];
    sing += f.eta[j] * f.eta[j] / r2;
    umax = std::max(umax, r2);
  }
  const double h = g.spacing();
  SignIdentityReport s;
  s.J = h * (0.5 * kin + 0.25 * pot - f.c * f.c / 8.0 * sing);
  s.lower = h * low;
  s.applicable = m * umax < 1.0;
  s.pass = !s.applicable || (s.J >= s.lower * (1.0 - 1e-8) - 1e-12 && s.lower >= 0.0);
  return s;
}

}  // namespace nlgp
