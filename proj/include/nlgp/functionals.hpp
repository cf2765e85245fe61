#pragma once

// The action J_c(v) = A(v) - c^2 B(v) on v = 1 - rho, its first and second
// variations, and the numerical mountain-pass geometry.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "nlgp/errors.hpp"
#include "nlgp/hydro.hpp"
#include "nlgp/potentials.hpp"
#include "nlgp/spectral.hpp"

namespace nlgp {

constexpr double kPositivityFloor = 1e-3;

// Discrete nonvanishing set: max v < 1 - floor.
inline bool in_nv(std::span<const double> v, double floor = kPositivityFloor) {
  for (double x : v)
    if (!(x < 1.0 - floor)) return false;
  return true;
}

struct ActionValue {
  double J = 0.0;
  double A = 0.0;
  double B = 0.0;
  bool in_nv = true;
};

// A = (1/2) int v'^2 + (1/4) int (W * f) f, B = (1/8) int f^2/(1 - v)^2 with
// f = v(2 - v). Outside NV, B = +inf and J = -inf.
inline ActionValue functional_J(const SampledSymbol& sym, double c, std::span<const double> v) {
  const Grid& g = sym.grid;
  detail::check_length(g, v.size());
  const std::size_t n = v.size();
  RealField f(n), xi2(n);
  for (std::size_t j = 0; j < n; ++j) f[j] = v[j] * (2.0 - v[j]);
  for (std::size_t k = 0; k < n; ++k) xi2[k] = g.xi(k) * g.xi(k);
  const auto wf = sym.convolve(f);
  ActionValue out;
  out.A = 0.5 * spectral_quadratic(g, xi2, v) + 0.25 * inner(g, wf, f);
  if (!in_nv(v, 0.0)) {
    out.in_nv = false;
    out.B = std::numeric_limits<double>::infinity();
    out.J = -std::numeric_limits<double>::infinity();
    return out;
  }
  double b = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double r = 1.0 - v[j];
    b += f[j] * f[j] / (r * r);
  }
  out.B = 0.125 * g.spacing() * b;
  out.J = out.A - c * c * out.B;
  return out;
}

inline ActionValue functional_J(const PotentialSpec& spec, const Grid& grid, double c, std::span<const double> v) {
  return functional_J(SampledSymbol(spec, grid), c, v);
}

namespace detail {
inline void require_nv(std::span<const double> v) {
  for (double x : v)
    if (!(x < 1.0)) throw VortexError("v leaves the nonvanishing set");
}
}  // namespace detail

// L^2 representative of J_c'(v): -v'' + (W * f)(1 - v) - c^2 h(v) with
// h = (rho^{-3} - rho)/4. Equals -F(rho).
inline RealField grad_J(const SampledSymbol& sym, double c, std::span<const double> v) {
  const Grid& g = sym.grid;
  detail::check_length(g, v.size());
  detail::require_nv(v);
  const std::size_t n = v.size();
  RealField f(n);
  for (std::size_t j = 0; j < n; ++j) f[j] = v[j] * (2.0 - v[j]);
  const auto wf = sym.convolve(f);
  const auto d2 = derivative(g, v, 2);
  RealField out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r = 1.0 - v[j];
    const double h = 0.25 * (1.0 / (r * r * r) - r);
    out[j] = -d2[j] + wf[j] * r - c * c * h;
  }
  return out;
}

// J_c''(v) psi = -psi'' - c^2 h'(v) psi + (W * (f'(v) psi))(1 - v) - (W * f) psi,
// f' = 2(1 - v), h' = (3 rho^{-4} + 1)/4.
inline RealField hess_J_apply(const SampledSymbol& sym, double c, std::span<const double> v, std::span<const double> psi) {
  const Grid& g = sym.grid;
  detail::check_length(g, v.size());
  detail::check_length(g, psi.size());
  detail::require_nv(v);
  const std::size_t n = v.size();
  RealField f(n), fp(n);
  for (std::size_t j = 0; j < n; ++j) {
    f[j] = v[j] * (2.0 - v[j]);
    fp[j] = 2.0 * (1.0 - v[j]) * psi[j];
  }
  const auto wf = sym.convolve(f);
  const auto wfp = sym.convolve(fp);
  const auto d2 = derivative(g, psi, 2);
  RealField out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r = 1.0 - v[j];
    const double r2 = r * r;
    const double hp = 0.25 * (3.0 / (r2 * r2) + 1.0);
    out[j] = -d2[j] - c * c * hp * psi[j] + wfp[j] * r - wf[j] * psi[j];
  }
  return out;
}

struct PairingResult {
  double lhs = 0.0;  // 2 J(v) - J'(v) v
  double rhs = 0.0;  // (1/2) int (W * f) v^2 + (c^2/4) int f v^2/(1 - v)^3
  double residual = 0.0;  // relative
};

inline PairingResult pairing_identity(const SampledSymbol& sym, double c, std::span<const double> v) {
  const Grid& g = sym.grid;
  detail::require_nv(v);
  const auto J = functional_J(sym, c, v);
  const auto gr = grad_J(sym, c, v);
  PairingResult p;
  p.lhs = 2.0 * J.J - inner(g, gr, v);
  const std::size_t n = v.size();
  RealField f(n);
  for (std::size_t j = 0; j < n; ++j) f[j] = v[j] * (2.0 - v[j]);
  const auto wf = sym.convolve(f);
  double a = 0.0, b = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double r = 1.0 - v[j];
    a += wf[j] * v[j] * v[j];
    b += f[j] * v[j] * v[j] / (r * r * r);
  }
  p.rhs = g.spacing() * (0.5 * a + 0.25 * c * c * b);
  const double scale = std::max(std::abs(p.lhs), std::abs(p.rhs));
  p.residual = scale > 0.0 ? std::abs(p.lhs - p.rhs) / scale : 0.0;
  return p;
}

// ||v||^2 = int v^2 + int v'^2.
inline double sobolev_norm(const Grid& grid, std::span<const double> v) {
  RealField w(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) w[k] = 1.0 + grid.xi(k) * grid.xi(k);
  return std::sqrt(spectral_quadratic(grid, w, v));
}

struct PhiC {
  RealField v;  // 1 - phi
  double delta = 0.0;  // phi^2 on the plateau
  double r = 0.0;  // plateau half-width
  double J = 0.0;
};

// phi^2 = delta on [-r, r], phi = 1 outside [-r-1, r+1], cosine ramp between;
// delta = c^2/(4 ||W^||_inf) sits below the threshold c^2/(2 ||W^||_inf).
inline PhiC build_phi_c(const SampledSymbol& sym, double c, double symbol_sup) {
  if (!(c > 0.0)) throw OutOfRegimeError("build_phi_c needs c > 0");
  const Grid& g = sym.grid;
  PhiC out;
  out.delta = std::min(c * c / (4.0 * symbol_sup), 0.95);
  const double a = std::sqrt(out.delta);
  for (double r = 1.0;; r *= 2.0) {
    if (r > g.half_length() / 2.0) throw GridTooSmallError("plateau width exceeds L/2 before J_c < 0");
    RealField v(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double x = std::abs(g.x(j));
      double phi = 1.0;
      if (x <= r)
        phi = a;
      else if (x < r + 1.0)
        phi = a + (1.0 - a) * 0.5 * (1.0 - std::cos(std::numbers::pi * (x - r)));
      v[j] = 1.0 - phi;
    }
    const auto J = functional_J(sym, c, v);
    if (J.J < 0.0) {
      out.v = std::move(v);
      out.r = r;
      out.J = J.J;
      return out;
    }
  }
}

inline PhiC build_phi_c(const PotentialSpec& spec, const Grid& grid, double c) {
  return build_phi_c(SampledSymbol(spec, grid), c, spec.symbol_sup());
}

struct SphereBound {
  double r = 0.0;
  double r_c = 0.0;
  double ell = 0.0;
  double lower = 0.0;  // ell r^2
  std::size_t samples = 0;
  std::size_t violations = 0;
  double min_ratio = std::numeric_limits<double>::infinity();  // min J(v)/(ell r^2)
};

// Largest radius keeping both terms of ell_r positive.
inline double sphere_radius_limit(double c, double sigma, double kappa) {
  const double a = kappa > 0.0 ? 1.0 / std::sqrt(2.0 * kappa) - 1.0 : std::numeric_limits<double>::infinity();
  const double b = 1.0 - c / std::sqrt(2.0 * sigma);
  return std::min(a, b);
}

inline double sphere_ell(double c, double sigma, double kappa, double r) {
  const double t1 = 0.5 * (1.0 - 2.0 * kappa * (1.0 + r) * (1.0 + r));
  const double t2 = 0.25 * (sigma - c * c / (2.0 * (1.0 - r) * (1.0 - r)));
  return std::min(t1, t2);
}

// Random localized fields rescaled to Sobolev norm r.
inline RealField random_sphere_field(const Grid& g, double r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  RealField v(g.size(), 0.0);
  const int bumps = 1 + static_cast<int>(U(rng) * 3.0);
  for (int b = 0; b < bumps; ++b) {
    const double amp = 2.0 * U(rng) - 1.0;
    const double width = 0.3 + 5.0 * U(rng);
    const double center = 20.0 * U(rng) - 10.0;
    const double k = U(rng) < 0.5 ? 0.0 : 3.0 * U(rng);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double y = (g.x(j) - center) / width;
      v[j] += amp * std::exp(-0.5 * y * y) * std::cos(k * g.x(j));
    }
  }
  const double s = sobolev_norm(g, v);
  for (auto& x : v) x *= r / s;
  return v;
}

inline SphereBound sphere_bound(const SampledSymbol& sym, double c, const HypothesisCertificate& cert, double r,
                                std::size_t n_samples, std::uint64_t seed) {
  if (!(c < std::sqrt(2.0 * cert.sigma))) throw OutOfRegimeError("sphere bound needs c < sqrt(2 sigma)");
  SphereBound out;
  out.r_c = sphere_radius_limit(c, cert.sigma, cert.kappa);
  if (!(r > 0.0) || r > out.r_c) throw std::invalid_argument("sphere radius must lie in (0, r_c]");
  out.r = r;
  out.ell = sphere_ell(c, cert.sigma, cert.kappa, r);
  out.lower = out.ell * r * r;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n_samples; ++i) {
    RealField v;
    do {
      v = random_sphere_field(sym.grid, r, rng);
    } while (!in_nv(v));
    const double J = functional_J(sym, c, v).J;
    ++out.samples;
    out.min_ratio = std::min(out.min_ratio, J / out.lower);
    if (J < out.lower * (1.0 - 1e-6)) ++out.violations;
  }
  return out;
}

struct MountainPassOptions {
  std::size_t nodes = 33;
  std::size_t sweeps = 200;
  double step = 1e-2;
  std::size_t max_halvings = 20;
  std::size_t sphere_samples = 200;
  std::uint64_t seed = 20240611;
};

struct MountainPassBracket {
  double c = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double straight_upper = 0.0;
  std::vector<double> upper_history;  // running minimum after each sweep
  std::vector<RealField> path;
  PhiC phi;
  SphereBound sphere;
};

namespace detail {
// Preconditioned descent direction M_c^{-1} grad J.
inline RealField preconditioned(const Grid& g, const RealField& inv_mc, const RealField& grad) {
  return apply_multiplier(g, inv_mc, grad);
}

inline double path_max_refined(const SampledSymbol& sym, double c, const std::vector<RealField>& path,
                               std::vector<double>& values) {
  std::size_t imax = 0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > values[imax]) imax = i;
  double best = values[imax];
  const std::size_t n = path.front().size();
  RealField w(n);
  for (std::size_t seg = (imax > 0 ? imax - 1 : 0); seg < std::min(imax + 1, path.size() - 1); ++seg) {
    for (int s = 1; s < 16; ++s) {
      const double t = s / 16.0;
      for (std::size_t j = 0; j < n; ++j) w[j] = (1.0 - t) * path[seg][j] + t * path[seg + 1][j];
      best = std::max(best, functional_J(sym, c, w).J);
    }
  }
  return best;
}

inline void reparameterize(const Grid& g, std::vector<RealField>& path) {
  const std::size_t m = path.size();
  std::vector<double> s(m, 0.0);
  const std::size_t n = path.front().size();
  RealField d(n);
  for (std::size_t i = 1; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) d[j] = path[i][j] - path[i - 1][j];
    s[i] = s[i - 1] + l2_norm(g, d);
  }
  if (!(s.back() > 0.0)) return;
  std::vector<RealField> out(m);
  out.front() = path.front();
  out.back() = path.back();
  std::size_t seg = 0;
  for (std::size_t k = 1; k + 1 < m; ++k) {
    const double target = s.back() * static_cast<double>(k) / static_cast<double>(m - 1);
    while (seg + 1 < m - 1 && s[seg + 1] < target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double t = len > 0.0 ? (target - s[seg]) / len : 0.0;
    out[k].resize(n);
    for (std::size_t j = 0; j < n; ++j) out[k][j] = (1.0 - t) * path[seg][j] + t * path[seg + 1][j];
  }
  path = std::move(out);
}
}  // namespace detail

// Bracket lower <= gamma <= upper for the mountain-pass level. The upper
// value starts from the straight segment t (1 - phi_c) and is lowered by a
// string method whose interior nodes descend along M_c^{-1} grad J.
inline MountainPassBracket mountain_pass_bracket(const PotentialSpec& spec, const Grid& grid, double c,
                                                 const HypothesisCertificate& cert, const MountainPassOptions& opts) {
  const SampledSymbol sym(spec, grid);
  MountainPassBracket br;
  br.c = c;
  br.phi = build_phi_c(sym, c, spec.symbol_sup());
  const double rc = sphere_radius_limit(c, cert.sigma, cert.kappa);
  br.sphere = sphere_bound(sym, c, cert, 0.5 * rc, opts.sphere_samples, opts.seed);
  br.lower = br.sphere.lower;

  const std::size_t n = grid.size();
  const std::size_t m = std::max<std::size_t>(opts.nodes, 3);
  for (int i = 0; i <= 400; ++i) {
    const double t = i / 400.0;
    RealField w(n);
    for (std::size_t j = 0; j < n; ++j) w[j] = t * br.phi.v[j];
    br.straight_upper = std::max(br.straight_upper, functional_J(sym, c, w).J);
  }
  br.upper = br.straight_upper;

  auto mc = sample_mc(spec, c, grid);
  check_multiplier_positive(mc);
  RealField inv_mc(n);
  for (std::size_t k = 0; k < n; ++k) inv_mc[k] = 1.0 / mc[k];

  br.path.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(m - 1);
    br.path[i].resize(n);
    for (std::size_t j = 0; j < n; ++j) br.path[i][j] = t * br.phi.v[j];
  }
  std::vector<double> values(m);
  for (std::size_t i = 0; i < m; ++i) values[i] = functional_J(sym, c, br.path[i]).J;
  std::vector<double> steps(m, opts.step);

  RealField trial(n);
  for (std::size_t sweep = 0; sweep < opts.sweeps; ++sweep) {
    for (std::size_t i = 1; i + 1 < m; ++i) {
      const auto d = detail::preconditioned(grid, inv_mc, grad_J(sym, c, br.path[i]));
      double tau = steps[i];
      for (std::size_t h = 0; h <= opts.max_halvings; ++h, tau *= 0.5) {
        for (std::size_t j = 0; j < n; ++j) trial[j] = br.path[i][j] - tau * d[j];
        if (!in_nv(trial)) continue;
        const double J = functional_J(sym, c, trial).J;
        if (J <= values[i]) {
          br.path[i] = trial;
          values[i] = J;
          break;
        }
      }
      steps[i] = std::min(tau, opts.step);
    }
    detail::reparameterize(grid, br.path);
    for (std::size_t i = 1; i + 1 < m; ++i) values[i] = functional_J(sym, c, br.path[i]).J;
    br.upper = std::min(br.upper, detail::path_max_refined(sym, c, br.path, values));
    br.upper_history.push_back(br.upper);
  }
  return br;
}

}  // namespace nlgp
