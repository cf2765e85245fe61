#pragma once

// Soliton computation: Newton-Krylov on the amplitude equation with the
// 1/M_c preconditioner, continuation in c, descent fallback, sonic sweep.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nlgp/errors.hpp"
#include "nlgp/functionals.hpp"
#include "nlgp/hydro.hpp"
#include "nlgp/potentials.hpp"
#include "nlgp/spectral.hpp"

namespace nlgp {

enum class SymmetryMode { EvenSubspace, FullGrid };

inline const char* to_string(SymmetryMode m) { return m == SymmetryMode::EvenSubspace ? "even_subspace" : "full_grid"; }

struct SolverOptions {
  double tol_newton = 1e-10;
  std::size_t max_iter = 50;
  double damping = 0.5;
  std::size_t max_halvings = 20;
  double positivity_floor = kPositivityFloor;
  SymmetryMode symmetry = SymmetryMode::EvenSubspace;
  double dc_init = 0.05;
  double dc_min = 1e-5;
  bool auto_refine = true;
  std::size_t max_refinements = 2;  // per kind: domain doubling and spacing halving
  double tail_tol = 1e-10;
  double resolution_tol = 1e-10;  // relative spectral content of rho^-2 - 1 above 3/4 of xi_max
  double identity_tol = 1e-6;
  std::size_t gmres_restart = 80;
  std::size_t gmres_max_iter = 800;
};

enum class SolveStatus { Converged, Trivialized, NewtonFailed, IdentityFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::Trivialized: return "trivialized";
    case SolveStatus::NewtonFailed: return "newton_failed";
    default: return "identity_failure";
  }
}

struct SolitonSolution {
  PotentialSpec spec;
  WaveFields fields;
  SolveStatus status = SolveStatus::NewtonFailed;
  bool converged = false;
  std::size_t newton_iters = 0;
  std::size_t gmres_iters = 0;
  std::size_t refinements = 0;
  std::vector<double> residual_history;  // sup norm of F before each step
  ResidualNorms residual;  // amplitude equation
  ResidualNorms residual_tw;  // complex traveling-wave equation
  IdentityReport identities;
  EnergyForms E;
  MomentumForms p;
  ActionValue J;
  double tail = 0.0;  // max |1 - rho| on |x| >= 0.9 L
  double seconds = 0.0;

  const Grid& grid() const { return fields.grid; }
  double c() const { return fields.c; }
  double eta_max() const { return sup_norm(fields.eta); }
  double min_rho() const { return *std::min_element(fields.rho.begin(), fields.rho.end()); }
};

inline RealField initial_guess(const Grid& grid, double c) {
  if (!(c > 0.0) || !(c < std::sqrt(2.0))) throw OutOfRegimeError("initial guess needs 0 < c < sqrt(2)");
  const double a = 2.0 - c * c;
  const double nu = 0.5 * std::sqrt(a);
  RealField rho(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double s = 1.0 / std::cosh(nu * grid.x(j));
    rho[j] = std::sqrt(1.0 - 0.5 * a * s * s);
  }
  return rho;
}

namespace detail {

struct GmresResult {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

inline double dot(const RealField& a, const RealField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Restarted GMRES with right preconditioning, modified Gram-Schmidt and
// Givens rotations. Solves A x = b starting from x.
inline GmresResult gmres(const std::function<RealField(const RealField&)>& A,
                         const std::function<RealField(const RealField&)>& Minv, const RealField& b, RealField& x,
                         double rtol, std::size_t restart, std::size_t max_iter) {
  GmresResult res;
  const std::size_t n = b.size();
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  while (res.iterations < max_iter) {
    RealField r = A(x);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    double beta = std::sqrt(dot(r, r));
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= rtol) {
      res.converged = true;
      return res;
    }
    const std::size_t m = restart;
    std::vector<RealField> V(m + 1);
    std::vector<std::vector<double>> H(m + 1, std::vector<double>(m, 0.0));
    std::vector<double> cs(m), sn(m), gvec(m + 1, 0.0);
    V[0] = r;
    for (auto& v : V[0]) v /= beta;
    gvec[0] = beta;
    std::size_t k = 0;
    for (; k < m && res.iterations < max_iter; ++k) {
      ++res.iterations;
      RealField w = A(Minv(V[k]));
      for (std::size_t i = 0; i <= k; ++i) {
        H[i][k] = dot(w, V[i]);
        for (std::size_t j = 0; j < n; ++j) w[j] -= H[i][k] * V[i][j];
      }
      H[k + 1][k] = std::sqrt(dot(w, w));
      if (H[k + 1][k] > 0.0) {
        V[k + 1] = w;
        for (auto& v : V[k + 1]) v /= H[k + 1][k];
      }
      for (std::size_t i = 0; i < k; ++i) {
        const double t = cs[i] * H[i][k] + sn[i] * H[i + 1][k];
        H[i + 1][k] = -sn[i] * H[i][k] + cs[i] * H[i + 1][k];
        H[i][k] = t;
      }
      const double d = std::hypot(H[k][k], H[k + 1][k]);
      cs[k] = d > 0.0 ? H[k][k] / d : 1.0;
      sn[k] = d > 0.0 ? H[k + 1][k] / d : 0.0;
      H[k][k] = d;
      H[k + 1][k] = 0.0;
      gvec[k + 1] = -sn[k] * gvec[k];
      gvec[k] = cs[k] * gvec[k];
      res.relative_residual = std::abs(gvec[k + 1]) / bnorm;
      if (res.relative_residual <= rtol || H[k][k] == 0.0) {
        ++k;
        break;
      }
    }
    std::vector<double> y(k, 0.0);
    for (std::size_t i = k; i-- > 0;) {
      double s = gvec[i];
      for (std::size_t j = i + 1; j < k; ++j) s -= H[i][j] * y[j];
      y[i] = H[i][i] != 0.0 ? s / H[i][i] : 0.0;
    }
    RealField z(n, 0.0);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < n; ++j) z[j] += y[i] * V[i][j];
    const auto mz = Minv(z);
    for (std::size_t j = 0; j < n; ++j) x[j] += mz[j];
    if (res.relative_residual <= rtol) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

inline double tail_size(const Grid& g, std::span<const double> rho) {
  double t = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j)
    if (std::abs(g.x(j)) >= 0.9 * g.half_length()) t = std::max(t, std::abs(1.0 - rho[j]));
  return t;
}

// Relative size of the upper quarter of the spectrum of rho^-2 - 1, which
// carries the phase gradient and is the least smooth field in the system.
inline double spectral_tail(const Grid& g, std::span<const double> rho) {
  RealField q(rho.size());
  for (std::size_t j = 0; j < rho.size(); ++j) q[j] = 1.0 / (rho[j] * rho[j]) - 1.0;
  const auto Q = fft(q);
  double all = 0.0, hi = 0.0;
  for (std::size_t k = 0; k < Q.size(); ++k) {
    all = std::max(all, std::abs(Q[k]));
    if (std::abs(g.xi(k)) >= 0.75 * g.xi_max()) hi = std::max(hi, std::abs(Q[k]));
  }
  return all > 0.0 ? hi / all : 0.0;
}

// Trigonometric interpolation of v onto the grid with half the spacing.
inline RealField interpolate_halved(std::span<const double> v) {
  const std::size_t n = v.size();
  const auto V = fft(v);
  ComplexField W(2 * n, Complex(0.0));
  for (std::size_t k = 0; k < n / 2; ++k) W[k] = V[k];
  for (std::size_t k = n / 2 + 1; k < n; ++k) W[k + n] = V[k];
  W[n / 2] = 0.5 * V[n / 2];
  W[n / 2 + n] = 0.5 * V[n / 2];
  // Both grids start at -L, so fine node 2j coincides with coarse node j.
  auto w = real_part(ifft(W));
  for (auto& x : w) x *= 2.0;
  return w;
}

// Embeds v on the doubled grid, zero outside the old window.
inline RealField embed_doubled(const Grid& coarse, std::span<const double> v) {
  RealField out(2 * coarse.size(), 0.0);
  const std::size_t off = coarse.size() / 2;
  for (std::size_t j = 0; j < coarse.size(); ++j) out[j + off] = v[j];
  return out;
}

inline std::size_t argmax_abs(std::span<const double> f) {
  std::size_t k = 0;
  for (std::size_t j = 1; j < f.size(); ++j)
    if (std::abs(f[j]) > std::abs(f[k])) k = j;
  return k;
}

inline void check_regime(const PotentialSpec& spec, double c) {
  const double cs = sound_speed(spec);
  if (!(std::abs(c) < cs)) throw OutOfRegimeError("speed is not subsonic (|c| >= c*)");
}

}  // namespace detail

// Builds the full diagnostic record for an amplitude profile.
inline SolitonSolution make_solution(const PotentialSpec& spec, const Grid& grid, double c, RealField rho,
                                     double identity_tol = 1e-6) {
  SolitonSolution s;
  s.spec = spec;
  const SampledSymbol sym(spec, grid);
  s.residual = residual_rho(grid, rho, c, sym);
  s.tail = detail::tail_size(grid, rho);
  s.fields = assemble(grid, std::move(rho), c);
  s.residual_tw = residual_tw(s.fields, sym);
  s.identities = identity_suite(s.fields, sym, identity_tol);
  s.E = energy(s.fields, sym);
  s.p = momentum(s.fields);
  RealField v(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) v[j] = 1.0 - s.fields.rho[j];
  s.J = functional_J(sym, c, v);
  return s;
}

namespace detail {

struct NewtonCore {
  RealField v;
  SolveStatus status = SolveStatus::NewtonFailed;
  std::size_t iters = 0;
  std::size_t gmres_iters = 0;
  std::vector<double> history;
};

inline NewtonCore newton_core(const PotentialSpec& spec, const Grid& grid, double c, RealField v,
                              const SolverOptions& opts) {
  const SampledSymbol sym(spec, grid);
  auto mc = sample_mc(spec, c, grid);
  check_multiplier_positive(mc);
  const std::size_t n = grid.size();
  RealField inv_mc(n);
  for (std::size_t k = 0; k < n; ++k) inv_mc[k] = 1.0 / mc[k];
  const bool even = opts.symmetry == SymmetryMode::EvenSubspace;
  auto project = [&](RealField& f) {
    if (even) even_project(f);
  };

  NewtonCore out;
  project(v);
  for (std::size_t it = 0;; ++it) {
    auto g = grad_J(sym, c, v);
    project(g);
    const double res = sup_norm(g);
    out.history.push_back(res);
    if (res <= opts.tol_newton) {
      out.status = SolveStatus::Converged;
      break;
    }
    if (it >= opts.max_iter) {
      out.status = SolveStatus::NewtonFailed;
      break;
    }
    ++out.iters;
    RealField rhs(n);
    for (std::size_t j = 0; j < n; ++j) rhs[j] = -g[j];
    auto A = [&](const RealField& psi) {
      auto r = hess_J_apply(sym, c, v, psi);
      project(r);
      return r;
    };
    auto P = [&](const RealField& r) { return apply_multiplier(grid, inv_mc, r); };
    RealField delta(n, 0.0);
    const double rtol = std::clamp(0.1 * res, 1e-13, 1e-3);
    const auto gm = gmres(A, P, rhs, delta, rtol, opts.gmres_restart, opts.gmres_max_iter);
    out.gmres_iters += gm.iterations;
    project(delta);

    const double g2 = std::sqrt(dot(g, g));
    double t = 1.0;
    bool accepted = false, positivity_blocked = false;
    RealField trial(n);
    for (std::size_t h = 0; h <= opts.max_halvings; ++h, t *= opts.damping) {
      for (std::size_t j = 0; j < n; ++j) trial[j] = v[j] + t * delta[j];
      if (!in_nv(trial, opts.positivity_floor)) {
        positivity_blocked = true;
        continue;
      }
      auto gt = grad_J(sym, c, trial);
      project(gt);
      const double gt2 = std::sqrt(dot(gt, gt));
      if (gt2 <= (1.0 - 1e-4 * t) * g2 || sup_norm(gt) <= opts.tol_newton) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (positivity_blocked) throw VanishingAmplitudeError("every damped Newton step leaves the nonvanishing set");
      out.status = SolveStatus::NewtonFailed;
      break;
    }
    v = trial;
    if (!even) {
      // Translation gauge: keep the density dip at the grid center.
      const auto k = argmax_abs(v);
      v = circular_shift(std::span<const double>(v), static_cast<long long>(grid.center()) - static_cast<long long>(k));
    }
  }
  out.v = std::move(v);
  return out;
}

}  // namespace detail

// Damped Newton on F(rho) = 0 with GMRES linear solves preconditioned by
// 1/M_c. On success the dip is centered and the full diagnostics computed.
inline SolitonSolution newton_solve(const PotentialSpec& spec, const Grid& grid0, double c, const RealField& rho0,
                                    const SolverOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::check_regime(spec, c);
  detail::check_length(grid0, rho0.size());
  for (double r : rho0)
    if (!(r > opts.positivity_floor)) throw VortexError("initial amplitude below the positivity floor");

  Grid grid = grid0;
  RealField v(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) v[j] = 1.0 - rho0[j];

  std::size_t domain_doublings = 0, spacing_halvings = 0;
  std::size_t iters = 0, giters = 0;
  std::vector<double> history;
  detail::NewtonCore core;
  for (;;) {
    core = detail::newton_core(spec, grid, c, std::move(v), opts);
    iters += core.iters;
    giters += core.gmres_iters;
    history.insert(history.end(), core.history.begin(), core.history.end());
    v = std::move(core.v);
    if (core.status != SolveStatus::Converged || !opts.auto_refine) break;
    RealField rho(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) rho[j] = 1.0 - v[j];
    if (sup_norm(v) < 1e-8) break;
    if (detail::tail_size(grid, rho) > opts.tail_tol && domain_doublings < opts.max_refinements) {
      v = detail::embed_doubled(grid, v);
      grid = grid.refined();
      ++domain_doublings;
    } else if (detail::spectral_tail(grid, rho) > opts.resolution_tol && spacing_halvings < opts.max_refinements) {
      v = detail::interpolate_halved(v);
      grid = Grid(grid.half_length(), 2 * grid.size());
      ++spacing_halvings;
    } else {
      break;
    }
  }
  const std::size_t refinements = domain_doublings + spacing_halvings;

  // Translation gauge: argmax eta at x = 0.
  const auto k = detail::argmax_abs(v);
  v = circular_shift(std::span<const double>(v), static_cast<long long>(grid.center()) - static_cast<long long>(k));

  RealField rho(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) rho[j] = 1.0 - v[j];
  auto sol = make_solution(spec, grid, c, std::move(rho), opts.identity_tol);
  sol.newton_iters = iters;
  sol.gmres_iters = giters;
  sol.refinements = refinements;
  sol.residual_history = std::move(history);
  sol.status = core.status;
  if (core.status == SolveStatus::Converged) {
    if (sol.eta_max() < 1e-8)
      sol.status = SolveStatus::Trivialized;
    else if (!sol.identities.all_pass())
      sol.status = SolveStatus::IdentityFailure;
  }
  sol.converged = sol.status == SolveStatus::Converged;
  sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

inline SolitonSolution newton_solve(const PotentialSpec& spec, const Grid& grid, double c, const SolverOptions& opts = {}) {
  detail::check_regime(spec, c);
  return newton_solve(spec, grid, c, initial_guess(grid, std::abs(c)), opts);
}

enum class BranchTermination { ReachedCmax, Trivialized, NewtonFailed, SonicLimit };

inline const char* to_string(BranchTermination t) {
  switch (t) {
    case BranchTermination::ReachedCmax: return "reached_cmax";
    case BranchTermination::Trivialized: return "trivialized";
    case BranchTermination::NewtonFailed: return "newton_failed";
    default: return "sonic_limit";
  }
}

struct SolitonBranch {
  PotentialSpec spec;
  std::vector<SolitonSolution> members;
  BranchTermination termination = BranchTermination::NewtonFailed;
};

namespace detail {
// Transfers a profile between grids of equal spacing (or equal grids).
inline RealField transfer(const Grid& from, std::span<const double> rho, const Grid& to) {
  if (from == to) return RealField(rho.begin(), rho.end());
  RealField out(to.size(), 1.0);
  for (std::size_t j = 0; j < to.size(); ++j) {
    const double x = to.x(j);
    const double pos = (x + from.half_length()) / from.spacing();
    if (pos < 0.0 || pos > static_cast<double>(from.size() - 1)) continue;
    const auto i = static_cast<std::size_t>(pos);
    const double t = pos - static_cast<double>(i);
    out[j] = i + 1 < from.size() ? (1.0 - t) * rho[i] + t * rho[i + 1] : rho[i];
  }
  return out;
}
}  // namespace detail

// Marches c from c_from to c_to; dc halves on failure and grows by 1.3
// after easy solves. Each member seeds the next.
inline SolitonBranch continue_branch(const PotentialSpec& spec, const Grid& grid, double c_from, double c_to,
                                     const SolverOptions& opts = {},
                                     const std::function<void(const SolitonSolution&)>& on_member = {}) {
  SolitonBranch br;
  br.spec = spec;
  const double cs = sound_speed(spec);
  auto attempt = [&](double c, const Grid& g, const RealField& seed) -> std::optional<SolitonSolution> {
    try {
      auto s = newton_solve(spec, g, c, seed, opts);
      return s;
    } catch (const VanishingAmplitudeError&) {
      return std::nullopt;
    } catch (const SupersonicMultiplierError&) {
      return std::nullopt;
    }
  };

  auto first = attempt(c_from, grid, initial_guess(grid, c_from));
  if (!first || first->status == SolveStatus::NewtonFailed || first->status == SolveStatus::IdentityFailure) {
    br.termination = BranchTermination::NewtonFailed;
    return br;
  }
  if (first->status == SolveStatus::Trivialized) {
    br.termination = BranchTermination::Trivialized;
    return br;
  }
  br.members.push_back(std::move(*first));
  if (on_member) on_member(br.members.back());

  double dc = opts.dc_init;
  double c = c_from;
  while (c < c_to - 1e-14) {
    const double cn = std::min(c + dc, c_to);
    if (cn >= cs) {
      br.termination = BranchTermination::SonicLimit;
      return br;
    }
    const auto& prev = br.members.back();
    auto s = attempt(cn, prev.grid(), prev.fields.rho);
    if (s && s->status == SolveStatus::Trivialized) {
      br.termination = BranchTermination::Trivialized;
      return br;
    }
    if (s && s->converged) {
      const bool easy = s->newton_iters <= 4;
      br.members.push_back(std::move(*s));
      if (on_member) on_member(br.members.back());
      c = cn;
      if (easy) dc *= 1.3;
    } else {
      dc *= 0.5;
      if (dc < opts.dc_min) {
        br.termination = BranchTermination::NewtonFailed;
        return br;
      }
    }
  }
  br.termination = BranchTermination::ReachedCmax;
  return br;
}

enum class FlowMode {
  Plain,  // strict descent of J_c
  Nehari  // descent of J_c on {J_c'(v) v = 0}: each step is rescaled to the ray maximum
};

struct GradientFlowOptions {
  FlowMode mode = FlowMode::Nehari;
  std::size_t max_steps = 2000;
  double tol = 1e-9;  // on ||grad J||_inf
  double tau0 = 0.5;
  std::size_t max_halvings = 30;
  double positivity_floor = kPositivityFloor;
  SymmetryMode symmetry = SymmetryMode::EvenSubspace;
};

struct GradientFlowResult {
  RealField v;
  std::vector<double> J_history;  // J after each accepted step (index 0 = start)
  std::size_t steps = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

namespace detail {
// Maximizer of t -> J(t v) by bisection on d/dt J(tv) = <grad J(tv), v>.
inline std::optional<double> ray_maximum(const SampledSymbol& sym, double c, const RealField& v, double floor) {
  const double vmax = *std::max_element(v.begin(), v.end());
  const double tmax = vmax > 0.0 ? (1.0 - floor) / vmax : 4.0;
  auto slope = [&](double t) {
    RealField w(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) w[j] = t * v[j];
    return inner(sym.grid, grad_J(sym, c, w), v);
  };
  double lo = 0.25, hi = std::min(4.0, tmax);
  if (!(lo < hi) || slope(lo) <= 0.0 || slope(hi) >= 0.0) return std::nullopt;
  for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}
}  // namespace detail

// Preconditioned descent v <- v - tau M_c^{-1} grad J with backtracking
// for J decrease and NV membership. J is unbounded below, so this is only a
// local relaxation tool near a seed.
inline GradientFlowResult gradient_flow(const PotentialSpec& spec, const Grid& grid, double c, RealField v,
                                        const GradientFlowOptions& opts = {}) {
  const SampledSymbol sym(spec, grid);
  auto mc = sample_mc(spec, c, grid);
  check_multiplier_positive(mc);
  RealField inv_mc(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) inv_mc[k] = 1.0 / mc[k];
  const bool even = opts.symmetry == SymmetryMode::EvenSubspace;

  GradientFlowResult out;
  double J = functional_J(sym, c, v).J;
  out.J_history.push_back(J);
  double tau = opts.tau0;
  RealField trial(v.size());
  for (;;) {
    auto g = grad_J(sym, c, v);
    if (even) even_project(g);
    out.grad_norm = sup_norm(g);
    if (out.grad_norm <= opts.tol) {
      out.converged = true;
      break;
    }
    if (out.steps >= opts.max_steps) break;
    const auto d = apply_multiplier(grid, inv_mc, g);
    bool accepted = false;
    double t = std::min(2.0 * tau, 1.0);
    for (std::size_t h = 0; h <= opts.max_halvings; ++h, t *= 0.5) {
      for (std::size_t j = 0; j < v.size(); ++j) trial[j] = v[j] - t * d[j];
      if (opts.mode == FlowMode::Nehari) {
        const auto s = detail::ray_maximum(sym, c, trial, opts.positivity_floor);
        if (!s) continue;
        for (auto& x : trial) x *= *s;
      }
      if (!in_nv(trial, opts.positivity_floor)) continue;
      const double Jt = functional_J(sym, c, trial).J;
      if (Jt < J) {
        accepted = true;
        J = Jt;
        tau = t;
        break;
      }
    }
    if (!accepted) break;
    v = trial;
    ++out.steps;
    out.J_history.push_back(J);
  }
  out.v = std::move(v);
  return out;
}

struct SonicRow {
  double gap = 0.0;  // c* - c
  double c = 0.0;
  double eta_max = 0.0;
  double E = 0.0;
  double p = 0.0;
  NonvanishingReport nonvanishing;
  bool converged = false;
};

struct SonicSweep {
  std::vector<SonicRow> rows;
  double gamma = 0.0;  // fit of ||eta||_inf ~ (c*^2 - c^2)^gamma
  double symbol_second_derivative = 0.0;  // W^''(0)
  bool amplitude_decreasing = false;
  bool nonvanishing_everywhere = false;
};

namespace detail {
// Long-wave rescaling of a sonic seed: eta scales like eps^2 and the width
// like 1/eps, with eps^2 = c*^2 - c^2.
inline RealField sonic_rescale(const Grid& g, std::span<const double> rho, double eps_from, double eps_to) {
  const double amp = (eps_to * eps_to) / (eps_from * eps_from);
  const double sx = eps_to / eps_from;
  const std::size_t n = g.size();
  RealField out(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double pos = (sx * g.x(j) + g.half_length()) / g.spacing();
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (pos < 0.0 || i + 1 >= n) continue;
    const double eta = 1.0 - std::pow(std::lerp(rho[i], rho[i + 1], pos - static_cast<double>(i)), 2);
    out[j] = std::sqrt(1.0 - amp * eta);
  }
  return out;
}
}  // namespace detail

inline std::vector<double> default_sonic_gaps() { return {0.2, 0.15, 0.1, 0.07, 0.05, 0.03, 0.02, 0.01}; }

// Approaches c* from below along the listed gaps, each solve seeded by the
// previous one, and fits the amplitude exponent.
inline SonicSweep sonic_sweep(const PotentialSpec& spec, const Grid& grid, const std::vector<double>& gaps,
                              const SolverOptions& opts = {}) {
  SonicSweep sw;
  sw.symbol_second_derivative = spec.second_derivative_at_zero();
  const double cs = sound_speed(spec);
  Grid g = grid;
  RealField seed;
  double seed_eps = 0.0;
  std::vector<double> lx, ly;
  for (double gap : gaps) {
    const double c = cs - gap;
    SonicRow row;
    row.gap = gap;
    row.c = c;
    try {
      auto s = seed.empty() ? newton_solve(spec, g, c, opts)
                            : newton_solve(spec, g, c, detail::sonic_rescale(g, seed, seed_eps, std::sqrt(cs * cs - c * c)), opts);
      row.converged = s.converged;
      row.eta_max = s.eta_max();
      row.E = s.E.defining;
      row.p = s.p.eta_form;
      row.nonvanishing = nonvanishing_check(s.fields, spec);
      if (s.converged) {
        g = s.grid();
        seed = s.fields.rho;
        seed_eps = std::sqrt(cs * cs - c * c);
        lx.push_back(std::log(cs * cs - c * c));
        ly.push_back(std::log(row.eta_max));
      }
    } catch (const Error&) {
      row.converged = false;
    }
    sw.rows.push_back(row);
  }
  if (lx.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    sw.gamma = sxy / sxx;
  }
  sw.amplitude_decreasing = true;
  sw.nonvanishing_everywhere = true;
  for (std::size_t i = 0; i < sw.rows.size(); ++i) {
    if (!sw.rows[i].converged || !sw.rows[i].nonvanishing.pass) sw.nonvanishing_everywhere = false;
    if (i > 0 && !(sw.rows[i].eta_max < sw.rows[i - 1].eta_max)) sw.amplitude_decreasing = false;
  }
  return sw;
}

}  // namespace nlgp
