#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nlgp/functionals.hpp"
#include "nlgp/hydro.hpp"
#include "support.hpp"

using namespace nlgp;
using nlgp::testing::delta_rho_field;
using nlgp::testing::random_bumps;
using nlgp::testing::sech;

namespace {

const Grid kSmall(16.0, 256);

RealField delta_v(const Grid& g, double c) {
  auto rho = delta_rho_field(g, c);
  for (auto& r : rho) r = 1.0 - r;
  return rho;
}

RealField axpy(const RealField& v, double t, const RealField& d) {
  RealField out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j] + t * d[j];
  return out;
}

double rel_l2(const Grid& g, const RealField& a, const RealField& b) {
  RealField d(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) d[j] = a[j] - b[j];
  return l2_norm(g, d) / std::max(l2_norm(g, a), l2_norm(g, b));
}

}  // namespace

TEST(Action, VacuumIsZero) {
  const SampledSymbol sym(PotentialSpec::gaussian(0.3), kSmall);
  const auto J = functional_J(sym, 1.0, RealField(kSmall.size(), 0.0));
  EXPECT_EQ(J.J, 0.0);
  EXPECT_EQ(J.A, 0.0);
  EXPECT_EQ(J.B, 0.0);
}

TEST(Action, EqualsEnergyMinusSpeedTimesMomentum) {
  const Grid g(64.0, 2048);
  const auto spec = PotentialSpec::delta();
  const SampledSymbol sym(spec, g);
  const auto J = functional_J(sym, 1.0, delta_v(g, 1.0));
  const auto f = assemble(g, delta_rho_field(g, 1.0), 1.0);
  const double Ecp = energy(f, sym).defining - 1.0 * momentum(f).eta_form;
  EXPECT_NEAR(J.J, Ecp, 1e-8 * std::abs(Ecp));
  EXPECT_NEAR(J.J, J.A - J.B, 1e-15);
}

TEST(Action, OutsideNonvanishingSet) {
  RealField v(kSmall.size(), 0.0);
  v[kSmall.center()] = 1.2;
  const auto J = functional_J(PotentialSpec::delta(), kSmall, 1.0, v);
  EXPECT_FALSE(J.in_nv);
  EXPECT_TRUE(std::isinf(J.B) && J.B > 0);
  EXPECT_TRUE(std::isinf(J.J) && J.J < 0);
  EXPECT_TRUE(std::isfinite(J.A));
  EXPECT_THROW(grad_J(SampledSymbol(PotentialSpec::delta(), kSmall), 1.0, v), VortexError);
}

TEST(Gradient, VanishesAtCriticalPoints) {
  const SampledSymbol sym(PotentialSpec::gaussian(0.3), kSmall);
  for (double v : grad_J(sym, 1.0, RealField(kSmall.size(), 0.0))) EXPECT_EQ(v, 0.0);
  const Grid g(64.0, 2048);
  EXPECT_LT(sup_norm(grad_J(SampledSymbol(PotentialSpec::delta(), g), 1.0, delta_v(g, 1.0))), 1e-7);
}

TEST(Gradient, EqualsMinusAmplitudeResidual) {
  std::mt19937_64 rng(21);
  const auto spec = PotentialSpec::exp_repulsive(1.0, 3.0);
  const SampledSymbol sym(spec, kSmall);
  const auto v = random_bumps(kSmall, rng, 0.6);
  RealField rho(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) rho[j] = 1.0 - v[j];
  const auto gr = grad_J(sym, 0.8, v);
  const auto F = rho_residual_field(kSmall, rho, 0.8, sym);
  for (std::size_t j = 0; j < v.size(); ++j) ASSERT_NEAR(gr[j], -F[j], 1e-12 * (1.0 + std::abs(F[j])));
}

TEST(Gradient, FiniteDifferencesOnFiftyRandomFields) {
  std::mt19937_64 rng(20240611);
  const double eps = 1e-5;
  const std::vector<PotentialSpec> specs = {PotentialSpec::delta(), PotentialSpec::gaussian(0.3),
                                            PotentialSpec::exp_repulsive(1.0, 3.0), PotentialSpec::shifted_deltas(0.5),
                                            PotentialSpec::bochner_riesz(0.4)};
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto& spec = specs[i % specs.size()];
    const SampledSymbol sym(spec, kSmall);
    const auto v = random_bumps(kSmall, rng, 0.7);
    const auto psi = random_bumps(kSmall, rng, 1.0);
    const double c = 0.3 + 0.02 * i;
    const double fd = (functional_J(sym, c, axpy(v, eps, psi)).J - functional_J(sym, c, axpy(v, -eps, psi)).J) / (2.0 * eps);
    const double an = inner(kSmall, grad_J(sym, c, v), psi);
    worst = std::max(worst, std::abs(fd - an) / std::abs(an));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Gradient, CentralDifferenceOrder) {
  std::mt19937_64 rng(5);
  const SampledSymbol sym(PotentialSpec::gaussian(0.3), kSmall);
  const auto v = random_bumps(kSmall, rng, 0.7);
  const auto psi = random_bumps(kSmall, rng, 1.0);
  const double an = inner(kSmall, grad_J(sym, 1.0, v), psi);
  std::vector<double> err;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const double fd = (functional_J(sym, 1.0, axpy(v, eps, psi)).J - functional_J(sym, 1.0, axpy(v, -eps, psi)).J) / (2.0 * eps);
    err.push_back(std::abs(fd - an));
  }
  EXPECT_GE(std::log10(err[0] / err[1]), 1.9);
  EXPECT_GE(std::log10(err[1] / err[2]), 1.9);
}

TEST(Hessian, VacuumLinearization) {
  std::mt19937_64 rng(8);
  const SampledSymbol sym(PotentialSpec::delta(), kSmall);
  const auto psi = random_bumps(kSmall, rng, 1.0);
  const auto H = hess_J_apply(sym, 0.0, RealField(kSmall.size(), 0.0), psi);
  const auto d2 = derivative(kSmall, psi, 2);
  for (std::size_t j = 0; j < psi.size(); ++j) ASSERT_NEAR(H[j], -d2[j] + 2.0 * psi[j], 1e-12);
}

TEST(Hessian, SymmetricAndConsistentWithGradient) {
  std::mt19937_64 rng(9);
  for (const auto& spec : {PotentialSpec::gaussian(0.3), PotentialSpec::exp_repulsive(1.0, 3.0), PotentialSpec::soft_core(1.0)}) {
    const SampledSymbol sym(spec, kSmall);
    for (int i = 0; i < 5; ++i) {
      const auto v = random_bumps(kSmall, rng, 0.6);
      const auto phi = random_bumps(kSmall, rng, 1.0);
      const auto psi = random_bumps(kSmall, rng, 1.0);
      const double a = inner(kSmall, hess_J_apply(sym, 0.9, v, psi), phi);
      const double b = inner(kSmall, hess_J_apply(sym, 0.9, v, phi), psi);
      EXPECT_NEAR(a, b, 1e-10 * std::max(std::abs(a), std::abs(b)));

      const double eps = 1e-6;
      RealField fd(v.size());
      const auto gp = grad_J(sym, 0.9, axpy(v, eps, psi));
      const auto gm = grad_J(sym, 0.9, axpy(v, -eps, psi));
      for (std::size_t j = 0; j < v.size(); ++j) fd[j] = (gp[j] - gm[j]) / (2.0 * eps);
      EXPECT_LT(rel_l2(kSmall, fd, hess_J_apply(sym, 0.9, v, psi)), 1e-4);
    }
  }
}

TEST(Hessian, ForwardDifferenceConvergesAtFirstOrder) {
  std::mt19937_64 rng(10);
  const SampledSymbol sym(PotentialSpec::gaussian(0.3), kSmall);
  const auto v = random_bumps(kSmall, rng, 0.6);
  const auto psi = random_bumps(kSmall, rng, 1.0);
  const auto H = hess_J_apply(sym, 1.0, v, psi);
  const auto g0 = grad_J(sym, 1.0, v);
  std::vector<double> err;
  for (double eps : {1e-2, 1e-3}) {
    const auto g1 = grad_J(sym, 1.0, axpy(v, eps, psi));
    RealField fd(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) fd[j] = (g1[j] - g0[j]) / eps;
    err.push_back(rel_l2(kSmall, fd, H));
  }
  EXPECT_NEAR(std::log10(err[0] / err[1]), 1.0, 0.15);
}

TEST(Pairing, VacuumAndSech) {
  const SampledSymbol sym(PotentialSpec::delta(), kSmall);
  const auto z = pairing_identity(sym, 1.0, RealField(kSmall.size(), 0.0));
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_EQ(z.rhs, 0.0);
  RealField v(kSmall.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = 0.3 * sech(kSmall.x(j));
  EXPECT_LT(pairing_identity(sym, 1.0, v).residual, 1e-9);
}

TEST(Pairing, HoldsOnArbitraryNonvanishingFields) {
  std::mt19937_64 rng(31);
  for (const auto& spec : {PotentialSpec::gaussian(0.3), PotentialSpec::exp_repulsive(1.0, 3.0), PotentialSpec::bochner_riesz(0.4),
                           PotentialSpec::shifted_deltas(0.5)}) {
    const SampledSymbol sym(spec, kSmall);
    for (int i = 0; i < 10; ++i) {
      const auto v = random_bumps(kSmall, rng, 0.9);
      EXPECT_LT(pairing_identity(sym, 0.2 + 0.1 * i, v).residual, 1e-8) << spec.describe();
    }
  }
}

TEST(Pairing, AtTheSolitonTwiceTheAction) {
  const Grid g(64.0, 2048);
  const SampledSymbol sym(PotentialSpec::delta(), g);
  const auto v = delta_v(g, 1.0);
  const auto p = pairing_identity(sym, 1.0, v);
  EXPECT_NEAR(p.rhs, 2.0 * functional_J(sym, 1.0, v).J, 1e-8 * p.rhs);
}

TEST(Singularity, SingularTermDivergesMonotonically) {
  const Grid g(32.0, 4096);
  const SampledSymbol sym(PotentialSpec::delta(), g);
  double prev = 0.0;
  for (int k = 1; k <= 6; ++k) {
    RealField v(g.size());
    const double top = 1.0 - std::pow(10.0, -k);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = top * sech(g.x(j));
    const double B = functional_J(sym, 1.0, v).B;
    EXPECT_GT(B, prev) << k;
    prev = B;
  }
  EXPECT_GT(prev, 100.0);
}

TEST(PhiC, NegativeEndpoint) {
  const Grid g(128.0, 2048);
  const auto d = build_phi_c(PotentialSpec::delta(), g, 1.0);
  EXPECT_LT(d.J, 0.0);
  EXPECT_LT(d.delta, 1.0 / (2.0 * 1.0));
  EXPECT_TRUE(in_nv(d.v));
  EXPECT_LT(build_phi_c(PotentialSpec::gaussian(0.3), g, 1.0).J, 0.0);
  const auto near = build_phi_c(PotentialSpec::delta(), g, 1.4);
  EXPECT_LT(near.J, 0.0);
  EXPECT_GE(near.r, d.r);
  EXPECT_GT(near.delta, d.delta);
}

TEST(PhiC, GridTooSmall) { EXPECT_THROW(build_phi_c(PotentialSpec::delta(), Grid(2.0, 64), 0.5), GridTooSmallError); }

TEST(Sphere, DeltaRadiusAndConstant) {
  const auto cert = certify_h1(PotentialSpec::delta());
  const double rc = sphere_radius_limit(1.0, cert.sigma, cert.kappa);
  EXPECT_NEAR(rc, 1.0 - 1.0 / std::sqrt(2.0), 1e-12);
  // Second term vanishes at r_c.
  EXPECT_NEAR(0.25 * (1.0 - 1.0 / (2.0 * (1.0 - rc) * (1.0 - rc))), 0.0, 1e-12);
  const double r = 0.5 * rc;
  EXPECT_DOUBLE_EQ(sphere_ell(1.0, 1.0, 0.0, r), 0.25 * (1.0 - 1.0 / (2.0 * (1.0 - r) * (1.0 - r))));
  // kappa = 0 makes the first term exactly 1/2.
  EXPECT_DOUBLE_EQ(0.5 * (1.0 - 2.0 * 0.0 * (1.0 + r) * (1.0 + r)), 0.5);
}

TEST(Sphere, RandomSamplesRespectTheBound) {
  const Grid g(32.0, 512);
  const auto spec = PotentialSpec::delta();
  const auto cert = certify_h1(spec);
  const double rc = sphere_radius_limit(1.0, cert.sigma, cert.kappa);
  const auto sb = sphere_bound(SampledSymbol(spec, g), 1.0, cert, 0.5 * rc, 200, 20240611);
  EXPECT_EQ(sb.samples, 200u);
  EXPECT_EQ(sb.violations, 0u);
  EXPECT_GT(sb.lower, 0.0);
  EXPECT_GE(sb.min_ratio, 1.0);
  EXPECT_THROW(sphere_bound(SampledSymbol(spec, g), 1.5, cert, 0.1, 1, 1), OutOfRegimeError);
}

TEST(MountainPass, BracketStructure) {
  const Grid g(32.0, 512);
  const auto spec = PotentialSpec::delta();
  MountainPassOptions opts;
  opts.nodes = 9;
  opts.sweeps = 15;
  opts.sphere_samples = 20;
  const auto br = mountain_pass_bracket(spec, g, 1.0, certify_h1(spec), opts);
  EXPECT_GT(br.lower, 0.0);
  EXPECT_LE(br.lower, br.upper);
  EXPECT_LE(br.upper, br.straight_upper);
  EXPECT_LT(br.phi.J, 0.0);
  ASSERT_EQ(br.upper_history.size(), opts.sweeps);
  for (std::size_t i = 1; i < br.upper_history.size(); ++i) EXPECT_LE(br.upper_history[i], br.upper_history[i - 1]);
  const SampledSymbol sym(spec, g);
  EXPECT_EQ(functional_J(sym, 1.0, br.path.front()).J, 0.0);
  EXPECT_LT(functional_J(sym, 1.0, br.path.back()).J, 0.0);
  for (const auto& node : br.path) EXPECT_TRUE(in_nv(node));
}
