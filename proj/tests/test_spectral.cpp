#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nlgp/potentials.hpp"
#include "nlgp/spectral.hpp"
#include "support.hpp"

using namespace nlgp;
using nlgp::testing::sech;

TEST(Grid, NodesAndFrequencies) {
  const Grid g(10.0, 64);
  EXPECT_DOUBLE_EQ(g.spacing(), 20.0 / 64.0);
  EXPECT_DOUBLE_EQ(g.x(0), -10.0);
  EXPECT_DOUBLE_EQ(g.x(g.center()), 0.0);
  for (std::size_t j = 1; j < g.size(); ++j) EXPECT_GT(g.x(j), g.x(j - 1));
  for (std::size_t k = 1; k < g.size() / 2; ++k) EXPECT_DOUBLE_EQ(g.xi(k), -g.xi(g.size() - k));
  EXPECT_DOUBLE_EQ(g.xi(1), std::numbers::pi / 10.0);
  EXPECT_THROW(Grid(1.0, 100), std::invalid_argument);
  EXPECT_THROW(Grid(-1.0, 64), std::invalid_argument);
}

TEST(Derivative, SineEigenfunction) {
  const Grid g(5.0, 64);
  RealField f(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) f[j] = std::sin(std::numbers::pi * g.x(j) / 5.0);
  const auto d = derivative(g, f, 1);
  for (std::size_t j = 0; j < g.size(); ++j)
    EXPECT_NEAR(d[j], std::numbers::pi / 5.0 * std::cos(std::numbers::pi * g.x(j) / 5.0), 1e-12);
}

TEST(Derivative, ConstantVanishes) {
  const Grid g(5.0, 64);
  const RealField f(g.size(), 2.5);
  for (int k = 1; k <= 4; ++k)
    for (double v : derivative(g, f, k)) EXPECT_NEAR(v, 0.0, 1e-13);
}

TEST(Derivative, SechSquaredSecondDerivative) {
  const Grid g(40.0, 1024);
  RealField f(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) f[j] = std::pow(sech(g.x(j)), 2);
  const auto d = derivative(g, f, 2);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double s = sech(g.x(j)), t = std::tanh(g.x(j));
    EXPECT_NEAR(d[j], 4.0 * s * s * t * t - 2.0 * s * s * s * s, 1e-9);
  }
}

TEST(Integrate, Examples) {
  const Grid g(40.0, 1024);
  EXPECT_NEAR(integrate(g, RealField(g.size(), 1.0)), 80.0, 1e-12);
  RealField s2(g.size()), s4(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    s2[j] = std::pow(sech(g.x(j)), 2);
    s4[j] = std::pow(sech(g.x(j)), 4);
  }
  EXPECT_NEAR(integrate(g, s2), 2.0, 1e-10);
  EXPECT_NEAR(integrate(g, s4), 4.0 / 3.0, 1e-10);
}

TEST(CumulativeIntegral, SechSquaredAntiderivative) {
  const Grid g(40.0, 1024);
  RealField f(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) f[j] = std::pow(sech(g.x(j)), 2);
  const auto ci = cumulative_integral(g, f);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(ci.values[j], std::tanh(g.x(j)) + 1.0, 1e-10);
  EXPECT_NEAR(ci.total, 2.0, 1e-10);
}

TEST(Convolve, DeltaIsIdentity) {
  const Grid g(20.0, 256);
  std::mt19937_64 rng(7);
  const auto f = nlgp::testing::random_bumps(g, rng, 1.0);
  const auto w = convolve(PotentialSpec::delta(), g, f);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(w[j], f[j], 1e-14);
}

TEST(Convolve, GaussianDensities) {
  // W_lambda is the centered normal density of variance 2 lambda.
  const Grid g(40.0, 1024);
  const double lam = 0.3, s2 = 0.8;
  auto density = [](double var, double x) { return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * std::numbers::pi * var); };
  RealField f(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) f[j] = density(2.0 * s2, g.x(j));
  const auto w = convolve(PotentialSpec::gaussian(lam), g, f);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(w[j], density(2.0 * (s2 + lam), g.x(j)), 1e-8);
}

TEST(Spectral, DiscreteParseval) {
  const Grid g(20.0, 512);
  std::mt19937_64 rng(11);
  const auto f = nlgp::testing::random_bumps(g, rng, 1.0);
  const RealField one(g.size(), 1.0);
  const double phys = inner(g, f, f);
  const double four = spectral_quadratic(g, one, f);
  EXPECT_NEAR(phys, four, 1e-12 * phys);
}

TEST(Spectral, ConvolutionIsSymmetric) {
  const Grid g(20.0, 512);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> N01;
  for (const auto& spec : {PotentialSpec::gaussian(0.3), PotentialSpec::exp_repulsive(1.0, 3.0),
                           PotentialSpec::bochner_riesz(0.4), PotentialSpec::shifted_deltas(0.5)}) {
    RealField f(g.size()), h(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      f[j] = N01(rng);
      h[j] = N01(rng);
    }
    const double a = inner(g, convolve(spec, g, f), h);
    const double b = inner(g, convolve(spec, g, h), f);
    EXPECT_NEAR(a, b, 1e-12 * std::max(std::abs(a), 1.0)) << spec.describe();
  }
}

TEST(Spectral, ConvolutionBound) {
  const Grid g(20.0, 512);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> N01;
  for (const auto& spec : {PotentialSpec::exp_repulsive(1.0, 3.0), PotentialSpec::shifted_deltas(0.5),
                           PotentialSpec::berloff(-36.0, 2687.0, 30.0)}) {
    RealField f(g.size());
    for (auto& v : f) v = N01(rng);
    EXPECT_LE(l2_norm(g, convolve(spec, g, f)), spec.symbol_sup() * l2_norm(g, f) * (1.0 + 1e-12)) << spec.describe();
  }
}

TEST(Spectral, RealFieldsStayReal) {
  const Grid g(20.0, 256);
  std::mt19937_64 rng(14);
  const auto f = nlgp::testing::random_bumps(g, rng, 1.0);
  const auto back = ifft(fft(f));
  for (std::size_t j = 0; j < g.size(); ++j) {
    EXPECT_NEAR(back[j].real(), f[j], 1e-15);
    EXPECT_NEAR(back[j].imag(), 0.0, 1e-15);
  }
  for (int k = 1; k <= 4; ++k) {
    ComplexField z(f.begin(), f.end());
    const auto d = derivative(g, std::span<const Complex>(z), k);
    double top = 0.0;
    for (const auto& v : d) top = std::max(top, std::abs(v));
    for (const auto& v : d) EXPECT_NEAR(v.imag(), 0.0, 1e-14 * top) << k;
  }
}

TEST(Spectral, SymmetryHelpers) {
  const Grid g(8.0, 16);
  RealField f(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) f[j] = g.x(j) + 0.1 * g.x(j) * g.x(j);
  const auto r = reflect(f);
  for (std::size_t j = 1; j < g.size(); ++j) EXPECT_DOUBLE_EQ(r[j], f[g.size() - j]);
  even_project(f);
  for (std::size_t j = 1; j < g.size(); ++j) EXPECT_DOUBLE_EQ(f[j], f[g.size() - j]);
  const auto s = circular_shift(std::span<const double>(f), 3);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_DOUBLE_EQ(s[(j + 3) % g.size()], f[j]);
}
