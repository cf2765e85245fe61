#pragma once

// Closed-form delta soliton and small helpers shared by the test suites.

#include <cmath>
#include <random>

#include "nlgp/spectral.hpp"

namespace nlgp::testing {

inline double sech(double x) { return 1.0 / std::cosh(x); }

// rho^2 = 1 - ((2 - c^2)/2) sech^2(sqrt(2 - c^2) x / 2)
inline double delta_eta(double c, double x) {
  const double a = 2.0 - c * c;
  const double s = sech(0.5 * std::sqrt(a) * x);
  return 0.5 * a * s * s;
}

inline double delta_rho(double c, double x) { return std::sqrt(1.0 - delta_eta(c, x)); }

inline RealField delta_rho_field(const Grid& g, double c) {
  RealField r(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) r[j] = delta_rho(c, g.x(j));
  return r;
}

inline double delta_energy(double c) { return std::pow(2.0 - c * c, 1.5) / 3.0; }

// Smooth localized random field with amplitude below `amp`.
inline RealField random_bumps(const Grid& g, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  RealField v(g.size(), 0.0);
  for (int b = 0; b < 3; ++b) {
    const double a = U(rng), w = 1.0 + 0.8 * U(rng), x0 = 4.0 * U(rng), k = 1.5 * (1.0 + U(rng));
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double y = (g.x(j) - x0) / w;
      v[j] += a * std::exp(-y * y) * std::cos(k * g.x(j));
    }
  }
  const double m = sup_norm(v);
  for (auto& x : v) x *= amp / m;
  return v;
}

}  // namespace nlgp::testing
