#pragma once

#include <doctest.h>

#include <cmath>
#include <random>

#include "tdlab/expression.hpp"
#include "tdlab/verify.hpp"

namespace testing {

using namespace tdlab;

inline Field sample(const Grid& g, const std::string& expr) { return Expression::parse(expr).on_grid(g); }

inline double max_abs(const Field& f) { return f.cwiseAbs().maxCoeff(); }

inline double rel_diff(const Field& a, const Field& b) {
  const double s = b.cwiseAbs().maxCoeff();
  return (a - b).cwiseAbs().maxCoeff() / (s > 0.0 ? s : 1.0);
}

inline SystemConfig two_particles(double a, double b, int M, double g, double eps = 1.0) {
  SystemConfig c;
  c.box = build_grid(a, b, M);
  c.particles = 2;
  c.statistics = Statistics::FermionSinglet;
  c.interaction_strength = g;
  c.softcore_epsilon = eps;
  return c;
}

inline SystemConfig one_particle(double a, double b, int M) {
  SystemConfig c;
  c.box = build_grid(a, b, M);
  c.particles = 1;
  c.statistics = Statistics::Single;
  return c;
}

// Harmonic trap, wall-symmetric drive and kick: the reference physics.
inline const char* kWallPhase = "(10/pi)*sin(pi*x/10)";

inline TaylorField reference_potential(const Grid& g, int orders = 3) {
  const char* e[] = {"0.04*x^2", "0.2*(10/pi)*sin(pi*x/10)", "0.1*cos(pi*x/5)", "0", "0", "0"};
  TaylorField v;
  for (int k = 0; k < orders; ++k) v.coeffs.push_back(sample(g, e[std::min(k, 5)]));
  return v;
}

inline State reference_state(const ManyBodySystem& sys, const TaylorField& v, double kick = 0.2) {
  return apply_kick(sys, ground_state(sys, v[0]), kick, sample(sys.grid(), kWallPhase));
}

inline ExperimentConfig reference_experiment(int M = 39) {
  ExperimentConfig c;
  c.system = two_particles(-5, 5, M, 1.0);
  c.v = reference_potential(c.system.box);
  c.kick = 0.2;
  c.kick_profile = sample(c.system.box, kWallPhase);
  return c;
}

}  // namespace testing

namespace testing {

// Finite-difference weights for the m-th derivative at x0 on arbitrary
// nodes (Fornberg's recursion).
inline std::vector<double> fd_weights(const std::vector<double>& x, double x0, int m) {
  const int n = static_cast<int>(x.size()) - 1;
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = c[i][m];
  return w;
}

// Densities at t0 + j*dt for j = -half..half: forward propagation and, for
// negative times, the time-reversed state under the reflected potential.
inline std::vector<Field> densities_around(const ManyBodySystem& sys, const State& psi0,
                                          const TaylorField& v, double dt, int half) {
  PropagateOptions po;
  po.integrator = Integrator::Taylor;
  const Trajectory fwd = propagate(sys, psi0, TimePotential::from_series(v), v.t0, dt, half, po);
  TaylorField rv = v;
  for (int k = 1; k <= rv.order(); k += 2) rv.coeffs[k] = -rv.coeffs[k];
  const Trajectory bwd =
      propagate(sys, State(psi0.conjugate()), TimePotential::from_series(rv), v.t0, dt, half, po);
  std::vector<Field> out;
  for (int j = half; j >= 1; --j) out.push_back(bwd.densities[j]);
  for (int j = 0; j <= half; ++j) out.push_back(fwd.densities[j]);
  return out;
}

}  // namespace testing
