#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdlab/grid.hpp"

namespace tdlab {

/// How the additive constant of the potential is fixed.
enum class Gauge {
  /// v = 0 on both ghost nodes; every face coefficient must be positive.
  Dirichlet,
  /// Zero-flux walls (outer face coefficients vanish) and v = 0 on the first
  /// interior node, i.e. the node adjacent to the left boundary.
  PinFirstNode,
};

/// div(c grad v) = zeta with face coefficients c.
struct SLProblem {
  Grid grid;
  Eigen::VectorXd faces;
  Field rhs;
  Gauge gauge = Gauge::Dirichlet;
  double floor = kDefaultDensityFloor;
};

/// Dirichlet problem with nodal coefficient n (faces by arithmetic mean).
/// Throws NumericalError on a floor violation, ConfigError on size mismatch.
SLProblem make_sl_problem(const Grid& g, const Field& n, const Field& zeta,
                          double floor = kDefaultDensityFloor);
/// Problem from explicit face coefficients. With Gauge::PinFirstNode the two
/// outer faces are ignored (treated as zero flux).
SLProblem make_sl_problem(const Grid& g, const Eigen::VectorXd& faces, const Field& zeta,
                          Gauge gauge, double floor = kDefaultDensityFloor);

struct SLDiagnostics {
  double m = 0.0;             ///< min active face coefficient
  double M = 0.0;             ///< max active face coefficient
  double lambda = 0.0;        ///< Poincare constant for the problem's boundary type
  double coercivity_c = 0.0;  ///< m / (1 + lambda^2)
  double residual = 0.0;      ///< ||A v - zeta||_2 / ||zeta||_2 on the free nodes (absolute if zeta = 0)
  int iterations = 0;
  double hoelder_alpha = 0.0;
  double hoelder_const = 0.0;
  double hoelder_r2 = 0.0;     ///< fit quality of the Hoelder envelope regression
  double c1_proxy = 0.0;       ///< max |grad zeta|
  double c1_refinement = 0.0;  ///< max|grad zeta| on this grid / on the 2h subgrid
  bool classical_proxy = false;
  int trials = 0;
  int coercivity_violations = 0;
  int continuity_violations = 0;

  nlohmann::json to_json() const;
};

struct SLSolution {
  Field v;
  SLDiagnostics diagnostics;
  std::vector<double> residual_history;
};

struct SLOptions {
  double tol = 1e-10;
  int max_iterations = 0;  ///< 0: 20 M + 200
  const Field* initial_guess = nullptr;
  std::uint64_t seed = 20240917;
};

/// Jacobi-preconditioned conjugate gradients on -A. Throws NumericalError
/// (stage "sturm-solve") with the residual history when the cap is hit.
SLSolution solve_sl(const SLProblem& problem, const SLOptions& opts = {});

/// lambda = 1/sqrt(mu_min) with mu_min the lowest eigenvalue of the unit
/// coefficient Dirichlet -d^2/dx^2 (inverse power iteration).
double estimate_poincare(const Grid& g, double tol = 1e-10);
double estimate_poincare(const Grid& g, Gauge gauge, double tol = 1e-10);

/// Lowest eigenvalue of the SPD matrix -A restricted by the gauge, by inverse
/// power iteration with Rayleigh quotient convergence test.
double lowest_eigenvalue(const FluxOperator& op, Gauge gauge, double tol = 1e-10);

/// Coercivity/continuity check on random Dirichlet fields plus Hoelder and
/// C1 diagnostics of zeta. Never throws for bad data; reports instead.
SLDiagnostics check_lax_milgram(const Grid& g, const Field& n, const Field& zeta, int trials,
                                std::uint64_t seed = 20240917);
SLDiagnostics check_lax_milgram(const SLProblem& problem, int trials,
                                std::uint64_t seed = 20240917);

struct HoelderFit {
  double alpha = 0.0;
  double constant = 0.0;
  double r2 = 0.0;
};
/// Fit of log max|f(x+d)-f(x)| against log d over a geometric ladder of node
/// offsets up to a quarter of the box (sampled when a row exceeds the budget).
HoelderFit estimate_hoelder(const Grid& g, const Field& f, int pairs, std::uint64_t seed);

}  // namespace tdlab
