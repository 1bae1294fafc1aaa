#include "support.hpp"

using namespace testing;

namespace {

SLSolution solve(const Grid& g, const Field& n, const Field& zeta, double tol = 1e-13,
                 const Field* guess = nullptr) {
  SLOptions o;
  o.tol = tol;
  o.initial_guess = guess;
  return solve_sl(make_sl_problem(g, n, zeta), o);
}

}  // namespace

TEST_CASE("zero right-hand side gives the zero solution") {
  const Grid g = build_grid(0, 1, 50);
  const SLSolution s = solve(g, sample(g, "2+cos(x)"), Field::Zero(50));
  CHECK(max_abs(s.v) <= 1e-12);
}

TEST_CASE("manufactured solution is recovered against the discrete operator") {
  const Grid g = build_grid(0, 1, 63);
  const Field n = sample(g, "2+cos(x)");
  const Field vstar = sample(g, "sin(pi*x)*x*(1-x)");
  const Field zeta = weighted_divgrad_matrix(g, n).apply(vstar);
  const SLSolution s = solve(g, n, zeta);
  CHECK(max_abs(s.v - vstar) <= 1e-9);
  CHECK(s.diagnostics.residual <= 1e-13);
}

TEST_CASE("manufactured solution converges at second order against the analytic rhs") {
  auto err = [](int M) {
    const Grid g = build_grid(0, 1, M);
    const Field n = sample(g, "2+cos(x)");
    // v* = sin(pi x) x (1-x); zeta = d/dx[(2+cos x) v*']
    const std::string dv = "(pi*cos(pi*x)*x*(1-x) + sin(pi*x)*(1-2*x))";
    const std::string d2v = "(-pi^2*sin(pi*x)*x*(1-x) + 2*pi*cos(pi*x)*(1-2*x) - 2*sin(pi*x))";
    const Field zeta = sample(g, "-sin(x)*" + dv + " + (2+cos(x))*" + d2v);
    return max_abs(solve(g, n, zeta).v - sample(g, "sin(pi*x)*x*(1-x)"));
  };
  const double r1 = err(31) / err(63);
  CHECK(r1 >= 3.5);
  CHECK(r1 <= 4.5);
}

TEST_CASE("Poisson problem with quadratic solution is exact") {
  const Grid g = build_grid(0, 1, 40);
  const SLSolution s = solve(g, Field::Ones(40), Field::Ones(40), 1e-14);
  CHECK(max_abs(s.v - sample(g, "(x^2-x)/2")) <= 1e-12);
}

TEST_CASE("Poincare constant") {
  CHECK(std::abs(estimate_poincare(build_grid(0, 1, 199)) - 1.0 / M_PI) <= 1e-3);
  CHECK(std::abs(estimate_poincare(build_grid(0, 2, 199)) - 2.0 / M_PI) <= 2e-3);
  const double l1 = estimate_poincare(build_grid(0, 1, 19));
  const double l2 = estimate_poincare(build_grid(0, 1, 39));
  const double l3 = estimate_poincare(build_grid(0, 1, 79));
  const double ratio = (l2 - l1) / (l3 - l2);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("Lax-Milgram check for unit coefficient") {
  const Grid g = build_grid(0, 1, 99);
  const SLDiagnostics d = check_lax_milgram(g, Field::Ones(99), sample(g, "sin(pi*x)"), 100, 3);
  CHECK(d.m == doctest::Approx(1.0));
  CHECK(d.M == doctest::Approx(1.0));
  CHECK(d.coercivity_c == doctest::Approx(1.0 / (1.0 + 1.0 / (M_PI * M_PI))).epsilon(1e-3));
  CHECK(d.trials == 100);
  CHECK(d.coercivity_violations == 0);
  CHECK(d.continuity_violations == 0);
}

TEST_CASE("Lax-Milgram constants follow the coefficient bounds") {
  const Grid g = build_grid(0, 1, 59);
  Field n = sample(g, "1.25+0.75*sin(2*pi*x)");
  n = n.cwiseMax(0.5).cwiseMin(2.0);
  n[0] = 0.5;
  n[29] = n[30] = 2.0;
  const SLDiagnostics d = check_lax_milgram(g, n, Field::Ones(59), 100, 9);
  CHECK(d.m == doctest::Approx(0.5));
  CHECK(d.M == doctest::Approx(2.0));
  CHECK(d.coercivity_c == doctest::Approx(0.5 / (1.0 + d.lambda * d.lambda)));
  CHECK(d.coercivity_violations == 0);
  CHECK(d.continuity_violations == 0);
}

TEST_CASE("Hoelder exponent of a square-root cusp") {
  const Grid g = build_grid(0, 1, 399);
  const Field z = sample(g, "((x-0.37)^2)^0.25");
  const HoelderFit f = estimate_hoelder(g, z, 10000, 17);
  CHECK(f.alpha >= 0.4);
  CHECK(f.alpha <= 0.6);
}

TEST_CASE("diagnostics serialise with the documented field names") {
  const Grid g = build_grid(0, 1, 20);
  const nlohmann::json j = solve(g, Field::Ones(20), Field::Ones(20)).diagnostics.to_json();
  for (const char* k : {"m", "M", "lambda", "coercivity_c", "residual", "iterations", "hoelder_alpha",
                        "hoelder_const", "c1_proxy"})
    CHECK(j.contains(k));
}

TEST_CASE("solution is unique and linear in the rhs") {
  const Grid g = build_grid(0, 1, 80);
  const Field n = sample(g, "1+0.5*x^2");
  const Field z1 = sample(g, "exp(x)");
  const Field z2 = sample(g, "cos(7*x)");
  const Field guess = sample(g, "10*sin(3*x)");
  const SLSolution a = solve(g, n, z1);
  const SLSolution b = solve(g, n, z1, 1e-13, &guess);
  CHECK(max_abs(a.v - b.v) <= 1e-10);
  const SLSolution c = solve(g, n, z2);
  const SLSolution lin = solve(g, n, 2.0 * z1 - 3.0 * z2);
  CHECK(max_abs(lin.v - (2.0 * a.v - 3.0 * c.v)) <= 1e-10 * max_abs(lin.v));
}

TEST_CASE("iteration count is reported and grows with the grid") {
  std::vector<int> its;
  for (int M : {50, 100, 200}) {
    const Grid g = build_grid(0, 1, M);
    const Field n = sample(g, "1-0.95*sin(pi*x)^2");
    its.push_back(solve(g, n, sample(g, "sin(3*x)+x"), 1e-10).diagnostics.iterations);
    MESSAGE("M = " << M << ": " << its.back() << " iterations");
    CHECK(its.back() > 0);
    CHECK(its.back() <= 20 * M + 200);
  }
  CHECK(its[0] < its[1]);
  CHECK(its[1] < its[2]);
}

TEST_CASE("floor violations and solver caps are reported") {
  const Grid g = build_grid(0, 1, 30);
  Field n = Field::Ones(30);
  n[3] = 1e-12;
  CHECK_THROWS_AS(make_sl_problem(g, n, Field::Ones(30)), NumericalError);

  SLOptions o;
  o.tol = 1e-14;
  o.max_iterations = 2;
  try {
    solve_sl(make_sl_problem(g, sample(g, "1+x"), sample(g, "sin(5*x)")), o);
    FAIL("expected the iteration cap to trigger");
  } catch (const NumericalError& e) {
    CHECK(e.stage() == "sturm-solve");
    CHECK(std::string(e.what()).find("history") != std::string::npos);
  }
}

TEST_CASE("pinned gauge with zero-flux walls") {
  const Grid g = build_grid(-1, 1, 40);
  const Field n = sample(g, "1+0.3*x");
  // zero-mean rhs is compatible with zero-flux walls
  Field z = sample(g, "cos(pi*x)");
  z.array() -= z.mean();
  const SLProblem p = make_sl_problem(g, faces_from_nodes(n), z, Gauge::PinFirstNode);
  SLOptions o;
  o.tol = 1e-12;
  const SLSolution s = solve_sl(p, o);
  CHECK(s.v[0] == 0.0);
  CHECK(s.diagnostics.residual <= 1e-10);
  const SLDiagnostics d = check_lax_milgram(p, 50, 1);
  CHECK(d.coercivity_c > 0.0);
  CHECK(d.coercivity_violations == 0);
}
