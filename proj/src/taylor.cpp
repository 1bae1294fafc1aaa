#include "tdlab/taylor.hpp"

#include <cmath>
#include <sstream>

namespace tdlab {

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Field flux(const Grid& g, const Field& faces, const Field& v) { return FluxOperator(g, faces).apply(v); }

}  // namespace

ForceSeries force_series(const ManyBodySystem& sys, const std::vector<State>& derivs, int K) {
  ForceSeries s;
  s.bond = observable_taylor(derivs, bond_density_operator(sys), K);
  s.q = observable_taylor(derivs, q_operator(sys), K);
  return s;
}

TaylorField predict_density_taylor(const ManyBodySystem& sys, const State& psi0,
                                   const TaylorField& v, int K) {
  if (K < 0) throw ConfigError("taylor: order K must be >= 0");
  if (v.order() < K) {
    std::ostringstream os;
    os << "taylor: density prediction to order " << K + 2 << " needs potential orders 0.." << K;
    throw ConfigError(os.str());
  }
  const Grid& g = sys.grid();
  const std::vector<State> d = state_derivatives(sys, psi0, v, K);
  const ForceSeries fs = force_series(sys, d, K);

  TaylorField n;
  n.t0 = v.t0;
  n.coeffs.push_back(density(sys, psi0));
  n.coeffs.push_back(-current_divergence(sys, psi0));
  for (int k = 0; k <= K; ++k) {
    Field acc = fs.q[k];
    for (int l = 0; l <= k; ++l) acc += binom(k, l) * flux(g, fs.bond[k - l], v[l]);
    n.coeffs.push_back(acc);
  }
  return n;
}

double InversionResult::max_residual() const {
  double r = 0.0;
  for (const auto& d : diagnostics) r = std::max(r, d.residual);
  return r;
}

namespace {

nlohmann::json field_table(const TaylorField& f) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& c : f.coeffs) a.push_back(std::vector<double>(c.data(), c.data() + c.size()));
  return a;
}

}  // namespace

nlohmann::json InversionResult::to_json() const {
  nlohmann::json j;
  j["v_prime"] = field_table(v_prime);
  if (has_delta()) j["v_delta"] = field_table(v_delta);
  j["diagnostics"] = nlohmann::json::array();
  for (const auto& d : diagnostics) j["diagnostics"].push_back(d.to_json());
  nlohmann::json z = nlohmann::json::array();
  for (const auto& r : rhs) z.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  j["zeta"] = z;
  j["max_residual"] = max_residual();
  return j;
}

TaylorField gauge_aligned(const TaylorField& f) {
  TaylorField out = f;
  for (auto& c : out.coeffs) c.array() -= c[0];
  return out;
}

void check_initial_compatibility(const ManyBodySystem& primed, const State& psi0_primed,
                                 const Field& n0, const Field& n1, double tol) {
  const Field m0 = density(primed, psi0_primed);
  const Field m1 = -current_divergence(primed, psi0_primed);
  if (m0.size() != n0.size()) throw ConfigError("inversion: target and primed grids differ");
  const double e0 = (m0 - n0).cwiseAbs().maxCoeff();
  const double e1 = (m1 - n1).cwiseAbs().maxCoeff();
  if (e0 > tol * std::max(1.0, n0.cwiseAbs().maxCoeff())) {
    std::ostringstream os;
    os << "initial-density compatibility violated: max |n'(t0) - n(t0)| = " << e0;
    throw NumericalError("compatibility", os.str());
  }
  if (e1 > tol * std::max(1.0, n1.cwiseAbs().maxCoeff())) {
    std::ostringstream os;
    os << "initial-current compatibility violated: max |dn'/dt(t0) - dn/dt(t0)| = " << e1;
    throw NumericalError("compatibility", os.str());
  }
}

namespace {

// Solves div_h[B0 grad_h u] = zeta at order k with diagnostics.
Field solve_order(const Grid& g, const Field& B0, const Field& zeta, int k,
                  const InversionOptions& opts, InversionResult& res) {
  SLProblem p;
  try {
    p = make_sl_problem(g, B0, zeta, Gauge::PinFirstNode, opts.floor);
  } catch (const NumericalError& e) {
    std::ostringstream os;
    os << "order " << k << ": " << e.what();
    throw NumericalError("density-floor", os.str());
  }
  SLDiagnostics lm = check_lax_milgram(p, opts.lax_milgram_trials, opts.seed + k);
  if (!(lm.coercivity_c > 0.0) || lm.coercivity_violations > 0) {
    std::ostringstream os;
    os << "order " << k << ": coercivity check failed (c = " << lm.coercivity_c << ", "
       << lm.coercivity_violations << " violations)";
    throw NumericalError("lax-milgram", os.str());
  }
  SLOptions so;
  so.tol = opts.tol;
  so.seed = opts.seed + k;
  SLSolution sol;
  try {
    sol = solve_sl(p, so);
  } catch (const NumericalError& e) {
    std::ostringstream os;
    os << "order " << k << ": " << e.what();
    throw NumericalError("sturm-solve", os.str());
  }
  lm.residual = sol.diagnostics.residual;
  lm.iterations = sol.diagnostics.iterations;
  res.diagnostics.push_back(lm);
  res.rhs.push_back(zeta);
  return sol.v;
}

}  // namespace

InversionResult invert_potential_taylor(const TaylorField& target, const ManyBodySystem& primed,
                                        const State& psi0_primed, int K,
                                        const InversionOptions& opts) {
  if (K < 0) throw ConfigError("inversion.K: must be >= 0");
  if (target.order() < K + 2) {
    std::ostringstream os;
    os << "inversion: target density supplies orders 0.." << target.order() << ", need 0.." << K + 2;
    throw ConfigError(os.str());
  }
  const Grid& g = primed.grid();
  check_initial_compatibility(primed, psi0_primed, target[0], target[1], opts.compat_tol);

  InversionResult res;
  res.v_prime.t0 = target.t0;
  for (int k = 0; k <= K; ++k) {
    // Orders < k of v' are known; that is all q'^(k) and B'^(j<=k) need.
    TaylorField vp = res.v_prime;
    if (vp.coeffs.empty()) vp.coeffs.push_back(Field::Zero(g.M));
    const std::vector<State> d = state_derivatives(primed, psi0_primed, vp, k);
    const ForceSeries fs = force_series(primed, d, k);
    Field zeta = target[k + 2] - fs.q[k];
    for (int l = 0; l < k; ++l) zeta -= binom(k, l) * flux(g, fs.bond[k - l], res.v_prime[l]);
    res.v_prime.coeffs.push_back(solve_order(g, fs.bond[0], zeta, k, opts, res));
  }
  return res;
}

InversionResult delta_potential_taylor(const UnprimedRun& run, const ManyBodySystem& primed,
                                       const State& psi0_primed, int K,
                                       const InversionOptions& opts) {
  if (K < 0) throw ConfigError("inversion.K: must be >= 0");
  if (run.v.order() < K) {
    std::ostringstream os;
    os << "inversion: unprimed potential supplies orders 0.." << run.v.order() << ", need 0.." << K;
    throw ConfigError(os.str());
  }
  const Grid& g = primed.grid();
  if (!(run.system.grid() == g)) throw ConfigError("inversion: primed and unprimed grids differ");
  check_initial_compatibility(primed, psi0_primed, density(run.system, run.psi0),
                              -current_divergence(run.system, run.psi0), opts.compat_tol);

  const std::vector<State> du = state_derivatives(run.system, run.psi0, run.v, K);
  const ForceSeries fu = force_series(run.system, du, K);

  InversionResult res;
  res.v_delta.t0 = run.v.t0;
  res.v_prime.t0 = run.v.t0;
  for (int k = 0; k <= K; ++k) {
    TaylorField vp = res.v_prime;
    if (vp.coeffs.empty()) vp.coeffs.push_back(Field::Zero(g.M));
    const std::vector<State> d = state_derivatives(primed, psi0_primed, vp, k);
    const ForceSeries fp = force_series(primed, d, k);
    Field zeta = fu.q[k] - fp.q[k];
    for (int l = 0; l <= k; ++l)
      zeta += binom(k, l) * flux(g, fu.bond[k - l] - fp.bond[k - l], run.v[l]);
    for (int l = 0; l < k; ++l) zeta -= binom(k, l) * flux(g, fp.bond[k - l], res.v_delta[l]);
    Field vd = solve_order(g, fp.bond[0], zeta, k, opts, res);
    res.v_prime.coeffs.push_back(run.v[k] + vd);
    res.v_delta.coeffs.push_back(std::move(vd));
  }
  return res;
}

}  // namespace tdlab
