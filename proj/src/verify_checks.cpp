#include <cmath>
#include <limits>
#include <sstream>

#include "tdlab/verify.hpp"

namespace tdlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double interior_max(const Field& f) {
  const int b = kStencilBoundaryNodes;
  return f.segment(b, f.size() - 2 * b).cwiseAbs().maxCoeff();
}

Field flux(const Grid& g, const Eigen::VectorXd& faces, const Field& v) {
  return FluxOperator(g, faces).apply(v);
}

// (v_f - v_{f-1}) / h on interior faces, zero on the walls.
Eigen::VectorXd face_gradient(const Grid& g, const Field& v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.M + 1);
  for (int f = 1; f < g.M; ++f) out[f] = (v[f] - v[f - 1]) / g.h();
  return out;
}

}  // namespace

ConservationSeries conservation_checks(const ManyBodySystem& sys, const Trajectory& traj,
                                       const TimePotential& v) {
  if (traj.states.size() != traj.times.size())
    throw ConfigError("conservation_checks: the trajectory must carry its states");
  const Grid& g = sys.grid();
  const std::size_t n = traj.times.size();
  ConservationSeries c;
  for (auto* s : {&c.continuity, &c.forcebalance, &c.identity, &c.continuity_stencil,
                  &c.forcebalance_stencil, &c.identity_stencil})
    s->assign(n, kNaN);
  if (n < 3) return c;

  std::vector<Eigen::VectorXd> J(n), jn(n);
  for (std::size_t i = 0; i < n; ++i) {
    J[i] = bond_current(sys, traj.states[i]);
    jn[i] = nodal_current(sys, traj.states[i]);
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double dt = 0.5 * (traj.times[i + 1] - traj.times[i - 1]);
    const double dt2 = (traj.times[i + 1] - traj.times[i]) * (traj.times[i] - traj.times[i - 1]);
    const State& psi = traj.states[i];
    const Field& n0 = traj.densities[i];
    const Field vt = v.at(traj.times[i]);
    const Field dn = (traj.densities[i + 1] - traj.densities[i - 1]) / (2.0 * dt);
    const Field ddn = (traj.densities[i + 1] - 2.0 * n0 + traj.densities[i - 1]) / dt2;
    const Eigen::VectorXd B = bond_density(sys, psi);

    c.continuity[i] = (dn + current_divergence(sys, psi)).cwiseAbs().maxCoeff();
    const Eigen::VectorXd dJ = (J[i + 1] - J[i - 1]) / (2.0 * dt);
    const Eigen::VectorXd F =
        lattice_force(sys, psi) - B.cwiseProduct(face_gradient(g, vt));
    c.forcebalance[i] = (dJ - F).cwiseAbs().maxCoeff();
    c.identity[i] = (ddn - flux(g, B, vt) - q_transition(sys, psi, psi).real()).cwiseAbs().maxCoeff();

    c.continuity_stencil[i] = interior_max(dn + divergence(g, jn[i]));
    const Field djn = (jn[i + 1] - jn[i - 1]) / (2.0 * dt);
    c.forcebalance_stencil[i] =
        interior_max(djn + n0.cwiseProduct(gradient(g, vt)) + gradient(g, stress_tensor(sys, psi)) +
                     interaction_force(sys, psi));
    c.identity_stencil[i] =
        interior_max(ddn - flux(g, faces_from_nodes(n0), vt) - q_stencil(sys, psi));
  }
  return c;
}

OracleResult timestep_inversion_oracle(const std::vector<Field>& target, double t0, double dt,
                                       const ManyBodySystem& primed, const State& psi0_primed,
                                       const OracleOptions& opts) {
  const Grid& g = primed.grid();
  const std::size_t J = target.size();
  if (J < 4) throw ConfigError("oracle: the target trajectory needs at least 4 samples");
  if (!(dt > 0.0)) throw ConfigError("oracle: dt must be positive");

  auto solve_potential = [&](const State& psi, const Field& accel, std::size_t step) {
    const Field rhs = accel - q_transition(primed, psi, psi).real();
    SLOptions so;
    so.tol = opts.sl_tol;
    try {
      const SLProblem p =
          make_sl_problem(g, bond_density(primed, psi), rhs, Gauge::PinFirstNode, opts.floor);
      return solve_sl(p, so).v;
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "step " << step << " (t = " << t0 + step * dt << "): " << e.what();
      throw NumericalError("oracle", os.str());
    }
  };

  const double dt2 = dt * dt;
  // Second time derivative of the target, fourth order: centered inside,
  // one-sided near the ends.
  auto target_accel = [&](std::size_t j) -> Field {
    const double c = 1.0 / (12.0 * dt2);
    if (J >= 6 && j >= 2 && j + 2 < J)
      return c * (-target[j + 2] + 16.0 * target[j + 1] - 30.0 * target[j] + 16.0 * target[j - 1] -
                  target[j - 2]);
    if (J >= 6 && j < 2) {
      const auto& n = target;
      if (j == 0)
        return c * (45.0 * n[0] - 154.0 * n[1] + 214.0 * n[2] - 156.0 * n[3] + 61.0 * n[4] - 10.0 * n[5]);
      return c * (10.0 * n[0] - 15.0 * n[1] - 4.0 * n[2] + 14.0 * n[3] - 6.0 * n[4] + n[5]);
    }
    if (J >= 6) {
      const auto& n = target;
      const std::size_t e = J - 1;
      if (j == e)
        return c * (45.0 * n[e] - 154.0 * n[e - 1] + 214.0 * n[e - 2] - 156.0 * n[e - 3] +
                    61.0 * n[e - 4] - 10.0 * n[e - 5]);
      return c * (10.0 * n[e] - 15.0 * n[e - 1] - 4.0 * n[e - 2] + 14.0 * n[e - 3] - 6.0 * n[e - 4] +
                  n[e - 5]);
    }
    if (j == 0) return (2.0 * target[0] - 5.0 * target[1] + 4.0 * target[2] - target[3]) / dt2;
    return (target[j + 1] - 2.0 * target[j] + target[j - 1]) / dt2;
  };
  auto target_rate = [&](std::size_t j) -> Field {
    if (j == 0) return (-3.0 * target[0] + 4.0 * target[1] - target[2]) / (2.0 * dt);
    return (target[j + 1] - target[j - 1]) / (2.0 * dt);
  };
  // Optional feedback on the tracking error (zero gain: pure forward oracle).
  auto accel_for = [&](std::size_t j, const State& psi) -> Field {
    Field a = target_accel(j);
    if (opts.feedback_rate > 0.0) {
      const double k = opts.feedback_rate;
      const Field n = transition_density(primed, psi, psi).real();
      const Field rate = -current_divergence(primed, psi);
      a += k * k * (target[j] - n) + 2.0 * k * (target_rate(j) - rate);
    }
    return a;
  };

  // One step from t_j to t_{j+1} with v' linear between the two end values.
  auto step = [&](const State& from, std::size_t j, const Field& va, const Field& vb) -> State {
    if (opts.integrator == Integrator::CrankNicolson)
      return crank_nicolson_step(primed, from, 0.5 * (va + vb), dt, opts.solve_tol);
    TaylorField lin;
    lin.t0 = t0 + j * dt;
    lin.coeffs = {va, (vb - va) / dt};
    PropagateOptions po;
    po.integrator = Integrator::Taylor;
    po.store_states = true;
    return propagate(primed, from, TimePotential::from_series(lin), lin.t0, dt, 1, po).states.back();
  };

  OracleResult res;
  State psi = psi0_primed;
  auto record = [&](std::size_t j) {
    const Field n = transition_density(primed, psi, psi).real();
    res.times.push_back(t0 + j * dt);
    res.densities.push_back(n);
    res.norms.push_back(psi.norm());
    res.tracking_error.push_back(g.l2_norm(n - target[j]));
  };
  record(0);
  for (std::size_t j = 0; j + 1 < J; ++j) {
    const Field vj = solve_potential(psi, accel_for(j, psi), j);
    res.potentials.push_back(vj);
    // Predictor: linear extrapolation to t_{j+1}.
    const std::size_t np = res.potentials.size();
    const Field v_pred = np >= 2 ? Field(2.0 * vj - res.potentials[np - 2]) : vj;
    State next = step(psi, j, vj, v_pred);
    // Corrector: fixed-point sweeps through v'_{j+1}.
    for (int sweep = 0; sweep < opts.sweeps && j + 2 < J; ++sweep) {
      const Field v_next = solve_potential(next, accel_for(j + 1, next), j + 1);
      next = step(psi, j, vj, v_next);
    }
    psi = next;
    record(j + 1);
  }
  for (double e : res.tracking_error) res.max_tracking_error = std::max(res.max_tracking_error, e);
  return res;
}

}  // namespace tdlab
