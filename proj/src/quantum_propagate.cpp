#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <cmath>
#include <sstream>

#include "tdlab/quantum.hpp"

namespace tdlab {

using cd = std::complex<double>;
using ComplexSparse = Eigen::SparseMatrix<cd>;

Integrator parse_integrator(const std::string& s) {
  if (s == "crank-nicolson" || s == "cn") return Integrator::CrankNicolson;
  if (s == "taylor") return Integrator::Taylor;
  throw ConfigError("experiment.integrator: unsupported value '" + s +
                    "' (expected crank-nicolson | taylor)");
}

std::string to_string(Integrator i) {
  return i == Integrator::Taylor ? "taylor" : "crank-nicolson";
}

TimePotential TimePotential::from_series(TaylorField f) {
  TimePotential p;
  p.series = f;
  p.at = [f = std::move(f)](double t) { return f.evaluate(t); };
  return p;
}

TimePotential TimePotential::from_function(std::function<Field(double)> f) {
  TimePotential p;
  p.at = std::move(f);
  return p;
}

TimePotential TimePotential::constant(Field v) {
  TaylorField f;
  f.coeffs.push_back(std::move(v));
  return from_series(std::move(f));
}

State crank_nicolson_step(const ManyBodySystem& sys, const State& psi, const Field& v_mid,
                          double dt, double tol, int* iterations) {
  const SparseMatrix H = sys.hamiltonian(v_mid);
  ComplexSparse A = H.cast<cd>() * cd(0.0, 0.5 * dt);
  for (int b = 0; b < sys.dim(); ++b) A.coeffRef(b, b) += 1.0;
  const State rhs = psi - cd(0.0, 0.5 * dt) * (H * psi);
  if (tol <= 0.0) {
    A.makeCompressed();
    Eigen::SparseLU<ComplexSparse> lu(A);
    if (lu.info() != Eigen::Success)
      throw NumericalError("propagate", "Crank-Nicolson LU factorisation failed");
    if (iterations) *iterations = 0;
    return lu.solve(rhs);
  }

  Eigen::BiCGSTAB<ComplexSparse, Eigen::DiagonalPreconditioner<cd>> solver;
  solver.setTolerance(tol);
  solver.setMaxIterations(std::max(200, 4 * sys.dim()));
  solver.compute(A);
  // Explicit half step is a good first guess.
  State out = solver.solveWithGuess(rhs, rhs - cd(0.0, 0.5 * dt) * (H * rhs));
  if (iterations) *iterations = static_cast<int>(solver.iterations());
  if (solver.info() != Eigen::Success || !out.allFinite()) {
    std::ostringstream os;
    os << "Crank-Nicolson linear solve failed after " << solver.iterations()
       << " iterations (estimated error " << solver.error() << ")";
    throw NumericalError("propagate", os.str());
  }
  return out;
}

namespace {

double gershgorin_norm(const SparseMatrix& H) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(H.rows());
  for (int k = 0; k < H.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(H, k); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.maxCoeff();
}

// One step of length tau using the Taylor series of psi about t.
State taylor_step(const ManyBodySystem& sys, const State& psi, const TaylorField& v, double t,
                  double tau, int order) {
  const TaylorField vt = v.shifted(t);
  std::vector<Field> scaled;  // v^(l) tau^l / l!
  double w = 1.0;
  for (int l = 0; l <= vt.order(); ++l) {
    if (l > 0) w *= tau / l;
    scaled.push_back(w * vt[l]);
  }
  std::vector<State> phi{psi};
  State sum = psi;
  const cd mi(0.0, -1.0);
  for (int k = 0; k < order; ++k) {
    State acc = sys.apply_hamiltonian(scaled[0], phi[k]);
    for (int l = 1; l <= k && l < static_cast<int>(scaled.size()); ++l)
      acc += sys.apply_potential(scaled[l], phi[k - l]);
    phi.push_back(mi * (tau / (k + 1)) * acc);
    sum += phi.back();
    if (phi.back().norm() < 1e-18 && k >= static_cast<int>(scaled.size())) break;
  }
  return sum;
}

}  // namespace

Trajectory propagate(const ManyBodySystem& sys, const State& psi0, const TimePotential& v,
                     double t0, double dt, int steps, const PropagateOptions& opts) {
  if (!(dt > 0.0) || steps < 0) throw ConfigError("propagate: require dt > 0 and steps >= 0");
  if (opts.integrator == Integrator::Taylor && !v.series)
    throw ConfigError("propagate: the taylor integrator needs a polynomial (series) potential");
  require_normalized(psi0);

  Trajectory tr;
  auto record = [&](double t, const State& psi) {
    tr.times.push_back(t);
    tr.densities.push_back(transition_density(sys, psi, psi).real());
    tr.norms.push_back(psi.norm());
    if (opts.store_states) tr.states.push_back(psi);
  };

  State psi = psi0;
  record(t0, psi);
  for (int n = 0; n < steps; ++n) {
    const double t = t0 + n * dt;
    if (opts.integrator == Integrator::CrankNicolson) {
      int it = 0;
      psi = crank_nicolson_step(sys, psi, v.at(t + 0.5 * dt), dt, opts.solve_tol, &it);
      tr.max_inner_iterations = std::max(tr.max_inner_iterations, it);
    } else {
      const double hn = gershgorin_norm(sys.hamiltonian(v.at(t + dt)));
      const int sub = std::max(1, static_cast<int>(std::ceil(hn * dt / opts.taylor_step_norm)));
      const double tau = dt / sub;
      for (int s = 0; s < sub; ++s)
        psi = taylor_step(sys, psi, *v.series, t + s * tau, tau, opts.taylor_order);
    }
    if (!psi.allFinite()) throw NumericalError("propagate", "state became non-finite");
    record(t0 + (n + 1) * dt, psi);
  }
  return tr;
}

}  // namespace tdlab
