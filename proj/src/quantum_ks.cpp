#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "tdlab/quantum.hpp"

namespace tdlab {

using cd = std::complex<double>;

namespace {

void check_compatibility(const ManyBodySystem& sys, const Field& n0, const Field& n1,
                         double compat_tol) {
  const Grid& g = sys.grid();
  if (n0.size() != g.M || n1.size() != g.M)
    throw ConfigError("initial state: density fields do not match the box grid");
  require_finite(n0, "n0");
  require_finite(n1, "n1");
  const int N = sys.particles();
  const double mass = g.integrate(n0);
  if (std::abs(mass - N) > compat_tol * N) {
    std::ostringstream os;
    os << "initial-density compatibility: integral of n0 is " << mass << ", expected " << N;
    throw NumericalError("initial-state", os.str());
  }
  const double flux = g.integrate(n1);
  if (std::abs(flux) > compat_tol * std::max(1.0, n1.cwiseAbs().sum() * g.h())) {
    std::ostringstream os;
    os << "initial-current compatibility: integral of n1 is " << flux << ", expected 0";
    throw NumericalError("initial-state", os.str());
  }
}

void check_floor(const Field& n0, double floor) {
  const double nmin = n0.minCoeff();
  if (nmin < floor) {
    std::ostringstream os;
    os << "min(n0) = " << nmin << " is below the density floor " << floor;
    throw NumericalError("density-floor", os.str());
  }
}

}  // namespace

State imprint_current(const ManyBodySystem& sys, const State& real_state, const Field& n1,
                      double compat_tol) {
  const Grid& g = sys.grid();
  const int M = g.M;
  const double h = g.h();
  if (real_state.imag().cwiseAbs().maxCoeff() > 1e-14 * real_state.cwiseAbs().maxCoeff())
    throw ConfigError("imprint_current: expects a real state");
  if (std::abs(g.integrate(n1)) > compat_tol * std::max(1.0, n1.cwiseAbs().sum() * h))
    throw NumericalError("initial-state", "initial-current compatibility: integral of n1 is not 0");

  // Face currents with -(J_{f+1} - J_f)/h = n1, summed in from both walls.
  Eigen::VectorXd J = Eigen::VectorXd::Zero(M + 1);
  const int half = (M + 1) / 2;
  for (int f = 1; f <= half; ++f) J[f] = J[f - 1] - h * n1[f - 1];
  for (int f = M - 1; f > half; --f) J[f] = J[f + 1] + h * n1[f];

  const Eigen::VectorXd B = bond_density(sys, real_state);
  Field theta = Field::Zero(M);
  for (int f = 1; f < M; ++f) {
    const double s = h * J[f] / B[f];
    if (!(B[f] > 0.0) || std::abs(s) >= 1.0) {
      std::ostringstream os;
      os << "the current on face " << f << " cannot be carried by a phase (bond density "
         << B[f] << ")";
      throw NumericalError("initial-state", os.str());
    }
    theta[f] = theta[f - 1] + std::asin(s);
  }
  State out = real_state;
  for (int b = 0; b < sys.dim(); ++b) {
    const auto [i, j] = sys.basis()[b];
    out[b] *= std::polar(1.0, theta[i] + (j >= 0 ? theta[j] : 0.0));
  }
  return out;
}

State construct_ks_initial_state(const ManyBodySystem& sys, const Field& n0, const Field& n1,
                                 double floor, double compat_tol) {
  if (sys.interacting())
    throw ConfigError("ks-initial-state: the target system must be noninteracting");
  check_compatibility(sys, n0, n1, compat_tol);
  check_floor(n0, floor);
  const int N = sys.particles();
  const Eigen::VectorXd amp = (n0 * (sys.grid().h() / N)).cwiseSqrt();
  const State real_state = N == 1 ? State(amp.cast<cd>())
                                  : sys.pack((amp * amp.transpose()).cast<cd>());
  return imprint_current(sys, real_state, n1, compat_tol);
}

State density_matched_ground_state(const ManyBodySystem& sys, const Field& n0,
                                   const Field& v_guess, double tol, Field* v_out) {
  const Grid& g = sys.grid();
  const int M = g.M;
  const double h = g.h();
  Field v = v_guess;
  v.array() -= v[0];

  auto solve = [&](const Field& pot, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es) {
    es.compute(Eigen::MatrixXd(sys.hamiltonian(pot)));
    Eigen::VectorXd u0 = es.eigenvectors().col(0);
    if (u0.sum() < 0.0) u0 = -u0;
    return u0;
  };
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  Eigen::VectorXd u0 = solve(v, es);
  auto mismatch = [&](const Eigen::VectorXd& u) {
    return Field(sys.occupation().transpose() * u.cwiseAbs2() / h - n0);
  };
  Field F = mismatch(u0);
  double err = F.cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, n0.cwiseAbs().maxCoeff());
  for (int it = 0; it < 60 && err > tol * scale; ++it) {
    // Static response chi_rs = (2/h) sum_{m>0} <0|D_r|m><m|D_s|0> / (E0 - Em).
    const Eigen::MatrixXd X =
        es.eigenvectors().transpose() * (sys.occupation().array().colwise() * u0.array()).matrix();
    const int dim = sys.dim();
    Eigen::VectorXd w(dim - 1);
    for (int m = 1; m < dim; ++m) w[m - 1] = 1.0 / (es.eigenvalues()[0] - es.eigenvalues()[m]);
    const Eigen::MatrixXd Xs = X.bottomRows(dim - 1);
    const Eigen::MatrixXd chi = (2.0 / h) * Xs.transpose() * w.asDiagonal() * Xs;
    const Eigen::VectorXd step =
        chi.bottomRightCorner(M - 1, M - 1).ldlt().solve(-F.tail(M - 1));
    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls, lambda *= 0.5) {
      Field trial = v;
      trial.tail(M - 1) += lambda * step;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_t;
      const Eigen::VectorXd u_t = solve(trial, es_t);
      const Field F_t = mismatch(u_t);
      const double err_t = F_t.cwiseAbs().maxCoeff();
      if (err_t < err) {
        v = trial;
        es = std::move(es_t);
        u0 = u_t;
        F = F_t;
        err = err_t;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (err > tol * scale) {
    std::ostringstream os;
    os << "density-matched ground state did not converge (max density mismatch " << err << ")";
    throw NumericalError("initial-state", os.str());
  }
  if (v_out) *v_out = v;
  return u0.cast<cd>();
}

State matched_initial_state(const ManyBodySystem& sys, const Field& n0, const Field& n1,
                            const Field& v_guess, double floor, double compat_tol) {
  if (!sys.interacting()) return construct_ks_initial_state(sys, n0, n1, floor, compat_tol);
  check_compatibility(sys, n0, n1, compat_tol);
  check_floor(n0, floor);
  const State real_state = density_matched_ground_state(sys, n0, v_guess, 1e-12);
  return imprint_current(sys, real_state, n1, compat_tol);
}

}  // namespace tdlab
