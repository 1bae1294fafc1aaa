#include <cmath>
#include <random>

#include "tdlab/quantum.hpp"

namespace tdlab {

using cd = std::complex<double>;

ComplexField transition_density(const ManyBodySystem& sys, const State& a, const State& b) {
  const ComplexField w = a.conjugate().cwiseProduct(b);
  return (sys.occupation().transpose().cast<cd>() * w) / sys.grid().h();
}

Field density(const ManyBodySystem& sys, const State& psi) {
  require_normalized(psi);
  return transition_density(sys, psi, psi).real();
}

Eigen::MatrixXcd one_body_matrix(const ManyBodySystem& sys, const State& a, const State& b) {
  const Eigen::MatrixXcd A = sys.unpack(a);
  const Eigen::MatrixXcd B = sys.unpack(b);
  if (sys.particles() == 1) return A.conjugate() * B.transpose();
  return 2.0 * (A.conjugate() * B.transpose());
}

Eigen::MatrixXcd pair_matrix(const ManyBodySystem& sys, const State& a, const State& b) {
  const int M = sys.grid().M;
  if (sys.particles() == 1) return Eigen::MatrixXcd::Zero(M, M);
  const double h = sys.grid().h();
  const Eigen::MatrixXcd A = sys.unpack(a);
  const Eigen::MatrixXcd B = sys.unpack(b);
  return 2.0 * A.conjugate().cwiseProduct(B) / (h * h);
}

namespace {

// Super-diagonal gamma_{r,r+1} of the one-body transition matrix, as faces
// f = 1..M-1 (faces 0 and M touch the walls and stay zero).
ComplexField bond_elements(const ManyBodySystem& sys, const State& a, const State& b) {
  const int M = sys.grid().M;
  const Eigen::MatrixXcd A = sys.unpack(a);
  const Eigen::MatrixXcd B = sys.unpack(b);
  const double occ = sys.particles() == 1 ? 1.0 : 2.0;
  ComplexField out = ComplexField::Zero(M + 1);
  for (int f = 1; f < M; ++f)
    out[f] = occ * (A.row(f - 1).conjugate().cwiseProduct(B.row(f))).sum();
  return out;
}

}  // namespace

Eigen::VectorXd bond_density(const ManyBodySystem& sys, const State& psi) {
  return bond_elements(sys, psi, psi).real() / sys.grid().h();
}

Eigen::VectorXd bond_current(const ManyBodySystem& sys, const State& psi) {
  const double h = sys.grid().h();
  return bond_elements(sys, psi, psi).imag() / (h * h);
}

Field current_divergence(const ManyBodySystem& sys, const State& psi) {
  const int M = sys.grid().M;
  const Eigen::VectorXd J = bond_current(sys, psi);
  return (J.tail(M) - J.head(M)) / sys.grid().h();
}

Field nodal_current(const ManyBodySystem& sys, const State& psi) {
  const int M = sys.grid().M;
  const Eigen::VectorXd J = bond_current(sys, psi);
  return 0.5 * (J.tail(M) + J.head(M));
}

Field stress_tensor(const ManyBodySystem& sys, const State& psi) {
  const Grid& g = sys.grid();
  const int M = g.M;
  const double h = g.h();
  const Eigen::MatrixXd gamma = one_body_matrix(sys, psi, psi).real() / h;
  auto G = [&](int r, int s) { return (r < 0 || s < 0 || r >= M || s >= M) ? 0.0 : gamma(r, s); };
  Field out(M);
  for (int r = 0; r < M; ++r) {
    const double dd = (G(r + 1, r + 1) - G(r + 1, r - 1) - G(r - 1, r + 1) + G(r - 1, r - 1)) /
                      (4.0 * h * h);
    const double lap = (G(r + 1, r + 1) - 2.0 * G(r, r) + G(r - 1, r - 1)) / (h * h);
    out[r] = dd - 0.25 * lap;
  }
  return out;
}

Field interaction_force(const ManyBodySystem& sys, const State& psi) {
  const Grid& g = sys.grid();
  const int M = g.M;
  Field out = Field::Zero(M);
  if (sys.particles() == 1 || !sys.interacting()) return out;
  const Eigen::MatrixXd P = pair_matrix(sys, psi, psi).real();
  const double eps = sys.config().softcore_epsilon;
  const double gs = sys.config().interaction_strength;
  for (int r = 0; r < M; ++r) {
    double acc = 0.0;
    for (int s = 0; s < M; ++s) acc += softcore_dx(g.x(r), g.x(s), eps, gs) * P(r, s);
    out[r] = acc * g.h();
  }
  return out;
}

namespace {

// First derivative: central inside, second-order one-sided on the end nodes.
Field stencil_derivative(const Field& f, double h) {
  const Eigen::Index M = f.size();
  Field d(M);
  for (Eigen::Index i = 1; i + 1 < M; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  d[M - 1] = (3.0 * f[M - 1] - 4.0 * f[M - 2] + f[M - 3]) / (2.0 * h);
  return d;
}

}  // namespace

Field q_stencil(const ManyBodySystem& sys, const State& psi) {
  const double h = sys.grid().h();
  const Field F = stencil_derivative(stress_tensor(sys, psi), h) + interaction_force(sys, psi);
  return stencil_derivative(F, h);
}

ComplexField q_transition(const ManyBodySystem& sys, const State& a, const State& b) {
  const State Ta = sys.apply_kinetic(a);
  const State Ha = sys.apply_free(a);
  const State THa = sys.apply_kinetic(Ha);
  const State Tb = sys.apply_kinetic(b);
  const State Hb = sys.apply_free(b);
  const State THb = sys.apply_kinetic(Hb);
  return -(transition_density(sys, THa, b) - transition_density(sys, Ha, Tb) -
           transition_density(sys, Ta, Hb) + transition_density(sys, a, THb));
}

// ------------------------------------------------------------- OperatorField

Field OperatorField::expectation(const State& psi) const { return elements_(psi, psi).real(); }

Eigen::MatrixXcd OperatorField::materialize(int r, int dim) const {
  Eigen::MatrixXcd A(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const State ei = State::Unit(dim, i);
    for (int j = 0; j < dim; ++j) A(i, j) = elements_(ei, State::Unit(dim, j))[r];
  }
  return A;
}

double OperatorField::hermiticity_defect(int dim, unsigned seed) const {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss;
  auto random_state = [&] {
    State s(dim);
    for (int i = 0; i < dim; ++i) s[i] = cd(gauss(rng), gauss(rng));
    return State(s.normalized());
  };
  double worst = 0.0;
  for (int t = 0; t < 3; ++t) {
    const State a = random_state();
    const State b = random_state();
    const ComplexField ab = elements_(a, b);
    const ComplexField ba = elements_(b, a);
    const double scale = std::max({ab.cwiseAbs().maxCoeff(), ba.cwiseAbs().maxCoeff(), 1e-300});
    worst = std::max(worst, (ab - ba.conjugate()).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

OperatorField density_operator(const ManyBodySystem& sys) {
  return OperatorField("density", sys.grid().M, [&sys](const State& a, const State& b) {
    return transition_density(sys, a, b);
  });
}

OperatorField bond_density_operator(const ManyBodySystem& sys) {
  return OperatorField("bond-density", sys.grid().M + 1, [&sys](const State& a, const State& b) {
    // (c_r^dag c_{r+1} + c_{r+1}^dag c_r) / (2h): Hermitian part of gamma_{r,r+1}.
    const ComplexField ab = bond_elements(sys, a, b);
    const ComplexField ba = bond_elements(sys, b, a);
    return ComplexField((ab + ba.conjugate()) * (0.5 / sys.grid().h()));
  });
}

OperatorField q_operator(const ManyBodySystem& sys) {
  return OperatorField("q", sys.grid().M,
                       [&sys](const State& a, const State& b) { return q_transition(sys, a, b); });
}

OperatorField identity_operator(const ManyBodySystem& sys, double c) {
  return OperatorField("identity", sys.grid().M, [&sys, c](const State& a, const State& b) {
    return ComplexField(ComplexField::Constant(sys.grid().M, c * a.dot(b)));
  });
}

OperatorField current_operator(const ManyBodySystem& sys) {
  return OperatorField("current", sys.grid().M + 1, [&sys](const State& a, const State& b) {
    const double h = sys.grid().h();
    const ComplexField ab = bond_elements(sys, a, b);
    const ComplexField ba = bond_elements(sys, b, a);
    return ComplexField((ab - ba.conjugate()) / (cd(0.0, 2.0) * h * h));
  });
}

Eigen::VectorXd lattice_force(const ManyBodySystem& sys, const State& psi) {
  // d/dt <J> = 2 Re <psi| J |psi'> with psi' = -i (T + V_int) psi
  const State dpsi = cd(0.0, -1.0) * sys.apply_free(psi);
  return 2.0 * current_operator(sys).elements(psi, dpsi).real();
}

}  // namespace tdlab
