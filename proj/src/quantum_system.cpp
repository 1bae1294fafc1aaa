#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/KroneckerProduct>
#include <cmath>
#include <complex>
#include <sstream>

#include "tdlab/quantum.hpp"

namespace tdlab {

using cd = std::complex<double>;

Statistics parse_statistics(const std::string& s) {
  if (s == "single") return Statistics::Single;
  if (s == "boson-pair") return Statistics::BosonPair;
  if (s == "fermion-singlet") return Statistics::FermionSinglet;
  throw ConfigError("system.statistics: unsupported value '" + s +
                    "' (expected single | boson-pair | fermion-singlet)");
}

std::string to_string(Statistics s) {
  switch (s) {
    case Statistics::Single: return "single";
    case Statistics::BosonPair: return "boson-pair";
    case Statistics::FermionSinglet: return "fermion-singlet";
  }
  return "unknown";
}

namespace {

SparseMatrix single_particle_kinetic(const Grid& g) {
  const int M = g.M;
  const double h2 = g.h() * g.h();
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < M; ++i) {
    t.emplace_back(i, i, 1.0 / h2);
    if (i > 0) t.emplace_back(i, i - 1, -0.5 / h2);
    if (i + 1 < M) t.emplace_back(i, i + 1, -0.5 / h2);
  }
  SparseMatrix T(M, M);
  T.setFromTriplets(t.begin(), t.end());
  return T;
}

}  // namespace

ManyBodySystem::ManyBodySystem(const SystemConfig& cfg) : cfg_(cfg) {
  const Grid& g = cfg_.box;
  const int M = g.M;
  const SparseMatrix T1 = single_particle_kinetic(g);
  if (cfg_.particles == 1) {
    dim_ = M;
    for (int i = 0; i < M; ++i) basis_.emplace_back(i, -1);
    kinetic_ = T1;
    interaction_ = Eigen::VectorXd::Zero(M);
    occupation_ = Eigen::MatrixXd::Identity(M, M);
    return;
  }

  for (int i = 0; i < M; ++i)
    for (int j = i; j < M; ++j) basis_.emplace_back(i, j);
  dim_ = static_cast<int>(basis_.size());

  // Isometry from the symmetric sector into the product space.
  std::vector<Eigen::Triplet<double>> pt;
  const double s = 1.0 / std::sqrt(2.0);
  for (int b = 0; b < dim_; ++b) {
    const auto [i, j] = basis_[b];
    if (i == j) {
      pt.emplace_back(i * M + i, b, 1.0);
    } else {
      pt.emplace_back(i * M + j, b, s);
      pt.emplace_back(j * M + i, b, s);
    }
  }
  SparseMatrix P(M * M, dim_);
  P.setFromTriplets(pt.begin(), pt.end());

  SparseMatrix I(M, M);
  I.setIdentity();
  const SparseMatrix Tfull = Eigen::kroneckerProduct(T1, I).eval() + Eigen::kroneckerProduct(I, T1).eval();
  kinetic_ = (SparseMatrix(P.transpose()) * Tfull * P).pruned(1e-300);

  interaction_ = Eigen::VectorXd::Zero(dim_);
  occupation_ = Eigen::MatrixXd::Zero(dim_, M);
  for (int b = 0; b < dim_; ++b) {
    const auto [i, j] = basis_[b];
    occupation_(b, i) += 1.0;
    occupation_(b, j) += 1.0;
    if (cfg_.interaction_strength != 0.0)
      interaction_[b] = softcore(g.x(i), g.x(j), cfg_.softcore_epsilon, cfg_.interaction_strength);
  }
}

ManyBodySystem build_system(const SystemConfig& cfg) {
  build_grid(cfg.box.a, cfg.box.b, cfg.box.M);
  if (cfg.particles != 1 && cfg.particles != 2) {
    std::ostringstream os;
    os << "system.N: only 1 or 2 particles are supported (got " << cfg.particles << ")";
    throw ConfigError(os.str());
  }
  if (cfg.particles == 1 && cfg.statistics != Statistics::Single)
    throw ConfigError("system.statistics: a single particle requires statistics 'single'");
  if (cfg.particles == 2 && cfg.statistics == Statistics::Single)
    throw ConfigError("system.statistics: two particles require boson-pair or fermion-singlet");
  if (cfg.particles == 2 && cfg.interaction_strength != 0.0 && !(cfg.softcore_epsilon > 0.0))
    throw ConfigError(
        "system.interaction.epsilon: soft-core regularisation requires epsilon > 0 "
        "(the bare Coulomb kernel is not smooth at coincidence)");
  if (!std::isfinite(cfg.interaction_strength))
    throw ConfigError("system.interaction.strength: must be finite");
  return ManyBodySystem(cfg);
}

Eigen::VectorXd ManyBodySystem::potential_diagonal(const Field& v) const {
  if (v.size() != grid().M) throw ConfigError("potential: size does not match the box grid");
  return occupation_ * v;
}

SparseMatrix ManyBodySystem::hamiltonian(const Field& v) const {
  SparseMatrix H = kinetic_;
  const Eigen::VectorXd d = interaction_ + potential_diagonal(v);
  for (int b = 0; b < dim_; ++b) H.coeffRef(b, b) += d[b];
  return H;
}

State ManyBodySystem::apply_potential(const Field& v, const State& psi) const {
  return potential_diagonal(v).cast<cd>().cwiseProduct(psi);
}

State ManyBodySystem::apply_free(const State& psi) const {
  return kinetic_ * psi + interaction_.cast<cd>().cwiseProduct(psi);
}

State ManyBodySystem::apply_hamiltonian(const Field& v, const State& psi) const {
  const Eigen::VectorXd d = interaction_ + potential_diagonal(v);
  return kinetic_ * psi + d.cast<cd>().cwiseProduct(psi);
}

Eigen::MatrixXcd ManyBodySystem::unpack(const State& psi) const {
  const int M = grid().M;
  if (psi.size() != dim_) throw ConfigError("state: dimension does not match the system basis");
  if (cfg_.particles == 1) return psi;
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(M, M);
  const double s = 1.0 / std::sqrt(2.0);
  for (int b = 0; b < dim_; ++b) {
    const auto [i, j] = basis_[b];
    if (i == j) {
      t(i, i) = psi[b];
    } else {
      t(i, j) = s * psi[b];
      t(j, i) = s * psi[b];
    }
  }
  return t;
}

State ManyBodySystem::pack(const Eigen::MatrixXcd& t) const {
  State psi(dim_);
  if (cfg_.particles == 1) return t.col(0);
  const double s = std::sqrt(2.0);
  for (int b = 0; b < dim_; ++b) {
    const auto [i, j] = basis_[b];
    psi[b] = i == j ? t(i, i) : s * 0.5 * (t(i, j) + t(j, i));
  }
  return psi;
}

void require_normalized(const State& psi, double tol) {
  const double n = psi.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > tol) {
    std::ostringstream os;
    os << "state is not normalised (||psi|| = " << n << ")";
    throw ConfigError(os.str());
  }
}

namespace {

// Lowest Ritz pair by Lanczos with full reorthogonalisation.
std::pair<double, Eigen::VectorXd> lanczos_lowest(const SparseMatrix& H, int steps) {
  const int n = static_cast<int>(H.rows());
  steps = std::min(steps, n);
  Eigen::MatrixXd Q(n, steps);
  Eigen::VectorXd alpha(steps), beta(steps);
  Eigen::VectorXd q = Eigen::VectorXd::Ones(n);
  // Deterministic non-symmetric start breaks accidental orthogonality.
  for (int i = 0; i < n; ++i) q[i] += 0.1 * std::sin(1.7 * i);
  q.normalize();
  int m = 0;
  for (; m < steps; ++m) {
    Q.col(m) = q;
    Eigen::VectorXd w = H * q;
    alpha[m] = q.dot(w);
    w -= Q.leftCols(m + 1) * (Q.leftCols(m + 1).transpose() * w);
    w -= Q.leftCols(m + 1) * (Q.leftCols(m + 1).transpose() * w);
    beta[m] = w.norm();
    if (beta[m] < 1e-12) {
      ++m;
      break;
    }
    q = w / beta[m];
  }
  Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    Tm(i, i) = alpha[i];
    if (i + 1 < m) Tm(i, i + 1) = Tm(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm);
  Eigen::VectorXd y = Q.leftCols(m) * es.eigenvectors().col(0);
  return {es.eigenvalues()[0], y.normalized()};
}

}  // namespace

State ground_state(const ManyBodySystem& sys, const Field& v, double* energy) {
  const SparseMatrix H = sys.hamiltonian(v);
  const int n = sys.dim();
  Eigen::VectorXd x;
  double E = 0.0;
  if (n <= 400) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(H)};
    E = es.eigenvalues()[0];
    x = es.eigenvectors().col(0);
  } else {
    auto [ritz, y] = lanczos_lowest(H, 160);
    // Shift-invert refinement slightly below the Ritz value.
    const double shift = ritz - 1e-6 * std::max(1.0, std::abs(ritz));
    SparseMatrix S = H;
    for (int b = 0; b < n; ++b) S.coeffRef(b, b) -= shift;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(S);
    if (ldlt.info() != Eigen::Success)
      throw NumericalError("ground-state", "shift-invert factorisation failed");
    x = y;
    E = x.dot(H * x);
    for (int it = 0; it < 50; ++it) {
      x = ldlt.solve(x).normalized();
      const double En = x.dot(H * x);
      const double res = (H * x - En * x).norm();
      E = En;
      if (res < 1e-12 * std::max(1.0, std::abs(En))) break;
    }
  }
  if (x.sum() < 0.0) x = -x;
  if (energy) *energy = E;
  return x.cast<cd>();
}

State apply_kick(const ManyBodySystem& sys, const State& psi, double kappa) {
  return apply_kick(sys, psi, kappa, sys.grid().nodes());
}

State apply_kick(const ManyBodySystem& sys, const State& psi, double kappa, const Field& profile) {
  if (profile.size() != sys.grid().M) throw ConfigError("kick profile: size does not match the box grid");
  State out = psi;
  for (int b = 0; b < sys.dim(); ++b) {
    const auto [i, j] = sys.basis()[b];
    const double X = profile[i] + (j >= 0 ? profile[j] : 0.0);
    out[b] *= std::polar(1.0, kappa * X);
  }
  return out;
}

}  // namespace tdlab
