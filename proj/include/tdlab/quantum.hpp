#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tdlab/grid.hpp"

namespace tdlab {

using State = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class Statistics { Single, BosonPair, FermionSinglet };

Statistics parse_statistics(const std::string& s);
std::string to_string(Statistics s);

struct SystemConfig {
  Grid box;
  int particles = 2;
  Statistics statistics = Statistics::FermionSinglet;
  double interaction_strength = 0.0;  ///< g; 0 disables the interaction
  double softcore_epsilon = 1.0;      ///< epsilon in g / sqrt(r^2 + epsilon)
};

/// N <= 2 particles on the interior nodes of a hard-wall box. Two-particle
/// states live in the symmetric sector, basis |i,j>_S with i <= j in
/// lexicographic order (dimension M(M+1)/2). Fermion singlets use the same
/// symmetric spatial sector with the spin factor implied.
class ManyBodySystem {
 public:
  explicit ManyBodySystem(const SystemConfig& cfg);

  const SystemConfig& config() const { return cfg_; }
  const Grid& grid() const { return cfg_.box; }
  int particles() const { return cfg_.particles; }
  int dim() const { return dim_; }
  bool interacting() const { return cfg_.interaction_strength != 0.0; }
  const std::vector<std::pair<int, int>>& basis() const { return basis_; }

  const SparseMatrix& kinetic() const { return kinetic_; }
  /// Diagonal of the pair interaction (zero for N = 1 or g = 0).
  const Eigen::VectorXd& interaction() const { return interaction_; }
  /// Diagonal of sum_particles v(x_particle).
  Eigen::VectorXd potential_diagonal(const Field& v) const;
  /// Occupation count of node r in basis state b.
  const Eigen::MatrixXd& occupation() const { return occupation_; }

  /// T + V_int + V[v] as a sparse Hermitian (real symmetric) matrix.
  SparseMatrix hamiltonian(const Field& v) const;
  /// (T + V_int + V[v]) psi without forming the matrix.
  State apply_hamiltonian(const Field& v, const State& psi) const;
  /// (T + V_int) psi.
  State apply_free(const State& psi) const;
  State apply_kinetic(const State& psi) const { return kinetic_ * psi; }
  State apply_potential(const Field& v, const State& psi) const;

  /// Amplitude table: M x M symmetric matrix psi(x1, x2) normalised so that
  /// sum |psi|^2 = 1 (N = 2), or an M x 1 column (N = 1).
  Eigen::MatrixXcd unpack(const State& psi) const;
  State pack(const Eigen::MatrixXcd& table) const;

 private:
  SystemConfig cfg_;
  int dim_ = 0;
  std::vector<std::pair<int, int>> basis_;
  SparseMatrix kinetic_;
  Eigen::VectorXd interaction_;
  Eigen::MatrixXd occupation_;  // dim x M
};

/// Validates the configuration (throws ConfigError) and builds the system.
ManyBodySystem build_system(const SystemConfig& cfg);

void require_normalized(const State& psi, double tol = 1e-10);

/// Ground state of T + V_int + V[v] (real, positive-phase convention).
State ground_state(const ManyBodySystem& sys, const Field& v, double* energy = nullptr);
/// Multiplies every particle coordinate by exp(i kappa x).
State apply_kick(const ManyBodySystem& sys, const State& psi, double kappa);
/// Multiplies every particle coordinate by exp(i kappa profile(x)). A profile
/// with vanishing odd derivatives at the walls keeps the kicked state
/// compatible with the hard walls, so time derivatives stay bounded under
/// refinement; the linear profile does not.
State apply_kick(const ManyBodySystem& sys, const State& psi, double kappa, const Field& profile);

// ---------------------------------------------------------------- observables

/// n_r = <psi| n(r) |psi>, with n(r) the grid density operator (1/h per
/// particle at node r). Throws ConfigError on unnormalised input.
Field density(const ManyBodySystem& sys, const State& psi);
/// <a| n(r) |b> for all r.
ComplexField transition_density(const ManyBodySystem& sys, const State& a, const State& b);
/// gamma_{rs} = <a| c_r^dagger c_s |b>, the one-body transition matrix.
Eigen::MatrixXcd one_body_matrix(const ManyBodySystem& sys, const State& a, const State& b);
/// <a| sum_{i != j} delta(x_i - r) delta(x_j - r') |b> (pair density, N = 2).
Eigen::MatrixXcd pair_matrix(const ManyBodySystem& sys, const State& a, const State& b);

/// Bond (link) density on faces: Re gamma_{r,r+1} / h; zero on both wall faces.
/// It is the coefficient of the exact lattice identity
///   -<[V,[T,n(r)]]> = div_h(B grad_h v).
Eigen::VectorXd bond_density(const ManyBodySystem& sys, const State& psi);
/// Lattice current on faces: Im gamma_{r,r+1} / h^2; zero on both wall faces.
Eigen::VectorXd bond_current(const ManyBodySystem& sys, const State& psi);
/// <div j> on nodes from the lattice current; d n / dt = -<div j> exactly.
Field current_divergence(const ManyBodySystem& sys, const State& psi);
/// Nodal current (mean of the two adjacent bond currents).
Field nodal_current(const ManyBodySystem& sys, const State& psi);
/// Momentum-stress tensor <T_xx(r)> by central differences of gamma.
Field stress_tensor(const ManyBodySystem& sys, const State& psi);
/// Interaction-stress divergence <W_x(r)> = sum_r' d_x w(r - r') P(r, r') h.
Field interaction_force(const ManyBodySystem& sys, const State& psi);
/// d_x(d_x <T_xx> + <W_x>) by grid stencils (one-sided at the walls).
Field q_stencil(const ManyBodySystem& sys, const State& psi);
/// Number of outermost nodes on each side touched by one-sided stencils in
/// the stencil observables above.
inline constexpr int kStencilBoundaryNodes = 2;

/// Lattice double commutator q(r) = -[T + V_int, [T, n(r)]] between two
/// states; its expectation plus div_h(B grad_h v) is the exact d^2 n/dt^2.
ComplexField q_transition(const ManyBodySystem& sys, const State& a, const State& b);

// ------------------------------------------------------------- operator field

/// An operator per grid node (or face), accessed through its matrix elements
/// <bra| A(r) |ket> for all r at once.
class OperatorField {
 public:
  using Elements = std::function<ComplexField(const State& bra, const State& ket)>;

  OperatorField(std::string name, int points, Elements elements)
      : name_(std::move(name)), points_(points), elements_(std::move(elements)) {}

  const std::string& name() const { return name_; }
  int points() const { return points_; }
  ComplexField elements(const State& bra, const State& ket) const { return elements_(bra, ket); }
  Field expectation(const State& psi) const;
  /// Dense matrix of A(r); intended for small systems.
  Eigen::MatrixXcd materialize(int r, int dim) const;
  /// Largest |<a|A|b> - conj(<b|A|a>)| relative to the element scale over a
  /// few seeded random probe pairs.
  double hermiticity_defect(int dim, unsigned seed = 7) const;

 private:
  std::string name_;
  int points_;
  Elements elements_;
};

OperatorField density_operator(const ManyBodySystem& sys);
OperatorField bond_density_operator(const ManyBodySystem& sys);
OperatorField q_operator(const ManyBodySystem& sys);
OperatorField identity_operator(const ManyBodySystem& sys, double c);
/// Lattice current on faces, (c_r^dag c_{r+1} - c_{r+1}^dag c_r) / (2 i h^2).
OperatorField current_operator(const ManyBodySystem& sys);

/// i <[T + V_int, J_f]> on faces: the rate of change of the lattice current
/// without the external force. With it
///   dJ_f/dt = lattice_force_f - B_f (v_f - v_{f-1}) / h
/// holds exactly on the lattice.
Eigen::VectorXd lattice_force(const ManyBodySystem& sys, const State& psi);

// ------------------------------------------------------------- Taylor engine

/// Time derivatives psi^(k) = d^k psi/dt^k at t0, k = 0..K, from
///   psi^(k+1) = -i sum_l binom(k,l) H_l psi^(k-l),
/// with H_0 = T + V_int + V[v^(0)] and H_l = V[v^(l)] for l >= 1.
std::vector<State> state_derivatives(const ManyBodySystem& sys, const State& psi0,
                                     const TaylorField& v, int K);

/// Taylor coefficients of <A(r)>(t) at t0 for k = 0..K: the total time
/// derivatives obtained by repeated Heisenberg differentiation,
///   A^(k) = sum_j binom(k,j) <psi^(j)| A |psi^(k-j)>.
/// Requires v orders 0..K-1 and a Hermitian A (checked by probing).
TaylorField observable_taylor(const ManyBodySystem& sys, const State& psi0, const OperatorField& A,
                              const TaylorField& v, int K);
/// Same, reusing precomputed state derivatives.
TaylorField observable_taylor(const std::vector<State>& derivs, const OperatorField& A, int K);

/// q^(k) = Taylor coefficients of <q(r)>, k = 0..K (needs v orders 0..K-1).
TaylorField q_expectation_taylor(const ManyBodySystem& sys, const State& psi0,
                                 const TaylorField& v, int K);

// ---------------------------------------------------------------- propagation

enum class Integrator {
  CrankNicolson,  ///< midpoint potential, unitary Cayley step
  Taylor,         ///< high-order Taylor series of the state, polynomial v(t) only
};

Integrator parse_integrator(const std::string& s);
std::string to_string(Integrator i);

/// Time-dependent potential. Either a Taylor polynomial about t0 or an
/// arbitrary callable.
struct TimePotential {
  std::function<Field(double)> at;
  std::optional<TaylorField> series;

  static TimePotential from_series(TaylorField f);
  static TimePotential from_function(std::function<Field(double)> f);
  static TimePotential constant(Field v);
};

struct PropagateOptions {
  Integrator integrator = Integrator::CrankNicolson;
  bool store_states = false;
  double solve_tol = 1e-14;  ///< inner BiCGSTAB tolerance (CN); 0 selects sparse LU
  int taylor_order = 24;     ///< Taylor integrator series length
  double taylor_step_norm = 0.5;  ///< substep such that ||H|| tau <= this
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> densities;
  std::vector<double> norms;
  std::vector<State> states;  ///< filled when store_states
  int max_inner_iterations = 0;
};

/// Propagates psi0 from t0 for `steps` steps of dt; index 0 is t0.
Trajectory propagate(const ManyBodySystem& sys, const State& psi0, const TimePotential& v,
                     double t0, double dt, int steps, const PropagateOptions& opts = {});

/// One Crank-Nicolson step under the fixed potential v_mid. tol > 0: BiCGSTAB
/// to that relative tolerance; tol == 0: sparse LU.
State crank_nicolson_step(const ManyBodySystem& sys, const State& psi, const Field& v_mid,
                          double dt, double tol, int* iterations = nullptr);

// ----------------------------------------------------- Kohn-Sham initial state

/// Doubly occupied orbital phi = sqrt(n0 h / 2) exp(i theta) on a
/// noninteracting two-particle system such that density = n0 and the lattice
/// continuity derivative equals n1. theta is fixed by the zero-flux walls:
/// the face current J with -(J_{r+1/2} - J_{r-1/2})/h = n1 is integrated from
/// both walls and theta increments follow from the lattice current of phi.
/// For N = 1 the orbital carries the full density.
State construct_ks_initial_state(const ManyBodySystem& sys, const Field& n0, const Field& n1,
                                 double floor = kDefaultDensityFloor,
                                 double compat_tol = 1e-8);

/// Real ground state of the (interacting) system whose density equals n0,
/// found by Newton iteration on the static potential (dense linear response;
/// intended for small systems). The potential is returned through v_out,
/// pinned to zero on the first node.
State density_matched_ground_state(const ManyBodySystem& sys, const Field& n0,
                                   const Field& v_guess, double tol = 1e-12,
                                   Field* v_out = nullptr);

/// Multiplies a real state by exp(i sum_particles theta(x)) with theta chosen
/// so that the lattice continuity derivative becomes n1.
State imprint_current(const ManyBodySystem& sys, const State& real_state, const Field& n1,
                      double compat_tol = 1e-8);

/// Initial state of `sys` with density n0 and first derivative n1: the
/// product construction for noninteracting systems, otherwise a
/// density-matched ground state with an imprinted phase.
State matched_initial_state(const ManyBodySystem& sys, const Field& n0, const Field& n1,
                            const Field& v_guess, double floor = kDefaultDensityFloor,
                            double compat_tol = 1e-8);

}  // namespace tdlab
