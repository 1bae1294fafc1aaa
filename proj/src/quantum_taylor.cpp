#include <cmath>
#include <sstream>

#include "tdlab/quantum.hpp"

namespace tdlab {

using cd = std::complex<double>;

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

std::vector<State> state_derivatives(const ManyBodySystem& sys, const State& psi0,
                                     const TaylorField& v, int K) {
  if (K < 0) throw ConfigError("taylor: order K must be >= 0");
  if (K > 0 && v.order() < K - 1) {
    std::ostringstream os;
    os << "taylor: potential supplies orders 0.." << v.order() << " but orders 0.." << K - 1
       << " are needed for K=" << K;
    throw ConfigError(os.str());
  }
  require_normalized(psi0);
  const cd mi(0.0, -1.0);
  std::vector<State> d;
  d.reserve(K + 1);
  d.push_back(psi0);
  for (int k = 0; k < K; ++k) {
    State acc = sys.apply_hamiltonian(v[0], d[k]);
    for (int l = 1; l <= k; ++l) acc += binom(k, l) * sys.apply_potential(v[l], d[k - l]);
    d.push_back(mi * acc);
  }
  return d;
}

TaylorField observable_taylor(const std::vector<State>& derivs, const OperatorField& A, int K) {
  if (static_cast<int>(derivs.size()) < K + 1)
    throw ConfigError("taylor: not enough state derivatives for the requested order");
  TaylorField out;
  for (int k = 0; k <= K; ++k) {
    ComplexField acc = ComplexField::Zero(A.points());
    // Pair j with k-j; the two halves are complex conjugates for Hermitian A.
    for (int j = 0; 2 * j < k; ++j)
      acc += 2.0 * binom(k, j) * A.elements(derivs[j], derivs[k - j]).real().cast<cd>();
    if (k % 2 == 0) acc += binom(k, k / 2) * A.elements(derivs[k / 2], derivs[k / 2]);
    out.coeffs.push_back(acc.real());
  }
  return out;
}

TaylorField observable_taylor(const ManyBodySystem& sys, const State& psi0, const OperatorField& A,
                              const TaylorField& v, int K) {
  const double defect = A.hermiticity_defect(sys.dim());
  if (defect > 1e-10) {
    std::ostringstream os;
    os << "taylor: operator '" << A.name() << "' is not Hermitian (defect " << defect << ")";
    throw ConfigError(os.str());
  }
  TaylorField f = observable_taylor(state_derivatives(sys, psi0, v, K), A, K);
  f.t0 = v.t0;
  return f;
}

TaylorField q_expectation_taylor(const ManyBodySystem& sys, const State& psi0,
                                 const TaylorField& v, int K) {
  TaylorField f = observable_taylor(state_derivatives(sys, psi0, v, K), q_operator(sys), K);
  f.t0 = v.t0;
  return f;
}

}  // namespace tdlab
