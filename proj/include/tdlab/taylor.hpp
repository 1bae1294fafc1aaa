#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdlab/quantum.hpp"
#include "tdlab/sturm.hpp"

namespace tdlab {

/// Taylor coefficients of the bond density B (faces) and of <q> (nodes) for
/// a state and potential series, orders 0..K.
struct ForceSeries {
  TaylorField bond;
  TaylorField q;
};
ForceSeries force_series(const ManyBodySystem& sys, const std::vector<State>& derivs, int K);

/// n^(0)..n^(K+2) from the order recursion
///   n^(k+2) = q^(k) + sum_l binom(k,l) div_h[B^(k-l) grad_h v^(l)],
/// with n^(0), n^(1) taken from the state and its lattice current.
/// Needs v orders 0..K.
TaylorField predict_density_taylor(const ManyBodySystem& sys, const State& psi0,
                                   const TaylorField& v, int K);

struct InversionOptions {
  double tol = 1e-10;           ///< relative residual of every SL solve
  double floor = kDefaultDensityFloor;
  double compat_tol = 1e-8;     ///< initial-state compatibility check
  int lax_milgram_trials = 100;
  std::uint64_t seed = 20240917;
};

struct InversionResult {
  TaylorField v_prime;
  TaylorField v_delta;  ///< empty unless produced by the delta route
  std::vector<SLDiagnostics> diagnostics;
  std::vector<Field> rhs;  ///< zeta^(k)

  bool has_delta() const { return !v_delta.coeffs.empty(); }
  /// max over orders of the SL residual
  double max_residual() const;
  nlohmann::json to_json() const;
};

/// Potential orders v'^(0..K) of the primed system that reproduce the target
/// density orders (target needs orders 0..K+2). Each order solves
///   div_h[B'^(0) grad_h v'^(k)] = n^(k+2) - q'^(k) - sum_{l<k} binom(k,l) div_h[B'^(k-l) grad_h v'^(l)]
/// with zero-flux walls and v'^(k) = 0 on the first node.
/// Throws NumericalError on incompatible initial data, floor violation or an
/// SL failure (the message names the order).
InversionResult invert_potential_taylor(const TaylorField& target, const ManyBodySystem& primed,
                                        const State& psi0_primed, int K,
                                        const InversionOptions& opts = {});

/// The unprimed system with its initial state and potential series.
struct UnprimedRun {
  const ManyBodySystem& system;
  State psi0;
  TaylorField v;
};

/// v_Delta^(0..K) such that v' = v + v_Delta drives the primed system to the
/// unprimed density; v_prime is filled with v + v_Delta.
InversionResult delta_potential_taylor(const UnprimedRun& run, const ManyBodySystem& primed,
                                       const State& psi0_primed, int K,
                                       const InversionOptions& opts = {});

/// Subtracts each order's value on the first node (gauge alignment).
TaylorField gauge_aligned(const TaylorField& f);

/// Checks density and first time derivative of psi0' against the target.
void check_initial_compatibility(const ManyBodySystem& primed, const State& psi0_primed,
                                 const Field& n0, const Field& n1, double tol);

}  // namespace tdlab
