#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdlab/taylor.hpp"

namespace tdlab {

/// Everything an experiment needs; the CLI fills it from a config file.
struct ExperimentConfig {
  SystemConfig system;  ///< the unprimed (target) system
  TaylorField v;        ///< external potential series about t0
  double kick = 0.0;    ///< initial state: ground state of v^(0), then exp(i kick profile(x))
  Field kick_profile;   ///< empty: profile(x) = x
  int K = 2;
  InversionOptions inversion;
  std::vector<double> primed_strengths{0.0};
  double T = 0.5;
  double dt = 0.002;
  Integrator integrator = Integrator::Taylor;
  // oracle-compare
  double oracle_dt = 1e-3;
  int oracle_steps = 200;
  double tol_track = 1e-5;
  // slope fits
  double error_cap = 1e-2;
  double window_start_steps = 10.0;
};

/// A pass/fail decision together with the number and threshold behind it.
struct Verdict {
  std::string name;
  double value = 0.0;
  std::string relation;  ///< "<=", ">=", "in"
  double threshold = 0.0;
  double threshold_hi = 0.0;  ///< upper end for "in"
  bool pass = false;

  static Verdict at_most(std::string name, double value, double threshold);
  static Verdict at_least(std::string name, double value, double threshold);
  static Verdict within(std::string name, double value, double lo, double hi);
  nlohmann::json to_json() const;
};

struct SeriesRow {
  double t = 0.0;
  double e_L2 = 0.0;
  double e_Linf = 0.0;
  double norm_drift = 0.0;
  double continuity_res = 0.0;
  double forcebalance_res = 0.0;
};

struct ExperimentReport {
  std::string kind;
  nlohmann::json config;
  std::vector<SeriesRow> series;
  nlohmann::json details = nlohmann::json::object();
  std::vector<Verdict> verdicts;

  bool passed() const;
  nlohmann::json to_json() const;
  /// CSV with `#`-prefixed metadata lines, a header row and one row per time.
  void write_csv(std::ostream& os, const std::vector<std::string>& metadata) const;
  std::string summary() const;
};

// ------------------------------------------------------------------ fitting

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  int points = 0;
  bool ok = false;
  nlohmann::json to_json() const;
};

/// Least-squares slope of log e against log t on t in [t_min, T'] where T' is
/// the last time before e first exceeds e_cap. Points with e <= noise_floor
/// are dropped; the remaining ones are thinned to a geometric sequence so
/// every decade weighs the same.
SlopeFit fit_loglog(const std::vector<double>& t, const std::vector<double>& e, double t_min,
                    double e_cap, double noise_floor);

// ------------------------------------------------------------ conservation

/// Residuals along a trajectory (stored states required). The lattice
/// residuals compare time differences against the exact lattice identities
///   dn/dt = -div_h J,  dJ/dt = F - B grad_h v,  d2n/dt2 = div_h(B grad_h v) + <q>,
/// so what remains is the O(dt^2) time-difference error. The stencil variants
/// use nodal continuum stencils instead and skip kStencilBoundaryNodes on each
/// side. Entries at the two end times are NaN.
struct ConservationSeries {
  std::vector<double> continuity, forcebalance, identity;
  std::vector<double> continuity_stencil, forcebalance_stencil, identity_stencil;

  double max_of(const std::vector<double>& r) const;
  nlohmann::json to_json() const;
};
ConservationSeries conservation_checks(const ManyBodySystem& sys, const Trajectory& traj,
                                       const TimePotential& v);

// ----------------------------------------------------------------- oracle

struct OracleOptions {
  double sl_tol = 1e-12;
  double floor = kDefaultDensityFloor;
  Integrator integrator = Integrator::Taylor;  ///< stepping with v' linear over each step
  double solve_tol = 0.0;  ///< CN inner solve; 0 = sparse LU
  int sweeps = 1;          ///< corrector sweeps per step
  double feedback_rate = 0.0;  ///< >0 adds critically damped feedback on n and dn/dt
};

struct OracleResult {
  std::vector<double> times;
  std::vector<Field> potentials;         ///< v'(t_j), j = 0..J-2 (first node pinned to 0)
  std::vector<double> tracking_error;    ///< ||n'(t_j) - n(t_j)||_2, j = 0..J-1
  std::vector<Field> densities;
  std::vector<double> norms;
  double max_tracking_error = 0.0;
};

/// Steps the primed system along a sampled target density. At t_j it solves
///   div_h[B' grad_h v'_j] = d2n/dt2(t_j) - <q'>(t_j)
/// with the target's centered second difference (one-sided at j = 0) and q'
/// from the current primed state, predicts v'_{j+1} by extrapolation,
/// propagates with Crank-Nicolson under the mean of the two, then corrects
/// with the re-solved v'_{j+1}.
OracleResult timestep_inversion_oracle(const std::vector<Field>& target, double t0, double dt,
                                       const ManyBodySystem& primed, const State& psi0_primed,
                                       const OracleOptions& opts = {});

// ------------------------------------------------------------ experiments

/// Pads a potential series with zero orders up to `order`.
TaylorField padded(const TaylorField& v, int order);

ExperimentReport forward_experiment(const ExperimentConfig& cfg);
ExperimentReport invert_experiment(const ExperimentConfig& cfg);
ExperimentReport roundtrip_experiment(const ExperimentConfig& cfg);
ExperimentReport interaction_independence_experiment(const ExperimentConfig& cfg);
ExperimentReport diagnose_sl_experiment(const ExperimentConfig& cfg);
ExperimentReport oracle_compare_experiment(const ExperimentConfig& cfg);

/// Dispatch by kind: forward | invert | roundtrip | independence | diagnose-sl | oracle-compare.
ExperimentReport run_experiment(const std::string& kind, const ExperimentConfig& cfg);
const std::vector<std::string>& experiment_kinds();

}  // namespace tdlab
