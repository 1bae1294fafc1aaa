// One PASS/FAIL line per acceptance criterion.
//   acceptance <tdlab executable> <config for the determinism run>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tdlab/expression.hpp"
#include "tdlab/verify.hpp"

using namespace tdlab;
namespace fs = std::filesystem;

namespace {

Field sample(const Grid& g, const std::string& e) { return Expression::parse(e).on_grid(g); }
double max_abs(const Field& f) { return f.cwiseAbs().maxCoeff(); }

SystemConfig two_particles(int M, double g) {
  SystemConfig c;
  c.box = build_grid(-5, 5, M);
  c.particles = 2;
  c.statistics = Statistics::FermionSinglet;
  c.interaction_strength = g;
  c.softcore_epsilon = 1.0;
  return c;
}

const char* kProfile = "(10/pi)*sin(pi*x/10)";

TaylorField reference_potential(const Grid& g, int orders) {
  const char* e[] = {"0.04*x^2", "0.2*(10/pi)*sin(pi*x/10)", "0.1*cos(pi*x/5)"};
  TaylorField v;
  for (int k = 0; k < orders; ++k) v.coeffs.push_back(k < 3 ? sample(g, e[k]) : Field::Zero(g.M));
  return v;
}

State reference_state(const ManyBodySystem& sys, const TaylorField& v) {
  return apply_kick(sys, ground_state(sys, v[0]), 0.2, sample(sys.grid(), kProfile));
}

ExperimentConfig reference_experiment() {
  ExperimentConfig c;
  c.system = two_particles(39, 1.0);
  c.v = reference_potential(c.system.box, 3);
  c.kick = 0.2;
  c.kick_profile = sample(c.system.box, kProfile);
  c.K = 2;
  return c;
}

struct Check {
  bool pass = true;
  std::ostringstream notes;
  void need(bool ok, const std::string& what, double value) {
    if (!ok) pass = false;
    notes << (notes.tellp() > 0 ? "; " : "") << what << " = " << value << (ok ? "" : " [x]");
  }
  void verdicts(const ExperimentReport& r, const std::string& tag = "") {
    for (const Verdict& v : r.verdicts)
      if (!v.pass) need(false, tag + v.name, v.value);
    if (r.verdicts.empty()) need(false, tag + "no verdicts", 0.0);
  }
};

int failures = 0;

void report(int n, const std::string& title, const Check& c) {
  std::cout << (c.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << title << " (" << c.notes.str()
            << ")" << std::endl;
  if (!c.pass) ++failures;
}

template <class F>
void criterion(int n, const std::string& title, F body) {
  Check c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.need(false, std::string("exception: ") + e.what(), 0.0);
  }
  report(n, title, c);
}

SLSolution solve(const Grid& g, const Field& n, const Field& zeta) {
  SLOptions o;
  o.tol = 1e-13;
  return solve_sl(make_sl_problem(g, n, zeta), o);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <tdlab executable> <config>\n";
    return 2;
  }
  const std::string tool = argv[1];
  const std::string config = argv[2];

  criterion(1, "Sturm-Liouville solver correctness", [](Check& c) {
    const Grid g = build_grid(0, 1, 63);
    const Field n = sample(g, "2+cos(x)");
    const Field vstar = sample(g, "sin(pi*x)*x*(1-x)");
    const Field zeta = weighted_divgrad_matrix(g, n).apply(vstar);
    c.need(max_abs(solve(g, n, zeta).v - vstar) <= 1e-9, "manufactured error", max_abs(solve(g, n, zeta).v - vstar));
    auto err = [](int M) {
      const Grid gm = build_grid(0, 1, M);
      const std::string dv = "(pi*cos(pi*x)*x*(1-x) + sin(pi*x)*(1-2*x))";
      const std::string d2v = "(-pi^2*sin(pi*x)*x*(1-x) + 2*pi*cos(pi*x)*(1-2*x) - 2*sin(pi*x))";
      const Field z = sample(gm, "-sin(x)*" + dv + " + (2+cos(x))*" + d2v);
      return max_abs(solve(gm, sample(gm, "2+cos(x)"), z).v - sample(gm, "sin(pi*x)*x*(1-x)"));
    };
    const double ratio = err(31) / err(63);
    c.need(ratio >= 3.5 && ratio <= 4.5, "refinement ratio", ratio);
    const double zero = max_abs(solve(g, n, Field::Zero(63)).v);
    c.need(zero <= 1e-12, "zero rhs |v|", zero);
  });

  criterion(2, "Lax-Milgram coercivity and Poincare constant", [](Check& c) {
    const Grid g = build_grid(0, 1, 63);
    int violations = 0, trials = 0;
    for (const char* n : {"1", "2+cos(x)", "0.05+x^2", "1.25+0.75*sin(2*pi*x)"}) {
      const SLDiagnostics d = check_lax_milgram(g, sample(g, n), sample(g, "sin(pi*x)"), 100, 20240917);
      violations += d.coercivity_violations;
      trials += d.trials;
    }
    // lattice bond density of the reference state as coefficient
    const ManyBodySystem sys = build_system(two_particles(39, 1.0));
    const TaylorField v = reference_potential(sys.grid(), 3);
    const SLProblem p = make_sl_problem(sys.grid(), bond_density(sys, reference_state(sys, v)),
                                        sample(sys.grid(), "cos(x)"), Gauge::PinFirstNode);
    const SLDiagnostics d = check_lax_milgram(p, 100, 20240917);
    violations += d.coercivity_violations;
    trials += d.trials;
    c.need(violations == 0, "violations", violations);
    c.need(trials >= 500, "random fields", trials);
    const double lam = estimate_poincare(build_grid(0, 1, 199));
    c.need(std::abs(lam - 1.0 / M_PI) <= 1e-3, "|lambda - 1/pi|", std::abs(lam - 1.0 / M_PI));
  });

  criterion(3, "conservation identities along trajectories", [](Check& c) {
    std::vector<ConservationSeries> runs;
    for (int M : {31, 63}) {
      const ManyBodySystem sys = build_system(two_particles(M, 1.0));
      const TaylorField vs = reference_potential(sys.grid(), 3);
      PropagateOptions po;
      po.store_states = true;
      po.solve_tol = 0.0;
      const double dt = 0.16 / (M + 1);
      const TimePotential v = TimePotential::from_series(vs);
      const Trajectory tr = propagate(sys, reference_state(sys, vs), v, 0, dt,
                                      static_cast<int>(std::lround(0.4 / dt)), po);
      runs.push_back(conservation_checks(sys, tr, v));
    }
    const ConservationSeries& a = runs[0];
    const ConservationSeries& b = runs[1];
    const double rc = a.max_of(a.continuity_stencil) / b.max_of(b.continuity_stencil);
    const double rf = a.max_of(a.forcebalance_stencil) / b.max_of(b.forcebalance_stencil);
    const double ri = a.max_of(a.identity_stencil) / b.max_of(b.identity_stencil);
    c.need(rc >= 3.5 && rc <= 4.5, "continuity ratio", rc);
    c.need(rf >= 3.5 && rf <= 4.5, "force balance ratio", rf);
    c.need(ri >= 3.5 && ri <= 4.5, "identity ratio", ri);

    const ManyBodySystem sys = build_system(two_particles(39, 1.0));
    const Field v0 = sample(sys.grid(), "0.04*x^2");
    PropagateOptions po;
    po.store_states = true;
    const TimePotential stat = TimePotential::constant(v0);
    const Trajectory eig = propagate(sys, ground_state(sys, v0), stat, 0, 0.01, 50, po);
    const ConservationSeries e = conservation_checks(sys, eig, stat);
    const double eres = std::max({e.max_of(e.continuity), e.max_of(e.forcebalance), e.max_of(e.identity)});
    c.need(eres <= 1e-8, "eigenstate residual", eres);

    const TaylorField vs = reference_potential(sys.grid(), 3);
    const Trajectory cn = propagate(sys, reference_state(sys, vs), TimePotential::from_series(vs), 0,
                                    0.002, 1000);
    double drift = 0.0;
    for (double n : cn.norms) drift = std::max(drift, std::abs(n - 1.0));
    c.need(drift <= 1e-10, "norm drift over 1000 CN steps", drift);
  });

  criterion(4, "recursion and direct Heisenberg coefficients agree", [](Check& c) {
    const ManyBodySystem sys = build_system(two_particles(39, 1.0));
    const TaylorField v = reference_potential(sys.grid(), 4);
    const State psi = reference_state(sys, v);
    const TaylorField rec = predict_density_taylor(sys, psi, v, 2);
    const TaylorField dir = observable_taylor(sys, psi, density_operator(sys), v, 4);
    for (int k = 0; k <= 4; ++k) {
      const double s = max_abs(dir[k]);
      const double rel = max_abs(rec[k] - dir[k]) / (s > 0.0 ? s : 1.0);
      c.need(rel <= 1e-8, "k=" + std::to_string(k), rel);
    }
  });

  criterion(5, "self-inversion recovers the potential", [](Check& c) {
    const ManyBodySystem sys = build_system(two_particles(39, 1.0));
    const TaylorField v = reference_potential(sys.grid(), 4);
    const State psi = reference_state(sys, v);
    const TaylorField target = predict_density_taylor(sys, psi, v, 3);
    const InversionResult r = invert_potential_taylor(target, sys, psi, 3);
    const TaylorField a = gauge_aligned(r.v_prime), b = gauge_aligned(v);
    for (int k = 0; k <= 3; ++k) {
      const double s = std::max(max_abs(b[k]), max_abs(v[k]));
      const double rel = max_abs(a[k] - b[k]) / (s > 0.0 ? s : 1.0);
      c.need(rel <= 1e-6, "k=" + std::to_string(k), rel);
    }
  });

  criterion(6, "Kohn-Sham round trip at K=2", [](Check& c) {
    const ExperimentReport r = roundtrip_experiment(reference_experiment());
    c.verdicts(r);
    const nlohmann::json& f = r.details["fits_by_order"];
    c.need(r.details["slope"].get<double>() >= 2.5, "slope K=2", r.details["slope"].get<double>());
    c.need(true, "slope K=0", f[0]["slope"].get<double>());
    const auto e = r.details["fixed_t_errors"].get<std::vector<double>>();
    c.need(e[1] < e[0] && e[2] < e[1], "e(K=2)/e(K=0) at fixed t", e[2] / e[0]);
  });

  criterion(7, "interaction independence of the inversion", [](Check& c) {
    for (double gp : {0.0, 0.5}) {
      ExperimentConfig cfg = reference_experiment();
      cfg.primed_strengths = {gp};
      const ExperimentReport r = roundtrip_experiment(cfg);
      const std::string tag = "g'=" + std::string(gp == 0.0 ? "0" : "0.5") + " ";
      c.verdicts(r, tag);
      double worst = 0.0;
      for (const auto& d : r.details["inversion"]["diagnostics"]) worst = std::max(worst, d["residual"].get<double>());
      c.need(worst <= 1e-10, tag + "max residual", worst);
      c.need(true, tag + "slope", r.details["slope"].get<double>());
    }
  });

  criterion(8, "time-stepping oracle agreement", [](Check& c) {
    ExperimentConfig cfg = reference_experiment();
    cfg.K = 1;
    cfg.oracle_dt = 1e-3;
    cfg.oracle_steps = 200;
    cfg.tol_track = 1e-5;
    const ExperimentReport r = oracle_compare_experiment(cfg);
    c.verdicts(r);
    const double track = r.details["closed_loop_max_tracking"].get<double>();
    c.need(track <= 1e-5, "closed-loop tracking", track);
    const double slope = r.details["slope"].get<double>();
    c.need(std::abs(slope - (cfg.K + 1)) <= 0.5, "Taylor vs oracle order", slope);
  });

  criterion(9, "bit-identical CSV across two runs", [&](Check& c) {
    const fs::path base = fs::temp_directory_path() / "tdlab_acceptance";
    fs::remove_all(base);
    for (const char* d : {"a", "b"}) {
      const std::string cmd = "\"" + tool + "\" run \"" + config + "\" --out \"" + (base / d).string() + "\" > /dev/null";
      const int rc = std::system(cmd.c_str());
      c.need(rc == 0, std::string("run ") + d + " exit", rc);
    }
    const std::string a = slurp(base / "a" / "series.csv");
    const std::string b = slurp(base / "b" / "series.csv");
    c.need(!a.empty() && a == b, "csv bytes identical", a == b ? 1.0 : 0.0);
    c.need(true, "csv bytes", static_cast<double>(a.size()));
    fs::remove_all(base);
  });

  return failures == 0 ? 0 : 1;
}
