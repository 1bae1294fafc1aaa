#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "tdlab/verify.hpp"

namespace tdlab {

Verdict Verdict::at_most(std::string name, double value, double threshold) {
  return {std::move(name), value, "<=", threshold, threshold, value <= threshold};
}

Verdict Verdict::at_least(std::string name, double value, double threshold) {
  return {std::move(name), value, ">=", threshold, threshold, value >= threshold};
}

Verdict Verdict::within(std::string name, double value, double lo, double hi) {
  return {std::move(name), value, "in", lo, hi, value >= lo && value <= hi};
}

namespace {

// JSON has no NaN/Inf; emit null instead.
nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

nlohmann::json Verdict::to_json() const {
  nlohmann::json j{{"name", name}, {"value", num(value)}, {"relation", relation}, {"pass", pass}};
  if (relation == "in")
    j["threshold"] = {threshold, threshold_hi};
  else
    j["threshold"] = threshold;
  return j;
}

bool ExperimentReport::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["config"] = config;
  j["passed"] = passed();
  j["verdicts"] = nlohmann::json::array();
  for (const auto& v : verdicts) j["verdicts"].push_back(v.to_json());
  j["details"] = details;
  j["series_length"] = series.size();
  return j;
}

void ExperimentReport::write_csv(std::ostream& os, const std::vector<std::string>& metadata) const {
  for (const auto& m : metadata) os << "# " << m << '\n';
  os << "t,e_L2,e_Linf,norm_drift,continuity_res,forcebalance_res\n";
  for (const auto& r : series)
    os << fmt(r.t) << ',' << fmt(r.e_L2) << ',' << fmt(r.e_Linf) << ',' << fmt(r.norm_drift) << ','
       << fmt(r.continuity_res) << ',' << fmt(r.forcebalance_res) << '\n';
}

std::string ExperimentReport::summary() const {
  std::ostringstream os;
  os << "experiment: " << kind << '\n';
  for (const auto& v : verdicts) {
    os << (v.pass ? "  PASS  " : "  FAIL  ") << v.name << ": " << v.value << ' ' << v.relation
       << ' ';
    if (v.relation == "in")
      os << '[' << v.threshold << ", " << v.threshold_hi << ']';
    else
      os << v.threshold;
    os << '\n';
  }
  os << (passed() ? "all verdicts passed" : "some verdicts failed") << '\n';
  return os.str();
}

nlohmann::json SlopeFit::to_json() const {
  return {{"slope", num(slope)}, {"intercept", num(intercept)}, {"r2", num(r2)},
          {"t_lo", t_lo},        {"t_hi", t_hi},                {"points", points},
          {"ok", ok}};
}

SlopeFit fit_loglog(const std::vector<double>& t, const std::vector<double>& e, double t_min,
                    double e_cap, double noise_floor) {
  SlopeFit fit;
  const std::size_t n = std::min(t.size(), e.size());
  // Window end: last sample before the error first exceeds the cap.
  std::size_t end = 0;
  while (end < n && (e[end] <= e_cap || t[end] < t_min)) ++end;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < end; ++i)
    if (t[i] >= t_min && t[i] > 0.0 && e[i] > noise_floor) idx.push_back(i);
  if (idx.size() < 3) return fit;

  // Thin to roughly geometric spacing in t.
  const double lo = std::log(t[idx.front()]);
  const double hi = std::log(t[idx.back()]);
  const int target = 24;
  std::vector<std::size_t> pick;
  double next = lo;
  for (std::size_t i : idx) {
    if (std::log(t[i]) >= next - 1e-12) {
      pick.push_back(i);
      next = std::log(t[i]) + (hi - lo) / target;
    }
  }
  if (pick.back() != idx.back()) pick.push_back(idx.back());
  if (pick.size() < 3) return fit;

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i : pick) {
    const double x = std::log(t[i]), y = std::log(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double m = static_cast<double>(pick.size());
  const double cxx = sxx - sx * sx / m, cxy = sxy - sx * sy / m, cyy = syy - sy * sy / m;
  fit.slope = cxy / cxx;
  fit.intercept = (sy - fit.slope * sx) / m;
  fit.r2 = cyy > 0 ? cxy * cxy / (cxx * cyy) : 1.0;
  fit.t_lo = t[pick.front()];
  fit.t_hi = t[pick.back()];
  fit.points = static_cast<int>(pick.size());
  fit.ok = true;
  return fit;
}

double ConservationSeries::max_of(const std::vector<double>& r) const {
  double m = 0.0;
  for (double x : r)
    if (std::isfinite(x)) m = std::max(m, x);
  return m;
}

nlohmann::json ConservationSeries::to_json() const {
  return {{"continuity_max", max_of(continuity)},
          {"forcebalance_max", max_of(forcebalance)},
          {"identity_max", max_of(identity)},
          {"continuity_stencil_max", max_of(continuity_stencil)},
          {"forcebalance_stencil_max", max_of(forcebalance_stencil)},
          {"identity_stencil_max", max_of(identity_stencil)},
          {"stencil_boundary_nodes_excluded", kStencilBoundaryNodes}};
}

}  // namespace tdlab
