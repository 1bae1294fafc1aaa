#include "tdlab/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "tdlab/expression.hpp"

namespace tdlab {

using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest failed");
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(md[i]);
  return os.str();
}

std::string canonical_dump(const json& j) { return j.dump(); }

namespace {

// Line of a dotted field path in the source text, found by walking the quoted
// key names in order. 0 when the path cannot be located (e.g. a missing key).
int line_of(const std::string& text, const std::string& path) {
  std::size_t pos = 0;
  std::size_t start = 0;
  bool found = false;
  while (start <= path.size()) {
    std::size_t dot = path.find('.', start);
    if (dot == std::string::npos) dot = path.size();
    std::string key = path.substr(start, dot - start);
    const std::size_t br = key.find('[');
    if (br != std::string::npos) key = key.substr(0, br);
    const std::size_t hit = text.find('"' + key + '"', pos);
    if (hit == std::string::npos) break;
    pos = hit + key.size() + 2;
    found = true;
    start = dot + 1;
  }
  if (!found) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& path, const std::string& why) const {
    std::ostringstream os;
    os << path << ": " << why;
    const int line = line_of(text_, path);
    if (line > 0) os << " (line " << line << ")";
    throw ConfigError(os.str());
  }

  const json& block(const json& parent, const std::string& key, const std::string& path) const {
    if (!parent.contains(key)) fail(path, "required block is missing");
    const json& b = parent.at(key);
    if (!b.is_object()) fail(path, "must be an object");
    return b;
  }

  void only(const json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
    for (const auto& [k, _] : obj.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; }))
        fail(path + "." + k, "unknown field");
    }
  }

  double number(const json& obj, const std::string& key, const std::string& path,
                std::optional<double> fallback = std::nullopt) const {
    const std::string p = path + "." + key;
    if (!obj.contains(key)) {
      if (fallback) return *fallback;
      fail(p, "required field is missing");
    }
    const json& v = obj.at(key);
    if (!v.is_number()) fail(p, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(p, "must be finite");
    return d;
  }

  double positive(const json& obj, const std::string& key, const std::string& path,
                  std::optional<double> fallback = std::nullopt) const {
    const double d = number(obj, key, path, fallback);
    if (!(d > 0.0)) fail(path + "." + key, "must be > 0");
    return d;
  }

  long long integer(const json& obj, const std::string& key, const std::string& path,
                    std::optional<long long> fallback = std::nullopt) const {
    const std::string p = path + "." + key;
    if (!obj.contains(key)) {
      if (fallback) return *fallback;
      fail(p, "required field is missing");
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(p, "must be an integer");
    return v.get<long long>();
  }

  std::string string(const json& obj, const std::string& key, const std::string& path,
                     std::optional<std::string> fallback = std::nullopt) const {
    const std::string p = path + "." + key;
    if (!obj.contains(key)) {
      if (fallback) return *fallback;
      fail(p, "required field is missing");
    }
    const json& v = obj.at(key);
    if (!v.is_string()) fail(p, "must be a string");
    return v.get<std::string>();
  }

  // Runs f and re-throws a ConfigError from deeper layers with this path's line.
  template <class F>
  auto at(const std::string& path, F&& f) const {
    try {
      return f();
    } catch (const ConfigError& e) {
      std::string msg = e.what();
      const std::string prefix = path + ": ";
      if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
      fail(path, msg);
    }
  }

 private:
  const std::string& text_;
};

}  // namespace

RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  const Reader r(text);
  r.only(doc, "config", {"schema_version", "grid", "system", "potential", "inversion", "experiment",
                         "output", "description"});

  const long long version = r.integer(doc, "schema_version", "config");
  if (version != kSchemaVersion) {
    std::ostringstream os;
    os << "unsupported schema version " << version << " (this tool reads " << kSchemaVersion << ")";
    r.fail("schema_version", os.str());
  }

  RunConfig rc;
  ExperimentConfig& ex = rc.experiment;
  json eff;
  eff["schema_version"] = kSchemaVersion;

  // grid
  const json& g = r.block(doc, "grid", "grid");
  r.only(g, "grid", {"a", "b", "M", "margin"});
  const double a = r.number(g, "a", "grid");
  const double b = r.number(g, "b", "grid");
  const long long M = r.integer(g, "M", "grid");
  const double margin = r.number(g, "margin", "grid", 0.0);
  if (margin != 0.0)
    r.fail("grid.margin", "only 0 is supported; the density domain is the whole box");
  if (M < 3) {
    std::ostringstream os;
    os << "at least 3 interior points are required (grid.M minimum is 3, got " << M << ")";
    r.fail("grid.M", os.str());
  }
  if (M > 400) r.fail("grid.M", "at most 400 interior points are supported");
  ex.system.box = r.at("grid", [&] { return build_grid(a, b, static_cast<int>(M)); });
  eff["grid"] = {{"a", a}, {"b", b}, {"M", M}, {"margin", margin}};

  // system
  const json& s = r.block(doc, "system", "system");
  r.only(s, "system", {"N", "statistics", "interaction", "initial_state"});
  ex.system.particles = static_cast<int>(r.integer(s, "N", "system"));
  if (ex.system.particles != 1 && ex.system.particles != 2)
    r.fail("system.N", "must be 1 or 2");
  const std::string stats =
      r.string(s, "statistics", "system", ex.system.particles == 1 ? "single" : "fermion-singlet");
  ex.system.statistics = r.at("system.statistics", [&] { return parse_statistics(stats); });
  std::string ikind = "none";
  double strength = 0.0, eps = 1.0;
  if (s.contains("interaction")) {
    const json& in = r.block(s, "interaction", "system.interaction");
    r.only(in, "system.interaction", {"kind", "strength", "epsilon"});
    ikind = r.string(in, "kind", "system.interaction", "softcore");
    if (ikind == "coulomb")
      r.fail("system.interaction.kind",
             "bare Coulomb is singular at coincidence; use kind 'softcore' with epsilon > 0 "
             "(soft-core requirement)");
    if (ikind != "softcore" && ikind != "none")
      r.fail("system.interaction.kind", "expected softcore | none");
    if (ikind == "softcore") {
      strength = r.number(in, "strength", "system.interaction");
      eps = r.number(in, "epsilon", "system.interaction", 1.0);
      if (strength != 0.0 && !(eps > 0.0))
        r.fail("system.interaction.epsilon",
               "soft-core requirement: epsilon must be > 0 (epsilon = 0 is the bare Coulomb kernel)");
    }
  }
  ex.system.interaction_strength = strength;
  ex.system.softcore_epsilon = eps;
  if (ex.system.particles == 1 && strength != 0.0)
    r.fail("system.interaction.strength", "a single particle has no pair interaction");
  std::string init_kind = "ground";
  std::string profile = "x";
  if (s.contains("initial_state")) {
    const json& is = r.block(s, "initial_state", "system.initial_state");
    r.only(is, "system.initial_state", {"kind", "kick", "profile"});
    init_kind = r.string(is, "kind", "system.initial_state", "ground");
    if (init_kind != "ground")
      r.fail("system.initial_state.kind", "only 'ground' (ground state of v^(0) plus kick) is supported");
    ex.kick = r.number(is, "kick", "system.initial_state", 0.0);
    profile = r.string(is, "profile", "system.initial_state", profile);
    ex.kick_profile = r.at("system.initial_state.profile", [&] {
      return Expression::parse(profile, "system.initial_state.profile").on_grid(ex.system.box);
    });
  }
  r.at("system", [&] { return build_system(ex.system), 0; });
  eff["system"] = {{"N", ex.system.particles},
                   {"statistics", to_string(ex.system.statistics)},
                   {"interaction", {{"kind", ikind}, {"strength", strength}, {"epsilon", eps}}},
                   {"initial_state", {{"kind", init_kind}, {"kick", ex.kick}, {"profile", profile}}}};

  // potential
  const json& p = r.block(doc, "potential", "potential");
  r.only(p, "potential", {"t0", "taylor", "tabulated"});
  ex.v.t0 = r.number(p, "t0", "potential", 0.0);
  const bool has_expr = p.contains("taylor"), has_tab = p.contains("tabulated");
  if (has_expr == has_tab) r.fail("potential", "give exactly one of 'taylor' or 'tabulated'");
  json peff = {{"t0", ex.v.t0}};
  if (has_expr) {
    const json& arr = p.at("taylor");
    if (!arr.is_array() || arr.empty()) r.fail("potential.taylor", "must be a non-empty array of strings");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string path = "potential.taylor[" + std::to_string(k) + "]";
      if (!arr[k].is_string()) r.fail(path, "must be an expression string");
      const std::string src = arr[k].get<std::string>();
      ex.v.coeffs.push_back(r.at(path, [&] {
        return Expression::parse(src, path).on_grid(ex.system.box);
      }));
    }
    peff["taylor"] = arr;
  } else {
    const json& arr = p.at("tabulated");
    if (!arr.is_array() || arr.empty()) r.fail("potential.tabulated", "must be a non-empty array of arrays");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string path = "potential.tabulated[" + std::to_string(k) + "]";
      if (!arr[k].is_array() || arr[k].size() != static_cast<std::size_t>(M))
        r.fail("potential.tabulated", path.substr(10) + " must hold grid.M numbers");
      Field f(M);
      for (long long i = 0; i < M; ++i) {
        if (!arr[k][i].is_number()) r.fail("potential.tabulated", path.substr(10) + " must hold numbers");
        f[i] = arr[k][i].get<double>();
      }
      if (!f.allFinite()) r.fail("potential.tabulated", path.substr(10) + " is not finite");
      ex.v.coeffs.push_back(f);
    }
    peff["tabulated"] = arr;
  }
  eff["potential"] = peff;

  // inversion
  json inv = doc.contains("inversion") ? r.block(doc, "inversion", "inversion") : json::object();
  r.only(inv, "inversion", {"K", "tol", "m_floor", "compat_tol", "lax_milgram_trials", "primed_strengths"});
  const long long K = r.integer(inv, "K", "inversion", 2);
  if (K < 0 || K > 6) r.fail("inversion.K", "must lie in 0..6");
  ex.K = static_cast<int>(K);
  ex.inversion.tol = r.positive(inv, "tol", "inversion", 1e-10);
  ex.inversion.floor = r.positive(inv, "m_floor", "inversion", kDefaultDensityFloor);
  ex.inversion.compat_tol = r.positive(inv, "compat_tol", "inversion", 1e-8);
  const long long trials = r.integer(inv, "lax_milgram_trials", "inversion", 100);
  if (trials < 0) r.fail("inversion.lax_milgram_trials", "must be >= 0");
  ex.inversion.lax_milgram_trials = static_cast<int>(trials);
  if (inv.contains("primed_strengths")) {
    const json& ps = inv.at("primed_strengths");
    if (!ps.is_array() || ps.empty()) r.fail("inversion.primed_strengths", "must be a non-empty array");
    ex.primed_strengths.clear();
    for (const json& x : ps) {
      if (!x.is_number() || !std::isfinite(x.get<double>()))
        r.fail("inversion.primed_strengths", "entries must be finite numbers");
      ex.primed_strengths.push_back(x.get<double>());
    }
    if (ex.system.particles == 1 &&
        std::any_of(ex.primed_strengths.begin(), ex.primed_strengths.end(), [](double x) { return x != 0.0; }))
      r.fail("inversion.primed_strengths", "a single particle has no pair interaction");
    if (!(eps > 0.0) &&
        std::any_of(ex.primed_strengths.begin(), ex.primed_strengths.end(), [](double x) { return x != 0.0; }))
      r.fail("inversion.primed_strengths", "soft-core requirement: interacting primed systems need epsilon > 0");
  }
  eff["inversion"] = {{"K", ex.K},
                      {"tol", ex.inversion.tol},
                      {"m_floor", ex.inversion.floor},
                      {"compat_tol", ex.inversion.compat_tol},
                      {"lax_milgram_trials", ex.inversion.lax_milgram_trials},
                      {"primed_strengths", ex.primed_strengths}};

  // experiment
  const json& e = r.block(doc, "experiment", "experiment");
  r.only(e, "experiment", {"kind", "T", "dt", "integrator", "seed", "error_cap", "window_start_steps", "oracle"});
  rc.kind = r.string(e, "kind", "experiment");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), rc.kind) == kinds.end()) {
    std::string list;
    for (const auto& k : kinds) list += (list.empty() ? "" : " | ") + k;
    r.fail("experiment.kind", "unknown kind '" + rc.kind + "' (expected " + list + ")");
  }
  ex.T = r.positive(e, "T", "experiment", 0.5);
  ex.dt = r.positive(e, "dt", "experiment", 0.002);
  if (ex.dt > ex.T) r.fail("experiment.dt", "must not exceed experiment.T");
  if (ex.T / ex.dt > 1e6) r.fail("experiment.dt", "more than 10^6 steps requested");
  const std::string integ = r.string(e, "integrator", "experiment", "taylor");
  ex.integrator = r.at("experiment.integrator", [&] { return parse_integrator(integ); });
  if (e.contains("seed")) {
    const json& sd = e.at("seed");
    if (!sd.is_number_unsigned()) r.fail("experiment.seed", "must be a non-negative integer");
    rc.seed = sd.get<std::uint64_t>();
  }
  if (seed_override) rc.seed = *seed_override;
  ex.inversion.seed = rc.seed;
  ex.error_cap = r.positive(e, "error_cap", "experiment", 1e-2);
  ex.window_start_steps = r.positive(e, "window_start_steps", "experiment", 10.0);
  json oeff = json::object();
  if (e.contains("oracle")) {
    const json& o = r.block(e, "oracle", "experiment.oracle");
    r.only(o, "experiment.oracle", {"dt", "steps", "tol_track"});
    ex.oracle_dt = r.positive(o, "dt", "experiment.oracle", ex.oracle_dt);
    const long long steps = r.integer(o, "steps", "experiment.oracle", ex.oracle_steps);
    if (steps < 8 || steps > 100000) r.fail("experiment.oracle.steps", "must lie in 8..100000");
    ex.oracle_steps = static_cast<int>(steps);
    ex.tol_track = r.positive(o, "tol_track", "experiment.oracle", ex.tol_track);
  }
  eff["experiment"] = {{"kind", rc.kind},
                       {"T", ex.T},
                       {"dt", ex.dt},
                       {"integrator", to_string(ex.integrator)},
                       {"seed", rc.seed},
                       {"error_cap", ex.error_cap},
                       {"window_start_steps", ex.window_start_steps},
                       {"oracle", {{"dt", ex.oracle_dt}, {"steps", ex.oracle_steps}, {"tol_track", ex.tol_track}}}};

  // output
  if (doc.contains("output")) {
    const json& o = r.block(doc, "output", "output");
    r.only(o, "output", {"directory", "formats"});
    rc.out_dir = r.string(o, "directory", "output", rc.out_dir);
    if (o.contains("formats")) {
      const json& f = o.at("formats");
      if (!f.is_array()) r.fail("output.formats", "must be an array");
      rc.formats.clear();
      for (const json& x : f) {
        if (!x.is_string()) r.fail("output.formats", "entries must be strings");
        const std::string fmt = x.get<std::string>();
        if (fmt != "json" && fmt != "csv" && fmt != "txt")
          r.fail("output.formats", "unknown format '" + fmt + "' (expected json | csv | txt)");
        rc.formats.push_back(fmt);
      }
    }
  }
  // The output block does not change results, so it stays out of the hash.
  rc.hash = sha256_hex(canonical_dump(eff));
  eff["output"] = {{"directory", rc.out_dir}, {"formats", rc.formats}};
  rc.document = eff;
  return rc;
}

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), seed_override);
}

}  // namespace tdlab
