#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "tdlab/cli.hpp"
#include "tdlab/config.hpp"

using namespace testing;
namespace fs = std::filesystem;

namespace {

std::string reference_text() {
  std::ifstream in(std::string(TDLAB_SOURCE_DIR) + "/configs/roundtrip.example");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json reference_doc() { return nlohmann::json::parse(reference_text()); }

std::string config_error(const nlohmann::json& doc) {
  try {
    parse_config(doc.dump(2));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("expression grammar") {
  auto ev = [](const std::string& s, double x) { return Expression::parse(s)(x); };
  CHECK(ev("1+2*3", 0) == 7.0);
  CHECK(ev("(1+2)*3", 0) == 9.0);
  CHECK(ev("2^3^2", 0) == 512.0);
  CHECK(ev("-x^2", 3) == -9.0);
  CHECK(ev("x/2/2", 8) == 2.0);
  CHECK(ev("sin(pi/2) + cos(0) + exp(0)", 0) == doctest::Approx(3.0));
  CHECK(ev("e", 0) == doctest::Approx(M_E));
  CHECK(ev("1.5e-1*x", 2) == doctest::Approx(0.3));
  CHECK(ev(" 0.04 * x ^ 2 ", 5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(Expression::parse("2*y"), ConfigError);
  CHECK_THROWS_AS(Expression::parse("sin x"), ConfigError);
  CHECK_THROWS_AS(Expression::parse("(1+2"), ConfigError);
  CHECK_THROWS_AS(Expression::parse("1+"), ConfigError);
  CHECK_THROWS_AS(Expression::parse("1 2"), ConfigError);
  try {
    Expression::parse("x + tan(x)", "potential.taylor[1]");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("potential.taylor[1]") != std::string::npos);
    CHECK(msg.find("column 5") != std::string::npos);
  }
  const Grid g = build_grid(0, 1, 3);
  CHECK_THROWS_AS(Expression::parse("1/(x-0.5)^0.5").on_grid(g), ConfigError);
}

TEST_CASE("reference config parses") {
  const RunConfig rc = parse_config(reference_text());
  CHECK(rc.kind == "roundtrip");
  CHECK(rc.experiment.system.box.M == 39);
  CHECK(rc.experiment.K == 2);
  CHECK(rc.experiment.v.order() == 2);
  CHECK(rc.experiment.kick == 0.2);
  CHECK(rc.hash.size() == 64);
  CHECK(rc.seed == 20240917u);
  CHECK(rc.document["experiment"]["integrator"] == "taylor");
}

TEST_CASE("config hash tracks the effective configuration") {
  const std::string text = reference_text();
  const RunConfig a = parse_config(text);
  // reformatting does not change the hash
  CHECK(parse_config(reference_doc().dump()).hash == a.hash);
  nlohmann::json d = reference_doc();
  d["output"]["directory"] = "elsewhere";
  CHECK(parse_config(d.dump()).hash == a.hash);
  d["experiment"]["T"] = 0.25;
  CHECK(parse_config(d.dump()).hash != a.hash);
  CHECK(parse_config(text, 7).hash != a.hash);
  CHECK(parse_config(text, 7).experiment.inversion.seed == 7u);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("schema violations name the field") {
  nlohmann::json d = reference_doc();
  d["grid"]["M"] = 2;
  std::string msg = config_error(d);
  CHECK(msg.find("grid.M") != std::string::npos);
  CHECK(msg.find("minimum") != std::string::npos);
  CHECK(msg.find("line") != std::string::npos);

  d = reference_doc();
  d["system"]["interaction"]["epsilon"] = 0.0;
  msg = config_error(d);
  CHECK(msg.find("system.interaction.epsilon") != std::string::npos);
  CHECK(msg.find("soft-core") != std::string::npos);

  d = reference_doc();
  d["system"]["interaction"]["kind"] = "coulomb";
  CHECK(config_error(d).find("soft-core") != std::string::npos);

  d = reference_doc();
  d["experiment"]["kind"] = "sideways";
  CHECK(config_error(d).find("experiment.kind") != std::string::npos);

  d = reference_doc();
  d["inversion"]["K"] = "two";
  CHECK(config_error(d).find("inversion.K") != std::string::npos);

  d = reference_doc();
  d["grid"]["spacing"] = 0.1;
  CHECK(config_error(d).find("grid.spacing: unknown field") != std::string::npos);

  d = reference_doc();
  d["schema_version"] = 2;
  CHECK(config_error(d).find("schema version") != std::string::npos);

  d = reference_doc();
  d["potential"]["taylor"][2] = "0.1*cos(";
  CHECK(config_error(d).find("potential.taylor[2]") != std::string::npos);

  d = reference_doc();
  d.erase("experiment");
  CHECK(config_error(d).find("experiment: required block is missing") != std::string::npos);

  CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
}

TEST_CASE("tabulated potential") {
  nlohmann::json d = reference_doc();
  const RunConfig expr = parse_config(d.dump());
  d["potential"].erase("taylor");
  nlohmann::json tab = nlohmann::json::array();
  for (const Field& f : expr.experiment.v.coeffs) tab.push_back(std::vector<double>(f.data(), f.data() + f.size()));
  d["potential"]["tabulated"] = tab;
  const RunConfig rc = parse_config(d.dump());
  for (int k = 0; k <= 2; ++k) CHECK(max_abs(rc.experiment.v[k] - expr.experiment.v[k]) == 0.0);
  d["potential"]["tabulated"][1].erase(0);
  CHECK(config_error(d).find("potential.tabulated") != std::string::npos);
}

TEST_CASE("run writes artifacts with provenance and exit codes") {
  const fs::path dir = fs::temp_directory_path() / "tdlab_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  nlohmann::json d = reference_doc();
  d["experiment"]["kind"] = "diagnose-sl";
  const fs::path cfg = dir / "diag.json";
  std::ofstream(cfg) << d.dump(2);
  CHECK(run_config_file(cfg.string(), (dir / "out").string(), std::nullopt, true) == kExitPass);
  const RunConfig rc = load_config(cfg.string());
  std::ifstream csv(dir / "out" / "series.csv");
  std::string first, second;
  std::getline(csv, first);
  std::getline(csv, second);
  CHECK(first == "# tool: tdlab " + tool_version());
  CHECK(second == "# config_hash: " + rc.hash);
  const nlohmann::json report = nlohmann::json::parse(std::ifstream(dir / "out" / "report.json"));
  CHECK(report["provenance"]["config_hash"] == rc.hash);
  CHECK(fs::exists(dir / "out" / "summary.txt"));

  d["grid"]["M"] = 2;
  std::ofstream(dir / "bad.json") << d.dump(2);
  CHECK(run_config_file((dir / "bad.json").string(), std::nullopt, std::nullopt, true) == kExitConfig);
  CHECK(validate_config_file((dir / "bad.json").string()) == kExitConfig);
  CHECK(validate_config_file(cfg.string()) == kExitPass);

  // a floor above the density makes the pipeline fail numerically
  d = reference_doc();
  d["experiment"]["kind"] = "diagnose-sl";
  d["inversion"]["m_floor"] = 0.5;
  std::ofstream(dir / "floor.json") << d.dump(2);
  CHECK(run_config_file((dir / "floor.json").string(), (dir / "o2").string(), std::nullopt, true) ==
        kExitNumerical);
  fs::remove_all(dir);
}
