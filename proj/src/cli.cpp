#include "tdlab/cli.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace tdlab {

namespace fs = std::filesystem;

#ifndef TDLAB_VERSION
#define TDLAB_VERSION "0.0.0"
#endif

std::string tool_version() { return TDLAB_VERSION; }

namespace {

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

void write_artifacts(const RunConfig& rc, const ExperimentReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  const auto wants = [&](const char* f) {
    return std::find(rc.formats.begin(), rc.formats.end(), f) != rc.formats.end();
  };
  const std::string tool_line = "tdlab " + tool_version();
  if (wants("json")) {
    nlohmann::json j = report.to_json();
    j["provenance"] = {{"tool", tool_line}, {"config_hash", rc.hash}, {"seed", rc.seed}};
    write_file(dir / "report.json", j.dump(2) + "\n");
  }
  if (wants("csv")) {
    std::ostringstream os;
    report.write_csv(os, {"tool: " + tool_line, "config_hash: " + rc.hash, "kind: " + rc.kind,
                          "seed: " + std::to_string(rc.seed)});
    write_file(dir / "series.csv", os.str());
  }
  if (wants("txt")) {
    std::ostringstream os;
    os << "# tool: " << tool_line << "\n# config_hash: " << rc.hash << "\n" << report.summary();
    write_file(dir / "summary.txt", os.str());
  }
}

}  // namespace

int run_config_file(const std::string& path, const std::optional<std::string>& out_dir,
                    std::optional<std::uint64_t> seed, bool quiet) {
  try {
    const RunConfig rc = load_config(path, seed);
    ExperimentReport report = run_experiment(rc.kind, rc.experiment);
    report.config = rc.document;
    const fs::path dir = out_dir ? fs::path(*out_dir) : fs::path(rc.out_dir);
    write_artifacts(rc, report, dir);
    if (!quiet) std::cout << report.summary() << "artifacts: " << dir.string() << '\n';
    return report.passed() ? kExitPass : kExitVerdictFailed;
  } catch (const ConfigError& e) {
    std::cerr << path << ": configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << path << ": numerical failure " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << '\n';
    return kExitNumerical;
  }
}

int run_directory(const std::string& dir, const std::optional<std::string>& out_dir,
                  std::optional<std::uint64_t> seed, int jobs) {
  std::vector<fs::path> configs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") configs.push_back(entry.path());
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) {
    std::cerr << dir << ": no *.json configs found\n";
    return kExitConfig;
  }
  const fs::path base = out_dir ? fs::path(*out_dir) : fs::path("out");
  jobs = std::max(1, jobs);

  // One child process per config keeps runs isolated from each other.
  std::map<pid_t, std::string> running;
  int worst = kExitPass;
  auto reap = [&] {
    int status = 0;
    const pid_t pid = ::wait(&status);
    if (pid <= 0) return;
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kExitNumerical;
    std::cout << (code == 0 ? "ok    " : "fail  ") << running[pid] << " (exit " << code << ")\n";
    worst = std::max(worst, code);
    running.erase(pid);
  };
  for (const auto& cfg : configs) {
    while (static_cast<int>(running.size()) >= jobs) reap();
    std::cout.flush();
    std::cerr.flush();
    const pid_t pid = ::fork();
    if (pid < 0) {
      std::cerr << "fork failed; running " << cfg.string() << " in process\n";
      worst = std::max(worst, run_config_file(cfg.string(), (base / cfg.stem()).string(), seed, true));
      continue;
    }
    if (pid == 0) {
      const int code = run_config_file(cfg.string(), (base / cfg.stem()).string(), seed, true);
      std::cout.flush();
      std::cerr.flush();
      ::_exit(code);
    }
    running[pid] = cfg.string();
  }
  while (!running.empty()) reap();
  return worst;
}

int validate_config_file(const std::string& path) {
  try {
    const RunConfig rc = load_config(path);
    std::cout << path << ": valid (kind " << rc.kind << ", config_hash " << rc.hash << ")\n";
    return kExitPass;
  } catch (const ConfigError& e) {
    std::cerr << path << ": configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int cli_main(int argc, char** argv) {
  CLI::App app{"tdlab: density-to-potential inversion experiments"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  int jobs = 1;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "run an experiment config (or a directory of configs)");
  run->add_option("config", config, "config file or directory")->required();
  auto* out_opt = run->add_option("--out", out, "output directory");
  run->add_option("--jobs", jobs, "parallel runs for a directory of configs")->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed, "override experiment.seed");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config, "config file")->required();

  auto* version = app.add_subcommand("version", "print the tool version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*version) {
    std::cout << "tdlab " << tool_version() << '\n';
    return kExitPass;
  }
  if (*validate) return validate_config_file(config);

  const std::optional<std::string> out_dir = *out_opt ? std::optional<std::string>(out) : std::nullopt;
  const std::optional<std::uint64_t> seed_override = *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt;
  if (fs::is_directory(config)) return run_directory(config, out_dir, seed_override, jobs);
  return run_config_file(config, out_dir, seed_override);
}

}  // namespace tdlab
