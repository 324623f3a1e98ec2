// Command-line front end: one subcommand per experiment, each driven by a
// config file plus key=value overrides.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kdp/config.hpp"
#include "kdp/errors.hpp"
#include "kdp/harness.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::vector<std::string> sets;
  bool strict = false;
};

void add_common(CLI::App* sub, Options& opt) {
  sub->add_option("--config", opt.config, "Configuration file (key = value lines)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", opt.seed, "Master seed, overrides run.seed");
  sub->add_option("--out", opt.out, "Output directory, overrides run.output_dir");
  sub->add_option("--threads", opt.threads, "Worker threads, overrides run.threads");
  sub->add_option("--set", opt.sets, "Override any config key: --set key=value")
      ->allow_extra_args(false);
  sub->add_flag("--strict", opt.strict, "Exit with status 1 when any reported test fails");
}

std::map<std::string, std::string> overrides(const Options& opt) {
  std::map<std::string, std::string> o;
  for (const auto& s : opt.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw kdp::ConfigError("--set expects key=value, got '" + s + "'");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t");
      const auto e = v.find_last_not_of(" \t");
      return b == std::string::npos ? std::string{} : v.substr(b, e - b + 1);
    };
    o[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
  if (opt.seed) o["run.seed"] = std::to_string(*opt.seed);
  if (opt.out) o["run.output_dir"] = *opt.out;
  if (opt.threads) o["run.threads"] = std::to_string(*opt.threads);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and diagnostics for kernel density processes"};
  app.set_version_flag("--version", std::string(kdp::kToolName) + " " + kdp::kToolVersion);
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "Simulate trajectories and write one CSV per replication"},
      {"diagnose", "Run the martingale, convergence and urn diagnostics"},
      {"urn", "Check the descendant-count law and its limits"},
      {"contrast", "Compare support growth of the two flavors (half-normal kernel)"},
      {"posterior", "Forward-resample from observed data and summarise functionals"},
      {"cf-trace", "Write characteristic-function martingale traces"}};

  Options opt;
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = kdp::load_config(opt.config, overrides(opt));
    const auto report = kdp::run(command, cfg);
    for (const auto& t : report.tests)
      std::printf("%-48s %s  statistic=%.6g threshold=%.6g\n", t.name.c_str(),
                  t.pass ? "PASS" : "FAIL", t.statistic, t.threshold);
    std::printf("%s: %zu tests, %s; wrote %zu files to %s\n", command.c_str(), report.tests.size(),
                report.all_pass() ? "all passed" : "some failed", report.artifacts.size(),
                cfg.output_dir.string().c_str());
    return opt.strict && !report.all_pass() ? 1 : 0;
  } catch (const kdp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const kdp::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
