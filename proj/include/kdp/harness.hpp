#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kdp/config.hpp"
#include "kdp/martingale.hpp"
#include "kdp/process.hpp"

namespace kdp {

/// sup over the grid of |phi_A(t) - phi_B(t)|.
double cf_distance(const PredictiveMixture& a, const PredictiveMixture& b,
                   const std::vector<std::vector<double>>& t_grid);

/// phi_K(h_k t) for every grid point t and k = 1..max_n. Built once per
/// experiment and shared by all replications.
class KernelCfTable {
 public:
  KernelCfTable(const BandwidthSchedule& schedule, const KernelSpec& kernel,
                std::vector<std::vector<double>> t_grid, std::uint64_t max_n);
  const std::vector<std::vector<double>>& t_grid() const { return t_grid_; }
  std::uint64_t max_n() const { return max_n_; }
  std::complex<double> at(std::size_t t_index, std::uint64_t k) const {
    return values_[t_index * max_n_ + (k - 1)];
  }

 private:
  std::vector<std::vector<double>> t_grid_;
  std::uint64_t max_n_;
  std::vector<std::complex<double>> values_;
};

/// Predictive CFs at the given (increasing) checkpoints, one pass over the
/// path: result[c][t] = phi_{checkpoints[c]}(t_grid[t]).
std::vector<std::vector<std::complex<double>>> predictive_cf_at(
    const Trajectory& traj, const KernelCfTable& table, const std::vector<std::uint64_t>& checkpoints);

struct TestEntry {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  nlohmann::json detail = nlohmann::json::object();
};

struct DiagnosticsReport {
  std::string command;
  std::string config_hash;
  std::map<std::string, std::string> config;
  std::vector<TestEntry> tests;
  nlohmann::json sections = nlohmann::json::object();
  std::optional<double> support_radius_estimate;
  std::vector<std::string> artifacts;  // files written, relative to output_dir

  bool all_pass() const;
  nlohmann::json to_json() const;
};

/// Path of replication r, started at X_1 = 0 (or the data prefix).
Trajectory simulate_replication(const ExperimentConfig& cfg, std::uint32_t r,
                                const std::vector<std::vector<double>>* prefix = nullptr);

struct ConvergenceSummary {
  std::vector<std::uint64_t> checkpoints;     // the n compared with N
  std::vector<double> mean_distance;          // mean over replications of cf_distance(P_n, P_N)
  std::vector<std::vector<double>> per_replication;
  bool non_increasing = false;
};

/// mean cf_distance(P_n, P_N) over replications for each checkpoint n < N.
ConvergenceSummary cf_convergence(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& checkpoints);

DiagnosticsReport run_simulate(const ExperimentConfig& cfg);
DiagnosticsReport run_diagnose(const ExperimentConfig& cfg);
DiagnosticsReport run_urn(const ExperimentConfig& cfg);
DiagnosticsReport run_contrast(const ExperimentConfig& cfg);
DiagnosticsReport run_posterior(const ExperimentConfig& cfg);
DiagnosticsReport run_cf_trace(const ExperimentConfig& cfg);

/// Dispatches on the subcommand name; writes <command>_report.json.
DiagnosticsReport run(const std::string& command, const ExperimentConfig& cfg);

}  // namespace kdp
