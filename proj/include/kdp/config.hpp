#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kdp/bandwidth.hpp"
#include "kdp/kernels.hpp"
#include "kdp/process.hpp"

namespace kdp {

inline constexpr const char* kToolName = "kdp";
inline constexpr const char* kToolVersion = "0.1.0";

/// Flat dotted-key configuration ("kernel.family = gaussian"). Unknown keys,
/// duplicate keys and malformed values are ConfigErrors.
struct ExperimentConfig {
  Flavor flavor = Flavor::kde;
  KernelSpec kernel = KernelSpec::gaussian();
  BandwidthSchedule schedule = BandwidthSchedule::default_for_dimension(1);
  std::uint64_t steps = 1000;
  std::uint64_t replications = 1;
  std::uint64_t master_seed = 0;
  unsigned threads = 0;
  std::vector<std::vector<double>> t_grid;  // non-empty after finalisation
  std::vector<std::uint64_t> checkpoints;   // strictly increasing, <= steps
  std::optional<std::filesystem::path> data_path;
  std::filesystem::path output_dir = "out";

  // diagnose
  bool tightness = true;
  bool cf = true;
  std::vector<std::uint64_t> drift_points;
  std::vector<std::vector<double>> cf_t;
  double tail_threshold = 0.0;  // 0: ten times the final J of replication 0
  std::uint64_t tail_stride = 0;  // 0: chosen from N

  // urn
  std::vector<std::uint64_t> urn_n_values{2, 5, 10};
  std::uint64_t urn_windows = 10000;
  std::uint64_t urn_anchor = 5;
  std::uint64_t urn_horizon = 10000;
  std::uint64_t urn_fraction_replications = 2000;
  std::uint64_t urn_exact_max_n = 100;

  // posterior
  std::vector<double> posterior_quantiles{0.05, 0.5, 0.95};
  std::vector<std::pair<double, double>> posterior_intervals;

  /// Every effective key with its canonical value, sorted by key.
  std::map<std::string, std::string> entries;

  /// FNV-1a 64 of the canonical "key=value\n" listing, as 16 hex digits.
  std::string hash() const;
  std::string header_line() const;
};

/// Parses "key = value" text; `origin` names the source in error messages.
std::map<std::string, std::string> parse_key_values(const std::string& text,
                                                    const std::string& origin);

/// Builds a config from raw key/values (file entries overlaid with CLI
/// overrides). Validates ranges and cross-key constraints.
ExperimentConfig make_config(const std::map<std::string, std::string>& raw);

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::map<std::string, std::string>& overrides = {});

/// The recognised keys.
const std::vector<std::string>& config_keys();

}  // namespace kdp
