#pragma once

#include <cstdint>
#include <vector>

#include "kdp/bandwidth.hpp"
#include "kdp/kernels.hpp"
#include "kdp/process.hpp"
#include "kdp/stats.hpp"

namespace kdp {

/// P(L_{n,j} = k): black draws in n reinforced draws from an urn holding one
/// black and n-1 red balls, C(n,k) B(k+1, 2n-k-1) / B(1, n-1).
/// Throws DomainError unless n >= 2 and 0 <= k <= n.
double betabinom_pmf(std::int64_t n, std::int64_t k);

/// P(L_{n,j} >= k) summed from the pmf.
double betabinom_tail(std::int64_t n, std::int64_t k);

/// 3(n-1)(2/3)^k, the single-ancestor tail bound.
double descendant_tail_bound(std::int64_t n, std::int64_t k);
/// 3n(n-1)(2/3)^k, the bound for the maximum over all n ancestors.
double max_descendant_tail_bound(std::int64_t n, std::int64_t k);

/// Descendants among points n+1..2n of each of the first n points.
struct DescendantCounts {
  std::uint64_t n = 0;
  std::uint64_t window = 0;
  std::vector<std::uint64_t> counts;  // [j-1] = L_{n,j}

  std::uint64_t at(std::uint64_t j) const { return counts[j - 1]; }
};

/// Each point in (n, 2n] is traced up its ancestor chain to the first index
/// <= n, with memoisation. Throws TrajectoryTooShort when the path has fewer
/// than 2n points and MissingGenealogy when the window holds observed data.
DescendantCounts simulate_descendants(const Trajectory& traj, std::uint64_t n);

/// p_m = |{anchor <= j <= m : X_j descends from X_anchor}| / m for
/// m = anchor..horizon. The anchor counts as its own descendant.
std::vector<double> descendant_fraction_path(const Trajectory& traj, std::uint64_t anchor,
                                             std::uint64_t horizon);

struct RecordStats {
  double final_max = 0.0;
  std::uint64_t last_record = 1;  // step index of the last strict increase of max ||X||
};

/// Running max of ||X_n|| and the index where it last strictly increased.
RecordStats record_stats(const Trajectory& traj);

struct ContrastConfig {
  KernelSpec kernel = KernelSpec::half_normal();
  BandwidthSchedule schedule = BandwidthSchedule::power(1.0, 0.3);
  std::uint64_t steps = 100000;
  std::uint64_t replications = 200;
  std::uint64_t master_seed = 0;
  unsigned threads = 0;
};

struct FlavorRecords {
  Flavor flavor;
  std::vector<RecordStats> replications;
  std::size_t late_records = 0;  // replications whose last record is in the second half
  double late_fraction = 0.0;
  /// max over the run / max over the first half, averaged over replications
  double mean_growth_ratio = 0.0;
};

struct ContrastReport {
  FlavorRecords kde;
  FlavorRecords recursive;
  stats::ProportionTest test;  // H1: recursive late fraction > kde late fraction
};

/// Simulates both flavors from X_1 = 0. kde uses replication indices
/// 0..R-1 and recursive R..2R-1 so the two groups are independent.
ContrastReport support_contrast_experiment(const ContrastConfig& config);

}  // namespace kdp
