#include "kdp/urn.hpp"

#include <algorithm>
#include <cmath>

#include "kdp/errors.hpp"
#include "kdp/parallel.hpp"
#include "kdp/series.hpp"

namespace kdp {

namespace {
double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }
double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}
}  // namespace

double betabinom_pmf(std::int64_t n, std::int64_t k) {
  if (n < 2) throw DomainError("betabinom_pmf: n must be >= 2");
  if (k < 0 || k > n) throw DomainError("betabinom_pmf: k must lie in [0, n]");
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  return std::exp(log_choose(nn, kk) + log_beta(kk + 1.0, 2.0 * nn - kk - 1.0) -
                  log_beta(1.0, nn - 1.0));
}

double betabinom_tail(std::int64_t n, std::int64_t k) {
  CompensatedSum<double> acc;
  for (std::int64_t r = std::max<std::int64_t>(k, 0); r <= n; ++r) acc.add(betabinom_pmf(n, r));
  return acc.value();
}

double descendant_tail_bound(std::int64_t n, std::int64_t k) {
  if (n < 2 || k < 0) throw DomainError("descendant_tail_bound: needs n >= 2, k >= 0");
  return 3.0 * static_cast<double>(n - 1) * std::pow(2.0 / 3.0, static_cast<double>(k));
}

double max_descendant_tail_bound(std::int64_t n, std::int64_t k) {
  return static_cast<double>(n) * descendant_tail_bound(n, k);
}

DescendantCounts simulate_descendants(const Trajectory& traj, std::uint64_t n) {
  if (n < 1) throw DomainError("simulate_descendants: n must be >= 1");
  if (traj.size() < 2 * n)
    throw TrajectoryTooShort("need " + std::to_string(2 * n) + " points, trajectory has " +
                             std::to_string(traj.size()));
  if (traj.root_count() > n)
    throw MissingGenealogy("descendant window overlaps the observed prefix");
  DescendantCounts out;
  out.n = n;
  out.window = n;
  out.counts.assign(n, 0);
  // root[i - n - 1] = the index <= n that point i descends from
  std::vector<std::uint64_t> root(n);
  for (std::uint64_t i = n + 1; i <= 2 * n; ++i) {
    const std::uint64_t m = traj.ancestor_of(i);
    const std::uint64_t r = m <= n ? m : root[m - n - 1];
    root[i - n - 1] = r;
    ++out.counts[r - 1];
  }
  return out;
}

std::vector<double> descendant_fraction_path(const Trajectory& traj, std::uint64_t anchor,
                                             std::uint64_t horizon) {
  if (anchor < 2) throw DomainError("descendant_fraction_path: anchor must be >= 2");
  if (horizon < anchor || horizon > traj.size())
    throw DomainError("descendant_fraction_path: horizon must lie in [anchor, size]");
  if (traj.root_count() > anchor)
    throw MissingGenealogy("points after the anchor include observed data");
  std::vector<char> is_desc(horizon - anchor + 1, 0);
  is_desc[0] = 1;
  std::vector<double> out(horizon - anchor + 1);
  std::uint64_t count = 1;
  out[0] = 1.0 / static_cast<double>(anchor);
  for (std::uint64_t m = anchor + 1; m <= horizon; ++m) {
    const std::uint64_t a = traj.ancestor_of(m);
    if (a >= anchor && is_desc[a - anchor]) {
      is_desc[m - anchor] = 1;
      ++count;
    }
    out[m - anchor] = static_cast<double>(count) / static_cast<double>(m);
  }
  return out;
}

RecordStats record_stats(const Trajectory& traj) {
  RecordStats s;
  const auto running = sup_norm_path(traj);
  s.final_max = running.back();
  for (std::size_t n = 2; n <= running.size(); ++n)
    if (running[n - 1] > running[n - 2]) s.last_record = n;
  return s;
}

namespace {

FlavorRecords run_flavor(const ContrastConfig& cfg, Flavor flavor, std::uint32_t offset) {
  FlavorRecords fr;
  fr.flavor = flavor;
  fr.replications.resize(cfg.replications);
  std::vector<double> ratios(cfg.replications);
  const std::uint64_t half = cfg.steps / 2;
  parallel_for(
      cfg.replications,
      [&](std::size_t r) {
        StreamDraws draws(cfg.master_seed, offset + static_cast<std::uint32_t>(r));
        auto traj = init_trajectory(flavor, cfg.kernel.dimension());
        extend(traj, cfg.steps, cfg.schedule, cfg.kernel, draws);
        fr.replications[r] = record_stats(traj);
        const auto running = sup_norm_path(traj);
        const double first_half = running[std::max<std::uint64_t>(half, 1) - 1];
        ratios[r] = first_half > 0.0 ? running.back() / first_half : 1.0;
      },
      cfg.threads);
  CompensatedSum<double> ratio_sum;
  for (std::size_t r = 0; r < cfg.replications; ++r) {
    if (fr.replications[r].last_record > half) ++fr.late_records;
    ratio_sum.add(ratios[r]);
  }
  fr.late_fraction = static_cast<double>(fr.late_records) / static_cast<double>(cfg.replications);
  fr.mean_growth_ratio = ratio_sum.value() / static_cast<double>(cfg.replications);
  return fr;
}

}  // namespace

ContrastReport support_contrast_experiment(const ContrastConfig& config) {
  if (config.replications == 0 || config.steps < 2)
    throw DomainError("support contrast needs R >= 1 and N >= 2");
  ContrastReport rep;
  const auto R = static_cast<std::uint32_t>(config.replications);
  rep.kde = run_flavor(config, Flavor::kde, 0);
  rep.recursive = run_flavor(config, Flavor::recursive, R);
  rep.test = stats::two_proportion_test(rep.recursive.late_records, config.replications,
                                        rep.kde.late_records, config.replications);
  return rep;
}

}  // namespace kdp
