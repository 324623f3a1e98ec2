#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kdp/bandwidth.hpp"
#include "kdp/kernels.hpp"
#include "kdp/rng.hpp"

namespace kdp {

/// kde: every component uses the current bandwidth h_n.
/// recursive: each point keeps the bandwidth h_k it was born with.
enum class Flavor { kde, recursive };

std::string to_string(Flavor flavor);
Flavor parse_flavor(const std::string& name);

/// A realised path X_1..X_N with its genealogy. Point indices are 1-based
/// throughout, matching the step index n of the predictive rule. The first
/// root_count() points are roots (X_1 = 0, or the observed data prefix); every
/// later point n carries its ancestor M, kernel draw Y and applied bandwidth.
struct Trajectory {
  Flavor flavor = Flavor::kde;
  int dimension = 1;
  std::vector<double> points;               // N x d, row-major
  std::vector<std::uint64_t> ancestors;     // one per generated point, 1-based
  std::vector<double> kernel_draws;         // generated x d, row-major
  std::vector<double> steps_h;              // one per generated point
  std::size_t seed_prefix_len = 0;

  std::size_t size() const { return points.size() / dimension; }
  std::size_t root_count() const { return seed_prefix_len == 0 ? 1 : seed_prefix_len; }
  std::size_t generated() const { return steps_h.size(); }

  std::span<const double> point(std::size_t n) const {
    return {points.data() + (n - 1) * dimension, static_cast<std::size_t>(dimension)};
  }
  bool has_genealogy(std::size_t n) const { return n > root_count(); }
  /// Requires has_genealogy(n).
  std::uint64_t ancestor_of(std::size_t n) const { return ancestors[n - root_count() - 1]; }
  double h_of(std::size_t n) const { return steps_h[n - root_count() - 1]; }
  std::span<const double> draw_of(std::size_t n) const {
    return {kernel_draws.data() + (n - root_count() - 1) * dimension,
            static_cast<std::size_t>(dimension)};
  }
};

/// Supplies the ancestor index and kernel draw for each step.
class StepDraws {
 public:
  virtual ~StepDraws() = default;
  /// Uniform on {1, ..., n}.
  virtual std::uint64_t ancestor(std::uint64_t n) = 0;
  virtual void kernel(const KernelSpec& kernel, std::span<double> out) = 0;
};

/// Ancestors and kernel draws from disjoint substreams of replication r.
class StreamDraws final : public StepDraws {
 public:
  StreamDraws(std::uint64_t master_seed, std::uint32_t replication);
  std::uint64_t ancestor(std::uint64_t n) override;
  void kernel(const KernelSpec& kernel, std::span<double> out) override;

 private:
  Stream ancestors_;
  Stream kernels_;
};

/// Replays fixed ancestors (1-based) and kernel draws. Either list may be
/// left empty and backed by a fallback source instead.
class ForcedDraws final : public StepDraws {
 public:
  ForcedDraws(std::vector<std::uint64_t> ancestors, std::vector<std::vector<double>> draws,
              StepDraws* fallback = nullptr);
  std::uint64_t ancestor(std::uint64_t n) override;
  void kernel(const KernelSpec& kernel, std::span<double> out) override;

 private:
  std::vector<std::uint64_t> ancestors_;
  std::vector<std::vector<double>> draws_;
  StepDraws* fallback_;
  std::size_t next_ancestor_ = 0;
  std::size_t next_draw_ = 0;
};

/// Starts a path at X_1 = 0, or at the observed prefix when one is given.
/// Throws NonFiniteInput for NaN/inf coordinates, InvalidSpec for an empty
/// or ragged prefix.
Trajectory init_trajectory(Flavor flavor, int dimension = 1,
                           const std::vector<std::vector<double>>* data_prefix = nullptr);

/// Appends X_{n+1} = X_{M_n} + h Y_n with h = h_n (kde) or h_{M_n} (recursive).
void step(Trajectory& traj, const BandwidthSchedule& schedule, const KernelSpec& kernel,
          StepDraws& draws);

/// Steps until the path has `length` points.
void extend(Trajectory& traj, std::size_t length, const BandwidthSchedule& schedule,
            const KernelSpec& kernel, StepDraws& draws);

/// Exact predictive measure after n points: uniform mixture of translated,
/// rescaled copies of the kernel.
struct PredictiveMixture {
  int dimension = 1;
  std::vector<double> centers;  // n x d
  std::vector<double> scales;   // n
  KernelSpec kernel = KernelSpec::gaussian();

  std::size_t size() const { return scales.size(); }
  std::span<const double> center(std::size_t i) const {
    return {centers.data() + i * dimension, static_cast<std::size_t>(dimension)};
  }
  double weight() const { return 1.0 / static_cast<double>(size()); }
};

PredictiveMixture predictive_mixture(const Trajectory& traj, const BandwidthSchedule& schedule,
                                     const KernelSpec& kernel);
/// Mixture of the first n points only.
PredictiveMixture predictive_mixture(const Trajectory& traj, std::size_t n,
                                     const BandwidthSchedule& schedule, const KernelSpec& kernel);

/// Draws one point from the mixture.
std::vector<double> sample_mixture(const PredictiveMixture& mix, StepDraws& draws);

/// Axis-aligned box; sides may be infinite.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
  static Box everything(int d);
  static Box half_line(double upper);  // (-inf, upper] in d = 1
};

double mixture_prob(const PredictiveMixture& mix, const Box& region);
std::complex<double> mixture_cf(const PredictiveMixture& mix, std::span<const double> t);
std::vector<double> mixture_mean(const PredictiveMixture& mix);
/// d = 1 only.
double mixture_cdf(const PredictiveMixture& mix, double x);
double mixture_quantile(const PredictiveMixture& mix, double p);

/// Rebuilds X_n by summing h * Y along its ancestor chain, root first.
/// Throws PrefixPointHasNoGenealogy for observed points other than X_1.
std::vector<double> reconstruct_from_genealogy(const Trajectory& traj, std::size_t n);

/// Running max of ||X_k||.
std::vector<double> sup_norm_path(const Trajectory& traj);

/// U_1 = 0, U_{n+1} = U_{M_n} + h ||Y_n|| with the applied bandwidth; dominates
/// ||X_n|| pathwise. Throws MissingGenealogy for seeded paths.
std::vector<double> dominating_process(const Trajectory& traj);

/// step, ancestor, h_used, y_1..y_d, x_1..x_d. Root rows leave
/// ancestor/h/y empty. `preamble` lines are written first, each prefixed "# ".
void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const std::vector<std::string>& preamble = {});

/// One point per line, coordinates separated by commas or whitespace.
std::vector<std::vector<double>> load_points(const std::filesystem::path& path);

}  // namespace kdp
