#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kdp/bandwidth.hpp"
#include "kdp/kernels.hpp"
#include "kdp/process.hpp"

namespace kdp {

// ---------------------------------------------------------------------------
// Tightness martingale: S_n = J_n + sum_{k >= n} c_k.

/// Index i of each vector holds the value at n = i + 1.
struct TightnessTrace {
  Flavor flavor = Flavor::kde;
  std::vector<double> U;     // dominating process
  std::vector<double> J;     // running mean of U
  std::vector<double> c;     // compensator c_n
  std::vector<double> tail;  // sum_{k >= n} c_k
  std::vector<double> S;     // J + tail

  std::size_t size() const { return U.size(); }
};

/// Compensator c_n: h_n E W / (n+1) (kde) or E W sum_{i<=n} h_i / (n(n+1))
/// (recursive).
double compensator(Flavor flavor, const BandwidthSchedule& schedule, double ew1, std::uint64_t n);

/// sum_{k >= n} c_k to ~1e-10 relative. Needs a schedule defined for every n
/// (NoEnvelope for tables).
double compensator_tail(Flavor flavor, const BandwidthSchedule& schedule, double ew1,
                        std::uint64_t n);

/// ew1 must be abs_moment(kernel, 1). Throws MissingGenealogy for paths seeded
/// with more than one observed point.
TightnessTrace tightness_trace(const Trajectory& traj, const BandwidthSchedule& schedule,
                               double ew1);

struct TailBoundReport {
  double threshold = 0.0;
  std::vector<double> tail_mass;  // Q_n((threshold, inf))
  std::vector<double> bound;      // E[U_{n+1} | F_n] / threshold
  double max_violation = 0.0;     // max_n tail_mass - bound; <= 0 when the bound holds
  std::size_t worst_n = 0;
  bool exact = true;              // false when tail_mass is itself an upper bound
  bool holds(double tol = 1e-10) const { return max_violation <= tol; }
};

/// Compares the dominating process's one-step predictive tail with the Markov
/// bound for n = 1, 1 + stride, ... The tail is exact: (1/n) sum_i
/// P(U_i + h ||Y|| > threshold).
TailBoundReport tail_prob_bound_check(const TightnessTrace& trace, const Trajectory& traj,
                                      const BandwidthSchedule& schedule, const KernelSpec& kernel,
                                      double threshold, std::size_t stride = 1);

// ---------------------------------------------------------------------------
// Characteristic-function martingales.

struct KdeCfFactors {
  std::complex<double> a;  // phi_K(h_n t)/(n+1) + n/(n+1)
  std::complex<double> b;  // a_n phi_K(h_{n+1} t) / phi_K(h_n t)
};

/// Throws ZeroDenominator when phi_K(h_n t) = 0.
KdeCfFactors kde_cf_factors(const BandwidthSchedule& schedule, const KernelSpec& kernel,
                            std::span<const double> t, std::uint64_t n);
/// phi_K(h_{n+1} t)/(n+1) + n/(n+1).
std::complex<double> recursive_cf_factor(const BandwidthSchedule& schedule,
                                         const KernelSpec& kernel, std::span<const double> t,
                                         std::uint64_t n);

/// Factor of the infinite product attached to each flavor: a_k for kde,
/// the tilde factor (bandwidth h_{k+1}) for recursive.
std::complex<double> product_factor(Flavor flavor, const BandwidthSchedule& schedule,
                                    const KernelSpec& kernel, std::span<const double> t,
                                    std::uint64_t k);

/// C_2 = C ||t|| (||E W|| + 2 E||W||), so |a_k - 1| <= C_2 k^{-(1+delta)}.
double lemma_constant(const Envelope& env, const KernelSpec& kernel, std::span<const double> t);
/// C_2 sum_{k >= n} k^{-(1+delta)}.
double lemma_tail_bound(const Envelope& env, const KernelSpec& kernel, std::span<const double> t,
                        std::uint64_t n);

struct ProductTail {
  std::complex<double> value;
  /// Lemma band: sum_{k >= from_n} C_2 k^{-(1+delta)} (bounds sum |a_k - 1|).
  double lemma_bound = 0.0;
  /// True when the product was truncated at an index whose remaining lemma
  /// bound is below rel_tol; false when the far tail was summed asymptotically.
  bool certified_truncation = false;
  std::uint64_t truncated_at = 0;
};

/// prod_{k >= from_n} a_k(t). Factors are multiplied directly while the
/// remaining lemma bound would need at most `max_direct` terms to fall below
/// rel_tol; otherwise log a_k beyond the direct window is summed with the
/// Euler-Maclaurin tail on the schedule's smooth extension.
/// Throws NoEnvelope for tables and ZeroFactor if some a_k vanishes.
ProductTail lemma_product_tail(const BandwidthSchedule& schedule, const KernelSpec& kernel,
                               std::span<const double> t, std::uint64_t from_n,
                               double rel_tol = 1e-8, Flavor flavor = Flavor::kde,
                               std::uint64_t max_direct = std::uint64_t{1} << 22);

/// prod_{k = from}^{to} a_k(t), direct.
std::complex<double> partial_product(const BandwidthSchedule& schedule, const KernelSpec& kernel,
                                     std::span<const double> t, std::uint64_t from,
                                     std::uint64_t to, Flavor flavor = Flavor::kde);

/// First n with |phi_K(h_n t)| > 0.1; scanning stops after `limit`.
std::uint64_t cf_start_index(const BandwidthSchedule& schedule, const KernelSpec& kernel,
                             std::span<const double> t, std::uint64_t limit = 100000000);

/// Deterministic part of a CF martingale for one (flavor, schedule, kernel,
/// t): kernel CF values and corrections for n = 1..horizon+1. Shared across
/// replications.
struct CfCorrections {
  Flavor flavor = Flavor::kde;
  std::vector<double> t;
  std::uint64_t start_index = 1;
  std::uint64_t horizon = 0;
  std::vector<std::complex<double>> phi_kernel;  // [k-1] = phi_K(h_k t), k = 1..horizon+1
  std::vector<std::complex<double>> factor;      // [n-1] = a_n or tilde a_n
  std::vector<std::complex<double>> correction;  // [n-1] = c_n(t); zero below start_index
  double sup_abs_correction = 0.0;               // over start_index..horizon

  std::complex<double> correction_at(std::uint64_t n) const { return correction[n - 1]; }
};

/// Throws ZeroDenominator when the start index lies beyond the horizon.
CfCorrections cf_corrections(Flavor flavor, const BandwidthSchedule& schedule,
                             const KernelSpec& kernel, std::span<const double> t,
                             std::uint64_t horizon, double rel_tol = 1e-8);

/// Index i holds n = start_index + i.
struct CFMartingaleTrace {
  std::vector<double> t;
  std::uint64_t start_index = 1;
  std::vector<std::complex<double>> phi;
  std::vector<std::complex<double>> a;
  std::vector<std::complex<double>> correction;
  std::vector<std::complex<double>> S;
  double sup_abs_correction = 0.0;

  std::size_t size() const { return phi.size(); }
};

/// Predictive CFs phi_n(t) along the path for n = 1..horizon, built
/// incrementally (same values as mixture_cf on each prefix).
std::vector<std::complex<double>> predictive_cf_path(const Trajectory& traj,
                                                     const CfCorrections& corr,
                                                     std::uint64_t horizon);

CFMartingaleTrace cf_martingale_trace(const Trajectory& traj, const CfCorrections& corr,
                                      std::uint64_t horizon);
CFMartingaleTrace cf_martingale_trace(const Trajectory& traj, const BandwidthSchedule& schedule,
                                      const KernelSpec& kernel, std::span<const double> t,
                                      std::uint64_t horizon);

// ---------------------------------------------------------------------------
// Zero-drift test across replications.

struct DriftResult {
  std::string label;
  std::size_t replications = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  double threshold = 4.0;
  bool flagged = false;  // |z| > threshold
};

/// Each pair is (value at n, value at n+1) from one independent replication.
/// Throws TooFewReplications below min_replications.
DriftResult drift_test(std::span<const std::pair<double, double>> samples, std::string label,
                       double threshold = 4.0, std::size_t min_replications = 100);

}  // namespace kdp
