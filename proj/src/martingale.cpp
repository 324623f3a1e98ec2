#include "kdp/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kdp/errors.hpp"
#include "kdp/series.hpp"

namespace kdp {

namespace {

using cplx = std::complex<double>;

// log(1 + z) accurate for small |z|.
cplx clog1p(cplx z) {
  const double re = z.real(), im = z.imag();
  const double modulus_term = std::log1p(2.0 * re + re * re + im * im);
  if (!std::isfinite(modulus_term) && 1.0 + re == 0.0 && im == 0.0)
    return {-std::numeric_limits<double>::infinity(), 0.0};
  return {0.5 * modulus_term, std::atan2(im, 1.0 + re)};
}

std::vector<double> scaled(std::span<const double> t, double h) {
  std::vector<double> out(t.begin(), t.end());
  for (double& v : out) v *= h;
  return out;
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

bool is_zero(std::span<const double> t) {
  return std::all_of(t.begin(), t.end(), [](double v) { return v == 0.0; });
}

const BandwidthSchedule& require_smooth(const BandwidthSchedule& schedule, const char* what) {
  if (!schedule.continuous(1.0))
    throw NoEnvelope(std::string(what) + " needs a bandwidth defined for every n; got " +
                     schedule.describe());
  return schedule;
}

// z_k = a_k - 1 for the flavor's factor, on the smooth extension.
cplx factor_minus_one(Flavor flavor, const BandwidthSchedule& schedule, const KernelSpec& kernel,
                      std::span<const double> t, double x, bool smooth) {
  const double at = flavor == Flavor::kde ? x : x + 1.0;
  const double h = smooth ? *schedule.continuous(at) : schedule.at(static_cast<std::uint64_t>(at));
  return kernel.cf_minus_one(scaled(t, h)) / (x + 1.0);
}

cplx log_factor(Flavor flavor, const BandwidthSchedule& schedule, const KernelSpec& kernel,
                std::span<const double> t, double x, bool smooth) {
  const cplx z = factor_minus_one(flavor, schedule, kernel, t, x, smooth);
  if (1.0 + z.real() == 0.0 && z.imag() == 0.0)
    throw ZeroFactor("product factor vanishes at k = " + std::to_string(x));
  return clog1p(z);
}

struct LogProduct {
  cplx log_value;
  bool certified;
  std::uint64_t truncated_at;
};

LogProduct log_product_tail(const BandwidthSchedule& schedule, const KernelSpec& kernel,
                            std::span<const double> t, std::uint64_t from_n, double rel_tol,
                            Flavor flavor, std::uint64_t max_direct) {
  if (from_n < 1) throw DomainError("lemma_product_tail: from_n must be >= 1");
  if (is_zero(t)) return {cplx{0.0, 0.0}, true, from_n};
  const auto env = schedule.envelope();
  if (!env) throw NoEnvelope("product tail certification needs a power-law envelope; got " +
                             schedule.describe());
  require_smooth(schedule, "product tail");

  const double c2 = lemma_constant(*env, kernel, t);
  // Integral bound: C_2 sum_{k >= M} k^{-(1+delta)} <= C_2 (M-1)^{-delta} / delta.
  const double cutoff =
      c2 == 0.0 ? static_cast<double>(from_n)
                : std::ceil(std::pow(c2 / (env->delta * rel_tol), 1.0 / env->delta)) + 1.0;
  if (cutoff <= static_cast<double>(from_n) + static_cast<double>(max_direct)) {
    const auto stop = std::max<std::uint64_t>(from_n, static_cast<std::uint64_t>(cutoff));
    CompensatedSum<cplx> acc;
    for (std::uint64_t k = from_n; k < stop; ++k)
      acc.add(log_factor(flavor, schedule, kernel, t, static_cast<double>(k), false));
    return {acc.value(), true, stop};
  }
  const auto f = [&](double x) { return log_factor(flavor, schedule, kernel, t, x, true); };
  return {smooth_tail_sum(std::function<cplx(double)>(f), from_n), false, 0};
}

}  // namespace

// ---------------------------------------------------------------------------

double compensator(Flavor flavor, const BandwidthSchedule& schedule, double ew1,
                   std::uint64_t n) {
  if (n < 1) throw DomainError("compensator: n must be >= 1");
  const double nn = static_cast<double>(n);
  if (flavor == Flavor::kde) return schedule.at(n) * ew1 / (nn + 1.0);
  CompensatedSum<double> h;
  for (std::uint64_t i = 1; i <= n; ++i) h.add(schedule.at(i));
  return ew1 * h.value() / (nn * (nn + 1.0));
}

double compensator_tail(Flavor flavor, const BandwidthSchedule& schedule, double ew1,
                        std::uint64_t n) {
  if (n < 1) throw DomainError("compensator_tail: n must be >= 1");
  require_smooth(schedule, "compensator tail");
  if (ew1 == 0.0) return 0.0;
  if (flavor == Flavor::kde) {
    const auto f = [&](double x) { return *schedule.continuous(x) / (x + 1.0); };
    return ew1 * smooth_tail_sum(std::function<double(double)>(f), n);
  }
  // sum_{k >= n} H_k / (k(k+1)) = H_n / n + sum_{k > n} h_k / k  (summation by parts)
  CompensatedSum<double> h;
  for (std::uint64_t i = 1; i <= n; ++i) h.add(schedule.at(i));
  const auto f = [&](double x) { return *schedule.continuous(x) / x; };
  return ew1 * (h.value() / static_cast<double>(n) +
                smooth_tail_sum(std::function<double(double)>(f), n + 1));
}

TightnessTrace tightness_trace(const Trajectory& traj, const BandwidthSchedule& schedule,
                               double ew1) {
  if (traj.seed_prefix_len > 1)
    throw MissingGenealogy("tightness trace needs the full genealogy from X_1");
  if (traj.size() < 2) throw DomainError("tightness trace needs at least two points");
  if (!(ew1 >= 0.0)) throw DomainError("tightness trace: E W must be non-negative");

  const std::size_t N = traj.size();
  TightnessTrace tr;
  tr.flavor = traj.flavor;
  tr.U = dominating_process(traj);
  tr.J.resize(N);
  tr.c.resize(N);
  tr.tail.resize(N);
  tr.S.resize(N);

  CompensatedSum<double> u_sum, h_sum;
  for (std::size_t n = 1; n <= N; ++n) {
    const double nn = static_cast<double>(n);
    u_sum.add(tr.U[n - 1]);
    tr.J[n - 1] = u_sum.value() / nn;
    const double h = schedule.at(n);
    h_sum.add(h);
    tr.c[n - 1] = traj.flavor == Flavor::kde ? h * ew1 / (nn + 1.0)
                                             : ew1 * h_sum.value() / (nn * (nn + 1.0));
  }
  CompensatedSum<double> tail;
  tail.add(compensator_tail(traj.flavor, schedule, ew1, N + 1));
  for (std::size_t n = N; n >= 1; --n) {
    tail.add(tr.c[n - 1]);
    tr.tail[n - 1] = tail.value();
    tr.S[n - 1] = tr.J[n - 1] + tr.tail[n - 1];
  }
  return tr;
}

TailBoundReport tail_prob_bound_check(const TightnessTrace& trace, const Trajectory& traj,
                                      const BandwidthSchedule& schedule, const KernelSpec& kernel,
                                      double threshold, std::size_t stride) {
  if (!(threshold > 0.0)) throw DomainError("tail_prob_bound_check: threshold must be > 0");
  if (stride == 0) stride = 1;
  if (trace.size() != traj.size()) throw DomainError("trace does not match trajectory");
  TailBoundReport rep;
  rep.threshold = threshold;
  rep.exact = kernel.norm_survival_exact();
  rep.max_violation = -std::numeric_limits<double>::infinity();
  const bool inf_threshold = std::isinf(threshold);
  for (std::size_t n = 1; n <= trace.size(); n += stride) {
    double mass = 0.0;
    if (!inf_threshold) {
      CompensatedSum<double> acc;
      const double h_common = schedule.at(n);
      for (std::size_t i = 1; i <= n; ++i) {
        const double h = traj.flavor == Flavor::kde ? h_common : schedule.at(i);
        acc.add(kernel.norm_survival((threshold - trace.U[i - 1]) / h));
      }
      mass = acc.value() / static_cast<double>(n);
    }
    const double expected_next = trace.J[n - 1] + (static_cast<double>(n) + 1.0) * trace.c[n - 1];
    const double bound = inf_threshold ? 0.0 : expected_next / threshold;
    rep.tail_mass.push_back(mass);
    rep.bound.push_back(bound);
    if (mass - bound > rep.max_violation) {
      rep.max_violation = mass - bound;
      rep.worst_n = n;
    }
  }
  return rep;
}

KdeCfFactors kde_cf_factors(const BandwidthSchedule& schedule, const KernelSpec& kernel,
                            std::span<const double> t, std::uint64_t n) {
  if (n < 1) throw DomainError("cf factors: n must be >= 1");
  const double nn = static_cast<double>(n);
  const auto th = scaled(t, schedule.at(n));
  const cplx phi_n = kernel.cf(th);
  if (phi_n == cplx{0.0, 0.0})
    throw ZeroDenominator("phi_K(h_n t) = 0 at n = " + std::to_string(n));
  const cplx phi_next = kernel.cf(scaled(t, schedule.at(n + 1)));
  KdeCfFactors f;
  f.a = 1.0 + kernel.cf_minus_one(th) / (nn + 1.0);
  f.b = f.a * (phi_next / phi_n);
  return f;
}

std::complex<double> recursive_cf_factor(const BandwidthSchedule& schedule,
                                         const KernelSpec& kernel, std::span<const double> t,
                                         std::uint64_t n) {
  if (n < 1) throw DomainError("cf factors: n must be >= 1");
  return 1.0 + kernel.cf_minus_one(scaled(t, schedule.at(n + 1))) / (static_cast<double>(n) + 1.0);
}

std::complex<double> product_factor(Flavor flavor, const BandwidthSchedule& schedule,
                                    const KernelSpec& kernel, std::span<const double> t,
                                    std::uint64_t k) {
  return 1.0 + factor_minus_one(flavor, schedule, kernel, t, static_cast<double>(k), false);
}

double lemma_constant(const Envelope& env, const KernelSpec& kernel, std::span<const double> t) {
  return env.C * norm(t) * (kernel.mean_norm() + 2.0 * kernel.abs_moment(1.0));
}

double lemma_tail_bound(const Envelope& env, const KernelSpec& kernel, std::span<const double> t,
                        std::uint64_t n) {
  const double c2 = lemma_constant(env, kernel, t);
  if (c2 == 0.0) return 0.0;
  const double s = 1.0 + env.delta;
  const auto f = [s](double x) { return std::pow(x, -s); };
  return c2 * smooth_tail_sum(std::function<double(double)>(f), n);
}

ProductTail lemma_product_tail(const BandwidthSchedule& schedule, const KernelSpec& kernel,
                               std::span<const double> t, std::uint64_t from_n, double rel_tol,
                               Flavor flavor, std::uint64_t max_direct) {
  const auto lp = log_product_tail(schedule, kernel, t, from_n, rel_tol, flavor, max_direct);
  ProductTail out;
  out.value = is_zero(t) ? cplx{1.0, 0.0} : std::exp(lp.log_value);
  out.certified_truncation = lp.certified;
  out.truncated_at = lp.truncated_at;
  if (!is_zero(t)) out.lemma_bound = lemma_tail_bound(*schedule.envelope(), kernel, t, from_n);
  if (out.value == cplx{0.0, 0.0}) throw ZeroFactor("infinite product underflowed to zero");
  return out;
}

std::complex<double> partial_product(const BandwidthSchedule& schedule, const KernelSpec& kernel,
                                     std::span<const double> t, std::uint64_t from,
                                     std::uint64_t to, Flavor flavor) {
  if (from < 1) throw DomainError("partial_product: from must be >= 1");
  CompensatedSum<cplx> acc;
  for (std::uint64_t k = from; k <= to; ++k)
    acc.add(log_factor(flavor, schedule, kernel, t, static_cast<double>(k), false));
  return std::exp(acc.value());
}

std::uint64_t cf_start_index(const BandwidthSchedule& schedule, const KernelSpec& kernel,
                             std::span<const double> t, std::uint64_t limit) {
  const auto len = schedule.length();
  const std::uint64_t stop = len ? std::min(limit, *len) : limit;
  for (std::uint64_t n = 1; n <= stop; ++n)
    if (std::abs(kernel.cf(scaled(t, schedule.at(n)))) > 0.1) return n;
  throw ZeroDenominator("|phi_K(h_n t)| stays below 0.1 up to n = " + std::to_string(stop));
}

CfCorrections cf_corrections(Flavor flavor, const BandwidthSchedule& schedule,
                             const KernelSpec& kernel, std::span<const double> t,
                             std::uint64_t horizon, double rel_tol) {
  if (horizon < 1) throw DomainError("cf_corrections: horizon must be >= 1");
  if (static_cast<int>(t.size()) != kernel.dimension())
    throw DomainError("cf_corrections: t dimension mismatch");
  CfCorrections c;
  c.flavor = flavor;
  c.t.assign(t.begin(), t.end());
  c.horizon = horizon;
  c.start_index = cf_start_index(schedule, kernel, t, horizon);

  c.phi_kernel.resize(horizon + 1);
  for (std::uint64_t k = 1; k <= horizon + 1; ++k)
    c.phi_kernel[k - 1] = kernel.cf(scaled(t, schedule.at(k)));

  c.factor.assign(horizon + 1, cplx{0.0, 0.0});
  c.correction.assign(horizon + 1, cplx{0.0, 0.0});

  const auto tail = log_product_tail(schedule, kernel, t, horizon + 2, rel_tol, flavor,
                                     std::uint64_t{1} << 22);
  CompensatedSum<cplx> log_p;
  log_p.add(tail.log_value);
  for (std::uint64_t n = horizon + 1; n >= c.start_index; --n) {
    const cplx z = factor_minus_one(flavor, schedule, kernel, t, static_cast<double>(n), false);
    c.factor[n - 1] = 1.0 + z;
    if (1.0 + z.real() == 0.0 && z.imag() == 0.0)
      throw ZeroFactor("product factor vanishes at n = " + std::to_string(n));
    log_p.add(clog1p(z));
    const cplx product = std::exp(log_p.value());
    c.correction[n - 1] = flavor == Flavor::kde ? product / c.phi_kernel[n - 1] : product;
    if (n <= horizon)
      c.sup_abs_correction = std::max(c.sup_abs_correction, std::abs(c.correction[n - 1]));
    if (n == 1) break;
  }
  return c;
}

std::vector<std::complex<double>> predictive_cf_path(const Trajectory& traj,
                                                     const CfCorrections& corr,
                                                     std::uint64_t horizon) {
  if (horizon > traj.size()) throw DomainError("predictive_cf_path: horizon beyond trajectory");
  if (horizon > corr.horizon + 1) throw DomainError("predictive_cf_path: horizon beyond corrections");
  if (corr.t.size() != static_cast<std::size_t>(traj.dimension))
    throw DomainError("predictive_cf_path: t dimension mismatch");
  std::vector<cplx> phi(horizon);
  CompensatedSum<cplx> acc;
  for (std::uint64_t n = 1; n <= horizon; ++n) {
    const auto x = traj.point(n);
    double phase = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) phase += corr.t[j] * x[j];
    const cplx e = std::polar(1.0, phase);
    acc.add(traj.flavor == Flavor::kde ? e : e * corr.phi_kernel[n - 1]);
    const cplx mean = acc.value() / static_cast<double>(n);
    phi[n - 1] = traj.flavor == Flavor::kde ? mean * corr.phi_kernel[n - 1] : mean;
  }
  return phi;
}

CFMartingaleTrace cf_martingale_trace(const Trajectory& traj, const CfCorrections& corr,
                                      std::uint64_t horizon) {
  if (traj.flavor != corr.flavor) throw DomainError("corrections built for the other flavor");
  if (horizon > corr.horizon) throw DomainError("cf_martingale_trace: horizon beyond corrections");
  const auto phi = predictive_cf_path(traj, corr, horizon);
  CFMartingaleTrace tr;
  tr.t = corr.t;
  tr.start_index = corr.start_index;
  tr.sup_abs_correction = corr.sup_abs_correction;
  for (std::uint64_t n = corr.start_index; n <= horizon; ++n) {
    tr.phi.push_back(phi[n - 1]);
    tr.a.push_back(corr.factor[n - 1]);
    tr.correction.push_back(corr.correction[n - 1]);
    tr.S.push_back(corr.correction[n - 1] * phi[n - 1]);
  }
  return tr;
}

CFMartingaleTrace cf_martingale_trace(const Trajectory& traj, const BandwidthSchedule& schedule,
                                      const KernelSpec& kernel, std::span<const double> t,
                                      std::uint64_t horizon) {
  return cf_martingale_trace(traj, cf_corrections(traj.flavor, schedule, kernel, t, horizon),
                             horizon);
}

DriftResult drift_test(std::span<const std::pair<double, double>> samples, std::string label,
                       double threshold, std::size_t min_replications) {
  if (samples.size() < min_replications)
    throw TooFewReplications("drift test '" + label + "' has " + std::to_string(samples.size()) +
                             " replications; needs " + std::to_string(min_replications));
  DriftResult r;
  r.label = std::move(label);
  r.replications = samples.size();
  r.threshold = threshold;
  const double R = static_cast<double>(samples.size());
  CompensatedSum<double> sum;
  for (const auto& [before, after] : samples) sum.add(after - before);
  r.mean = sum.value() / R;
  CompensatedSum<double> sq;
  for (const auto& [before, after] : samples) {
    const double dev = (after - before) - r.mean;
    sq.add(dev * dev);
  }
  r.std_error = std::sqrt(sq.value() / (R - 1.0) / R);
  if (r.std_error > 0.0)
    r.z = r.mean / r.std_error;
  else
    r.z = r.mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.mean);
  r.flagged = std::abs(r.z) > threshold;
  return r;
}

}  // namespace kdp
