#include "kdp/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numbers>

#include "kdp/errors.hpp"
#include "kdp/series.hpp"

namespace kdp::stats {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("ks_statistic: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  if (d <= 0.0) return 1.0;
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double ks_critical_value(double alpha, std::size_t n) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ks_pvalue(mid, n) > alpha ? lo : hi) = mid;
  }
  return hi;
}

ChiSquareResult chi_square_gof(std::span<const double> observed,
                               std::span<const double> probabilities, double min_expected) {
  if (observed.size() != probabilities.size() || observed.empty())
    throw DomainError("chi_square_gof: size mismatch");
  double total = 0.0;
  for (double o : observed) total += o;
  if (total <= 0.0) throw DomainError("chi_square_gof: no observations");

  std::vector<double> obs, expct;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += observed[i];
    e_acc += total * probabilities[i];
    if (e_acc >= min_expected) {
      obs.push_back(o_acc);
      expct.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (expct.empty()) {
      obs.push_back(o_acc);
      expct.push_back(e_acc);
    } else {
      obs.back() += o_acc;
      expct.back() += e_acc;
    }
  }
  ChiSquareResult r{};
  r.bins = static_cast<int>(obs.size());
  r.dof = r.bins - 1;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double diff = obs[i] - expct[i];
    r.statistic += diff * diff / expct[i];
  }
  if (r.dof < 1) {
    r.p_value = 1.0;
    return r;
  }
  r.p_value = boost::math::cdf(
      boost::math::complement(boost::math::chi_squared_distribution<double>(r.dof), r.statistic));
  return r;
}

ProportionTest two_proportion_test(std::size_t s1, std::size_t n1, std::size_t s2,
                                   std::size_t n2) {
  if (n1 == 0 || n2 == 0) throw DomainError("two_proportion_test: empty group");
  ProportionTest t{};
  t.p1 = static_cast<double>(s1) / n1;
  t.p2 = static_cast<double>(s2) / n2;
  const double pooled = static_cast<double>(s1 + s2) / (n1 + n2);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
  if (se == 0.0) {
    t.z = 0.0;
    t.p_value = 0.5;
    return t;
  }
  t.z = (t.p1 - t.p2) / se;
  t.p_value = 1.0 - normal_cdf(t.z);
  return t;
}

double beta_cdf(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(a, b, x);
}

Summary summarize(std::span<const double> xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  CompensatedSum<double> acc;
  for (double x : xs) acc.add(x);
  s.mean = acc.value() / s.n;
  CompensatedSum<double> sq;
  for (double x : xs) sq.add((x - s.mean) * (x - s.mean));
  s.variance = s.n > 1 ? sq.value() / (s.n - 1) : 0.0;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

}  // namespace kdp::stats
