#pragma once

#include <functional>
#include <span>
#include <vector>

namespace kdp::stats {

double normal_cdf(double z);

/// Two-sided one-sample Kolmogorov-Smirnov statistic sup |F_n - F|.
double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf);

/// P(D_n > d) under H0. Asymptotic Kolmogorov series with Stephens'
/// finite-n correction.
double ks_pvalue(double d, std::size_t n);

/// Critical value of D_n at the given level, inverted from ks_pvalue.
double ks_critical_value(double alpha, std::size_t n);

struct ChiSquareResult {
  double statistic;
  int dof;
  double p_value;
  int bins;  // after pooling
};

/// Goodness of fit of observed counts to expected probabilities. Adjacent bins
/// are pooled (left to right) until each expected count reaches min_expected.
ChiSquareResult chi_square_gof(std::span<const double> observed,
                               std::span<const double> probabilities,
                               double min_expected = 5.0);

struct ProportionTest {
  double p1;
  double p2;
  double z;
  double p_value;  // one-sided, H1: p1 > p2
};

ProportionTest two_proportion_test(std::size_t successes1, std::size_t n1,
                                   std::size_t successes2, std::size_t n2);

/// Beta(a, b) CDF.
double beta_cdf(double x, double a, double b);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double min = 0.0;
  double max = 0.0;
};

Summary summarize(std::span<const double> xs);

}  // namespace kdp::stats
