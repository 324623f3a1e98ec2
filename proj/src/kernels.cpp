#include "kdp/kernels.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "kdp/errors.hpp"

namespace kdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gamma_variate(VariateSource& source, double shape) {
  // Marsaglia & Tsang (2000); shape < 1 boosted via U^(1/shape).
  if (shape < 1.0) {
    const double g = gamma_variate(source, shape + 1.0);
    return g * std::pow(source.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = source.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = source.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

double student_log_norm(double dof) {
  return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
         0.5 * std::log(dof * std::numbers::pi);
}

double student_density(double y, double dof) {
  return std::exp(student_log_norm(dof) -
                  0.5 * (dof + 1.0) * std::log1p(y * y / dof));
}

// phi(t) = x^{v/2} K_{v/2}(x) / (Gamma(v/2) 2^{v/2-1}),  x = sqrt(v)|t|.
double student_cf(double t, double dof) {
  if (t == 0.0) return 1.0;
  const double x = std::sqrt(dof) * std::abs(t);
  const double order = 0.5 * dof;
  const double k = boost::math::cyl_bessel_k(order, x);
  if (k == 0.0) return 0.0;
  const double log_phi = order * std::log(x) + std::log(k) - std::lgamma(order) -
                         (order - 1.0) * std::numbers::ln2;
  if (std::isfinite(log_phi)) return std::exp(log_phi);
  // Large orders overflow the Bessel route; fall back to a Fourier integral.
  static thread_local boost::math::quadrature::ooura_fourier_cos<double> ooura(
      1e-12);
  const auto [value, err] = ooura.integrate(
      [dof](double y) { return student_density(y, dof); }, std::abs(t));
  (void)err;
  return 2.0 * value;
}

// E[Y^{2k}] for one coordinate of a symmetric family; +inf when undefined.
double even_moment(const KernelSpec& k, int power) {
  const double half = 0.5 * power;
  switch (k.family()) {
    case KernelFamily::gaussian:
    case KernelFamily::half_normal:
      return std::exp(half * std::numbers::ln2 + std::lgamma(half + 0.5)) /
             std::sqrt(std::numbers::pi);
    case KernelFamily::laplace:
      return std::tgamma(power + 1.0);
    case KernelFamily::student_t: {
      const double v = k.dof();
      if (power >= v) return kInf;
      return std::exp(half * std::log(v) + std::lgamma(half + 0.5) +
                      std::lgamma(0.5 * (v - power)) - std::lgamma(0.5 * v)) /
             std::sqrt(std::numbers::pi);
    }
  }
  return kInf;
}

// E[Y^{2k} exp(-u Y^2)] for one coordinate.
double damped_even_moment(const KernelSpec& k, int kk, double u) {
  using boost::math::quadrature::exp_sinh;
  static thread_local exp_sinh<double> integrator;
  auto density = [&k](double y) {
    switch (k.family()) {
      case KernelFamily::gaussian:
      case KernelFamily::half_normal:
        return std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi);
      case KernelFamily::laplace:
        return 0.5 * std::exp(-y);
      case KernelFamily::student_t:
        return student_density(y, k.dof());
    }
    return 0.0;
  };
  auto f = [&](double y) {
    const double y2 = y * y;
    const double w = std::exp(-u * y2);
    if (w == 0.0) return 0.0;
    return 2.0 * std::pow(y2, kk) * w * density(y);
  };
  return integrator.integrate(f, 0.0, kInf, 1e-13);
}

// Moments E[(sum_j Y_j^2)^r] for r = 0..m from per-coordinate moments,
// by repeated binomial convolution over the d iid coordinates.
std::vector<double> sum_moments(const std::vector<double>& single, int d) {
  const int m = static_cast<int>(single.size()) - 1;
  std::vector<double> acc = single;
  for (int coord = 1; coord < d; ++coord) {
    std::vector<double> next(m + 1, 0.0);
    for (int r = 0; r <= m; ++r) {
      double binom = 1.0;
      for (int i = 0; i <= r; ++i) {
        next[r] += binom * acc[i] * single[r - i];
        binom = binom * (r - i) / (i + 1);
      }
    }
    acc = std::move(next);
  }
  return acc;
}

}  // namespace

namespace detail {

// E||Y||^p for product kernels via
//   E X^{m+q} = 1/Gamma(1-q) int_0^inf u^{-q} E[X^{m+1} e^{-uX}] du,
// X = ||Y||^2, p/2 = m + q, which factorises over coordinates.
double product_abs_moment(const KernelSpec& k, double p) {
  const int d = k.dimension();
  const double s = 0.5 * p;
  const int m = static_cast<int>(std::floor(s));
  const double q = s - m;
  if (q == 0.0) {
    std::vector<double> single(m + 1);
    for (int r = 0; r <= m; ++r) single[r] = even_moment(k, 2 * r);
    return sum_moments(single, d)[m];
  }
  using boost::math::quadrature::exp_sinh;
  exp_sinh<double> integrator;
  auto f = [&](double u) {
    std::vector<double> single(m + 2);
    for (int r = 0; r <= m + 1; ++r) single[r] = damped_even_moment(k, r, u);
    return std::pow(u, -q) * sum_moments(single, d)[m + 1];
  };
  return integrator.integrate(f, 0.0, kInf, 1e-10) / std::tgamma(1.0 - q);
}

}  // namespace detail

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::half_normal: return "half_normal";
    case KernelFamily::student_t: return "student_t";
    case KernelFamily::laplace: return "laplace";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "half_normal") return KernelFamily::half_normal;
  if (name == "student_t") return KernelFamily::student_t;
  if (name == "laplace") return KernelFamily::laplace;
  throw InvalidSpec("unknown kernel family '" + name + "'");
}

KernelSpec::KernelSpec(KernelFamily family, int dimension, double dof)
    : family_(family), dimension_(dimension), dof_(dof) {
  if (dimension < 1) throw InvalidSpec("kernel dimension must be >= 1");
  if (family == KernelFamily::student_t) {
    if (!(dof > 1.0) || !std::isfinite(dof))
      throw InvalidSpec("student_t kernel requires finite dof > 1");
  } else {
    dof_ = 0.0;
  }
}

void KernelSpec::sample(VariateSource& source, std::span<double> out) const {
  for (double& y : out) {
    switch (family_) {
      case KernelFamily::gaussian:
        y = source.normal();
        break;
      case KernelFamily::half_normal:
        y = std::abs(source.normal());
        break;
      case KernelFamily::laplace: {
        const double u = source.uniform();
        y = u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
        break;
      }
      case KernelFamily::student_t: {
        const double z = source.normal();
        const double g = gamma_variate(source, 0.5 * dof_);
        y = z * std::sqrt(0.5 * dof_ / g);
        break;
      }
    }
  }
}

std::vector<double> KernelSpec::sample(VariateSource& source) const {
  std::vector<double> y(dimension_);
  sample(source, y);
  return y;
}

std::complex<double> KernelSpec::cf1(double t) const {
  if (t == 0.0) return {1.0, 0.0};
  switch (family_) {
    case KernelFamily::gaussian:
      return {std::exp(-0.5 * t * t), 0.0};
    case KernelFamily::half_normal:
      return {std::exp(-0.5 * t * t),
              2.0 / std::sqrt(std::numbers::pi) * dawson(t / std::numbers::sqrt2)};
    case KernelFamily::laplace:
      return {1.0 / (1.0 + t * t), 0.0};
    case KernelFamily::student_t:
      return {student_cf(t, dof_), 0.0};
  }
  return {1.0, 0.0};
}

std::complex<double> KernelSpec::cf(std::span<const double> t) const {
  std::complex<double> phi{1.0, 0.0};
  for (double tj : t) phi *= cf1(tj);
  return phi;
}

std::complex<double> KernelSpec::cf1_minus_one(double t) const {
  if (t == 0.0) return {0.0, 0.0};
  switch (family_) {
    case KernelFamily::gaussian:
      return {std::expm1(-0.5 * t * t), 0.0};
    case KernelFamily::half_normal:
      return {std::expm1(-0.5 * t * t),
              2.0 / std::sqrt(std::numbers::pi) * dawson(t / std::numbers::sqrt2)};
    case KernelFamily::laplace:
      return {-t * t / (1.0 + t * t), 0.0};
    case KernelFamily::student_t:
      return cf1(t) - 1.0;
  }
  return {0.0, 0.0};
}

std::complex<double> KernelSpec::cf_minus_one(std::span<const double> t) const {
  // prod(1 + e_j) - 1, accumulated as e <- e + e_j + e e_j.
  std::complex<double> e{0.0, 0.0};
  for (double tj : t) {
    const auto ej = cf1_minus_one(tj);
    e = e + ej + e * ej;
  }
  return e;
}

double KernelSpec::cdf1(double y) const {
  if (y == kInf) return 1.0;
  if (y == -kInf) return 0.0;
  switch (family_) {
    case KernelFamily::gaussian:
      return 0.5 * std::erfc(-y / std::numbers::sqrt2);
    case KernelFamily::half_normal:
      return y <= 0.0 ? 0.0 : std::erf(y / std::numbers::sqrt2);
    case KernelFamily::laplace:
      return y < 0.0 ? 0.5 * std::exp(y) : 1.0 - 0.5 * std::exp(-y);
    case KernelFamily::student_t:
      return boost::math::cdf(boost::math::students_t_distribution<double>(dof_), y);
  }
  return 0.0;
}

bool KernelSpec::norm_survival_exact() const {
  return dimension_ == 1 || family_ == KernelFamily::gaussian ||
         family_ == KernelFamily::half_normal;
}

double KernelSpec::norm_survival(double r) const {
  if (r < 0.0) return 1.0;
  if (r == kInf) return 0.0;
  auto coordinate = [this](double x) {
    // P(|Y_1| > x)
    if (family_ == KernelFamily::half_normal) return std::erfc(x / std::numbers::sqrt2);
    return cdf1(-x) + (1.0 - cdf1(x));
  };
  if (dimension_ == 1) return std::min(1.0, coordinate(r));
  if (family_ == KernelFamily::gaussian || family_ == KernelFamily::half_normal)
    return boost::math::gamma_q(0.5 * dimension_, 0.5 * r * r);
  const double d = dimension_;
  return std::min(1.0, d * coordinate(r / std::sqrt(d)));
}

double KernelSpec::abs_moment(double p) const {
  if (!(p > 0.0) || !std::isfinite(p))
    throw DomainError("abs_moment: p must be a positive real");
  if (family_ == KernelFamily::student_t && p >= dof_)
    throw MomentUndefined("student_t(dof=" + std::to_string(dof_) +
                          ") has no absolute moment of order " + std::to_string(p));
  const int d = dimension_;
  switch (family_) {
    case KernelFamily::gaussian:
    case KernelFamily::half_normal:
      // ||Y|| is chi-distributed with d degrees of freedom.
      return std::exp(0.5 * p * std::numbers::ln2 + std::lgamma(0.5 * (d + p)) -
                      std::lgamma(0.5 * d));
    case KernelFamily::laplace:
      if (d == 1) return std::tgamma(p + 1.0);
      return detail::product_abs_moment(*this, p);
    case KernelFamily::student_t:
      if (d == 1)
        return std::exp(0.5 * p * std::log(dof_) + std::lgamma(0.5 * (p + 1.0)) +
                        std::lgamma(0.5 * (dof_ - p)) - std::lgamma(0.5 * dof_)) /
               std::sqrt(std::numbers::pi);
      return detail::product_abs_moment(*this, p);
  }
  return 0.0;
}

double KernelSpec::coordinate_mean() const {
  return family_ == KernelFamily::half_normal ? std::sqrt(2.0 / std::numbers::pi) : 0.0;
}

double KernelSpec::mean_norm() const {
  return coordinate_mean() * std::sqrt(static_cast<double>(dimension_));
}

double dawson(double x) {
  const double ax = std::abs(x);
  if (ax == 0.0) return 0.0;
  double value;
  if (ax > 25.0) {
    // Asymptotic series; the first omitted term is below 1e-13 relative here.
    const double r = 1.0 / (2.0 * ax * ax);
    value = (1.0 + r * (1.0 + r * (3.0 + r * (15.0 + r * 105.0)))) / (2.0 * ax);
  } else {
    using boost::math::quadrature::gauss_kronrod;
    auto f = [ax](double s) { return std::exp(ax * ax * (s * s - 1.0)); };
    value = ax * gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 20, 1e-15);
  }
  return x < 0.0 ? -value : value;
}

}  // namespace kdp
