#include "kdp/series.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>

namespace kdp {

double integrate_to_infinity(const std::function<double(double)>& f, double a) {
  static thread_local boost::math::quadrature::exp_sinh<double> integrator;
  auto g = [&](double s) {
    const double x = a * std::exp(s);
    if (!std::isfinite(x)) return 0.0;
    const double v = f(x);
    return v == 0.0 ? 0.0 : x * v;
  };
  return integrator.integrate(g, 0.0, std::numeric_limits<double>::infinity(), 1e-13);
}

namespace {

template <class T>
T tail_impl(const std::function<T(double)>& f,
            const std::function<T(const std::function<T(double)>&, double)>& integral,
            std::uint64_t from) {
  const std::uint64_t start = std::max<std::uint64_t>(from, 1);
  const std::uint64_t m = std::max(start, kDirectSummationLimit);
  CompensatedSum<T> direct;
  for (std::uint64_t k = start; k < m; ++k) direct.add(f(static_cast<double>(k)));
  const double a = static_cast<double>(m) - 0.5;
  const T fm = f(static_cast<double>(m));
  const T fm1 = f(static_cast<double>(m) - 1.0);
  // Third derivative by a 4-point stencil of unit spacing around a.
  const T f3 = (f(a + 1.5) - 3.0 * fm + 3.0 * fm1 - f(a - 1.5));
  // f(M) - f(M-1) = f'(a) + f'''(a)/24, hence the 17/5760 coefficient.
  const T tail = integral(f, a) + (fm - fm1) / 24.0 - 17.0 * f3 / 5760.0;
  direct.add(tail);
  return direct.value();
}

}  // namespace

double smooth_tail_sum(const std::function<double(double)>& f, std::uint64_t from) {
  return tail_impl<double>(
      f, [](const std::function<double(double)>& g, double a) { return integrate_to_infinity(g, a); },
      from);
}

std::complex<double> smooth_tail_sum(
    const std::function<std::complex<double>(double)>& f, std::uint64_t from) {
  return tail_impl<std::complex<double>>(
      f,
      [](const std::function<std::complex<double>(double)>& g, double a) {
        const double re = integrate_to_infinity([&](double x) { return g(x).real(); }, a);
        const double im = integrate_to_infinity([&](double x) { return g(x).imag(); }, a);
        return std::complex<double>(re, im);
      },
      from);
}

}  // namespace kdp
