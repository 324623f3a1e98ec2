#include <boost/math/special_functions/zeta.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kdp/series.hpp"

using namespace kdp;

TEST_SUITE("series") {
  TEST_CASE("compensated summation recovers lost low-order bits") {
    CompensatedSum<double> s;
    s.add(1.0);
    for (int i = 0; i < 1000000; ++i) s.add(1e-16);
    s.add(-1.0);
    CHECK(s.value() == doctest::Approx(1e-10).epsilon(1e-9));
    CompensatedSum<std::complex<double>> c;
    c.add({1e100, -1e100});
    c.add({1.0, 2.0});
    c.add({-1e100, 1e100});
    CHECK(c.value() == std::complex<double>(1.0, 2.0));
  }

  TEST_CASE("telescoping tail 1/(k(k+1)) sums to 1/n") {
    const std::function<double(double)> f = [](double k) { return 1.0 / (k * (k + 1)); };
    for (std::uint64_t n : {1ull, 10ull, 4095ull, 4096ull, 10000ull, 1000000000ull})
      CHECK(smooth_tail_sum(f, n) == doctest::Approx(1.0 / n).epsilon(1e-11));
  }

  TEST_CASE("Hurwitz zeta tails") {
    // Oracle: zeta(s) minus a direct partial sum.
    for (double s : {1.2, 1.5, 2.0, 3.0}) {
      const std::function<double(double)> f = [s](double k) { return std::pow(k, -s); };
      for (std::uint64_t n : {1ull, 100ull, 10000ull}) {
        double partial = 0;
        for (std::uint64_t k = n - 1; k >= 1; --k) partial += std::pow(double(k), -s);
        const double expected = boost::math::zeta(s) - partial;
        CAPTURE(s);
        CAPTURE(n);
        CHECK(smooth_tail_sum(f, n) == doctest::Approx(expected).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("complex geometric-like tail") {
    // sum_{k>=n} exp(i k / 1e5) / k^2 against direct summation far past the window.
    const std::function<std::complex<double>(double)> f = [](double k) { return std::polar(1.0 / (k * k), k * 1e-5); };
    const std::uint64_t n = 5000;
    CompensatedSum<std::complex<double>> direct;
    for (std::uint64_t k = 20000000; k >= n; --k) direct.add(f(double(k)));
    const double rest = 1.0 / 20000000.5;  // magnitude of the remaining tail
    CHECK(std::abs(smooth_tail_sum(f, n) - direct.value()) < rest);
  }

  TEST_CASE("improper integrals") {
    CHECK(integrate_to_infinity([](double x) { return std::exp(-x); }, 2.0) ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(integrate_to_infinity([](double x) { return std::pow(x, -1.2); }, 10.0) ==
          doctest::Approx(std::pow(10.0, -0.2) / 0.2).epsilon(1e-10));
  }
}
