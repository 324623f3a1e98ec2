#include <cmath>

#include "doctest.h"
#include "kdp/bandwidth.hpp"
#include "kdp/errors.hpp"

using namespace kdp;

TEST_SUITE("bandwidth") {
  TEST_CASE("power schedule values") {
    const auto s = BandwidthSchedule::power(1.0, 0.2);
    CHECK(s.at(32) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.at(1) == 1.0);
    CHECK(s(2) == doctest::Approx(std::pow(2.0, -0.2)).epsilon(1e-15));
    CHECK_THROWS_AS(s.at(0), DomainError);
    CHECK(!s.length());
  }

  TEST_CASE("exponential schedule values") {
    const auto s = BandwidthSchedule::exponential(1.0);
    CHECK(s.at(3) == doctest::Approx(0.049787068367863944).epsilon(1e-14));
    const auto env = s.envelope();
    REQUIRE(env);
    // The envelope must dominate e^{-rate n}.
    for (std::uint64_t n = 1; n < 200; ++n) CHECK(s.at(n) <= env->C * std::pow(double(n), -env->delta) * (1 + 1e-12));
  }

  TEST_CASE("monotone non-increasing up to 1e6") {
    for (const auto& s : {BandwidthSchedule::power(2.0, 0.3), BandwidthSchedule::exponential(1e-4)}) {
      double prev = s.at(1);
      bool ok = true;
      for (std::uint64_t n = 2; n <= 1000000; ++n) {
        const double h = s.at(n);
        ok = ok && h <= prev && h > 0;
        prev = h;
      }
      CHECK(ok);
    }
  }

  TEST_CASE("power envelope holds with equality") {
    const auto s = BandwidthSchedule::power(3.5, 0.2);
    double worst = 0;
    for (std::uint64_t n = 1; n <= 1000000; n = n * 3 + 1)
      worst = std::max(worst, std::abs(std::pow(double(n), 0.2) * s.at(n) / 3.5 - 1));
    CHECK(worst < 1e-12);
    CHECK(s.envelope()->C == 3.5);
    CHECK(s.envelope()->delta == 0.2);
    CHECK(*s.continuous(2.5) == doctest::Approx(3.5 * std::pow(2.5, -0.2)));
  }

  TEST_CASE("tables") {
    const auto s = BandwidthSchedule::table({1.0, 0.5, 0.25});
    CHECK(s.at(3) == 0.25);
    CHECK(*s.length() == 3);
    CHECK_THROWS_AS(s.at(4), IndexBeyondTable);
    CHECK(!s.envelope());
    CHECK(!s.continuous(1.5));
    CHECK_THROWS_AS(BandwidthSchedule::table({1.0, 0.0}), InvalidSpec);
    CHECK_THROWS_AS(BandwidthSchedule::table({}), InvalidSpec);
  }

  TEST_CASE("tables from file") {
    const auto s = BandwidthSchedule::table_from_file(KDP_TEST_DATA_DIR "/table4.txt");
    REQUIRE(*s.length() == 4);
    CHECK(s.at(3) == 0.75);
    CHECK(s.at(4) == 0.25);
    CHECK_THROWS_AS(BandwidthSchedule::table_from_file(KDP_TEST_DATA_DIR "/missing.txt"), IoError);
  }

  TEST_CASE("invalid parameters and defaults") {
    CHECK_THROWS_AS(BandwidthSchedule::power(0.0, 0.2), InvalidSpec);
    CHECK_THROWS_AS(BandwidthSchedule::power(1.0, -0.2), InvalidSpec);
    CHECK_THROWS_AS(BandwidthSchedule::exponential(0.0), InvalidSpec);
    const auto d = BandwidthSchedule::default_for_dimension(1);
    CHECK(d.envelope()->delta == doctest::Approx(0.2));
    CHECK(BandwidthSchedule::default_for_dimension(3).envelope()->delta == doctest::Approx(1.0 / 7));
  }
}
