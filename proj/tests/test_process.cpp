#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "kdp/errors.hpp"
#include "kdp/process.hpp"
#include "kdp/stats.hpp"

using namespace kdp;
using cplx = std::complex<double>;

namespace {

const auto kPow02 = BandwidthSchedule::power(1.0, 0.2);

Trajectory simulate(Flavor f, std::size_t n, std::uint64_t seed, std::uint32_t r = 0,
                    const KernelSpec& k = KernelSpec::gaussian(),
                    const BandwidthSchedule& s = kPow02) {
  StreamDraws draws(seed, r);
  auto traj = init_trajectory(f, k.dimension());
  extend(traj, n, s, k, draws);
  return traj;
}

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_SUITE("process") {
  TEST_CASE("initialisation") {
    auto t = init_trajectory(Flavor::kde);
    CHECK(t.size() == 1);
    CHECK(t.points == std::vector<double>{0.0});
    CHECK(t.seed_prefix_len == 0);
    const std::vector<std::vector<double>> data{{1.5}, {-2.0}};
    t = init_trajectory(Flavor::kde, 1, &data);
    CHECK(t.size() == 2);
    CHECK(t.seed_prefix_len == 2);
    CHECK(t.ancestors.empty());
    t = init_trajectory(Flavor::recursive);
    CHECK(t.steps_h.empty());
    const std::vector<std::vector<double>> bad{{1.0}, {NAN}};
    CHECK_THROWS_AS(init_trajectory(Flavor::kde, 1, &bad), NonFiniteInput);
    const std::vector<std::vector<double>> inf{{INFINITY}};
    CHECK_THROWS_AS(init_trajectory(Flavor::kde, 1, &inf), NonFiniteInput);
    CHECK(parse_flavor("recursive") == Flavor::recursive);
  }

  TEST_CASE("single steps with forced draws") {
    SUBCASE("kde first step") {
      auto t = init_trajectory(Flavor::kde);
      ForcedDraws d({1}, {{1.5}});
      step(t, kPow02, KernelSpec::gaussian(), d);
      CHECK(t.point(2)[0] == 1.5);
      CHECK(t.ancestor_of(2) == 1);
      CHECK(t.h_of(2) == 1.0);
    }
    // Shared state: points [0, 1.0] built with h_1 = 1.
    for (Flavor f : {Flavor::kde, Flavor::recursive}) {
      auto t = init_trajectory(f);
      ForcedDraws d({1, 1}, {{1.0}, {2.0}});
      step(t, kPow02, KernelSpec::gaussian(), d);
      REQUIRE(t.point(2)[0] == 1.0);
      step(t, kPow02, KernelSpec::gaussian(), d);
      if (f == Flavor::recursive) {
        CHECK(t.point(3)[0] == 2.0);
        CHECK(t.h_of(3) == 1.0);
      } else {
        CHECK(t.point(3)[0] == doctest::Approx(std::pow(2.0, -0.2) * 2.0).epsilon(1e-15));
        CHECK(t.point(3)[0] == doctest::Approx(1.7411).epsilon(1e-4));
      }
    }
  }

  TEST_CASE("predictive mixtures") {
    auto t = init_trajectory(Flavor::kde);
    auto m = predictive_mixture(t, kPow02, KernelSpec::gaussian());
    CHECK(m.size() == 1);
    CHECK(m.scales[0] == 1.0);
    CHECK(m.centers[0] == 0.0);

    for (Flavor f : {Flavor::kde, Flavor::recursive}) {
      auto tr = init_trajectory(f);
      ForcedDraws d({1}, {{1.0}});
      step(tr, kPow02, KernelSpec::gaussian(), d);
      m = predictive_mixture(tr, kPow02, KernelSpec::gaussian());
      REQUIRE(m.size() == 2);
      CHECK(m.centers == std::vector<double>{0.0, 1.0});
      const double h2 = std::pow(2.0, -0.2);
      CHECK(h2 == doctest::Approx(0.87055).epsilon(1e-5));
      if (f == Flavor::kde)
        CHECK(m.scales == std::vector<double>{h2, h2});
      else
        CHECK(m.scales == std::vector<double>{1.0, h2});
      CHECK(m.weight() == 0.5);
    }
  }

  TEST_CASE("box probabilities") {
    PredictiveMixture m;
    m.centers = {0.0};
    m.scales = {1.0};
    CHECK(mixture_prob(m, Box::half_line(0.0)) == doctest::Approx(0.5).epsilon(1e-15));
    m.centers = {0.0, 2.0};
    m.scales = {1.0, 1.0};
    CHECK(mixture_prob(m, Box::half_line(1.0)) == doctest::Approx((phi(1) + phi(-1)) / 2).epsilon(1e-15));
    CHECK(mixture_prob(m, Box::half_line(1.0)) == doctest::Approx(0.5).epsilon(1e-15));
    const auto path = simulate(Flavor::recursive, 50, 3, 0, KernelSpec::laplace(2));
    const auto mm = predictive_mixture(path, kPow02, KernelSpec::laplace(2));
    CHECK(mixture_prob(mm, Box::everything(2)) == 1.0);
    // Box mass against a direct double loop over components.
    const Box b{{-0.5, -1.0}, {1.0, 0.25}};
    double expected = 0;
    for (std::size_t i = 0; i < mm.size(); ++i) {
      auto F = [](double y) { return y < 0 ? 0.5 * std::exp(y) : 1 - 0.5 * std::exp(-y); };
      double p = 1;
      for (int j = 0; j < 2; ++j)
        p *= F((b.hi[j] - mm.center(i)[j]) / mm.scales[i]) - F((b.lo[j] - mm.center(i)[j]) / mm.scales[i]);
      expected += p / mm.size();
    }
    CHECK(mixture_prob(mm, b) == doctest::Approx(expected).epsilon(1e-13));
  }

  TEST_CASE("mixture characteristic functions") {
    PredictiveMixture m;
    m.centers = {0.0};
    m.scales = {1.0};
    const double one[] = {1.0}, zero[] = {0.0};
    CHECK(std::abs(mixture_cf(m, one) - std::exp(-0.5)) < 1e-15);
    m.centers = {0.0, 1.0};
    m.scales = {1.0, 1.0};
    const cplx expected = 0.5 * (1.0 + std::polar(1.0, 1.0)) * std::exp(-0.5);
    CHECK(std::abs(mixture_cf(m, one) - expected) < 1e-15);
    CHECK(mixture_cf(m, zero) == cplx(1.0, 0.0));
  }

  TEST_CASE("mixture cf matches the empirical cf of 1e5 mixture draws") {
    for (Flavor f : {Flavor::kde, Flavor::recursive}) {
      const auto path = simulate(f, 30, 17, 0, KernelSpec::half_normal());
      const auto m = predictive_mixture(path, kPow02, KernelSpec::half_normal());
      StreamDraws d(99, 0);
      const int n = 100000;
      std::vector<double> xs(n);
      for (auto& x : xs) x = sample_mixture(m, d)[0];
      double worst = 0;
      for (int i = -10; i <= 10; ++i) {
        const double t[] = {0.5 * i};
        cplx acc = 0;
        for (double x : xs) acc += std::polar(1.0, t[0] * x);
        worst = std::max(worst, std::abs(acc / double(n) - mixture_cf(m, t)));
      }
      CHECK(worst < 5 * 2 / std::sqrt(double(n)));
    }
  }

  TEST_CASE("next-point law matches the predictive mixture (KS)") {
    for (Flavor f : {Flavor::kde, Flavor::recursive}) {
      const auto frozen = simulate(f, 25, 5);
      const auto m = predictive_mixture(frozen, kPow02, KernelSpec::gaussian());
      const int reps = 100000;
      std::vector<double> next(reps);
      for (int r = 0; r < reps; ++r) {
        auto copy = frozen;
        StreamDraws d(1234, static_cast<std::uint32_t>(r));
        step(copy, kPow02, KernelSpec::gaussian(), d);
        next[r] = copy.point(26)[0];
      }
      const double D = stats::ks_statistic(next, [&](double x) { return mixture_prob(m, Box::half_line(x)); });
      CAPTURE(to_string(f));
      CHECK(stats::ks_pvalue(D, reps) > 0.001);
    }
  }

  TEST_CASE("mean, cdf and quantile") {
    PredictiveMixture m;
    m.centers = {-1.0, 1.0};
    m.scales = {0.5, 0.5};
    CHECK(mixture_mean(m)[0] == 0.0);
    CHECK(mixture_cdf(m, 0.0) == doctest::Approx(0.5));
    CHECK(mixture_quantile(m, 0.5) == doctest::Approx(0.0).epsilon(1e-9));
    for (double p : {0.01, 0.3, 0.77, 0.999}) CHECK(mixture_cdf(m, mixture_quantile(m, p)) == doctest::Approx(p).epsilon(1e-9));
    m.kernel = KernelSpec::half_normal();
    m.centers = {0.0};
    m.scales = {2.0};
    CHECK(mixture_mean(m)[0] == doctest::Approx(2 * std::sqrt(2 / std::numbers::pi)));
  }

  TEST_CASE("genealogy reconstruction") {
    auto t = init_trajectory(Flavor::kde);
    CHECK(reconstruct_from_genealogy(t, 1)[0] == 0.0);
    ForcedDraws d({1, 2}, {{1.0}, {1.0}});
    extend(t, 3, kPow02, KernelSpec::gaussian(), d);
    CHECK(reconstruct_from_genealogy(t, 3)[0] == doctest::Approx(1 + std::pow(2.0, -0.2)).epsilon(1e-15));
    CHECK(reconstruct_from_genealogy(t, 3)[0] == doctest::Approx(1.87055).epsilon(1e-5));

    for (Flavor f : {Flavor::kde, Flavor::recursive}) {
      const auto path = simulate(f, 10000, 8, 1, KernelSpec::gaussian(2));
      double worst = 0;
      for (std::size_t n = 1; n <= path.size(); ++n) {
        const auto x = reconstruct_from_genealogy(path, n);
        for (int j = 0; j < 2; ++j) worst = std::max(worst, std::abs(x[j] - path.point(n)[j]));
      }
      CHECK(worst <= 1e-12);
    }
    const std::vector<std::vector<double>> data{{1.0}, {2.0}, {3.0}};
    auto seeded = init_trajectory(Flavor::kde, 1, &data);
    StreamDraws sd(1, 0);
    extend(seeded, 10, kPow02, KernelSpec::gaussian(), sd);
    CHECK_THROWS_AS(reconstruct_from_genealogy(seeded, 2), PrefixPointHasNoGenealogy);
    CHECK(reconstruct_from_genealogy(seeded, 1)[0] == 1.0);
    for (std::size_t n = 4; n <= 10; ++n) CHECK(reconstruct_from_genealogy(seeded, n)[0] == seeded.point(n)[0]);
  }

  TEST_CASE("running sup norm") {
    Trajectory t;
    t.points = {0.0};
    CHECK(sup_norm_path(t) == std::vector<double>{0.0});
    t.points = {0.0, 2.0, -1.0};
    CHECK(sup_norm_path(t) == std::vector<double>{0.0, 2.0, 2.0});
    t.points = {0.0, 1.0, 3.0};
    CHECK(sup_norm_path(t) == std::vector<double>{0.0, 1.0, 3.0});
  }

  TEST_CASE("dominating process bounds the path") {
    for (Flavor f : {Flavor::kde, Flavor::recursive}) {
      for (auto k : {KernelSpec::gaussian(), KernelSpec::student_t(2.5, 2)}) {
        const auto path = simulate(f, 5000, 21, 0, k);
        const auto U = dominating_process(path);
        CHECK(U[0] == 0.0);
        bool ok = true;
        for (std::size_t n = 1; n <= path.size(); ++n) {
          double r2 = 0;
          for (double x : path.point(n)) r2 += x * x;
          ok = ok && std::sqrt(r2) <= U[n - 1] + 1e-12;
        }
        CHECK(ok);
      }
    }
  }

  TEST_CASE("recursive components keep their scales") {
    const auto path = simulate(Flavor::recursive, 200, 2);
    for (std::size_t n = 2; n < 200; n += 37) {
      const auto a = predictive_mixture(path, n, kPow02, KernelSpec::gaussian());
      const auto b = predictive_mixture(path, n + 1, kPow02, KernelSpec::gaussian());
      for (std::size_t i = 0; i + 1 < n; ++i) {
        CHECK(a.scales[i] == b.scales[i]);
        CHECK(a.centers[i] == b.centers[i]);
      }
    }
  }

  TEST_CASE("trajectory csv") {
    auto t = init_trajectory(Flavor::recursive);
    ForcedDraws d({1}, {{0.5}});
    step(t, kPow02, KernelSpec::gaussian(), d);
    std::ostringstream os;
    write_trajectory_csv(os, t, {"kdp test"});
    CHECK(os.str() == "# kdp test\nstep,ancestor,h_used,y_1,x_1\n1,,,,0\n2,1,1,0.5,0.5\n");
  }

  TEST_CASE("loading data points") {
    const auto dir = std::filesystem::temp_directory_path() / "kdp_process_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "ok.txt") << "# header\n1.0, 2.0\n-3 4e-1\n\n";
    std::ofstream(dir / "empty.txt") << "# nothing\n";
    std::ofstream(dir / "nan.txt") << "1\nnan\n";
    std::ofstream(dir / "ragged.txt") << "1 2\n3\n";
    const auto pts = load_points(dir / "ok.txt");
    REQUIRE(pts.size() == 2);
    CHECK(pts[1] == std::vector<double>{-3.0, 0.4});
    CHECK_THROWS_AS(load_points(dir / "empty.txt"), EmptyData);
    CHECK_THROWS_AS(load_points(dir / "nan.txt"), NonFiniteInput);
    CHECK_THROWS_AS(load_points(dir / "ragged.txt"), ConfigError);
    CHECK_THROWS_AS(load_points(dir / "absent.txt"), IoError);
  }
}
