#include <boost/math/special_functions/polygamma.hpp>
#include <boost/math/special_functions/zeta.hpp>
#include <cmath>

#include "doctest.h"
#include "kdp/errors.hpp"
#include "kdp/martingale.hpp"
#include "kdp/rng.hpp"

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

// Hurwitz zeta sum_{k >= n} k^{-s} from the Riemann zeta and a direct prefix.
double hurwitz(double s, std::uint64_t n) {
  double prefix = 0;
  for (std::uint64_t k = n - 1; k >= 1; --k) prefix += std::pow(double(k), -s);
  return boost::math::zeta(s) - prefix;
}

}  // namespace

TEST_SUITE("martingale") {
  TEST_CASE("kde compensator for h_n = 1/n telescopes") {
    const auto s = BandwidthSchedule::power(1.0, 1.0);
    for (std::uint64_t n : {1ull, 7ull, 100ull, 5000ull, 123456ull}) {
      CHECK(compensator(Flavor::kde, s, 1.0, n) == doctest::Approx(1.0 / (n * (n + 1.0))).epsilon(1e-15));
      CHECK(compensator_tail(Flavor::kde, s, 1.0, n) == doctest::Approx(1.0 / n).epsilon(1e-10));
    }
  }

  TEST_CASE("kde compensator tail for a power schedule") {
    // sum_{k>=n} k^{-0.2}/(k+1) = sum_j (-1)^j zeta(1.2 + j, n) for n >= 2.
    for (std::uint64_t n : {2ull, 10ull, 1000ull}) {
      double expected = 0;
      for (int j = 0; j < 60; ++j) expected += (j % 2 ? -1.0 : 1.0) * hurwitz(1.2 + j, n);
      CHECK(compensator_tail(Flavor::kde, kPow02, 1.0, n) == doctest::Approx(expected).epsilon(1e-10));
    }
  }

  TEST_CASE("recursive compensator tail") {
    // Summation by parts: sum_{k>=n} H_k/(k(k+1)) = H_n/n + sum_{k>n} h_k/k.
    const double ew = 0.7;
    auto partial_h = [](const BandwidthSchedule& s, std::uint64_t n) {
      double h = 0;
      for (std::uint64_t k = 1; k <= n; ++k) h += s.at(k);
      return h;
    };
    const auto harmonic = BandwidthSchedule::power(1.0, 1.0);
    for (std::uint64_t n : {1ull, 10ull, 3000ull, 20000ull}) {
      const double H = partial_h(harmonic, n);
      CHECK(compensator(Flavor::recursive, harmonic, ew, n) == doctest::Approx(ew * H / (n * (n + 1.0))).epsilon(1e-13));
      const double expected = ew * (H / n + boost::math::trigamma(double(n + 1)));
      CHECK(compensator_tail(Flavor::recursive, harmonic, ew, n) == doctest::Approx(expected).epsilon(1e-10));
      const double expected02 = ew * (partial_h(kPow02, n) / n + hurwitz(1.2, n + 1));
      CHECK(compensator_tail(Flavor::recursive, kPow02, ew, n) == doctest::Approx(expected02).epsilon(1e-10));
    }
    CHECK_THROWS_AS(compensator_tail(Flavor::kde, BandwidthSchedule::table({1.0}), 1.0, 1), NoEnvelope);
  }

  TEST_CASE("tightness trace on degenerate and hand-built paths") {
    SUBCASE("all kernel draws zero") {
      for (Flavor f : {Flavor::kde, Flavor::recursive}) {
        auto t = init_trajectory(f);
        ForcedDraws d({1, 1, 2, 3}, {{0.0}, {0.0}, {0.0}, {0.0}});
        extend(t, 5, kPow02, KernelSpec::gaussian(), d);
        const auto tr = tightness_trace(t, kPow02, 0.8);
        for (std::size_t n = 1; n <= 5; ++n) {
          CHECK(tr.U[n - 1] == 0.0);
          CHECK(tr.J[n - 1] == 0.0);
          CHECK(tr.S[n - 1] == doctest::Approx(compensator_tail(f, kPow02, 0.8, n)).epsilon(1e-12));
        }
      }
    }
    SUBCASE("length two") {
      auto t = init_trajectory(Flavor::kde);
      ForcedDraws d({1}, {{1.0}});
      step(t, kPow02, KernelSpec::gaussian(), d);
      const auto tr = tightness_trace(t, kPow02, std::sqrt(2 / 3.141592653589793));
      CHECK(tr.U[1] == 1.0);
      CHECK(tr.J[1] == 0.5);
    }
  }

  TEST_CASE("tightness trace invariants on simulated paths") {
    for (Flavor f : {Flavor::kde, Flavor::recursive}) {
      const auto k = KernelSpec::laplace();
      const auto path = simulate(f, 3000, 4, 0, k);
      const auto tr = tightness_trace(path, kPow02, k.abs_moment(1.0));
      double sum = 0;
      bool ok = true;
      for (std::size_t n = 1; n <= tr.size(); ++n) {
        sum += tr.U[n - 1];
        ok = ok && std::abs(tr.J[n - 1] - sum / n) <= 1e-12 * std::max(1.0, sum / n);
        ok = ok && tr.S[n - 1] >= tr.J[n - 1] && tr.S[n - 1] >= 0;
        ok = ok && tr.c[n - 1] == doctest::Approx(compensator(f, kPow02, k.abs_moment(1.0), n));
      }
      CHECK(ok);
      CHECK(tr.tail.back() < tr.tail.front());
    }
    const std::vector<std::vector<double>> data{{0.0}, {1.0}};
    auto seeded = init_trajectory(Flavor::kde, 1, &data);
    CHECK_THROWS_AS(tightness_trace(seeded, kPow02, 1.0), MissingGenealogy);
  }

  TEST_CASE("Markov tail bound for the dominating process") {
    const auto k = KernelSpec::gaussian();
    SUBCASE("all-zero path") {
      auto t = init_trajectory(Flavor::kde);
      ForcedDraws d({1, 1, 1}, {{0.0}, {0.0}, {0.0}});
      extend(t, 4, kPow02, k, d);
      const auto tr = tightness_trace(t, kPow02, k.abs_moment(1.0));
      const auto rep = tail_prob_bound_check(tr, t, kPow02, k, 5.0);
      CHECK(rep.holds());
      CHECK(rep.max_violation < 0);
    }
    for (Flavor f : {Flavor::kde, Flavor::recursive}) {
      const auto path = simulate(f, 1000, 6);
      const auto tr = tightness_trace(path, kPow02, k.abs_moment(1.0));
      const auto rep = tail_prob_bound_check(tr, path, kPow02, k, 10 * tr.J.back());
      CHECK(rep.holds());
      CHECK(rep.exact);
      CHECK(rep.tail_mass.size() == 1000);
      const auto inf = tail_prob_bound_check(tr, path, kPow02, k, INFINITY, 100);
      for (double m : inf.tail_mass) CHECK(m == 0.0);
      CHECK(inf.holds());
    }
  }

  TEST_CASE("cf factors") {
    const double zero[] = {0.0}, one[] = {1.0};
    for (std::uint64_t n : {1ull, 10ull, 1000ull}) {
      const auto f = kde_cf_factors(kPow02, KernelSpec::gaussian(), zero, n);
      CHECK(f.a == cplx(1.0, 0.0));
      CHECK(f.b == cplx(1.0, 0.0));
      const auto c = kde_cf_factors(BandwidthSchedule::table(std::vector<double>(2000, 1.0)),
                                    KernelSpec::laplace(), one, n);
      CHECK(c.b == c.a);
    }
    const auto f1 = kde_cf_factors(kPow02, KernelSpec::gaussian(), one, 1);
    CHECK(f1.a.real() == doctest::Approx(std::exp(-0.5) / 2 + 0.5).epsilon(1e-15));
    CHECK(f1.a.real() == doctest::Approx(0.803265).epsilon(1e-6));
    CHECK(std::abs(f1.b - f1.a * KernelSpec::gaussian().cf1(std::pow(2.0, -0.2)) / std::exp(-0.5)) < 1e-15);
    const auto r1 = recursive_cf_factor(kPow02, KernelSpec::gaussian(), one, 1);
    CHECK(r1.real() == doctest::Approx(std::exp(-0.5 * std::pow(2.0, -0.4)) / 2 + 0.5).epsilon(1e-15));
    const double huge[] = {100.0};
    CHECK_THROWS_AS(kde_cf_factors(kPow02, KernelSpec::gaussian(), huge, 1), ZeroDenominator);
  }

  TEST_CASE("Lemma product tail") {
    const auto k = KernelSpec::gaussian();
    const double zero[] = {0.0}, one[] = {1.0};
    CHECK(lemma_product_tail(kPow02, k, zero, 1).value == cplx(1.0, 0.0));
    CHECK(lemma_product_tail(kPow02, k, zero, 1000).value == cplx(1.0, 0.0));

    // Band from the Lemma, constants from the kernel moments, tail from zeta(1.2).
    const double band = 10 * hurwitz(1.2, 10000) * 1.0 * (0.0 + 2 * k.abs_moment(1.0));
    const auto p = lemma_product_tail(kPow02, k, one, 10000);
    CHECK(std::abs(p.value - 1.0) <= band);
    CHECK(std::abs(p.value - 1.0) <= p.lemma_bound + 1e-8);
    CHECK(p.value != cplx(0.0, 0.0));
    CHECK(p.lemma_bound == doctest::Approx(band / 10).epsilon(1e-9));

    // The asymptotic tail agrees with a long direct product plus the same tail.
    const std::uint64_t split = 3000000;
    const auto direct = partial_product(kPow02, k, one, 10000, split - 1) *
                        lemma_product_tail(kPow02, k, one, split).value;
    CHECK(std::abs(direct - p.value) < 1e-9);

    for (auto kern : {KernelSpec::half_normal(), KernelSpec::laplace()}) {
      const double t[] = {0.5};
      const auto q = lemma_product_tail(kPow02, kern, t, 1);
      CHECK(q.value != cplx(0.0, 0.0));
      CHECK(std::abs(q.value - 1.0) <= q.lemma_bound + 1e-8);
    }
    CHECK_THROWS_AS(lemma_product_tail(BandwidthSchedule::table({1.0}), k, one, 1), NoEnvelope);
  }

  TEST_CASE("certified truncation for fast-decaying schedules") {
    const auto s = BandwidthSchedule::power(1.0, 2.0);
    const double one[] = {1.0};
    const auto p = lemma_product_tail(s, KernelSpec::laplace(), one, 10);
    CHECK(p.certified_truncation);
    CHECK(p.truncated_at > 10);
    const auto direct = partial_product(s, KernelSpec::laplace(), one, 10, 5000000, Flavor::kde);
    CHECK(std::abs(p.value - direct) < 1e-8);
    // The exponential envelope has delta = 1, too slow to certify at 1e-8 within
    // the direct window, so the far tail is summed asymptotically instead.
    const auto ex = BandwidthSchedule::exponential(0.5);
    const auto e = lemma_product_tail(ex, KernelSpec::gaussian(), one, 3);
    CHECK(!e.certified_truncation);
    CHECK(std::abs(e.value - partial_product(ex, KernelSpec::gaussian(), one, 3, 2000)) < 1e-12);
  }

  TEST_CASE("partial products are Cauchy under the Lemma bound") {
    const auto k = KernelSpec::gaussian();
    const auto env = *kPow02.envelope();
    for (double tv : {0.5, 1.0, 2.0}) {
      const double t[] = {tv};
      const auto N = cf_start_index(kPow02, k, t);
      cplx prev = partial_product(kPow02, k, t, N, N);
      for (std::uint64_t m = 2 * N; m < 200000; m *= 2) {
        const cplx cur = partial_product(kPow02, k, t, N, m);
        // |P_m - P_{m'}| <= |P_{m'}| * (exp(sum |a_k - 1|) - 1) with the sum bounded by the Lemma.
        const double tail = lemma_tail_bound(env, k, t, m / 2 + 1);
        CHECK(std::abs(cur - prev) <= std::abs(prev) * std::expm1(tail) + 1e-13);
        prev = cur;
      }
    }
  }

  TEST_CASE("start index") {
    const double t2[] = {2.0}, t5[] = {5.0};
    CHECK(cf_start_index(kPow02, KernelSpec::gaussian(), t2) == 1);
    // |phi(h_n 5)| = exp(-12.5 n^{-0.4}) > 0.1 first when n^{0.4} > 12.5/ln 10.
    const auto expected = static_cast<std::uint64_t>(std::ceil(std::pow(12.5 / std::log(10.0), 2.5)));
    CHECK(cf_start_index(kPow02, KernelSpec::gaussian(), t5) == expected);
  }

  TEST_CASE("cf corrections satisfy the backward recursion") {
    const auto k = KernelSpec::half_normal();
    const double t[] = {1.3};
    for (Flavor f : {Flavor::kde, Flavor::recursive}) {
      const auto c = cf_corrections(f, kPow02, k, t, 2000);
      for (std::uint64_t n = c.start_index; n < 2000; n += 97) {
        const cplx lhs = f == Flavor::kde ? c.correction_at(n) * c.phi_kernel[n - 1] : c.correction_at(n);
        const cplx rhs = c.factor[n - 1] * (f == Flavor::kde ? c.correction_at(n + 1) * c.phi_kernel[n]
                                                             : c.correction_at(n + 1));
        CHECK(std::abs(lhs - rhs) < 1e-13);
      }
      // Independent check of one correction via the tail product.
      const auto direct = lemma_product_tail(kPow02, k, t, 500, 1e-8, f).value;
      const cplx expected = f == Flavor::kde ? direct / c.phi_kernel[499] : direct;
      CHECK(std::abs(c.correction_at(500) - expected) < 1e-10);
      if (f == Flavor::recursive) CHECK(c.sup_abs_correction <= 1.0);
    }
  }

  TEST_CASE("cf martingale traces") {
    const double zero[] = {0.0}, one[] = {1.0};
    const auto path = simulate(Flavor::kde, 200, 3);
    const auto tr0 = cf_martingale_trace(path, kPow02, KernelSpec::gaussian(), zero, 200);
    for (const auto& s : tr0.S) CHECK(s == cplx(1.0, 0.0));

    const auto single = init_trajectory(Flavor::kde);
    const auto tr1 = cf_martingale_trace(single, kPow02, KernelSpec::gaussian(), one, 1);
    CHECK(std::abs(tr1.phi[0] - std::exp(-0.5)) < 1e-15);

    const auto rec = simulate(Flavor::recursive, 10000, 12);
    for (double tv : {0.5, 1.0, 2.0}) {
      const double t[] = {tv};
      const auto tr = cf_martingale_trace(rec, kPow02, KernelSpec::gaussian(), t, 10000);
      double worst = 0;
      for (const auto& s : tr.S) worst = std::max(worst, std::abs(s));
      CHECK(worst <= 1.0 + 1e-10);
      for (const auto& p : tr.phi) CHECK(std::abs(p) <= 1.0 + 1e-12);
    }
    // phi_n from the incremental path equals mixture_cf on every prefix.
    const auto corr = cf_corrections(Flavor::kde, kPow02, KernelSpec::gaussian(), one, 200);
    const auto phi = predictive_cf_path(path, corr, 200);
    for (std::size_t n : {1u, 17u, 200u})
      CHECK(std::abs(phi[n - 1] - mixture_cf(predictive_mixture(path, n, kPow02, KernelSpec::gaussian()), one)) < 1e-13);
  }

  TEST_CASE("drift test") {
    std::vector<std::pair<double, double>> flat(150, {2.0, 2.0});
    const auto z0 = drift_test(flat, "flat");
    CHECK(z0.z == 0.0);
    CHECK(!z0.flagged);
    CHECK_THROWS_AS(drift_test(std::vector<std::pair<double, double>>(99), "few"), TooFewReplications);

    Stream s(77, 0, StreamPurpose::auxiliary);
    std::vector<std::pair<double, double>> coin(10000), biased(10000);
    for (auto& p : coin) p = {0.0, s.uniform() < 0.5 ? 1.0 : -1.0};
    for (auto& p : biased) p = {0.0, 0.1 + s.normal()};
    CHECK(!drift_test(coin, "coin").flagged);
    const auto b = drift_test(biased, "biased");
    CHECK(b.flagged);
    CHECK(b.z == doctest::Approx(10.0).epsilon(0.4));
  }

  TEST_CASE("tightness and cf martingales have zero drift (400 replications)") {
    const std::size_t R = 400;
    const auto k = KernelSpec::gaussian();
    const double t[] = {1.0};
    for (Flavor f : {Flavor::kde, Flavor::recursive}) {
      const auto corr = cf_corrections(f, kPow02, k, t, 101);
      std::vector<std::pair<double, double>> tight(R), re(R), im(R);
      for (std::size_t r = 0; r < R; ++r) {
        const auto path = simulate(f, 102, 2024, static_cast<std::uint32_t>(r));
        const auto tr = tightness_trace(path, kPow02, k.abs_moment(1.0));
        tight[r] = {tr.S[99], tr.S[100]};
        const auto ct = cf_martingale_trace(path, corr, 101);
        const auto a = ct.S[100 - ct.start_index], b = ct.S[101 - ct.start_index];
        re[r] = {a.real(), b.real()};
        im[r] = {a.imag(), b.imag()};
      }
      CHECK(!drift_test(tight, "tight").flagged);
      CHECK(!drift_test(re, "re").flagged);
      CHECK(!drift_test(im, "im").flagged);
    }
  }
}
