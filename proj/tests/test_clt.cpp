#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cltlab/clt.hpp"
#include "cltlab/observable.hpp"
#include "cltlab/systems.hpp"

using namespace cltlab;
using namespace cltlab::clt;

TEST_CASE("bernstein schedule integer parts") {
  const auto big = bernstein_schedule(1000000, 0.4, 0.2);
  CHECK(big.p == 251);
  CHECK(big.q == 15);
  CHECK(big.k == 3759);

  const auto mid = bernstein_schedule(10000, 0.4, 0.2);
  CHECK(mid.p == 39);
  CHECK(mid.q == 6);
  CHECK(mid.k == 222);

  // Exact powers must not round down through floating error.
  const auto exact = bernstein_schedule(100000, 0.4, 0.2);
  CHECK(exact.p == 100);
  CHECK(exact.q == 10);

  CHECK_THROWS_AS((void)bernstein_schedule(10000, 0.2, 0.4), Error);
  CHECK_THROWS_AS((void)bernstein_schedule(10000, 0.2, 0.2), Error);
  CHECK_THROWS_AS((void)bernstein_schedule(10000, 0.6, 0.2), Error);
  CHECK_THROWS_AS((void)bernstein_schedule(3, 0.4, 0.2), Error); // k < 2
}

TEST_CASE("schedule bookkeeping: k(p+q) <= n < (k+1)(p+q)") {
  for (std::size_t n : {1000ul, 10000ul, 100000ul, 1000000ul}) {
    const auto s = bernstein_schedule(n, 0.4, 0.2);
    CHECK(s.k * (s.p + s.q) <= n);
    CHECK((s.k + 1) * (s.p + s.q) > n);
  }
  // Covered fraction tends to 1. Floor jitter can nick a few ppm between
  // consecutive decades, so the monotonicity check carries a 1e-4 slack.
  double prev = 0.0;
  for (std::size_t n : {1000ul, 10000ul, 100000ul, 1000000ul}) {
    const auto s = bernstein_schedule(n, 0.4, 0.2);
    CHECK(s.covered_fraction() >= prev - 1e-4);
    prev = s.covered_fraction();
  }
  CHECK(prev > 0.999);
  // (p+q)/p tends to 1.
  CHECK(bernstein_schedule(1000000, 0.4, 0.2).long_short_ratio() <
        bernstein_schedule(1000, 0.4, 0.2).long_short_ratio());
}

TEST_CASE("block variables are unimodular and shift-covariant") {
  const auto sys = make_doubling_map();
  const auto f = make_cos_observable();
  const auto sched = bernstein_schedule(1000, 0.4, 0.2);
  const auto ctx = make_block_context(sys, f, sched, StreamFactory{5, 1});

  RngStream rng(5, 9, 0);
  for (int i = 0; i < 20; ++i) {
    const UnitIntervalPoint x{rng.uniform01()};
    const auto w0 = block_variable(sys, f, 0.0, ctx, x, 1);
    CHECK(w0.real() == 1.0);
    CHECK(w0.imag() == 0.0);

    const auto w = block_variable(sys, f, 1.7, ctx, x, 3);
    CHECK(std::abs(std::abs(w) - 1.0) <= 1e-15);

    // w_r = w_1 o F^{(p+q)(r-1)}, exactly (same arithmetic path).
    UnitIntervalPoint y = x;
    for (std::size_t j = 0; j < (sched.p + sched.q) * 2; ++j) y = sys.step(y);
    CHECK(block_variable(sys, f, 1.7, ctx, y, 1) == w);
  }
  CHECK_THROWS_AS((void)block_variable(sys, f, 1.0, ctx, UnitIntervalPoint{0.3}, 0), Error);
}

TEST_CASE("degenerate observables are rejected by the block context") {
  const auto sys = make_doubling_map();
  const auto constant = Observable<UnitIntervalPoint>{
      "c", [](const UnitIntervalPoint&) { return std::complex<double>(3.0, 0.0); }, true, 3.0,
      std::nullopt};
  const auto sched = bernstein_schedule(1000, 0.4, 0.2);
  CHECK_THROWS_AS((void)make_block_context(sys, constant, sched, StreamFactory{6, 1}), Error);
}

TEST_CASE("block gap at t = 0 vanishes identically and is bounded by 2") {
  const auto sys = make_doubling_map();
  const auto f = make_cos_observable();
  const auto sched = bernstein_schedule(1000, 0.4, 0.2);
  const auto ctx = make_block_context(sys, f, sched, StreamFactory{8, 1});
  const auto zero = block_gap(sys, f, 0.0, ctx, 2000, StreamFactory{8, 2});
  CHECK(zero.gap == 0.0);
  const auto g = block_gap(sys, f, 1.0, ctx, 20000, StreamFactory{8, 3});
  CHECK(g.gap <= 2.0);
  CHECK(g.gap <= 0.1); // small n analogue of the decay expectation
  CHECK(g.max_abs_mean_w <= 1.0 + 3.0 * g.standard_error);
}

TEST_CASE("telescoping gaps vanish identically at t = 0") {
  const auto sys = make_doubling_map();
  const auto f = make_sawtooth_observable();
  const auto sched = bernstein_schedule(300, 0.4, 0.2);
  const auto ctx = make_block_context(sys, f, sched, StreamFactory{15, 1});
  const auto tg = correlations::telescoping_gap(sys, f, 0.0, ctx, 2000, StreamFactory{15, 2});
  CHECK(tg.total == 0.0);
  for (double g : tg.gaps) CHECK(g == 0.0);
}

TEST_CASE("block gap is even in t up to Monte Carlo error") {
  const auto sys = make_doubling_map();
  const auto f = make_sawtooth_observable();
  const auto sched = bernstein_schedule(500, 0.4, 0.2);
  const auto ctx = make_block_context(sys, f, sched, StreamFactory{9, 1});
  const auto plus = block_gap(sys, f, 1.5, ctx, 20000, StreamFactory{9, 2});
  const auto minus = block_gap(sys, f, -1.5, ctx, 20000, StreamFactory{9, 2});
  CHECK(std::abs(plus.gap - minus.gap) <=
        4.0 * (plus.standard_error + minus.standard_error) + 1e-12);
}

TEST_CASE("green-kubo variance from synthetic series") {
  correlations::CorrelationSeries dyadic;
  for (std::size_t n = 0; n <= 30; ++n) {
    dyadic.lags.push_back(n);
    dyadic.estimates.push_back({std::pow(0.5, static_cast<double>(n)) / 12.0, 0.0});
    dyadic.standard_errors.push_back(0.0);
  }
  const auto gk = green_kubo_variance(dyadic, 30);
  CHECK(gk.sigma2 == doctest::Approx(0.25).epsilon(1e-7));
  CHECK_FALSE(gk.tail_flag);
  CHECK(gk.moment_partial_sum == doctest::Approx(2.0 / 12.0).epsilon(1e-6));

  correlations::CorrelationSeries white = dyadic;
  for (std::size_t n = 0; n <= 30; ++n) white.estimates[n] = {n == 0 ? 0.5 : 0.0, 0.0};
  CHECK(green_kubo_variance(white, 30).sigma2 == doctest::Approx(0.5));

  correlations::CorrelationSeries zero = dyadic;
  for (auto& e : zero.estimates) e = {0.0, 0.0};
  CHECK(green_kubo_variance(zero, 30).sigma2 == 0.0);

  // A series that is strongly negative beyond its error bars is inconsistent.
  correlations::CorrelationSeries bad = dyadic;
  bad.estimates[0] = {-1.0, 0.0};
  for (auto& s : bad.standard_errors) s = 1e-3;
  CHECK_THROWS_AS((void)green_kubo_variance(bad, 30), Error);
}

TEST_CASE("variance ratio: doubling sawtooth approaches 1/4") {
  const auto sys = make_doubling_map();
  const auto f = make_sawtooth_observable();
  const auto vr = variance_ratio(sys, f, 1000, 10000, StreamFactory{11, 1});
  CHECK(std::abs(vr.ratio - 0.25) < 0.05 * 0.25);

  const auto constant = Observable<UnitIntervalPoint>{
      "c", [](const UnitIntervalPoint&) { return std::complex<double>(1.0, 0.0); }, true, 1.0,
      std::nullopt};
  const auto degen = variance_ratio(sys, constant, 100, 1000, StreamFactory{11, 2});
  CHECK(degen.ratio == 0.0);
  CHECK(degen.degenerate);
  CHECK_FALSE(vr.degenerate);
}

TEST_CASE("variance ratio: cat map cos gives sigma^2 = 1/2") {
  const auto sys = make_cat_map();
  const auto f = make_cos_observable_torus();
  const auto vr = variance_ratio(sys, f, 1000, 10000, StreamFactory{12, 1});
  CHECK(std::abs(vr.ratio - 0.5) < 0.05 * 0.5);
}

TEST_CASE("normalization modes agree on the doubling sawtooth") {
  // sqrt(Var S_n) vs sqrt(n sigma^2_GK): the two KS statistics must sit
  // within 0.01 of each other at n = 2000, N = 5000.
  const auto sys = make_doubling_map();
  const auto f = make_sawtooth_observable();
  CltOptions opt;
  opt.gk_lags = 20;
  opt.gk_budget = 100000;
  const auto rep =
      clt_test(sys, f, 2000, 5000, Normalization::green_kubo, StreamFactory{14, 1}, {}, opt);
  CHECK(std::abs(rep.ks_empirical - rep.ks_green_kubo) < 0.01);
  CHECK(rep.ks_green_kubo < 0.03);
}

TEST_CASE("clt_test: quick desk-scale run on the doubling map") {
  const auto sys = make_doubling_map();
  const auto f = make_cos_observable();
  CltOptions opt;
  opt.gk_lags = 12;
  opt.gk_budget = 30000;
  const auto rep = clt_test(sys, f, 500, 2000, Normalization::empirical, StreamFactory{13, 1}, {},
                            opt);
  CHECK(rep.ks_statistic < 0.05);
  CHECK(rep.ks_statistic >= 0.0);
  CHECK(rep.ks_statistic <= 1.0);
  CHECK(rep.sigma2_green_kubo == doctest::Approx(0.5).epsilon(0.1));
  CHECK(rep.variance_ratio > 0.0);
  CHECK(std::abs(rep.ks_empirical - rep.ks_green_kubo) < 0.05);
  CHECK(rep.normalized_sums.size() == 2000);

  const auto zero = Observable<UnitIntervalPoint>{
      "zero", [](const UnitIntervalPoint&) { return std::complex<double>(0.0, 0.0); }, true, 0.0,
      std::nullopt};
  CHECK_THROWS_AS(
      (void)clt_test(sys, zero, 100, 2000, Normalization::empirical, StreamFactory{13, 2}, {}, opt),
      Error);
}
