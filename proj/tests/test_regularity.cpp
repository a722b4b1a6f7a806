#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cltlab/regularity.hpp"
#include "cltlab/rng.hpp"

using namespace cltlab;
using namespace cltlab::regularity;

namespace {

Budget random_budget(RngStream& rng, HolderClass tag) {
  Budget b;
  b.K = rng.uniform(0.0, 5.0);
  b.theta = rng.uniform(0.05, 0.95);
  b.sup_norm = rng.uniform(0.1, 4.0);
  b.tag = tag;
  return b;
}

constexpr double rel_tol = 1e-12;

bool close_rel(double a, double b) {
  return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace

TEST_CASE("product budget formula") {
  const Budget a{2.0, 0.5, 1.0, HolderClass::both};
  const Budget b{3.0, 0.25, 2.0, HolderClass::both};
  const auto ab = product_budget(a, b);
  CHECK(ab.K == doctest::Approx(7.0));
  CHECK(ab.theta == doctest::Approx(0.5));
  CHECK(ab.sup_norm == doctest::Approx(2.0));

  // A constant factor scales K by its sup norm and keeps the other theta.
  const Budget c{0.0, 0.3, 2.5, HolderClass::both};
  const auto ac = product_budget(a, c);
  CHECK(ac.K == doctest::Approx(2.0 * 2.5));
  CHECK(ac.theta == doctest::Approx(0.5));

  // Symmetry on random draws.
  RngStream rng(1, 0, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto f = random_budget(rng, HolderClass::h_minus_star);
    const auto g = random_budget(rng, HolderClass::h_minus_star);
    const auto fg = product_budget(f, g);
    const auto gf = product_budget(g, f);
    CHECK(close_rel(fg.K, gf.K));
    CHECK(fg.theta == gf.theta);
    CHECK(close_rel(fg.sup_norm, gf.sup_norm));
    // Direct substitution oracle.
    CHECK(close_rel(fg.K, f.sup_norm * g.K + f.K * g.sup_norm));
  }
}

TEST_CASE("product budget rejects incompatible classes") {
  const Budget plus{1.0, 0.5, 1.0, HolderClass::h_plus_star};
  const Budget minus{1.0, 0.5, 1.0, HolderClass::h_minus_star};
  CHECK_THROWS_AS((void)product_budget(plus, minus), Error);
}

TEST_CASE("pullback budget") {
  const Budget f{2.0, 0.5, 1.5, HolderClass::h_minus_star};
  CHECK(pullback_budget(f, 1, StepDirection::forward).K == doctest::Approx(1.0));
  const auto same = pullback_budget(f, 0, StepDirection::forward);
  CHECK(same.K == f.K);
  CHECK(same.theta == f.theta);
  CHECK(same.sup_norm == f.sup_norm);

  auto thrice = pullback_budget(
      pullback_budget(pullback_budget(f, 1, StepDirection::forward), 1, StepDirection::forward), 1,
      StepDirection::forward);
  CHECK(close_rel(thrice.K, pullback_budget(f, 3, StepDirection::forward).K));

  CHECK_THROWS_AS((void)pullback_budget(f, 1, StepDirection::backward), Error);
  const Budget g{2.0, 0.5, 1.5, HolderClass::h_plus_star};
  CHECK_NOTHROW((void)pullback_budget(g, 2, StepDirection::backward));
  CHECK_THROWS_AS((void)pullback_budget(g, 2, StepDirection::forward), Error);
}

TEST_CASE("multitime budget formula") {
  const Budget w{1.0, 0.5, 2.0, HolderClass::h_minus_star};
  const auto two = multitime_budget({w, w}, {0, 1});
  CHECK(two.K == doctest::Approx(4.0)); // 1 * (4/2) * 1/(1-0.5)
  CHECK(two.theta == doctest::Approx(0.5));
  CHECK(two.sup_norm == doctest::Approx(4.0));

  const Budget f{3.0, 0.25, 1.0, HolderClass::h_minus_star};
  const auto one = multitime_budget({f}, {0});
  CHECK(one.K == doctest::Approx(f.K / (1.0 - f.theta)));
  CHECK(one.K > f.K); // strictly weaker constant

  // Shifting the offsets by +1 multiplies K by theta.
  const auto shifted = multitime_budget({w, w}, {1, 2});
  CHECK(close_rel(shifted.K, two.K * two.theta));

  CHECK_THROWS_AS((void)multitime_budget({}, {}), Error);
  CHECK_THROWS_AS((void)multitime_budget({w, w}, {1, 1}), Error);
}

TEST_CASE("billiard pair bound") {
  const BilliardBoundConstants c{0.9, 1.0, 1.0};
  const Budget f{1.0, 0.5, 1.0, HolderClass::h_plus_star};
  const Budget g{1.0, 0.5, 1.0, HolderClass::h_minus_star};
  const auto pb0 = billiard_pair_bound(f, g, c, 0);
  CHECK(pb0.rate == doctest::Approx(std::pow(0.9, 0.25)));
  CHECK(pb0.bound == doctest::Approx(3.0));

  const auto pb1 = billiard_pair_bound(f, g, c, 1);
  CHECK(close_rel(pb1.bound, pb0.bound * pb0.rate));

  const BilliardBoundConstants big_kappa{0.9, 100.0, 1.0};
  CHECK(billiard_pair_bound(f, g, big_kappa, 0).rate ==
        doctest::Approx(std::exp(-1.0 / 400.0)));

  CHECK_THROWS_AS((void)billiard_pair_bound(g, g, c, 0), Error); // f must be H+*
}

TEST_CASE("billiard multi bound") {
  RngStream rng(2, 0, 0);
  const BilliardBoundConstants c{0.9, 1.0, 1.3};
  for (int i = 0; i < 1000; ++i) {
    auto f = random_budget(rng, HolderClass::h_plus_star);
    auto g = random_budget(rng, HolderClass::h_minus_star);
    const std::size_t n = static_cast<std::size_t>(rng.next_below(30));
    // r = k = 0 equals the pair bound with K replaced by K/(1-theta).
    Budget fw = f;
    fw.K = f.K / (1.0 - f.theta);
    Budget gw = g;
    gw.K = g.K / (1.0 - g.theta);
    CHECK(close_rel(billiard_multi_bound(f, 0, g, 0, c, n),
                    billiard_pair_bound(fw, gw, c, n).bound));
    // Monotone in n by exactly one rate factor.
    const double rate = billiard_pair_bound(f, g, c, 0).rate;
    CHECK(close_rel(billiard_multi_bound(f, 2, g, 3, c, n + 1),
                    billiard_multi_bound(f, 2, g, 3, c, n) * rate));
  }

  // Unimodular factors: bound independent of r and k.
  const Budget fu{0.7, 0.4, 1.0, HolderClass::h_plus_star};
  const Budget gu{0.9, 0.6, 1.0, HolderClass::h_minus_star};
  const double b00 = billiard_multi_bound(fu, 0, gu, 0, c, 5);
  CHECK(close_rel(b00, billiard_multi_bound(fu, 7, gu, 11, c, 5)));

  // Doubling r with sup norm 2 doubles per factor.
  Budget f2 = fu;
  f2.sup_norm = 2.0;
  for (std::size_t r = 0; r < 4; ++r)
    CHECK(close_rel(billiard_multi_bound(f2, r + 1, gu, 0, c, 2),
                    2.0 * billiard_multi_bound(f2, r, gu, 0, c, 2)));
}

TEST_CASE("anosov product budget") {
  AnosovBudget g;
  g.sup_norm = 1.0;
  g.s_seminorm = 2.0;
  g.nu = 0.5;
  g.beta = 1.0;
  g.alpha = 1.0;
  const auto prod = anosov_product_budget({g, g}, ManifoldSide::stable, 1.0);
  CHECK(prod.s_norm() == doctest::Approx(6.0)); // (1/0.5)*1*(1+2)

  AnosovBudget one;
  one.sup_norm = 1.0;
  one.s_seminorm = 0.0;
  one.nu = 0.5;
  one.beta = 1.0;
  CHECK(anosov_product_budget({one}, ManifoldSide::stable, 1.0).s_norm() ==
        doctest::Approx(1.0 / (1.0 - 0.5)));

  // Monotone in every seminorm input.
  RngStream rng(3, 0, 0);
  for (int i = 0; i < 200; ++i) {
    AnosovBudget a;
    a.sup_norm = rng.uniform(0.5, 2.0);
    a.s_seminorm = rng.uniform(0.0, 3.0);
    a.nu = 0.5;
    a.beta = 0.75;
    AnosovBudget b = a;
    b.s_seminorm = a.s_seminorm + rng.uniform(0.0, 1.0);
    CHECK(anosov_product_budget({a, a}, ManifoldSide::stable, 1.0).s_norm() <=
          anosov_product_budget({b, b}, ManifoldSide::stable, 1.0).s_norm() + rel_tol);
  }
  CHECK_THROWS_AS((void)anosov_product_budget({}, ManifoldSide::stable, 1.0), Error);
}

TEST_CASE("anosov pair bound") {
  AnosovBudget f;
  f.l1_norm = 1.5;
  f.u_seminorm = 0.5; // ||f||_u = 2
  AnosovBudget g;
  g.sup_norm = 1.0;
  g.s_seminorm = 2.0; // ||g||_s = 3
  const AnosovBoundConstants c{0.5, 1.0, 1.0};
  CHECK(anosov_pair_bound(f, g, c, 2) == doctest::Approx(1.5));
  CHECK(anosov_pair_bound(f, g, c, 0) == doctest::Approx(6.0));
  const AnosovBudget zero{};
  CHECK(anosov_pair_bound(zero, zero, c, 3) == 0.0);
}

TEST_CASE("composition coherence: the closed form dominates the stepwise calculus") {
  // multitime_budget is the induction closure of the product rule plus the
  // one-step pullback; its K must dominate the stepwise construction for
  // strictly increasing offsets.
  RngStream rng(4, 0, 0);
  for (int i = 0; i < 1000; ++i) {
    const int m = 2 + static_cast<int>(rng.next_below(4));
    std::vector<Budget> budgets;
    std::vector<std::size_t> offsets;
    std::size_t off = rng.next_below(3);
    for (int t = 0; t < m; ++t) {
      budgets.push_back(random_budget(rng, HolderClass::h_minus_star));
      offsets.push_back(off);
      off += 1 + rng.next_below(3);
    }
    const auto direct = multitime_budget(budgets, offsets);

    Budget stepwise = pullback_budget(budgets[0], offsets[0], StepDirection::forward);
    for (int t = 1; t < m; ++t)
      stepwise = product_budget(
          stepwise, pullback_budget(budgets[t], offsets[t], StepDirection::forward));

    CHECK(direct.K >= stepwise.K - rel_tol * std::max(1.0, direct.K));
    CHECK(direct.theta >= stepwise.theta);
    CHECK(close_rel(direct.sup_norm, stepwise.sup_norm));
  }
}

TEST_CASE("budget validation rejects out-of-range fields") {
  CHECK_THROWS_AS((void)validate(Budget{-1.0, 0.5, 1.0, HolderClass::both}), Error);
  CHECK_THROWS_AS((void)validate(Budget{1.0, 1.0, 1.0, HolderClass::both}), Error);
  CHECK_THROWS_AS((void)validate(Budget{1.0, 0.5, -0.1, HolderClass::both}), Error);
}
