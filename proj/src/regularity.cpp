#include "cltlab/regularity.hpp"

#include <algorithm>
#include <cmath>

namespace cltlab::regularity {

namespace {

bool member_of(HolderClass tag, HolderClass wanted) {
  return tag == wanted || tag == HolderClass::both;
}

HolderClass merge_tags(HolderClass a, HolderClass b) {
  if (a == b) return a;
  if (a == HolderClass::both) return b;
  if (b == HolderClass::both) return a;
  fail(ErrorKind::class_mismatch, "regularity: incompatible Holder classes");
}

} // namespace

Budget validate(const Budget& b) {
  if (b.K < 0.0) fail(ErrorKind::domain, "budget: K must be >= 0");
  if (!(b.theta > 0.0 && b.theta < 1.0)) fail(ErrorKind::domain, "budget: theta must lie in (0,1)");
  if (b.sup_norm < 0.0) fail(ErrorKind::domain, "budget: sup norm must be >= 0");
  return b;
}

Budget product_budget(const Budget& a, const Budget& b) {
  validate(a);
  validate(b);
  Budget out;
  out.tag = merge_tags(a.tag, b.tag);
  out.K = a.sup_norm * b.K + a.K * b.sup_norm;
  out.theta = std::max(a.theta, b.theta);
  out.sup_norm = a.sup_norm * b.sup_norm;
  return out;
}

Budget pullback_budget(const Budget& b, std::size_t steps, StepDirection direction) {
  validate(b);
  const bool ok = direction == StepDirection::forward ? member_of(b.tag, HolderClass::h_minus_star)
                                                      : member_of(b.tag, HolderClass::h_plus_star);
  if (!ok)
    fail(ErrorKind::class_mismatch,
         "pullback_budget: H-minus-star composes with F, H-plus-star with F^{-1}");
  Budget out = b;
  out.K = b.K * std::pow(b.theta, static_cast<double>(steps));
  return out;
}

Budget multitime_budget(const std::vector<Budget>& budgets,
                        const std::vector<std::size_t>& offsets) {
  if (budgets.empty()) fail(ErrorKind::domain, "multitime_budget: empty factor list");
  if (budgets.size() != offsets.size())
    fail(ErrorKind::domain, "multitime_budget: factor/offset count mismatch");
  for (std::size_t i = 1; i < offsets.size(); ++i)
    if (!(offsets[i] > offsets[i - 1]))
      fail(ErrorKind::domain, "multitime_budget: offsets must be strictly increasing");

  HolderClass tag = budgets.front().tag;
  double k_max = 0.0, theta = 0.0, m_prod = 1.0;
  double m_min = std::numeric_limits<double>::infinity();
  for (const auto& b : budgets) {
    validate(b);
    tag = merge_tags(tag, b.tag);
    k_max = std::max(k_max, b.K);
    theta = std::max(theta, b.theta);
    m_prod *= b.sup_norm;
    m_min = std::min(m_min, b.sup_norm);
  }
  if (m_min <= 0.0)
    fail(ErrorKind::domain, "multitime_budget: a factor with zero sup norm has no usable ratio");
  Budget out;
  out.tag = tag;
  out.theta = theta;
  out.sup_norm = m_prod;
  out.K = k_max * (m_prod / m_min) * std::pow(theta, static_cast<double>(offsets.front())) /
          (1.0 - theta);
  return out;
}

PairBound billiard_pair_bound(const Budget& f, const Budget& g,
                              const BilliardBoundConstants& c, std::size_t n) {
  validate(f);
  validate(g);
  if (!member_of(f.tag, HolderClass::h_plus_star))
    fail(ErrorKind::class_mismatch, "billiard_pair_bound: f must be H-plus-star");
  if (!member_of(g.tag, HolderClass::h_minus_star))
    fail(ErrorKind::class_mismatch, "billiard_pair_bound: g must be H-minus-star");
  const double base =
      std::max(std::max(c.theta_upsilon, f.theta), std::max(g.theta, std::exp(-1.0 / c.kappa)));
  PairBound out;
  out.rate = std::pow(base, 0.25);
  const double prefactor =
      c.c0 * (f.K * g.sup_norm + f.sup_norm * g.K + f.sup_norm * g.sup_norm);
  out.bound = prefactor * std::pow(out.rate, static_cast<double>(n));
  return out;
}

double billiard_multi_bound(const Budget& f, std::size_t r, const Budget& g, std::size_t k,
                            const BilliardBoundConstants& c, std::size_t n) {
  validate(f);
  validate(g);
  if (!member_of(f.tag, HolderClass::h_plus_star))
    fail(ErrorKind::class_mismatch, "billiard_multi_bound: f factors must be H-plus-star");
  if (!member_of(g.tag, HolderClass::h_minus_star))
    fail(ErrorKind::class_mismatch, "billiard_multi_bound: g factors must be H-minus-star");
  const double rate = billiard_pair_bound(f, g, c, 0).rate;
  const double prefactor = c.c0 * std::pow(f.sup_norm, static_cast<double>(r)) *
                           std::pow(g.sup_norm, static_cast<double>(k)) *
                           (f.K / (1.0 - f.theta) * g.sup_norm +
                            f.sup_norm * g.K / (1.0 - g.theta) + f.sup_norm * g.sup_norm);
  return prefactor * std::pow(rate, static_cast<double>(n));
}

AnosovBudget anosov_product_budget(const std::vector<AnosovBudget>& factors, ManifoldSide side,
                                   double volume_of_one) {
  if (factors.empty()) fail(ErrorKind::domain, "anosov_product_budget: empty factor list");
  const AnosovBudget& first = factors.front();
  double m_prod = 1.0;
  double m_min = std::numeric_limits<double>::infinity();
  double semi_max = 0.0;
  for (const auto& f : factors) {
    if (f.nu != first.nu || f.alpha != first.alpha || f.beta != first.beta)
      fail(ErrorKind::class_mismatch, "anosov_product_budget: factors must share nu, alpha, beta");
    m_prod *= f.sup_norm;
    m_min = std::min(m_min, f.sup_norm);
    semi_max = std::max(semi_max, side == ManifoldSide::stable ? f.s_seminorm : f.u_seminorm);
  }
  if (m_min <= 0.0)
    fail(ErrorKind::domain, "anosov_product_budget: zero sup norm factor");

  AnosovBudget out = first;
  out.sup_norm = m_prod;
  out.l1_norm = m_prod * volume_of_one;  // ||f~||_1 <= ||f~||_inf ||1||_1
  if (side == ManifoldSide::stable) {
    const double norm_bound =
        1.0 / (1.0 - std::pow(first.nu, first.beta)) * m_prod * (1.0 + semi_max / m_min);
    out.s_seminorm = norm_bound - out.sup_norm;
    out.u_seminorm = 0.0;
  } else {
    const double norm_bound = std::max(1.0, volume_of_one) /
                              (1.0 - std::pow(first.nu, first.alpha)) * m_prod *
                              (1.0 + semi_max / m_min);
    out.u_seminorm = norm_bound - out.l1_norm;
    out.s_seminorm = 0.0;
  }
  return out;
}

double anosov_pair_bound(const AnosovBudget& f, const AnosovBudget& g,
                         const AnosovBoundConstants& c, std::size_t n) {
  return c.c0 * f.u_norm() * g.s_norm() * std::pow(c.theta, static_cast<double>(n));
}

} // namespace cltlab::regularity
