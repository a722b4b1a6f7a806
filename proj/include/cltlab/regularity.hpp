#pragma once

#include <cstddef>
#include <vector>

#include "cltlab/error.hpp"

namespace cltlab::regularity {

// Calculus on observable regularity constants. Every operation returns a
// sound over-approximation of the constants of the transformed observable;
// none claims tightness.

enum class HolderClass { h_plus_star, h_minus_star, both };

enum class StepDirection { forward, backward };

// (K, theta, sup norm) of an observable that satisfies
// |f(x)-f(y)| <= K theta^{s(x,y)} on homogeneous (un)stable manifolds.
struct Budget {
  double K = 0.0;
  double theta = 0.5;
  double sup_norm = 0.0;
  HolderClass tag = HolderClass::both;
};

Budget validate(const Budget& b);

// Constants of the billiard pair-correlation bound; supplied externally
// (their construction lives in the cited coupling machinery, out of scope).
struct BilliardBoundConstants {
  double theta_upsilon = 0.9;
  double kappa = 1.0;
  double c0 = 1.0;
};

// Stable/unstable seminorm budget for Anosov observables.
struct AnosovBudget {
  double s_seminorm = 0.0;
  double u_seminorm = 0.0;
  double sup_norm = 0.0;
  double l1_norm = 0.0;
  double alpha = 0.5;   // unstable Holder exponent
  double beta = 0.5;    // stable Holder exponent
  double nu = 0.5;      // contraction rate along (un)stable manifolds
  double delta = 0.1;   // seminorm distance cutoff

  double s_norm() const { return sup_norm + s_seminorm; }
  double u_norm() const { return l1_norm + u_seminorm; }
};

struct AnosovBoundConstants {
  double theta = 0.5;
  double c0 = 1.0;
  double volume_of_one = 1.0;  // ||1||_1, total Riemannian volume
};

enum class ManifoldSide { stable, unstable };

// Product of two budgets: K_fg = M_f K_g + K_f M_g, theta_fg = max,
// M_fg = M_f M_g.
Budget product_budget(const Budget& a, const Budget& b);

// Composition with the dynamics: K <- K theta^steps. H-minus-star composes
// with F (forward), H-plus-star with F^{-1} (backward).
Budget pullback_budget(const Budget& b, std::size_t steps, StepDirection direction);

// Budget of f_0 o F^{i_0} ... f_m o F^{i_m} with all factors in one class:
// theta = max_i theta_i, M = prod M_i,
// K = (max_i K_i) (prod M_i / min M_i) theta^{i_0} / (1 - theta).
Budget multitime_budget(const std::vector<Budget>& budgets,
                        const std::vector<std::size_t>& offsets);

struct PairBound {
  double bound = 0.0;
  double rate = 0.0;
};

// rate = (max{theta_upsilon, theta_f, theta_g, e^{-1/kappa}})^{1/4};
// bound = C0 (K_f M_g + M_f K_g + M_f M_g) rate^n. Requires f in H+*, g in H-*.
PairBound billiard_pair_bound(const Budget& f, const Budget& g,
                              const BilliardBoundConstants& c, std::size_t n);

// Multiple-correlation bound with identical per-factor parameters:
// C0 M_f^r M_g^k (K_f/(1-theta_f) M_g + M_f K_g/(1-theta_g) + M_f M_g) rate^n.
double billiard_multi_bound(const Budget& f, std::size_t r, const Budget& g, std::size_t k,
                            const BilliardBoundConstants& c, std::size_t n);

// Norm budget of a product of Anosov observables.
// Stable side:   ||g~||_s <= 1/(1-nu^beta) (prod M_i)(1 + max|g_l|_s / min M_i).
// Unstable side: ||f~||_u <= max(1,||1||_1)/(1-nu^alpha) (prod M_i)(1 + max|f_l|_u / min M_i).
AnosovBudget anosov_product_budget(const std::vector<AnosovBudget>& factors, ManifoldSide side,
                                   double volume_of_one = 1.0);

// C0 ||f||_u ||g||_s theta^n.
double anosov_pair_bound(const AnosovBudget& f, const AnosovBudget& g,
                         const AnosovBoundConstants& c, std::size_t n);

} // namespace cltlab::regularity
