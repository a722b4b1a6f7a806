#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cltlab/error.hpp"
#include "cltlab/systems.hpp"

namespace cltlab::transfer {

// Complex-valued function sampled on the uniform grid {j/G : j = 0..G-1}.
// Queries between nodes use linear interpolation; the last cell extrapolates
// linearly so affine functions are represented exactly.
struct GridFunction {
  std::size_t size = 0;
  std::vector<std::complex<double>> values;
  std::string descriptor;

  static GridFunction zeros(std::size_t g, std::string descriptor = "");
  static GridFunction constant(std::size_t g, std::complex<double> c, std::string descriptor = "");
  static GridFunction from_function(std::size_t g,
                                    const std::function<std::complex<double>(double)>& f,
                                    std::string descriptor = "");

  double node(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(size); }
  std::complex<double> interpolate(double x) const;

  // Rectangle-rule integral (1/G) sum values.
  std::complex<double> integral() const;
  // (1/G) sum |values|.
  double l1_norm() const;
  double sup_norm() const;
};

// Grid-partition total variation: sum_j |g((j+1)/G) - g(j/G)|. A lower bound
// of the true variation; inequality checks must add the per-operation grid
// allowance.
double total_variation(const GridFunction& g);

// (Lg)(x) = sum over inverse branches h of g(h(x)) / |F'(h(x))|.
GridFunction transfer_apply(const IntervalMap& sys, const GridFunction& g);

// Max pointwise deviation of L(f o F . g) from f . Lg on the grid.
double verify_transfer_identity(const IntervalMap& sys, const GridFunction& f,
                                const GridFunction& g);

struct LasotaYorkeResidual {
  double residual = 0.0;       // TV(Lg) - (2/lambda TV(g) + A ||g||_1)
  double grid_allowance = 0.0; // 8 TV(g) / G
  double tv_lg = 0.0;
  double tv_g = 0.0;
};

// Requires lambda = inf|F'| > 2 (pass an iterate power otherwise).
LasotaYorkeResidual lasota_yorke_residual(const IntervalMap& sys, const GridFunction& g,
                                          double a_const);

// One entry of the Ulam transition matrix: mass fraction of bin `from`
// carried into bin `to` by one step of the map.
struct UlamTriplet {
  std::size_t from = 0;
  std::size_t to = 0;
  double mass = 0.0;
};

std::vector<UlamTriplet> ulam_matrix(const IntervalMap& sys, std::size_t bins);

// Ulam discretization: bin-to-bin transition masses through the inverse
// branches; returns the invariant density (leading left fixed vector of the
// transition matrix) normalized to integral 1, sampled on the bin grid.
GridFunction ulam_density(const IntervalMap& sys, std::size_t bins);

// Builds an inverse-CDF sampler from the Ulam density and attaches it to the
// map, making sample_invariant available for non-Lebesgue systems.
void attach_ulam_sampler(IntervalMap& sys, std::size_t bins);

struct VariationStep {
  std::size_t p = 0;      // recursion depth
  double measured_tv = 0.0;
  double bound = 0.0;     // (2/lambda)^p TV(phi g) + (A + ||phi||_inf TV(g)) / (1 - 2/lambda)
};

// Iterates R_p = L(R_{p-1}) . g with R_0 = phi g on the grid, recording the
// measured variation of R_p against the analytic Lasota-Yorke envelope.
// R_{p-1} equals L^{p-1}(phi w_1) for the Bernstein block variable w_1 built
// from the same unimodular factor g.
std::vector<VariationStep> variation_recursion(const IntervalMap& sys, const GridFunction& g_factor,
                                               const GridFunction& phi, std::size_t steps,
                                               double a_const);

// Measured TV(R_p) along the same recursion without the Lasota-Yorke
// envelope; usable at any expansion (the doubling map has lambda = 2, where
// the envelope above degenerates but the direct TV(Lg) <= TV(g)/2 contraction
// still applies). Entry p-1 is TV(L^{p-1}(phi w_1)).
std::vector<double> block_variation_sequence(const IntervalMap& sys, const GridFunction& g_factor,
                                             const GridFunction& phi, std::size_t steps);

// Constants of the piecewise-expanding pair bound. Lambda > 1 is the decay
// base: the bound decays as Lambda^{-n}.
struct PwConstants {
  double K = 1.0;
  double Lambda = 2.0;  // > 1
  double b = 1.0;
  double A = 1.0;       // Lasota-Yorke additive constant
  double lambda = 4.0;  // inf |F'|, > 2
};

// K Lambda^{-n} ||f||_1 (||g||_1 + b TV(g)).
double pw_pair_bound(double f_l1, double g_l1, double g_tv, const PwConstants& c, std::size_t n);

// Doubling-map block bound: TV(L^{p-1} w_1) <= 4 TV(g) for unimodular g,
// independent of p.
double doubling_block_tv_bound(double g_tv, std::size_t p);

// Grid-quadrature means of Bernstein block products for an interval map:
//   prefix_mean[r] = <w_1 ... w_r>,  r = 1..r_max,
// computed with the transfer-operator recursion (no Monte Carlo), where
// w_1 = g . g o F ... g o F^{p-1} and blocks are separated by q steps.
std::vector<std::complex<double>> block_product_means(const IntervalMap& sys,
                                                      const GridFunction& g_factor,
                                                      const GridFunction& phi, std::size_t p,
                                                      std::size_t q, std::size_t r_max);

struct GapDecayPoint {
  std::size_t q = 0;
  double gap = 0.0;  // |<w_1 w_2> - <w_1><w_2>|
};

struct GapDecayFit {
  std::vector<GapDecayPoint> points;
  double rate = 0.0;        // fitted rho of gap ~ C rho^q
  double prefactor = 0.0;
  double log_residual = 0.0;
  double fitted_K = 0.0;    // Lambda-convention prefactor covering all points
};

// Multiple-correlation gap versus the gap length q at fixed block length p,
// with a log-linear fit of the decay. Gaps are computed by grid quadrature.
GapDecayFit gap_decay_in_q(const IntervalMap& sys, const GridFunction& g_factor,
                           const GridFunction& phi, std::size_t p,
                           const std::vector<std::size_t>& qs);

} // namespace cltlab::transfer
