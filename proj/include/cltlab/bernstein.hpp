#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "cltlab/error.hpp"
#include "cltlab/observable.hpp"
#include "cltlab/rng.hpp"
#include "cltlab/systems.hpp"

namespace cltlab::clt {

// Block decomposition of the time interval [0, n-1]: long intervals of
// length p = [n^a] separated by short gaps of length q = [n^b], k = [n/(p+q)]
// pairs, 0 < b < a < 1/2.
struct BernsteinSchedule {
  std::size_t n = 0;
  double a = 0.0;
  double b = 0.0;
  std::size_t p = 0;
  std::size_t q = 0;
  std::size_t k = 0;

  double covered_fraction() const {
    return static_cast<double>(k * (p + q)) / static_cast<double>(n);
  }
  double long_short_ratio() const {
    return static_cast<double>(p + q) / static_cast<double>(p);
  }
  // Orbit length needed to evaluate all k block variables from one start.
  std::size_t span() const { return (p + q) * (k - 1) + p; }
};

// Integer part with a snap tolerance so mathematically exact powers
// (e.g. (10^5)^0.4 = 100) do not round down through floating error.
inline std::size_t integer_part_pow(std::size_t n, double exponent) {
  const double y = std::pow(static_cast<double>(n), exponent);
  double r = std::floor(y);
  if (r + 1.0 - y < 1e-9 * std::max(1.0, y)) r += 1.0;
  return static_cast<std::size_t>(r);
}

inline BernsteinSchedule bernstein_schedule(std::size_t n, double a, double b) {
  if (!(0.0 < b && b < a && a < 0.5))
    fail(ErrorKind::config, "bernstein_schedule: need 0 < b < a < 1/2");
  BernsteinSchedule s;
  s.n = n;
  s.a = a;
  s.b = b;
  s.p = integer_part_pow(n, a);
  s.q = integer_part_pow(n, b);
  if (s.p < 1 || s.q < 1)
    fail(ErrorKind::config, "bernstein_schedule: n too small, p or q vanishes");
  s.k = n / (s.p + s.q);
  if (s.k < 2) fail(ErrorKind::config, "bernstein_schedule: n too small, fewer than two blocks");
  return s;
}

// Cached data the block variables share: the centering of f and Var S_p.
struct BlockContext {
  BernsteinSchedule schedule;
  double mean = 0.0;
  bool mean_is_exact = false;
  double var_sp = 0.0;
  double sup_abs = 0.0;  // max |f - mean| seen while estimating

  double scale(double t) const {
    return t / std::sqrt(static_cast<double>(schedule.k) * var_sp);
  }
};

// Estimates (or adopts) the mean of f and estimates Var S_p with `budget`
// mu-sampled starts. Throws degenerate_observable when Var S_p is at noise
// level: the block normalization 1/sqrt(k Var S_p) would blow up.
template <class System>
BlockContext make_block_context(const System& sys,
                                const Observable<typename System::Point>& f,
                                const BernsteinSchedule& schedule, StreamFactory rng,
                                std::size_t budget = 10000) {
  BlockContext ctx;
  ctx.schedule = schedule;

  double sup_abs = 0.0;
  if (f.exact_mean) {
    ctx.mean = *f.exact_mean;
    ctx.mean_is_exact = true;
  } else {
    const StreamFactory mean_rng = rng.subdomain(1);
    double acc = 0.0;
    for (std::size_t i = 0; i < budget; ++i) {
      RngStream stream = mean_rng.stream(i);
      const auto p = sys.sample_invariant(stream);
      acc += f.real(p);
    }
    ctx.mean = acc / static_cast<double>(budget);
  }

  const StreamFactory var_rng = rng.subdomain(2);
  std::vector<double> sums(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    RngStream stream = var_rng.stream(i);
    double s = 0.0;
    visit_mu_orbit(sys, stream, schedule.p, [&](std::size_t, const auto& pt) {
      const double v = f.real(pt) - ctx.mean;
      s += v;
      sup_abs = std::max(sup_abs, std::abs(v));
    });
    sums[i] = s;
  }
  double mean_s = 0.0;
  for (double s : sums) mean_s += s;
  mean_s /= static_cast<double>(budget);
  double var = 0.0;
  for (double s : sums) var += (s - mean_s) * (s - mean_s);
  ctx.var_sp = var / static_cast<double>(budget - 1);
  ctx.sup_abs = sup_abs;

  const double tolerance =
      1e-12 * static_cast<double>(schedule.p) * std::max(sup_abs * sup_abs, 1e-300);
  if (!(ctx.var_sp > tolerance))
    fail(ErrorKind::degenerate_observable,
         "block context: Var S_p is degenerate for observable '" + f.name + "'");
  return ctx;
}

// w_r(x) = exp(i t S_p^{(r)}(x) / sqrt(k Var S_p)), evaluated pointwise.
// The phase is accumulated as a real number and exponentiated once, so the
// result is unimodular to rounding.
template <class System>
double block_phase(const System& sys, const Observable<typename System::Point>& f, double t,
                   const BlockContext& ctx, typename System::Point x, std::size_t r) {
  const auto& s = ctx.schedule;
  if (r < 1 || r > s.k) fail(ErrorKind::domain, "block_variable: block index out of range");
  const std::size_t start = (s.p + s.q) * (r - 1);
  for (std::size_t j = 0; j < start; ++j) x = sys.step(x);
  double phase = 0.0;
  for (std::size_t j = 0; j < s.p; ++j) {
    phase += f.real(x) - ctx.mean;
    if (j + 1 < s.p) x = sys.step(x);
  }
  return ctx.scale(t) * phase;
}

template <class System>
std::complex<double> block_variable(const System& sys,
                                    const Observable<typename System::Point>& f, double t,
                                    const BlockContext& ctx, typename System::Point x,
                                    std::size_t r) {
  return std::polar(1.0, block_phase(sys, f, t, ctx, x, r));
}

// Centered block sums S_p^{(1)}..S_p^{(k)} along one mu-sampled orbit;
// the shared primitive behind block_gap and the telescoping estimators.
template <class System>
void sample_block_sums(const System& sys, const Observable<typename System::Point>& f,
                       const BlockContext& ctx, RngStream& rng, std::span<double> out) {
  const auto& s = ctx.schedule;
  const std::size_t period = s.p + s.q;
  for (auto& v : out) v = 0.0;
  visit_mu_orbit(sys, rng, s.span(), [&](std::size_t j, const auto& pt) {
    const std::size_t r = j / period;
    if (r < s.k && j - r * period < s.p) out[r] += f.real(pt) - ctx.mean;
  });
}

} // namespace cltlab::clt
