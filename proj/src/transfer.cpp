#include "cltlab/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "cltlab/stats.hpp"

namespace cltlab::transfer {

GridFunction GridFunction::zeros(std::size_t g, std::string descriptor) {
  if (g < 2) fail(ErrorKind::domain, "GridFunction: grid size must be >= 2");
  GridFunction out;
  out.size = g;
  out.values.assign(g, {0.0, 0.0});
  out.descriptor = std::move(descriptor);
  return out;
}

GridFunction GridFunction::constant(std::size_t g, std::complex<double> c, std::string descriptor) {
  GridFunction out = zeros(g, std::move(descriptor));
  std::fill(out.values.begin(), out.values.end(), c);
  return out;
}

GridFunction GridFunction::from_function(std::size_t g,
                                         const std::function<std::complex<double>(double)>& f,
                                         std::string descriptor) {
  GridFunction out = zeros(g, std::move(descriptor));
  for (std::size_t j = 0; j < g; ++j) out.values[j] = f(out.node(j));
  return out;
}

std::complex<double> GridFunction::interpolate(double x) const {
  const double g = static_cast<double>(size);
  double t = x * g;
  // Clamp into the representable range; the last cell extrapolates.
  if (t < 0.0) t = 0.0;
  std::size_t j = static_cast<std::size_t>(t);
  if (j >= size - 1) j = size - 2;
  const double frac = t - static_cast<double>(j);
  return values[j] + frac * (values[j + 1] - values[j]);
}

std::complex<double> GridFunction::integral() const {
  std::complex<double> s{0.0, 0.0};
  for (const auto& v : values) s += v;
  return s / static_cast<double>(size);
}

double GridFunction::l1_norm() const {
  double s = 0.0;
  for (const auto& v : values) s += std::abs(v);
  return s / static_cast<double>(size);
}

double GridFunction::sup_norm() const {
  double s = 0.0;
  for (const auto& v : values) s = std::max(s, std::abs(v));
  return s;
}

double total_variation(const GridFunction& g) {
  double tv = 0.0;
  for (std::size_t j = 0; j + 1 < g.size; ++j) tv += std::abs(g.values[j + 1] - g.values[j]);
  return tv;
}

GridFunction transfer_apply(const IntervalMap& sys, const GridFunction& g) {
  if (sys.branches.empty())
    fail(ErrorKind::unsupported_system,
         "transfer_apply: system '" + sys.name + "' exposes no inverse branches");
  GridFunction out = GridFunction::zeros(g.size, "L[" + g.descriptor + "]");
  for (std::size_t j = 0; j < g.size; ++j) {
    const double x = out.node(j);
    std::complex<double> acc{0.0, 0.0};
    for (const auto& br : sys.branches) {
      if (!br.image_contains(x)) continue;
      double y = br.inverse(x);
      y = std::clamp(y, br.domain_lo, br.domain_hi);
      acc += g.interpolate(y) / br.derivative_abs(y);
    }
    out.values[j] = acc;
  }
  return out;
}

double verify_transfer_identity(const IntervalMap& sys, const GridFunction& f,
                                const GridFunction& g) {
  if (f.size != g.size) fail(ErrorKind::domain, "verify_transfer_identity: grid size mismatch");
  // Left side: L(f o F . g). f o F is sampled on the grid through the forward
  // map; right side: f . Lg pointwise.
  GridFunction h = GridFunction::zeros(g.size);
  for (std::size_t j = 0; j < g.size; ++j) {
    const double fx = wrap01(sys.forward(h.node(j)));
    h.values[j] = f.interpolate(fx) * g.values[j];
  }
  const GridFunction lhs = transfer_apply(sys, h);
  const GridFunction lg = transfer_apply(sys, g);
  double dev = 0.0;
  for (std::size_t j = 0; j < g.size; ++j)
    dev = std::max(dev, std::abs(lhs.values[j] - f.values[j] * lg.values[j]));
  return dev;
}

LasotaYorkeResidual lasota_yorke_residual(const IntervalMap& sys, const GridFunction& g,
                                          double a_const) {
  if (!(sys.expansion > 2.0))
    fail(ErrorKind::domain,
         "lasota_yorke_residual: needs lambda = inf|F'| > 2; use an iterate power of the map");
  LasotaYorkeResidual out;
  out.tv_g = total_variation(g);
  out.tv_lg = total_variation(transfer_apply(sys, g));
  out.residual = out.tv_lg - (2.0 / sys.expansion * out.tv_g + a_const * g.l1_norm());
  out.grid_allowance = 8.0 * out.tv_g / static_cast<double>(g.size);
  return out;
}

std::vector<UlamTriplet> ulam_matrix(const IntervalMap& sys, std::size_t bins) {
  if (bins < 16) fail(ErrorKind::domain, "ulam_matrix: need at least 16 bins");
  if (sys.branches.empty())
    fail(ErrorKind::unsupported_system, "ulam_matrix: system exposes no inverse branches");
  const double w = 1.0 / static_cast<double>(bins);
  // Row-stochastic transition matrix P(i -> j) = B * |bin_i intersect h(bin_j)|,
  // assembled per branch from the monotone image of each target bin.
  std::vector<UlamTriplet> triplets;
  for (const auto& br : sys.branches) {
    for (std::size_t j = 0; j < bins; ++j) {
      const double ylo = std::max(static_cast<double>(j) * w, br.image_lo);
      const double yhi = std::min(static_cast<double>(j + 1) * w, br.image_hi);
      if (!(ylo < yhi)) continue;
      double xa = br.inverse(ylo);
      double xb = br.inverse(yhi);
      if (xa > xb) std::swap(xa, xb);
      xa = std::clamp(xa, br.domain_lo, br.domain_hi);
      xb = std::clamp(xb, br.domain_lo, br.domain_hi);
      const std::size_t ia = std::min(static_cast<std::size_t>(xa / w), bins - 1);
      const std::size_t ib = std::min(static_cast<std::size_t>(xb / w), bins - 1);
      for (std::size_t i = ia; i <= ib; ++i) {
        const double lo = std::max(xa, static_cast<double>(i) * w);
        const double hi = std::min(xb, static_cast<double>(i + 1) * w);
        if (hi > lo) triplets.push_back({i, j, (hi - lo) / w});
      }
    }
  }
  return triplets;
}

GridFunction ulam_density(const IntervalMap& sys, std::size_t bins) {
  const auto triplets = ulam_matrix(sys, bins);
  std::vector<std::vector<std::pair<std::size_t, double>>> cols(bins); // per j: (i, mass)
  for (const auto& t : triplets) cols[t.to].emplace_back(t.from, t.mass);

  // Left fixed vector by power iteration, from the uniform start.
  std::vector<double> v(bins, 1.0 / static_cast<double>(bins)), next(bins);
  const std::size_t max_iters = 10000;
  double diff = 0.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t j = 0; j < bins; ++j)
      for (const auto& [i, mass] : cols[j]) next[j] += v[i] * mass;
    double total = 0.0;
    for (double x : next) total += x;
    if (!(total > 0.0)) fail(ErrorKind::convergence, "ulam_density: transition mass vanished");
    for (auto& x : next) x /= total;
    diff = 0.0;
    for (std::size_t i = 0; i < bins; ++i) diff += std::abs(next[i] - v[i]);
    v.swap(next);
    if (diff < 1e-14) break;
    if (it + 1 == max_iters)
      fail(ErrorKind::convergence, "ulam_density: power iteration did not converge in 10^4 steps");
  }

  GridFunction phi = GridFunction::zeros(bins, "ulam-density[" + sys.name + "]");
  for (std::size_t i = 0; i < bins; ++i)
    phi.values[i] = v[i] * static_cast<double>(bins); // mass -> density
  return phi;
}

void attach_ulam_sampler(IntervalMap& sys, std::size_t bins) {
  const GridFunction phi = ulam_density(sys, bins);
  UlamSampler s;
  s.bins = bins;
  s.cdf.assign(bins + 1, 0.0);
  for (std::size_t i = 0; i < bins; ++i)
    s.cdf[i + 1] = s.cdf[i] + phi.values[i].real() / static_cast<double>(bins);
  const double total = s.cdf[bins];
  for (auto& c : s.cdf) c /= total;
  s.note = "inverse-CDF of the Ulam density at " + std::to_string(bins) +
           " bins; samples are exact for the discretized density";
  sys.sampler = std::move(s);
}

std::vector<VariationStep> variation_recursion(const IntervalMap& sys, const GridFunction& g_factor,
                                               const GridFunction& phi, std::size_t steps,
                                               double a_const) {
  if (!(sys.expansion > 2.0))
    fail(ErrorKind::domain,
         "variation_recursion: needs lambda > 2; use an iterate power of the map");
  if (g_factor.size != phi.size)
    fail(ErrorKind::domain, "variation_recursion: grid size mismatch");
  const double contraction = 2.0 / sys.expansion;
  const double tv_g = total_variation(g_factor);
  const double phi_sup = phi.sup_norm();

  GridFunction r = GridFunction::zeros(phi.size, "LpGp");
  for (std::size_t j = 0; j < r.size; ++j) r.values[j] = phi.values[j] * g_factor.values[j];
  const double tv_phig = total_variation(r);

  std::vector<VariationStep> out;
  out.reserve(steps);
  for (std::size_t p = 1; p <= steps; ++p) {
    GridFunction lr = transfer_apply(sys, r);
    for (std::size_t j = 0; j < r.size; ++j) r.values[j] = lr.values[j] * g_factor.values[j];
    VariationStep step;
    step.p = p;
    step.measured_tv = total_variation(r);
    step.bound = std::pow(contraction, static_cast<double>(p)) * tv_phig +
                 (a_const + phi_sup * tv_g) / (1.0 - contraction);
    out.push_back(step);
  }
  return out;
}

std::vector<double> block_variation_sequence(const IntervalMap& sys, const GridFunction& g_factor,
                                             const GridFunction& phi, std::size_t steps) {
  if (g_factor.size != phi.size)
    fail(ErrorKind::domain, "block_variation_sequence: grid size mismatch");
  GridFunction r = GridFunction::zeros(phi.size);
  for (std::size_t j = 0; j < r.size; ++j) r.values[j] = phi.values[j] * g_factor.values[j];
  std::vector<double> out;
  out.reserve(steps + 1);
  out.push_back(total_variation(r)); // p = 0: TV(phi g)
  for (std::size_t p = 1; p <= steps; ++p) {
    GridFunction lr = transfer_apply(sys, r);
    for (std::size_t j = 0; j < r.size; ++j) r.values[j] = lr.values[j] * g_factor.values[j];
    out.push_back(total_variation(r));
  }
  return out;
}

double pw_pair_bound(double f_l1, double g_l1, double g_tv, const PwConstants& c, std::size_t n) {
  if (f_l1 < 0.0 || g_l1 < 0.0 || g_tv < 0.0)
    fail(ErrorKind::domain, "pw_pair_bound: norms must be nonnegative");
  if (!(c.Lambda > 1.0)) fail(ErrorKind::domain, "pw_pair_bound: decay base Lambda must exceed 1");
  return c.K * std::pow(c.Lambda, -static_cast<double>(n)) * f_l1 * (g_l1 + c.b * g_tv);
}

double doubling_block_tv_bound(double g_tv, std::size_t) {
  if (g_tv < 0.0) fail(ErrorKind::domain, "doubling_block_tv_bound: TV must be nonnegative");
  return 4.0 * g_tv;
}

namespace {

// One Bernstein block absorbed into the integrand: C -> L^p(C . w_1) via
// B_0 = C, B_{l+1} = L(B_l . g), using L(u o F . v) = u . L(v) peeled in
// reverse.
GridFunction absorb_block(const IntervalMap& sys, const GridFunction& g_factor, GridFunction c,
                          std::size_t p) {
  for (std::size_t l = 0; l < p; ++l) {
    for (std::size_t j = 0; j < c.size; ++j) c.values[j] *= g_factor.values[j];
    c = transfer_apply(sys, c);
  }
  return c;
}

} // namespace

std::vector<std::complex<double>> block_product_means(const IntervalMap& sys,
                                                      const GridFunction& g_factor,
                                                      const GridFunction& phi, std::size_t p,
                                                      std::size_t q, std::size_t r_max) {
  if (r_max < 1) fail(ErrorKind::domain, "block_product_means: need r_max >= 1");
  std::vector<std::complex<double>> means;
  means.reserve(r_max);
  GridFunction c = phi;
  for (std::size_t r = 1; r <= r_max; ++r) {
    c = absorb_block(sys, g_factor, std::move(c), p);
    means.push_back(c.integral()); // L preserves the integral
    if (r < r_max)
      for (std::size_t l = 0; l < q; ++l) c = transfer_apply(sys, c);
  }
  return means;
}

GapDecayFit gap_decay_in_q(const IntervalMap& sys, const GridFunction& g_factor,
                           const GridFunction& phi, std::size_t p,
                           const std::vector<std::size_t>& qs) {
  GapDecayFit fit;
  std::vector<double> xs, ys;
  for (const std::size_t q : qs) {
    const auto means = block_product_means(sys, g_factor, phi, p, q, 2);
    const double gap = std::abs(means[1] - means[0] * means[0]);
    fit.points.push_back({q, gap});
    if (gap > 0.0) {
      xs.push_back(static_cast<double>(q));
      ys.push_back(std::log(gap));
    }
  }
  if (xs.size() < 3)
    fail(ErrorKind::insufficient_data, "gap_decay_in_q: too few nonzero gaps to fit");
  const auto line = stats::fit_line(xs, ys);
  fit.rate = std::exp(line.slope);
  fit.prefactor = std::exp(line.intercept);
  fit.log_residual = line.rms_residual;
  // Fitted K of the Lambda^{-q} convention that covers every measured point.
  const double lambda_fit = 1.0 / std::min(fit.rate, 1.0 - 1e-12);
  for (const auto& pt : fit.points)
    fit.fitted_K = std::max(fit.fitted_K,
                            pt.gap * std::pow(lambda_fit, static_cast<double>(pt.q)));
  return fit;
}

} // namespace cltlab::transfer
