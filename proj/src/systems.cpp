#include "cltlab/systems.hpp"

#include <algorithm>
#include <cmath>

namespace cltlab {

namespace {

double eval_poly(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
  return v;
}

double eval_poly_derivative(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 1;) v = v * x + c[i] * static_cast<double>(i);
  return v;
}

// Monotone solve of fwd(x) = y on [lo, hi] by bisection; fwd must be strictly
// monotone. Used for nonlinear branch inverses and composite-image bounds.
double bisect_inverse(const std::function<double(double)>& fwd, double lo, double hi, double y) {
  double flo = fwd(lo);
  double fhi = fwd(hi);
  const bool increasing = flo < fhi;
  if (!increasing) std::swap(flo, fhi);
  y = std::clamp(y, flo, fhi);
  double a = lo, b = hi;
  for (int it = 0; it < 100 && (b - a) > 1e-16; ++it) {
    const double mid = 0.5 * (a + b);
    const double fm = fwd(mid);
    const bool go_right = increasing ? (fm < y) : (fm > y);
    (go_right ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

} // namespace

IntervalMap make_doubling_map() {
  IntervalMap m;
  m.name = "doubling";
  m.forward = [](double x) { return 2.0 * x; }; // step() wraps
  m.expansion = 2.0;
  m.dyadic = DyadicKind::doubling;
  m.lebesgue_invariant = true;
  InverseBranch b0;
  b0.domain_lo = 0.0;
  b0.domain_hi = 0.5;
  b0.image_lo = 0.0;
  b0.image_hi = 1.0;
  b0.inverse = [](double y) { return 0.5 * y; };
  b0.derivative_abs = [](double) { return 2.0; };
  InverseBranch b1 = b0;
  b1.domain_lo = 0.5;
  b1.domain_hi = 1.0;
  b1.inverse = [](double y) { return 0.5 * (y + 1.0); };
  m.branches = {b0, b1};
  return m;
}

IntervalMap make_tent_map() {
  IntervalMap m;
  m.name = "tent";
  m.forward = [](double x) { return x < 0.5 ? 2.0 * x : 2.0 - 2.0 * x; };
  m.expansion = 2.0;
  m.dyadic = DyadicKind::tent;
  m.lebesgue_invariant = true;
  InverseBranch b0;
  b0.domain_lo = 0.0;
  b0.domain_hi = 0.5;
  b0.image_lo = 0.0;
  b0.image_hi = 1.0;
  b0.inverse = [](double y) { return 0.5 * y; };
  b0.derivative_abs = [](double) { return 2.0; };
  InverseBranch b1;
  b1.domain_lo = 0.5;
  b1.domain_hi = 1.0;
  b1.image_lo = 0.0;
  b1.image_hi = 1.0;
  b1.inverse = [](double y) { return 1.0 - 0.5 * y; };
  b1.derivative_abs = [](double) { return 2.0; };
  m.branches = {b0, b1};
  return m;
}

IntervalMap make_piecewise_poly_map(const std::vector<double>& breakpoints,
                                    const std::vector<std::vector<double>>& coefficients,
                                    const std::string& name) {
  if (breakpoints.size() < 2 || coefficients.size() + 1 != breakpoints.size())
    fail(ErrorKind::config, "piecewise map: need m+1 breakpoints for m branches");
  if (std::abs(breakpoints.front()) > 1e-15 || std::abs(breakpoints.back() - 1.0) > 1e-15)
    fail(ErrorKind::config, "piecewise map: breakpoints must span [0,1]");
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
    if (!(breakpoints[i] < breakpoints[i + 1]))
      fail(ErrorKind::config, "piecewise map: breakpoints must be strictly increasing");

  IntervalMap m;
  m.name = name;
  double lambda = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < coefficients.size(); ++b) {
    const auto coeffs = coefficients[b];
    const double lo = breakpoints[b];
    const double hi = breakpoints[b + 1];
    // Expansion and monotonicity are checked on a fine grid plus endpoints;
    // coefficients are analytic so this is only guarding user input.
    double dmin = std::numeric_limits<double>::infinity();
    double sign = 0.0;
    for (int i = 0; i <= 512; ++i) {
      const double x = lo + (hi - lo) * static_cast<double>(i) / 512.0;
      const double d = eval_poly_derivative(coeffs, x);
      if (sign == 0.0) sign = d > 0 ? 1.0 : -1.0;
      if (d * sign <= 0.0)
        fail(ErrorKind::config, "piecewise map: branch " + std::to_string(b) + " is not monotone");
      dmin = std::min(dmin, std::abs(d));
    }
    if (dmin <= 1.0)
      fail(ErrorKind::config, "piecewise map: branch " + std::to_string(b) + " is not expanding (|F'| <= 1)");
    lambda = std::min(lambda, dmin);

    const double flo = eval_poly(coeffs, lo);
    const double fhi = eval_poly(coeffs, hi);
    if (std::min(flo, fhi) < -1e-9 || std::max(flo, fhi) > 1.0 + 1e-9)
      fail(ErrorKind::config, "piecewise map: branch " + std::to_string(b) + " leaves [0,1]");

    InverseBranch br;
    br.domain_lo = lo;
    br.domain_hi = hi;
    br.image_lo = std::clamp(std::min(flo, fhi), 0.0, 1.0);
    br.image_hi = std::clamp(std::max(flo, fhi), 0.0, 1.0);
    br.derivative_abs = [coeffs](double x) { return std::abs(eval_poly_derivative(coeffs, x)); };
    if (coeffs.size() <= 2 || (std::abs(coeffs.size() > 2 ? coeffs[2] : 0.0) == 0.0 &&
                               std::abs(coeffs.size() > 3 ? coeffs[3] : 0.0) == 0.0)) {
      const double c0 = coeffs.empty() ? 0.0 : coeffs[0];
      const double c1 = coeffs.size() > 1 ? coeffs[1] : 0.0;
      br.inverse = [c0, c1](double y) { return (y - c0) / c1; };
    } else {
      auto fwd = [coeffs](double x) { return eval_poly(coeffs, x); };
      br.inverse = [fwd, lo, hi](double y) { return bisect_inverse(fwd, lo, hi, y); };
    }
    m.branches.push_back(std::move(br));
  }
  m.expansion = lambda;
  auto bps = breakpoints;
  auto cfs = coefficients;
  m.forward = [bps, cfs](double x) {
    std::size_t b = 0;
    while (b + 1 < cfs.size() && x >= bps[b + 1]) ++b;
    return std::clamp(eval_poly(cfs[b], x), 0.0, 1.0);
  };
  return m;
}

IntervalMap iterate_power(const IntervalMap& base, unsigned m) {
  if (m == 0) fail(ErrorKind::domain, "iterate_power: power must be >= 1");
  if (m == 1) return base;
  double combos = 1.0;
  for (unsigned i = 0; i < m; ++i) combos *= static_cast<double>(base.branches.size());
  if (combos > 8192.0) fail(ErrorKind::config, "iterate_power: branch count explodes");

  IntervalMap cur = base;
  for (unsigned step = 1; step < m; ++step) {
    IntervalMap next;
    next.name = base.name;
    next.expansion = cur.expansion * base.expansion;
    next.dyadic = base.dyadic;
    next.lebesgue_invariant = base.lebesgue_invariant;
    next.sampler = base.sampler;
    const auto base_fwd = base.forward;
    const auto cur_fwd = cur.forward;
    next.forward = [base_fwd, cur_fwd](double x) {
      return cur_fwd(wrap01(base_fwd(x)));
    };
    // Branches of F_cur o F_base: x lies in a base branch j and F_base(x)
    // lies in a cur branch c.
    for (const auto& bj : base.branches) {
      for (const auto& bc : cur.branches) {
        const double ylo = std::max(bj.image_lo, bc.domain_lo);
        const double yhi = std::min(bj.image_hi, bc.domain_hi);
        if (!(ylo < yhi - 1e-14)) continue;
        double xa = bj.inverse(ylo);
        double xb = bj.inverse(yhi);
        if (xa > xb) std::swap(xa, xb);
        InverseBranch nb;
        nb.domain_lo = std::clamp(xa, bj.domain_lo, bj.domain_hi);
        nb.domain_hi = std::clamp(xb, bj.domain_lo, bj.domain_hi);
        const auto inv_j = bj.inverse;
        const auto inv_c = bc.inverse;
        nb.inverse = [inv_j, inv_c](double y) { return inv_j(inv_c(y)); };
        const auto dj = bj.derivative_abs;
        const auto dc = bc.derivative_abs;
        nb.derivative_abs = [dj, dc, base_fwd](double x) {
          const double mid = wrap01(base_fwd(x));
          return dj(x) * dc(mid);
        };
        // Image of the composite branch: where the cur branch sends the
        // reachable part of its domain. h_c is monotone, so solve at the ends.
        double ia = bisect_inverse(inv_c, bc.image_lo, bc.image_hi, ylo);
        double ib = bisect_inverse(inv_c, bc.image_lo, bc.image_hi, yhi);
        if (ia > ib) std::swap(ia, ib);
        nb.image_lo = ia;
        nb.image_hi = ib;
        next.branches.push_back(std::move(nb));
      }
    }
    std::sort(next.branches.begin(), next.branches.end(),
              [](const InverseBranch& a, const InverseBranch& b) { return a.domain_lo < b.domain_lo; });
    cur = std::move(next);
  }
  cur.iterate_power = base.iterate_power * m;
  cur.name = base.name + "^" + std::to_string(cur.iterate_power);
  cur.parameters = base.parameters;
  return cur;
}

ToralAutomorphism make_toral_automorphism(const std::array<std::array<long long, 2>, 2>& matrix,
                                          const std::string& name) {
  const long long det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
  const long long tr = matrix[0][0] + matrix[1][1];
  if (det != 1 && det != -1)
    fail(ErrorKind::config, "toral automorphism: determinant must be +-1");
  // Exact 2x2 hyperbolicity: det=+1 needs |trace|>2, det=-1 needs trace!=0.
  const bool hyperbolic = (det == 1 && std::llabs(tr) > 2) || (det == -1 && tr != 0);
  if (!hyperbolic)
    fail(ErrorKind::config, "toral automorphism: matrix has an eigenvalue on the unit circle");
  const double t = static_cast<double>(tr);
  const double d = static_cast<double>(det);
  const double disc = std::sqrt(t * t - 4.0 * d);
  const double l1 = 0.5 * (t + disc);
  const double l2 = 0.5 * (t - disc);
  ToralAutomorphism sys;
  sys.name = name;
  sys.matrix = matrix;
  sys.contraction = std::min(std::abs(l1), std::abs(l2));
  return sys;
}

ToralAutomorphism make_cat_map() {
  return make_toral_automorphism({{{2, 1}, {1, 1}}}, "cat");
}

} // namespace cltlab
