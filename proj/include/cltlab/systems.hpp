#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cltlab/error.hpp"
#include "cltlab/rng.hpp"

namespace cltlab {

// ---------------------------------------------------------------------------
// Phase points
// ---------------------------------------------------------------------------

struct UnitIntervalPoint {
  double x = 0.0;
};

struct TorusPoint {
  double x1 = 0.0;
  double x2 = 0.0;
};

// Reduce to [0,1). Guards against the wrap landing exactly on 1 after
// rounding when the argument is a hair below an integer.
inline double wrap01(double x) {
  double y = x - std::floor(x);
  if (y >= 1.0) y -= 1.0;
  if (y < 0.0) y = 0.0;
  return y;
}

// ---------------------------------------------------------------------------
// Piecewise expanding interval maps
// ---------------------------------------------------------------------------

// One monotone branch of the forward map: F restricted to [lo, hi) with an
// exact inverse and the analytic |F'|. Derivatives are supplied in closed
// form, never by numerical differentiation; the transfer operator needs them
// exactly.
struct InverseBranch {
  double domain_lo = 0.0;     // forward-branch domain [domain_lo, domain_hi)
  double domain_hi = 1.0;
  double image_lo = 0.0;      // F([domain_lo, domain_hi)), sorted
  double image_hi = 1.0;
  std::function<double(double)> inverse;          // y in image -> x in domain
  std::function<double(double)> derivative_abs;   // |F'| at a domain point

  bool image_contains(double y) const {
    return y >= image_lo - 1e-13 && y <= image_hi + 1e-13;
  }
};

// Maps whose branch structure is pure bit arithmetic get an exact sampling
// backend (see DyadicOrbitCursor below).
enum class DyadicKind { none, doubling, tent };

// Inverse-CDF table for sampling a non-Lebesgue absolutely continuous
// invariant measure. Filled in by transfer::attach_ulam_sampler.
struct UlamSampler {
  std::size_t bins = 0;
  std::vector<double> cdf;  // cdf[i] = mass of first i bins; size bins+1
  std::string note;         // documents the bin resolution

  double sample(RngStream& rng) const {
    const double u = rng.uniform01();
    std::size_t lo = 0, hi = bins;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (cdf[mid] <= u ? lo : hi) = mid;
    }
    const double mass = cdf[lo + 1] - cdf[lo];
    const double frac = mass > 0.0 ? (u - cdf[lo]) / mass : 0.5;
    return (static_cast<double>(lo) + frac) / static_cast<double>(bins);
  }
};

class IntervalMap {
public:
  using Point = UnitIntervalPoint;

  std::string name;
  std::vector<double> parameters;
  std::function<double(double)> forward;       // F on [0,1)
  std::vector<InverseBranch> branches;
  double expansion = 0.0;                      // lambda = inf |F'|
  DyadicKind dyadic = DyadicKind::none;
  bool lebesgue_invariant = false;             // mu = Lebesgue exactly
  std::optional<UlamSampler> sampler;          // for general maps
  unsigned iterate_power = 1;                  // this map is F_base^m

  Point step(Point p) const {
    if (!(p.x >= 0.0 && p.x < 1.0))
      fail(ErrorKind::domain, "IntervalMap::step: point outside [0,1)");
    return Point{wrap01(forward(p.x))};
  }

  Point sample_invariant(RngStream& rng) const {
    if (lebesgue_invariant) return Point{rng.uniform01()};
    if (sampler) return Point{sampler->sample(rng)};
    fail(ErrorKind::unsupported_system,
         "IntervalMap::sample_invariant: no invariant-measure sampler attached for '" + name + "'");
  }
};

IntervalMap make_doubling_map();
IntervalMap make_tent_map();

// Piecewise-polynomial expanding map: breakpoints 0 = a_0 < ... < a_m = 1 and
// per-branch coefficients c0 + c1 x + c2 x^2 + c3 x^3. Branches must be
// monotone and expanding on their domain; inverses are solved by bisection to
// 1e-14 (affine branches invert in closed form).
IntervalMap make_piecewise_poly_map(const std::vector<double>& breakpoints,
                                    const std::vector<std::vector<double>>& coefficients,
                                    const std::string& name = "piecewise-poly");

// Replace F by F^m: composed branches, expansion^m. Used to meet lambda > 2
// preconditions (doubling has lambda = 2; its square has 4).
IntervalMap iterate_power(const IntervalMap& map, unsigned m);

// ---------------------------------------------------------------------------
// Hyperbolic toral automorphisms
// ---------------------------------------------------------------------------

class ToralAutomorphism {
public:
  using Point = TorusPoint;

  std::string name;
  std::array<std::array<long long, 2>, 2> matrix{{{2, 1}, {1, 1}}};
  double contraction = 0.0;  // nu = modulus of the eigenvalue inside the disk

  Point step(Point p) const {
    if (!(p.x1 >= 0.0 && p.x1 < 1.0 && p.x2 >= 0.0 && p.x2 < 1.0))
      fail(ErrorKind::domain, "ToralAutomorphism::step: point outside [0,1)^2");
    const double y1 = static_cast<double>(matrix[0][0]) * p.x1 + static_cast<double>(matrix[0][1]) * p.x2;
    const double y2 = static_cast<double>(matrix[1][0]) * p.x1 + static_cast<double>(matrix[1][1]) * p.x2;
    return Point{wrap01(y1), wrap01(y2)};
  }

  // SRB measure of a linear hyperbolic automorphism is Lebesgue.
  Point sample_invariant(RngStream& rng) const {
    const double a = rng.uniform01();
    const double b = rng.uniform01();
    return Point{a, b};
  }
};

// Validates |det| = 1 and hyperbolicity (no eigenvalue on the unit circle;
// exact integer conditions in 2x2), and computes nu.
ToralAutomorphism make_toral_automorphism(const std::array<std::array<long long, 2>, 2>& matrix,
                                          const std::string& name = "toral");
ToralAutomorphism make_cat_map();

// ---------------------------------------------------------------------------
// Orbits and Birkhoff sums (pointwise operations)
// ---------------------------------------------------------------------------

template <class System>
std::vector<typename System::Point> orbit(const System& sys, typename System::Point p, std::size_t n) {
  std::vector<typename System::Point> out;
  out.reserve(n + 1);
  out.push_back(p);
  for (std::size_t j = 0; j < n; ++j) {
    p = sys.step(p);
    out.push_back(p);
  }
  return out;
}

template <class System, class Fn>
std::complex<double> birkhoff_sum(const System& sys, const Fn& f, typename System::Point p, std::size_t n) {
  if (n < 1) fail(ErrorKind::domain, "birkhoff_sum: n must be >= 1");
  std::complex<double> s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    s += f(p);
    if (j + 1 < n) p = sys.step(p);
  }
  return s;
}

// ---------------------------------------------------------------------------
// mu-distributed orbit visitation
// ---------------------------------------------------------------------------
//
// Ensemble estimators consume orbits through visit_mu_orbit: a start is drawn
// from the invariant measure and fn(j, point) is called along the orbit.
//
// For the doubling and tent maps a plain double orbit is useless beyond ~53
// steps: both maps shift one mantissa bit per step, so every double-precision
// start collapses onto the dyadic fixed point. Under Lebesgue, though, the
// orbit of either map is a sliding window over an i.i.d. fair bit stream
// (tent additionally folds through complementation), so the cursor below
// reproduces the exact orbit distribution at any length by drawing the bit
// stream from the RNG. Pointwise step/orbit keep plain double semantics.

class DyadicOrbitCursor {
public:
  DyadicOrbitCursor(DyadicKind kind, RngStream& rng) : kind_(kind), rng_(&rng) {
    words_.reserve(64);
    ensure_bits(128);
  }

  double current() {
    ensure_bits(bitpos_ + 118);
    const std::size_t w = bitpos_ >> 6;
    const unsigned off = static_cast<unsigned>(bitpos_ & 63);
    std::uint64_t bits = words_[w] << off;
    if (off != 0) bits |= words_[w + 1] >> (64 - off);
    if (complemented_) bits = ~bits;
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  void advance() {
    if (kind_ == DyadicKind::tent) {
      const std::size_t w = bitpos_ >> 6;
      const unsigned off = static_cast<unsigned>(bitpos_ & 63);
      bool lead = ((words_[w] >> (63 - off)) & 1ull) != 0;
      if (complemented_) lead = !lead;
      if (lead) complemented_ = !complemented_;
    }
    ++bitpos_;
  }

private:
  void ensure_bits(std::size_t n) {
    while (words_.size() * 64 < n + 64) words_.push_back(rng_->next_u64());
  }

  DyadicKind kind_;
  RngStream* rng_;
  std::vector<std::uint64_t> words_;
  std::size_t bitpos_ = 0;
  bool complemented_ = false;
};

template <class System, class Fn>
void visit_mu_orbit(const System& sys, RngStream& rng, std::size_t len, Fn&& fn) {
  if (len == 0) return;
  auto p = sys.sample_invariant(rng);
  for (std::size_t j = 0; j < len; ++j) {
    fn(j, p);
    if (j + 1 < len) p = sys.step(p);
  }
}

template <class Fn>
void visit_mu_orbit(const IntervalMap& sys, RngStream& rng, std::size_t len, Fn&& fn) {
  if (len == 0) return;
  if (sys.dyadic == DyadicKind::none) {
    auto p = sys.sample_invariant(rng);
    for (std::size_t j = 0; j < len; ++j) {
      fn(j, p);
      if (j + 1 < len) p = sys.step(p);
    }
    return;
  }
  DyadicOrbitCursor cursor(sys.dyadic, rng);
  const unsigned m = sys.iterate_power;
  for (std::size_t j = 0; j < len; ++j) {
    fn(j, UnitIntervalPoint{cursor.current()});
    if (j + 1 < len)
      for (unsigned i = 0; i < m; ++i) cursor.advance();
  }
}

} // namespace cltlab
