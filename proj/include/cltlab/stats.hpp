#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "cltlab/error.hpp"

namespace cltlab::stats {

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Unbiased sample variance (n-1 denominator), two-pass.
inline double variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Standard error of the sample-variance estimator, via the fourth central
// moment: Var(s^2) ~ (m4 - s^4)/n.
inline double variance_standard_error(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n < 4) return 0.0;
  const double m = mean(v);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d2 = (x - m) * (x - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  const double var_of_var = (m4 - m2 * m2) / static_cast<double>(n);
  return var_of_var > 0.0 ? std::sqrt(var_of_var) : 0.0;
}

// Standard error of a statistic from its per-batch values: sd(batches)/sqrt(B).
inline double batch_standard_error(std::span<const double> batch_values) {
  const std::size_t b = batch_values.size();
  if (b < 2) return 0.0;
  return std::sqrt(variance(batch_values) / static_cast<double>(b));
}

inline double batch_standard_error(std::span<const std::complex<double>> batch_values) {
  std::vector<double> re(batch_values.size()), im(batch_values.size());
  for (std::size_t i = 0; i < batch_values.size(); ++i) {
    re[i] = batch_values[i].real();
    im[i] = batch_values[i].imag();
  }
  return std::max(batch_standard_error(std::span<const double>(re)),
                  batch_standard_error(std::span<const double>(im)));
}

constexpr double pi = 3.14159265358979323846264338327950288;

// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * pi);
}

// One-sample Kolmogorov-Smirnov statistic against a CDF given as a callable.
// Samples are copied and sorted internally.
template <class Cdf>
double ks_statistic(std::span<const double> samples, const Cdf& cdf) {
  if (samples.empty()) fail(ErrorKind::insufficient_data, "ks_statistic: empty sample");
  std::vector<double> z(samples.begin(), samples.end());
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = cdf(z[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return d;
}

inline double ks_statistic_normal(std::span<const double> samples) {
  return ks_statistic(samples, [](double z) { return normal_cdf(z); });
}

inline double ks_statistic_uniform01(std::span<const double> samples) {
  return ks_statistic(samples, [](double z) { return std::clamp(z, 0.0, 1.0); });
}

// Asymptotic KS critical value at significance alpha: c(alpha)/sqrt(n).
inline double ks_critical(std::size_t n, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c / std::sqrt(static_cast<double>(n));
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares y = intercept + slope * x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    fail(ErrorKind::insufficient_data, "fit_line: need at least two matched points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (det == 0.0) fail(ErrorKind::numeric, "fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy * sxx - sx * sxy) / det;
  f.points = x.size();
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    rss += r * r;
  }
  f.rms_residual = std::sqrt(rss / n);
  return f;
}

// q-quantile (0..1) by linear interpolation of order statistics.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) fail(ErrorKind::insufficient_data, "quantile: empty sample");
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

} // namespace cltlab::stats
