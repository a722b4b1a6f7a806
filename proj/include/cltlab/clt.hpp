#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "cltlab/bernstein.hpp"
#include "cltlab/correlations.hpp"
#include "cltlab/error.hpp"
#include "cltlab/observable.hpp"
#include "cltlab/parallel.hpp"
#include "cltlab/stats.hpp"

namespace cltlab::clt {

struct GreenKubo {
  double sigma2 = 0.0;
  std::size_t cutoff = 0;
  double tail_fraction = 0.0;      // last tenth of 2*sum C(i)
  bool tail_flag = false;
  double moment_partial_sum = 0.0; // sum n|C(n)| up to the cutoff
  double standard_error = 0.0;     // quadrature combination of lag errors
};

// sigma^2 = C(0) + 2 sum_{i=1..cutoff} C(i) from an autocorrelation series of
// a real observable.
inline GreenKubo green_kubo_variance(const correlations::CorrelationSeries& series,
                                     std::size_t cutoff) {
  GreenKubo gk;
  gk.cutoff = cutoff;
  const std::size_t i0 = series.index_of(0);
  gk.sigma2 = series.estimates[i0].real();
  double se2 = series.standard_errors[i0] * series.standard_errors[i0];
  const std::size_t tail_start = cutoff - cutoff / 10;
  double tail = 0.0, lagged = 0.0;
  for (std::size_t lag = 1; lag <= cutoff; ++lag) {
    const std::size_t i = series.index_of(lag);
    const double c = series.estimates[i].real();
    gk.sigma2 += 2.0 * c;
    lagged += 2.0 * std::abs(c);
    if (lag > tail_start) tail += 2.0 * std::abs(c);
    se2 += 4.0 * series.standard_errors[i] * series.standard_errors[i];
    gk.moment_partial_sum += static_cast<double>(lag) * std::abs(c);
  }
  gk.tail_fraction = lagged > 0.0 ? tail / lagged : 0.0;
  gk.tail_flag = gk.tail_fraction > 0.05;
  gk.standard_error = std::sqrt(se2);
  if (gk.sigma2 < -3.0 * gk.standard_error)
    fail(ErrorKind::numeric, "green_kubo_variance: sigma^2 negative beyond 3 standard errors");
  return gk;
}

struct VarianceRatio {
  double ratio = 0.0;          // Var S_n / n
  double standard_error = 0.0;
  std::size_t n = 0;
  std::size_t samples = 0;
  bool degenerate = false;     // Var S_n at numerical noise level
};

// Empirical Var S_n over N mu-sampled starts, divided by n.
template <class System>
VarianceRatio variance_ratio(const System& sys, const Observable<typename System::Point>& f,
                             std::size_t n, std::size_t N, StreamFactory rng,
                             const ExecPolicy& exec = {}) {
  if (n < 1) fail(ErrorKind::domain, "variance_ratio: n must be >= 1");
  if (N < 1000) fail(ErrorKind::insufficient_data, "variance_ratio: need N >= 1000");
  std::vector<double> sums(N);
  run_batches(N, correlations::n_batches, exec, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      RngStream stream = rng.stream(i);
      double s = 0.0;
      visit_mu_orbit(sys, stream, n, [&](std::size_t, const auto& pt) { s += f.real(pt); });
      sums[i] = s;
    }
  });
  VarianceRatio out;
  out.n = n;
  out.samples = N;
  out.ratio = stats::variance(sums) / static_cast<double>(n);
  out.standard_error = stats::variance_standard_error(sums) / static_cast<double>(n);
  double sup = 0.0;
  for (double s : sums) sup = std::max(sup, std::abs(s));
  out.degenerate = !(stats::variance(sums) > 1e-12 * std::max(sup * sup, 1e-300));
  return out;
}

struct BlockGap {
  double gap = 0.0;            // |<w_1...w_k> - prod <w_r>|
  double standard_error = 0.0;
  double max_abs_mean_w = 0.0; // max_r |<w_r>| (must not exceed 1 + noise)
  std::size_t sample_count = 0;
};

// Monte Carlo estimate of the Bernstein block gap at a given t. Shares the
// per-sample machinery of the telescoping estimator: all block variables come
// from one orbit's centered block sums.
template <class System>
BlockGap block_gap(const System& sys, const Observable<typename System::Point>& f, double t,
                   const BlockContext& ctx, std::size_t budget, StreamFactory rng,
                   const ExecPolicy& exec = {}) {
  const std::size_t k = ctx.schedule.k;
  const double c = ctx.scale(t);

  struct BatchAcc {
    std::complex<double> prod{0.0, 0.0};
    std::vector<std::complex<double>> w;
    std::size_t count = 0;
  };
  std::vector<BatchAcc> acc(correlations::n_batches);
  for (auto& a : acc) a.w.assign(k, {0.0, 0.0});

  run_batches(budget, correlations::n_batches, exec,
              [&](std::size_t b, std::size_t lo, std::size_t hi) {
                auto& a = acc[b];
                std::vector<double> sums(k);
                for (std::size_t i = lo; i < hi; ++i) {
                  RngStream stream = rng.stream(i);
                  sample_block_sums(sys, f, ctx, stream, sums);
                  double total_phase = 0.0;
                  for (std::size_t r = 0; r < k; ++r) {
                    const double phase = c * sums[r];
                    total_phase += phase;
                    a.w[r] += std::polar(1.0, phase);
                  }
                  a.prod += std::polar(1.0, total_phase);
                  ++a.count;
                }
              });

  auto gap_of = [&](const std::complex<double>& prod_sum,
                    const std::vector<std::complex<double>>& w_sums, double n) {
    std::complex<double> pw{1.0, 0.0};
    for (const auto& w : w_sums) pw *= w / n;
    return std::abs(prod_sum / n - pw);
  };

  std::complex<double> prod_sum{0.0, 0.0};
  std::vector<std::complex<double>> w_sums(k, {0.0, 0.0});
  std::size_t total = 0;
  std::vector<double> per_batch;
  for (const auto& a : acc) {
    prod_sum += a.prod;
    for (std::size_t r = 0; r < k; ++r) w_sums[r] += a.w[r];
    total += a.count;
    if (a.count > 0) per_batch.push_back(gap_of(a.prod, a.w, static_cast<double>(a.count)));
  }
  BlockGap out;
  out.sample_count = total;
  out.gap = gap_of(prod_sum, w_sums, static_cast<double>(total));
  out.standard_error =
      stats::batch_standard_error(std::span<const double>(per_batch.data(), per_batch.size()));
  for (const auto& w : w_sums)
    out.max_abs_mean_w = std::max(out.max_abs_mean_w, std::abs(w / static_cast<double>(total)));
  return out;
}

// Gap estimates over a t-grid from one pass of block sums; the orbit work
// dominates, so scanning t this way costs the same as a single gap.
template <class System>
std::vector<BlockGap> block_gap_scan(const System& sys,
                                     const Observable<typename System::Point>& f,
                                     const std::vector<double>& ts, const BlockContext& ctx,
                                     std::size_t budget, StreamFactory rng,
                                     const ExecPolicy& exec = {}) {
  const std::size_t k = ctx.schedule.k;
  const std::size_t nt = ts.size();
  std::vector<double> scales(nt);
  for (std::size_t t = 0; t < nt; ++t) scales[t] = ctx.scale(ts[t]);

  struct BatchAcc {
    std::vector<std::complex<double>> prod; // per t
    std::vector<std::complex<double>> w;    // per t, per r
    std::size_t count = 0;
  };
  std::vector<BatchAcc> acc(correlations::n_batches);
  for (auto& a : acc) {
    a.prod.assign(nt, {0.0, 0.0});
    a.w.assign(nt * k, {0.0, 0.0});
  }

  run_batches(budget, correlations::n_batches, exec,
              [&](std::size_t b, std::size_t lo, std::size_t hi) {
                auto& a = acc[b];
                std::vector<double> sums(k);
                for (std::size_t i = lo; i < hi; ++i) {
                  RngStream stream = rng.stream(i);
                  sample_block_sums(sys, f, ctx, stream, sums);
                  for (std::size_t t = 0; t < nt; ++t) {
                    double total_phase = 0.0;
                    for (std::size_t r = 0; r < k; ++r) {
                      const double phase = scales[t] * sums[r];
                      total_phase += phase;
                      a.w[t * k + r] += std::polar(1.0, phase);
                    }
                    a.prod[t] += std::polar(1.0, total_phase);
                  }
                  ++a.count;
                }
              });

  std::vector<BlockGap> out(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    auto gap_of = [&](const std::complex<double>& prod_sum, const BatchAcc& a, double n) {
      std::complex<double> pw{1.0, 0.0};
      for (std::size_t r = 0; r < k; ++r) pw *= a.w[t * k + r] / n;
      return std::abs(prod_sum / n - pw);
    };
    std::complex<double> prod_sum{0.0, 0.0};
    std::vector<std::complex<double>> w_sums(k, {0.0, 0.0});
    std::size_t total = 0;
    std::vector<double> per_batch;
    for (const auto& a : acc) {
      prod_sum += a.prod[t];
      for (std::size_t r = 0; r < k; ++r) w_sums[r] += a.w[t * k + r];
      total += a.count;
      if (a.count > 0) per_batch.push_back(gap_of(a.prod[t], a, static_cast<double>(a.count)));
    }
    std::complex<double> pw{1.0, 0.0};
    for (const auto& w : w_sums) pw *= w / static_cast<double>(total);
    out[t].sample_count = total;
    out[t].gap = std::abs(prod_sum / static_cast<double>(total) - pw);
    out[t].standard_error =
        stats::batch_standard_error(std::span<const double>(per_batch.data(), per_batch.size()));
    for (const auto& w : w_sums)
      out[t].max_abs_mean_w =
          std::max(out[t].max_abs_mean_w, std::abs(w / static_cast<double>(total)));
  }
  return out;
}

enum class Normalization { empirical, green_kubo };

inline const char* to_string(Normalization n) {
  return n == Normalization::empirical ? "empirical" : "green-kubo";
}

struct CLTReport {
  std::size_t n = 0;
  std::size_t samples = 0;              // N
  double ks_statistic = 0.0;            // under the selected normalization
  double ks_empirical = 0.0;
  double ks_green_kubo = 0.0;
  double variance_ratio = 0.0;          // Var S_n / n
  double sigma2_green_kubo = 0.0;
  double sigma2_empirical = 0.0;        // Var S_n / n (same data as ratio)
  Normalization normalization = Normalization::empirical;
  double mean_used = 0.0;
  bool mean_is_exact = false;
  double ks_threshold = 0.03;
  double ks_critical_5pct = 0.0;        // i.i.d. 5% critical value, for reference
  bool pass = false;
  std::vector<double> normalized_sums;  // for histogram emission
};

struct CltOptions {
  std::size_t gk_lags = 32;
  std::size_t gk_budget = 100000;
  double ks_threshold = 0.03;
  bool keep_samples = true;
};

// Draws N starts from mu, forms centered Birkhoff sums S_n, normalizes by
// either sqrt(Var S_n) (empirical) or sqrt(n sigma^2_GK), and reports the
// Kolmogorov-Smirnov distance to the standard normal.
template <class System>
CLTReport clt_test(const System& sys, const Observable<typename System::Point>& f, std::size_t n,
                   std::size_t N, Normalization normalization, StreamFactory rng,
                   const ExecPolicy& exec = {}, const CltOptions& opt = {}) {
  if (!f.real_valued) fail(ErrorKind::degenerate_observable, "clt_test: observable must be real");
  CLTReport rep;
  rep.n = n;
  rep.samples = N;
  rep.normalization = normalization;
  rep.ks_threshold = opt.ks_threshold;
  rep.ks_critical_5pct = stats::ks_critical(N, 0.05);

  // sigma^2 via Green-Kubo from an autocorrelation series.
  std::vector<std::size_t> lags(opt.gk_lags + 1);
  for (std::size_t i = 0; i <= opt.gk_lags; ++i) lags[i] = i;
  const auto series =
      correlations::autocorrelation(sys, f, lags, opt.gk_budget, rng.subdomain(1), exec);
  const auto gk = green_kubo_variance(series, opt.gk_lags);
  rep.sigma2_green_kubo = gk.sigma2;

  std::vector<double> sums(N);
  const StreamFactory sum_rng = rng.subdomain(2);
  run_batches(N, correlations::n_batches, exec, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      RngStream stream = sum_rng.stream(i);
      double s = 0.0;
      visit_mu_orbit(sys, stream, n, [&](std::size_t, const auto& pt) { s += f.real(pt); });
      sums[i] = s;
    }
  });

  if (f.exact_mean) {
    rep.mean_used = *f.exact_mean;
    rep.mean_is_exact = true;
  } else {
    rep.mean_used = stats::mean(sums) / static_cast<double>(n);
    rep.mean_is_exact = false;
  }
  for (auto& s : sums) s -= static_cast<double>(n) * rep.mean_used;

  const double var_sn = stats::variance(sums);
  rep.variance_ratio = var_sn / static_cast<double>(n);
  rep.sigma2_empirical = rep.variance_ratio;

  const double tol = 1e-12 * static_cast<double>(n);
  if (!(var_sn > tol) || !(rep.sigma2_green_kubo > 0.0))
    fail(ErrorKind::degenerate_observable,
         "clt_test: variance is degenerate; the CLT in this form needs sigma^2 > 0");

  std::vector<double> z(N);
  const double scale_emp = 1.0 / std::sqrt(var_sn);
  const double scale_gk = 1.0 / std::sqrt(static_cast<double>(n) * rep.sigma2_green_kubo);
  for (std::size_t i = 0; i < N; ++i) z[i] = sums[i] * scale_emp;
  rep.ks_empirical = stats::ks_statistic_normal(z);
  for (std::size_t i = 0; i < N; ++i) z[i] = sums[i] * scale_gk;
  rep.ks_green_kubo = stats::ks_statistic_normal(z);
  rep.ks_statistic =
      normalization == Normalization::empirical ? rep.ks_empirical : rep.ks_green_kubo;
  rep.pass = rep.ks_statistic < rep.ks_threshold;

  if (opt.keep_samples) {
    const double s = normalization == Normalization::empirical ? scale_emp : scale_gk;
    rep.normalized_sums.resize(N);
    for (std::size_t i = 0; i < N; ++i) rep.normalized_sums[i] = sums[i] * s;
  }
  return rep;
}

} // namespace cltlab::clt
