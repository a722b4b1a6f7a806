#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "cltlab/bernstein.hpp"
#include "cltlab/error.hpp"
#include "cltlab/observable.hpp"
#include "cltlab/parallel.hpp"
#include "cltlab/rng.hpp"
#include "cltlab/stats.hpp"
#include "cltlab/systems.hpp"

namespace cltlab::correlations {

enum class EstimatorTag { ensemble, time_average };

// Lagged correlation estimates with Monte Carlo standard errors.
struct CorrelationSeries {
  std::vector<std::size_t> lags;
  std::vector<std::complex<double>> estimates;
  std::vector<double> standard_errors;
  std::size_t sample_count = 0;
  EstimatorTag tag = EstimatorTag::ensemble;

  std::size_t index_of(std::size_t lag) const {
    for (std::size_t i = 0; i < lags.size(); ++i)
      if (lags[i] == lag) return i;
    fail(ErrorKind::domain, "CorrelationSeries: lag not present");
  }
  std::complex<double> at(std::size_t lag) const { return estimates[index_of(lag)]; }
};

// Standard errors everywhere come from 32 batch means.
inline constexpr std::size_t n_batches = 32;

// <f . g o F^n> - <f><g> for each requested lag. Ensemble mode draws `budget`
// independent mu-starts (one RNG stream per sample); time-average mode runs a
// single orbit of `budget` steps. Batches are contiguous sample (or time)
// blocks; the headline estimate uses the full-sample sums, combined in batch
// order so the result is independent of the worker count.
template <class System>
CorrelationSeries pair_correlation(const System& sys,
                                   const Observable<typename System::Point>& f,
                                   const Observable<typename System::Point>& g,
                                   std::vector<std::size_t> lags, std::size_t budget,
                                   StreamFactory rng, const ExecPolicy& exec = {},
                                   EstimatorTag tag = EstimatorTag::ensemble) {
  if (lags.empty()) fail(ErrorKind::domain, "pair_correlation: no lags requested");
  for (std::size_t l : lags)
    if (!lags.empty() && l > 100000000)
      fail(ErrorKind::domain, "pair_correlation: lag out of range");
  if (budget < 1000) fail(ErrorKind::insufficient_data, "pair_correlation: budget must be >= 1000");
  const std::size_t max_lag = *std::max_element(lags.begin(), lags.end());
  const std::size_t L = lags.size();

  struct BatchAcc {
    std::vector<std::complex<double>> fg;
    std::complex<double> fsum{0.0, 0.0};
    std::complex<double> gsum{0.0, 0.0};
    std::size_t count = 0;
  };
  std::vector<BatchAcc> acc(n_batches);
  for (auto& a : acc) a.fg.assign(L, {0.0, 0.0});

  if (tag == EstimatorTag::ensemble) {
    run_batches(budget, n_batches, exec, [&](std::size_t b, std::size_t lo, std::size_t hi) {
      auto& a = acc[b];
      std::vector<std::complex<double>> gs(max_lag + 1);
      for (std::size_t i = lo; i < hi; ++i) {
        RngStream stream = rng.stream(i);
        std::complex<double> f0;
        visit_mu_orbit(sys, stream, max_lag + 1, [&](std::size_t j, const auto& pt) {
          if (j == 0) f0 = f(pt);
          gs[j] = g(pt);
        });
        a.fsum += f0;
        a.gsum += gs[0];
        for (std::size_t li = 0; li < L; ++li) a.fg[li] += f0 * gs[lags[li]];
        ++a.count;
      }
    });
  } else {
    // One long orbit; f and g are tabulated along it first.
    RngStream stream = rng.stream(0);
    std::vector<std::complex<double>> fv(budget), gv(budget + max_lag);
    visit_mu_orbit(sys, stream, budget + max_lag, [&](std::size_t j, const auto& pt) {
      if (j < budget) fv[j] = f(pt);
      gv[j] = g(pt);
    });
    for (std::size_t b = 0; b < n_batches; ++b) {
      auto& a = acc[b];
      const std::size_t lo = budget * b / n_batches;
      const std::size_t hi = budget * (b + 1) / n_batches;
      for (std::size_t j = lo; j < hi; ++j) {
        a.fsum += fv[j];
        a.gsum += gv[j];
        for (std::size_t li = 0; li < L; ++li) a.fg[li] += fv[j] * gv[j + lags[li]];
        ++a.count;
      }
    }
  }

  CorrelationSeries out;
  out.lags = std::move(lags);
  out.estimates.resize(L);
  out.standard_errors.resize(L);
  out.sample_count = budget;
  out.tag = tag;

  std::complex<double> fs{0.0, 0.0}, gs{0.0, 0.0};
  std::size_t total = 0;
  for (const auto& a : acc) {
    fs += a.fsum;
    gs += a.gsum;
    total += a.count;
  }
  const double n = static_cast<double>(total);
  for (std::size_t li = 0; li < L; ++li) {
    std::complex<double> fgsum{0.0, 0.0};
    for (const auto& a : acc) fgsum += a.fg[li];
    out.estimates[li] = fgsum / n - (fs / n) * (gs / n);
    std::vector<std::complex<double>> per_batch;
    per_batch.reserve(n_batches);
    for (const auto& a : acc) {
      if (a.count == 0) continue;
      const double nb = static_cast<double>(a.count);
      per_batch.push_back(a.fg[li] / nb - (a.fsum / nb) * (a.gsum / nb));
    }
    out.standard_errors[li] = stats::batch_standard_error(
        std::span<const std::complex<double>>(per_batch.data(), per_batch.size()));
  }
  return out;
}

template <class System>
CorrelationSeries autocorrelation(const System& sys,
                                  const Observable<typename System::Point>& f,
                                  std::vector<std::size_t> lags, std::size_t budget,
                                  StreamFactory rng, const ExecPolicy& exec = {},
                                  EstimatorTag tag = EstimatorTag::ensemble) {
  return pair_correlation(sys, f, f, std::move(lags), budget, rng, exec, tag);
}

struct DecayFit {
  double rate_hat = 1.0;       // in (0,1]
  double prefactor_hat = 1.0;
  std::size_t window_lo = 0;
  std::size_t window_hi = 0;
  double residual = 0.0;       // RMS deviation of log|estimate|
  std::size_t lags_used = 0;
};

// Least squares on log|estimate| vs lag, restricted to lags inside the window
// whose estimate stands above twice its standard error (never fit the noise
// floor).
inline DecayFit fit_decay_rate(const CorrelationSeries& series, std::size_t window_lo,
                               std::size_t window_hi) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < series.lags.size(); ++i) {
    const std::size_t lag = series.lags[i];
    if (lag < window_lo || lag > window_hi) continue;
    const double mag = std::abs(series.estimates[i]);
    if (mag <= 2.0 * series.standard_errors[i] || mag <= 0.0) continue;
    xs.push_back(static_cast<double>(lag));
    ys.push_back(std::log(mag));
  }
  if (xs.size() < 3)
    fail(ErrorKind::insufficient_data,
         "fit_decay_rate: fewer than 3 significant lags in window (series at noise floor)");
  const auto line = stats::fit_line(xs, ys);
  DecayFit fit;
  fit.rate_hat = std::min(std::exp(line.slope), 1.0);
  fit.prefactor_hat = std::exp(line.intercept);
  fit.window_lo = window_lo;
  fit.window_hi = window_hi;
  fit.residual = line.rms_residual;
  fit.lags_used = xs.size();
  return fit;
}

struct MomentCondition {
  double partial_sum = 0.0;     // sum_{n=1..cutoff} n |C(n)|
  double tail_fraction = 0.0;   // contribution of the last tenth of the range
  bool tail_flag = false;       // raised when the tail carries > 5%
};

inline MomentCondition moment_condition(const CorrelationSeries& series, std::size_t cutoff) {
  for (std::size_t lag = 1; lag <= cutoff; ++lag) series.index_of(lag); // must cover 1..cutoff
  MomentCondition mc;
  const std::size_t tail_start = cutoff - cutoff / 10;
  double tail = 0.0;
  for (std::size_t lag = 1; lag <= cutoff; ++lag) {
    const double term = static_cast<double>(lag) * std::abs(series.at(lag));
    mc.partial_sum += term;
    if (lag > tail_start) tail += term;
  }
  mc.tail_fraction = mc.partial_sum > 0.0 ? tail / mc.partial_sum : 0.0;
  mc.tail_flag = mc.partial_sum > 0.0 && mc.tail_fraction > 0.05;
  return mc;
}

template <class Point>
struct TimedObservable {
  Observable<Point> f;
  std::size_t offset = 0;
};

struct ScalarEstimate {
  std::complex<double> value{0.0, 0.0};
  double standard_error = 0.0;
  std::size_t sample_count = 0;
};

// <prod_j f_j o F^{i_j}> - prod_j <f_j>, ensemble estimate.
template <class System>
ScalarEstimate multiple_correlation(const System& sys,
                                    const std::vector<TimedObservable<typename System::Point>>& terms,
                                    std::size_t budget, StreamFactory rng,
                                    const ExecPolicy& exec = {}) {
  if (terms.empty()) fail(ErrorKind::domain, "multiple_correlation: no observables");
  for (std::size_t i = 1; i < terms.size(); ++i)
    if (!(terms[i].offset > terms[i - 1].offset))
      fail(ErrorKind::domain, "multiple_correlation: offsets must be ascending");
  if (budget < 1000)
    fail(ErrorKind::insufficient_data, "multiple_correlation: budget must be >= 1000");
  const std::size_t span = terms.back().offset + 1;
  const std::size_t m = terms.size();

  struct BatchAcc {
    std::complex<double> prod{0.0, 0.0};
    std::vector<std::complex<double>> singles;
    std::size_t count = 0;
  };
  std::vector<BatchAcc> acc(n_batches);
  for (auto& a : acc) a.singles.assign(m, {0.0, 0.0});

  run_batches(budget, n_batches, exec, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    auto& a = acc[b];
    std::vector<std::complex<double>> vals(m);
    for (std::size_t i = lo; i < hi; ++i) {
      RngStream stream = rng.stream(i);
      std::size_t next = 0;
      visit_mu_orbit(sys, stream, span, [&](std::size_t j, const auto& pt) {
        while (next < m && terms[next].offset == j) {
          vals[next] = terms[next].f(pt);
          ++next;
        }
      });
      std::complex<double> prod{1.0, 0.0};
      for (std::size_t t = 0; t < m; ++t) {
        prod *= vals[t];
        a.singles[t] += vals[t];
      }
      a.prod += prod;
      ++a.count;
    }
  });

  auto statistic = [&](const std::complex<double>& prod_sum,
                       const std::vector<std::complex<double>>& single_sums, double n) {
    std::complex<double> pm{1.0, 0.0};
    for (const auto& s : single_sums) pm *= s / n;
    return prod_sum / n - pm;
  };

  std::complex<double> prod_sum{0.0, 0.0};
  std::vector<std::complex<double>> single_sums(m, {0.0, 0.0});
  std::size_t total = 0;
  std::vector<std::complex<double>> per_batch;
  for (const auto& a : acc) {
    prod_sum += a.prod;
    for (std::size_t t = 0; t < m; ++t) single_sums[t] += a.singles[t];
    total += a.count;
    if (a.count > 0)
      per_batch.push_back(statistic(a.prod, a.singles, static_cast<double>(a.count)));
  }
  ScalarEstimate out;
  out.value = statistic(prod_sum, single_sums, static_cast<double>(total));
  out.standard_error = stats::batch_standard_error(
      std::span<const std::complex<double>>(per_batch.data(), per_batch.size()));
  out.sample_count = total;
  return out;
}

struct TelescopingGaps {
  std::vector<double> gaps;             // |<w1 . W_r o F^{p+q}> - <w1><W_r>|, r = 2..k
  std::vector<double> standard_errors;
  double total = 0.0;                   // sum of the gaps
  std::size_t sample_count = 0;
};

// Per-r gaps of the telescoping decomposition. With W_r = w_1...w_{r-1} and
// w_{i+1} = w_i o F^{p+q}, the product w_1 . W_r o F^{p+q} equals w_1...w_r,
// so everything reduces to means of exp(i c (s_0+...+s_{r-1})) over prefix
// block sums.
template <class System>
TelescopingGaps telescoping_gap(const System& sys,
                                const Observable<typename System::Point>& f, double t,
                                const clt::BlockContext& ctx, std::size_t budget,
                                StreamFactory rng, const ExecPolicy& exec = {}) {
  const auto& sched = ctx.schedule;
  const std::size_t k = sched.k;
  const double c = ctx.scale(t);

  struct BatchAcc {
    std::vector<std::complex<double>> prefix_mean; // index r: <w_1...w_r>, r=1..k
    std::size_t count = 0;
  };
  std::vector<BatchAcc> acc(n_batches);
  for (auto& a : acc) a.prefix_mean.assign(k + 1, {0.0, 0.0});

  run_batches(budget, n_batches, exec, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    auto& a = acc[b];
    std::vector<double> sums(k);
    for (std::size_t i = lo; i < hi; ++i) {
      RngStream stream = rng.stream(i);
      clt::sample_block_sums(sys, f, ctx, stream, sums);
      double phase = 0.0;
      for (std::size_t r = 1; r <= k; ++r) {
        phase += c * sums[r - 1];
        a.prefix_mean[r] += std::polar(1.0, phase);
      }
      ++a.count;
    }
  });

  std::vector<std::complex<double>> prefix(k + 1, {0.0, 0.0});
  std::size_t total = 0;
  for (const auto& a : acc) {
    for (std::size_t r = 1; r <= k; ++r) prefix[r] += a.prefix_mean[r];
    total += a.count;
  }
  for (std::size_t r = 1; r <= k; ++r) prefix[r] /= static_cast<double>(total);

  TelescopingGaps out;
  out.sample_count = total;
  out.gaps.resize(k - 1);
  out.standard_errors.resize(k - 1);
  for (std::size_t r = 2; r <= k; ++r) {
    out.gaps[r - 2] = std::abs(prefix[r] - prefix[1] * prefix[r - 1]);
    std::vector<double> per_batch;
    for (const auto& a : acc) {
      if (a.count == 0) continue;
      const double nb = static_cast<double>(a.count);
      per_batch.push_back(
          std::abs(a.prefix_mean[r] / nb - (a.prefix_mean[1] / nb) * (a.prefix_mean[r - 1] / nb)));
    }
    out.standard_errors[r - 2] = stats::batch_standard_error(
        std::span<const double>(per_batch.data(), per_batch.size()));
    out.total += out.gaps[r - 2];
  }
  return out;
}

struct TelescopingIdentity {
  std::complex<double> direct{0.0, 0.0};      // <w_1...w_k> - prod_r <w_r>
  std::complex<double> telescoped{0.0, 0.0};  // sum_r prod_{i<r}<w_i> [<w_r..w_k> - <w_r><w_{r+1}..w_k>]
  double abs_difference = 0.0;
  std::size_t sample_count = 0;
};

// Evaluates both sides of the telescoping decomposition on the SAME samples,
// where it is an algebraic identity of the empirical means and must hold to
// rounding accuracy regardless of the budget.
template <class System>
TelescopingIdentity telescoping_identity_check(const System& sys,
                                               const Observable<typename System::Point>& f,
                                               double t, const clt::BlockContext& ctx,
                                               std::size_t budget, StreamFactory rng) {
  const auto& sched = ctx.schedule;
  const std::size_t k = sched.k;
  const double c = ctx.scale(t);

  std::vector<std::complex<double>> w_mean(k + 1, {0.0, 0.0});      // <w_r>
  std::vector<std::complex<double>> suffix_mean(k + 2, {0.0, 0.0}); // <w_r...w_k>
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < budget; ++i) {
    RngStream stream = rng.stream(i);
    clt::sample_block_sums(sys, f, ctx, stream, sums);
    double suffix_phase = 0.0;
    for (std::size_t r = k; r >= 1; --r) {
      w_mean[r] += std::polar(1.0, c * sums[r - 1]);
      suffix_phase += c * sums[r - 1];
      suffix_mean[r] += std::polar(1.0, suffix_phase);
    }
  }
  const double n = static_cast<double>(budget);
  for (std::size_t r = 1; r <= k; ++r) {
    w_mean[r] /= n;
    suffix_mean[r] /= n;
  }
  suffix_mean[k + 1] = {1.0, 0.0}; // empty product placeholder (unused weightless)

  TelescopingIdentity out;
  out.sample_count = budget;
  std::complex<double> prod_w{1.0, 0.0};
  for (std::size_t r = 1; r <= k; ++r) prod_w *= w_mean[r];
  out.direct = suffix_mean[1] - prod_w;

  std::complex<double> head{1.0, 0.0}; // prod_{i<r} <w_i>
  for (std::size_t r = 1; r <= k - 1; ++r) {
    const std::complex<double> bracket = suffix_mean[r] - w_mean[r] * suffix_mean[r + 1];
    out.telescoped += head * bracket;
    head *= w_mean[r];
  }
  // r = k term: <w_k..w_k> - <w_k> * (empty) collapses, bracket is zero.
  out.abs_difference = std::abs(out.direct - out.telescoped);
  return out;
}

} // namespace cltlab::correlations
