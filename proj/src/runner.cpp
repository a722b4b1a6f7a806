#include "cltlab/runner.hpp"

#include <chrono>
#include <cmath>

#include "cltlab/clt.hpp"
#include "cltlab/observable.hpp"

namespace cltlab::cli {

namespace {

using nlohmann::json;

json series_meta(const ExperimentConfig& cfg, const correlations::CorrelationSeries& s,
                 const std::string& system_name, const std::string& observable) {
  return json{{"system", system_name},
              {"observable", observable},
              {"estimator", s.tag == correlations::EstimatorTag::ensemble ? "ensemble" : "time-average"},
              {"sample_count", s.sample_count},
              {"seed", cfg.seed},
              {"config_hash", hex64(cfg.config_hash())}};
}

// ---- simulate -------------------------------------------------------------

void cmd_simulate(const ExperimentConfig& cfg, RunManifest& manifest, const ExecPolicy&) {
  const StreamFactory rng{cfg.seed, 1};
  const std::size_t steps = cfg.budgets.steps;
  json rep;
  rep["provenance"] = manifest.provenance();
  if (cfg.system.family == "billiard") {
    billiard::Geometry geom = build_geometry(cfg.system);
    RngStream stream = rng.stream(0);
    billiard::CollisionCoordinate c = billiard::sample_srb(geom, stream);
    std::string csv = "step,scatterer_id,r,phi,free_path\n";
    std::size_t done = 0;
    std::string status = "ok";
    for (std::size_t j = 0; j < steps; ++j) {
      try {
        const auto res = billiard::collision_map(geom, c);
        csv += std::to_string(j) + "," + std::to_string(c.scatterer_id) + "," + fmt(c.r) + "," +
               fmt(c.phi) + "," + fmt(res.free_path) + "\n";
        c = res.next;
        ++done;
      } catch (const Error& e) {
        status = std::string("stopped: ") + e.what();
        break;
      }
    }
    manifest.emit("trajectory.csv", csv);
    rep["steps_completed"] = done;
    rep["status"] = status;
  } else if (cfg.system.family == "toral" || cfg.system.family == "cat") {
    const auto sys = build_toral_system(cfg.system);
    RngStream stream = rng.stream(0);
    std::string csv = "step,x1,x2\n";
    visit_mu_orbit(sys, stream, steps, [&](std::size_t j, const TorusPoint& p) {
      csv += std::to_string(j) + "," + fmt(p.x1) + "," + fmt(p.x2) + "\n";
    });
    manifest.emit("trajectory.csv", csv);
    rep["steps_completed"] = steps;
  } else {
    const auto sys = build_interval_system(cfg.system);
    RngStream stream = rng.stream(0);
    std::string csv = "step,x\n";
    visit_mu_orbit(sys, stream, steps, [&](std::size_t j, const UnitIntervalPoint& p) {
      csv += std::to_string(j) + "," + fmt(p.x) + "\n";
    });
    manifest.emit("trajectory.csv", csv);
    rep["steps_completed"] = steps;
  }
  manifest.emit("simulate.json", rep.dump(2) + "\n");
}

// ---- correlations ----------------------------------------------------------

template <class System>
correlations::CorrelationSeries correlation_pipeline(const ExperimentConfig& cfg,
                                                     RunManifest& manifest,
                                                     const ExecPolicy& exec, const System& sys,
                                                     const Observable<typename System::Point>& f,
                                                     const std::string& system_name) {
  const StreamFactory rng{cfg.seed, 2};
  std::vector<std::size_t> lags(cfg.budgets.lags + 1);
  for (std::size_t i = 0; i < lags.size(); ++i) lags[i] = i;
  const auto series =
      correlations::autocorrelation(sys, f, lags, cfg.budgets.samples, rng, exec);
  manifest.emit("series.csv", series_csv(series));
  json rep;
  rep["provenance"] = manifest.provenance();
  rep["meta"] = series_meta(cfg, series, system_name, f.name);
  try {
    const auto fit = correlations::fit_decay_rate(series, 1, cfg.budgets.lags);
    rep["decay_fit"] = {{"rate", fit.rate_hat},
                        {"prefactor", fit.prefactor_hat},
                        {"window", {fit.window_lo, fit.window_hi}},
                        {"rms_log_residual", fit.residual},
                        {"lags_used", fit.lags_used}};
  } catch (const Error& e) {
    rep["decay_fit"] = nullptr;
    rep["decay_fit_note"] = e.what();
  }
  const auto mc = correlations::moment_condition(series, cfg.budgets.lags);
  rep["moment_condition"] = {{"partial_sum", mc.partial_sum},
                             {"tail_fraction", mc.tail_fraction},
                             {"tail_flag", mc.tail_flag}};
  manifest.emit("series.meta.json", rep["meta"].dump(2) + "\n");
  manifest.emit("correlations.json", rep.dump(2) + "\n");
  return series;
}

// Bound-consistency table for a budgeted billiard observable: measured
// |C(n)| against the pair bound at the configured constants. Reported, never
// asserted; the bound constants are external dials.
json billiard_bound_table(const ExperimentConfig& cfg, const billiard::Geometry& geom,
                          const Observable<billiard::CollisionCoordinate>& f,
                          const correlations::CorrelationSeries& series) {
  const StreamFactory rng{cfg.seed, 21};
  const auto fit = billiard::estimate_dynamical_holder(
      geom, f, cfg.budgets.pair_budget, cfg.budgets.separation_cap, rng,
      billiard::HStripParams{cfg.system.k0});
  double sup = 0.0;
  for (std::size_t i = 0; i < 2000; ++i) {
    RngStream stream = rng.subdomain(1).stream(i);
    sup = std::max(sup, std::abs(f(billiard::sample_srb(geom, stream))));
  }
  regularity::Budget budget{fit.K_hat, fit.theta_hat, sup, regularity::HolderClass::both};
  json rows = json::array();
  for (std::size_t i = 0; i < series.lags.size(); ++i) {
    const auto pb =
        regularity::billiard_pair_bound(budget, budget, cfg.billiard_constants, series.lags[i]);
    const double mag = std::abs(series.estimates[i]);
    const bool comparable = series.standard_errors[i] < 0.1 * pb.bound;
    rows.push_back({{"lag", series.lags[i]},
                    {"abs_estimate", mag},
                    {"se", series.standard_errors[i]},
                    {"bound", pb.bound},
                    {"comparable", comparable},
                    {"within", !comparable || mag <= pb.bound}});
  }
  return json{{"budget",
               {{"K", budget.K}, {"theta", budget.theta}, {"sup_norm", budget.sup_norm},
                {"violation_fraction", fit.violation_fraction}}},
              {"rows", rows}};
}

void cmd_correlations(const ExperimentConfig& cfg, RunManifest& manifest, const ExecPolicy& exec) {
  if (cfg.system.family == "billiard") {
    billiard::Geometry geom = build_geometry(cfg.system);
    const auto horizon = billiard::validate_geometry(geom, 2000, StreamFactory{cfg.seed, 29});
    const billiard::System sys(geom);
    const auto f = build_billiard_observable(cfg, geom);
    const auto series = correlation_pipeline(cfg, manifest, exec, sys, f, "billiard");
    json table = billiard_bound_table(cfg, geom, f, series);
    table["horizon"] = horizon.status == billiard::HorizonStatus::suspected_infinite
                           ? "suspected-infinite (results flagged)"
                           : "verified-finite";
    manifest.emit("bound_table.json", table.dump(2) + "\n");
  } else if (cfg.system.family == "toral" || cfg.system.family == "cat") {
    const auto sys = build_toral_system(cfg.system);
    correlation_pipeline(cfg, manifest, exec, sys, build_torus_observable(cfg), sys.name);
  } else {
    const auto sys = build_interval_system(cfg.system);
    correlation_pipeline(cfg, manifest, exec, sys, build_interval_observable(cfg), sys.name);
  }
}

// ---- clt --------------------------------------------------------------------

template <class System>
void clt_pipeline(const ExperimentConfig& cfg, RunManifest& manifest, const ExecPolicy& exec,
                  const System& sys, const Observable<typename System::Point>& f,
                  const std::string& system_name, bool horizon_flag) {
  const StreamFactory rng{cfg.seed, 3};
  const auto mode = cfg.normalization == "green-kubo" ? clt::Normalization::green_kubo
                                                      : clt::Normalization::empirical;
  clt::CltOptions opt;
  opt.gk_lags = cfg.budgets.lags;
  opt.gk_budget = cfg.budgets.samples;
  const auto rep =
      clt::clt_test(sys, f, cfg.budgets.clt_n, cfg.budgets.clt_samples, mode, rng, exec, opt);

  json j;
  j["provenance"] = manifest.provenance();
  j["system"] = system_name;
  j["observable"] = f.name;
  j["n"] = rep.n;
  j["sample_count"] = rep.samples;
  j["ks_statistic"] = rep.ks_statistic;
  j["ks_empirical"] = rep.ks_empirical;
  j["ks_green_kubo"] = rep.ks_green_kubo;
  j["variance_ratio"] = rep.variance_ratio;
  j["sigma2_green_kubo"] = rep.sigma2_green_kubo;
  j["sigma2_empirical"] = rep.sigma2_empirical;
  j["normalization"] = clt::to_string(rep.normalization);
  j["mean_used"] = rep.mean_used;
  j["mean_is_exact"] = rep.mean_is_exact;
  j["ks_threshold"] = rep.ks_threshold;
  j["ks_critical_5pct_iid"] = rep.ks_critical_5pct;
  j["pass"] = rep.pass;
  if (horizon_flag) j["horizon_flag"] = "suspected-infinite table; results are flagged";
  manifest.emit("clt_report.json", j.dump(2) + "\n");
  manifest.emit("histogram.csv",
                histogram_csv(make_histogram(rep.normalized_sums, cfg.budgets.histogram_bins)));
}

void cmd_clt(const ExperimentConfig& cfg, RunManifest& manifest, const ExecPolicy& exec) {
  if (cfg.system.family == "billiard") {
    billiard::Geometry geom = build_geometry(cfg.system);
    const StreamFactory hrng{cfg.seed, 31};
    const auto horizon = billiard::validate_geometry(geom, 2000, hrng);
    const billiard::System sys(geom);
    clt_pipeline(cfg, manifest, exec, sys, build_billiard_observable(cfg, geom), "billiard",
                 horizon.status == billiard::HorizonStatus::suspected_infinite);
  } else if (cfg.system.family == "toral" || cfg.system.family == "cat") {
    const auto sys = build_toral_system(cfg.system);
    clt_pipeline(cfg, manifest, exec, sys, build_torus_observable(cfg), sys.name, false);
  } else {
    const auto sys = build_interval_system(cfg.system);
    clt_pipeline(cfg, manifest, exec, sys, build_interval_observable(cfg), sys.name, false);
  }
}

// ---- bernstein ---------------------------------------------------------------

template <class System>
void bernstein_pipeline(const ExperimentConfig& cfg, RunManifest& manifest,
                        const ExecPolicy& exec, const System& sys,
                        const Observable<typename System::Point>& f,
                        const std::string& system_name) {
  const StreamFactory rng{cfg.seed, 4};
  const auto sched = clt::bernstein_schedule(cfg.schedule.n, cfg.schedule.a, cfg.schedule.b);
  const auto ctx = clt::make_block_context(sys, f, sched, rng.subdomain(1));

  json j;
  j["provenance"] = manifest.provenance();
  j["system"] = system_name;
  j["observable"] = f.name;
  j["schedule"] = {{"n", sched.n},         {"a", sched.a},
                   {"b", sched.b},         {"p", sched.p},
                   {"q", sched.q},         {"k", sched.k},
                   {"covered_fraction", sched.covered_fraction()},
                   {"long_short_ratio", sched.long_short_ratio()}};
  j["var_sp"] = ctx.var_sp;
  j["mean_used"] = ctx.mean;
  j["mean_is_exact"] = ctx.mean_is_exact;

  json gaps = json::array();
  const auto scan =
      clt::block_gap_scan(sys, f, cfg.schedule.t_grid, ctx, cfg.budgets.samples,
                          rng.subdomain(2), exec);
  for (std::size_t t = 0; t < scan.size(); ++t)
    gaps.push_back({{"t", cfg.schedule.t_grid[t]},
                    {"gap", scan[t].gap},
                    {"se", scan[t].standard_error},
                    {"max_abs_mean_w", scan[t].max_abs_mean_w},
                    {"samples", scan[t].sample_count}});
  j["block_gaps"] = gaps;

  const std::size_t id_budget = std::min<std::size_t>(cfg.budgets.samples, 1000);
  const auto ident =
      correlations::telescoping_identity_check(sys, f, cfg.schedule.t_grid.front(), ctx,
                                               id_budget, rng.subdomain(3));
  j["telescoping_identity"] = {{"direct_re", ident.direct.real()},
                               {"direct_im", ident.direct.imag()},
                               {"telescoped_re", ident.telescoped.real()},
                               {"telescoped_im", ident.telescoped.imag()},
                               {"abs_difference", ident.abs_difference},
                               {"samples", ident.sample_count}};

  const std::size_t tg_budget = std::min<std::size_t>(cfg.budgets.samples, 20000);
  const auto tg = correlations::telescoping_gap(sys, f, cfg.schedule.t_grid.front(), ctx,
                                                tg_budget, rng.subdomain(4), exec);
  j["telescoping_gap_sum"] = tg.total;
  j["telescoping_gap_samples"] = tg.sample_count;
  manifest.emit("bernstein.json", j.dump(2) + "\n");
}

void cmd_bernstein(const ExperimentConfig& cfg, RunManifest& manifest, const ExecPolicy& exec) {
  if (cfg.system.family == "billiard") {
    const billiard::Geometry geom = build_geometry(cfg.system);
    const billiard::System sys(geom);
    bernstein_pipeline(cfg, manifest, exec, sys, build_billiard_observable(cfg, geom), "billiard");
  } else if (cfg.system.family == "toral" || cfg.system.family == "cat") {
    const auto sys = build_toral_system(cfg.system);
    bernstein_pipeline(cfg, manifest, exec, sys, build_torus_observable(cfg), sys.name);
  } else {
    const auto sys = build_interval_system(cfg.system);
    bernstein_pipeline(cfg, manifest, exec, sys, build_interval_observable(cfg), sys.name);
  }
}

// ---- transfer -----------------------------------------------------------------

void cmd_transfer(const ExperimentConfig& cfg, RunManifest& manifest, const ExecPolicy&) {
  const StreamFactory rng{cfg.seed, 5};
  const auto sys = build_interval_system(cfg.system);
  const auto f = build_interval_observable(cfg);
  const std::size_t grid = cfg.budgets.grid_size;

  json j;
  j["provenance"] = manifest.provenance();
  j["system"] = sys.name;
  j["lambda"] = sys.expansion;

  // Ulam invariant density, serialized in the grid-function format.
  const std::size_t bins = std::min<std::size_t>(grid, 4096);
  const auto phi_bins = transfer::ulam_density(sys, bins);
  std::string phics = "x,re,im\n";
  for (std::size_t i = 0; i < phi_bins.size; ++i)
    phics += fmt(phi_bins.node(i)) + "," + fmt(phi_bins.values[i].real()) + "," +
             fmt(phi_bins.values[i].imag()) + "\n";
  manifest.emit("ulam_density.csv", phics);
  if (cfg.system.dump_ulam_matrix) {
    std::string mcsv = "from,to,mass\n";
    for (const auto& t : transfer::ulam_matrix(sys, bins))
      mcsv += std::to_string(t.from) + "," + std::to_string(t.to) + "," + fmt(t.mass) + "\n";
    manifest.emit("ulam_matrix.csv", mcsv);
  }
  double phi_dev_from_one = 0.0;
  for (const auto& v : phi_bins.values)
    phi_dev_from_one = std::max(phi_dev_from_one, std::abs(v - std::complex<double>(1.0, 0.0)));
  j["ulam"] = {{"bins", bins}, {"max_deviation_from_one", phi_dev_from_one}};

  // Identity L(f o F . g) = f . Lg under grid refinement. The diagnostic
  // profile is the smooth cos wave: a jump observable pins the sup-norm
  // deviation at half its jump height regardless of the grid.
  json ident = json::array();
  for (std::size_t g = grid / 4; g <= grid; g *= 2) {
    const auto fg = transfer::GridFunction::from_function(
        g, [](double x) { return std::complex<double>(std::cos(two_pi * x), 0.0); }, "cos");
    const auto gg = transfer::GridFunction::constant(g, {1.0, 0.0}, "1");
    ident.push_back({{"grid", g}, {"deviation", transfer::verify_transfer_identity(sys, fg, gg)}});
  }
  j["identity_deviations"] = ident;

  // Lasota-Yorke residuals on random piecewise-linear functions; the map must
  // have lambda > 2, so square it if needed.
  const IntervalMap ly_sys = sys.expansion > 2.0 ? sys : iterate_power(sys, 2);
  json ly = json::array();
  RngStream lyr = rng.stream(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = transfer::GridFunction::zeros(grid, "random-pl");
    const int knots = 8;
    std::vector<double> kx(knots), ky(knots);
    for (int i = 0; i < knots; ++i) ky[i] = lyr.uniform(-1.0, 1.0);
    for (std::size_t idx = 0; idx < grid; ++idx) {
      const double x = g.node(idx) * (knots - 1);
      const int seg = std::min<int>(static_cast<int>(x), knots - 2);
      const double t = x - seg;
      g.values[idx] = ky[seg] * (1.0 - t) + ky[seg + 1] * t;
    }
    const auto res = transfer::lasota_yorke_residual(ly_sys, g, cfg.pw_constants.A);
    ly.push_back({{"residual", res.residual},
                  {"allowance", res.grid_allowance},
                  {"tv_g", res.tv_g},
                  {"tv_lg", res.tv_lg},
                  {"within", res.residual <= res.grid_allowance}});
  }
  j["lasota_yorke"] = ly;
  j["lasota_yorke_lambda"] = ly_sys.expansion;

  // Invariant density on the working grid: exactly 1 for Lebesgue-preserving
  // maps, the Ulam density resampled onto the grid otherwise.
  transfer::GridFunction phi_grid = transfer::GridFunction::constant(grid, {1.0, 0.0}, "phi");
  if (!sys.lebesgue_invariant) {
    phi_grid = transfer::GridFunction::from_function(
        grid, [&](double x) { return phi_bins.interpolate(x); }, "phi-ulam");
    const double mass = phi_grid.integral().real();
    for (auto& v : phi_grid.values) v /= mass;
  }

  // Block-variable variation recursion against the analytic envelope.
  const auto sched = clt::bernstein_schedule(cfg.schedule.n, cfg.schedule.a, cfg.schedule.b);
  const auto ctx = clt::make_block_context(ly_sys, f, sched, rng.subdomain(2));
  const double scale = ctx.scale(cfg.schedule.t_grid.front());
  const auto g_factor = transfer::GridFunction::from_function(
      grid, [&](double x) { return std::polar(1.0, scale * (f(UnitIntervalPoint{x}).real() - ctx.mean)); },
      "block-factor");
  const auto recursion =
      transfer::variation_recursion(ly_sys, g_factor, phi_grid, std::min<std::size_t>(sched.p, 64),
                                    cfg.pw_constants.A);
  std::string rcsv = "p,measured_tv,bound\n";
  bool rec_ok = true;
  for (const auto& step : recursion) {
    rcsv += std::to_string(step.p) + "," + fmt(step.measured_tv) + "," + fmt(step.bound) + "\n";
    rec_ok = rec_ok && step.measured_tv <= step.bound + 8.0 * step.bound / static_cast<double>(grid) + 1e-9;
  }
  manifest.emit("variation_recursion.csv", rcsv);
  j["variation_recursion_within_bound"] = rec_ok;

  // Multiple-correlation gap decay in q (grid quadrature) and its rho^q fit.
  const auto base_ctx = clt::make_block_context(sys, f, sched, rng.subdomain(3));
  const double base_scale = base_ctx.scale(cfg.schedule.t_grid.back());
  const auto base_factor = transfer::GridFunction::from_function(
      grid,
      [&](double x) { return std::polar(1.0, base_scale * (f(UnitIntervalPoint{x}).real() - base_ctx.mean)); },
      "block-factor");
  const auto decay = transfer::gap_decay_in_q(sys, base_factor, phi_grid, sched.p,
                                              {1, 2, 3, 4, 5, 6});
  json pts = json::array();
  for (const auto& p : decay.points) pts.push_back({{"q", p.q}, {"gap", p.gap}});
  j["gap_decay"] = {{"points", pts},
                    {"rate", decay.rate},
                    {"prefactor", decay.prefactor},
                    {"log_residual", decay.log_residual},
                    {"fitted_K", decay.fitted_K}};

  if (sys.dyadic == DyadicKind::doubling && sys.iterate_power == 1) {
    const auto tvs = transfer::block_variation_sequence(sys, base_factor, phi_grid, sched.p);
    const double bound = transfer::doubling_block_tv_bound(transfer::total_variation(base_factor),
                                                           sched.p);
    j["doubling_block_tv"] = {{"p", sched.p},
                              {"measured", tvs[sched.p - 1]},
                              {"bound", bound},
                              {"within", tvs[sched.p - 1] <= bound}};
  }
  manifest.emit("transfer.json", j.dump(2) + "\n");
}

// ---- billiard-check -------------------------------------------------------------

void cmd_billiard_check(const ExperimentConfig& cfg, RunManifest& manifest,
                        const ExecPolicy& exec) {
  const StreamFactory rng{cfg.seed, 6};
  billiard::Geometry geom = build_geometry(cfg.system);

  json j;
  j["provenance"] = manifest.provenance();

  const auto horizon = billiard::validate_geometry(
      geom, std::min<std::size_t>(cfg.budgets.samples, 4000), rng.subdomain(1));
  j["horizon"] = {{"samples", horizon.samples},
                  {"cap", horizon.cap},
                  {"max_free_path", horizon.max_free_path},
                  {"exceeded", horizon.exceeded},
                  {"min_clearance", horizon.min_clearance},
                  {"status", horizon.status == billiard::HorizonStatus::suspected_infinite
                                 ? "suspected-infinite"
                                 : "verified-finite"}};

  const auto mfp =
      billiard::mean_free_path_estimate(geom, cfg.budgets.samples, rng.subdomain(2), exec);
  j["mean_free_path"] = {{"mean", mfp.mean},
                         {"se", mfp.standard_error},
                         {"exact", mfp.exact},
                         {"samples", mfp.samples},
                         {"cap_hits", mfp.cap_hits},
                         {"relative_error", std::abs(mfp.mean - mfp.exact) / mfp.exact}};

  // SRB invariance: push samples through the map once, KS of the phi marginal
  // against the cos/2 law.
  {
    const StreamFactory srng = rng.subdomain(3);
    std::vector<double> phis;
    phis.reserve(cfg.budgets.samples);
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < cfg.budgets.samples; ++i) {
      RngStream stream = srng.stream(i);
      const auto c = billiard::sample_srb(geom, stream);
      try {
        phis.push_back(billiard::collision_map(geom, c).next.phi);
      } catch (const Error&) {
        ++skipped;
      }
    }
    const double ks = stats::ks_statistic(
        phis, [](double phi) { return 0.5 * (std::sin(phi) + 1.0); });
    j["srb_invariance"] = {{"ks", ks},
                           {"threshold_1pct", stats::ks_critical(phis.size(), 0.01)},
                           {"samples", phis.size()},
                           {"skipped", skipped},
                           {"pass", ks < stats::ks_critical(phis.size(), 0.01)}};
  }

  // Time-reversal involution residual over 1000 collisions.
  {
    const StreamFactory trng = rng.subdomain(4);
    double worst = 0.0;
    std::size_t tested = 0, skipped = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
      RngStream stream = trng.stream(i);
      const auto x = billiard::sample_srb(geom, stream);
      try {
        const auto y = billiard::collision_map(geom, x);
        const auto z = billiard::collision_map_reverse(geom, y.next);
        double res = std::abs(z.next.phi - x.phi);
        const double perim = 2.0 * 3.14159265358979323846 * geom.scatterers[x.scatterer_id].radius;
        double dr = std::abs(z.next.r - x.r);
        dr = std::min(dr, perim - dr);
        res = std::max(res, dr);
        if (z.next.scatterer_id != x.scatterer_id) res = 1.0;
        worst = std::max(worst, res);
        ++tested;
      } catch (const Error&) {
        ++skipped;
      }
    }
    j["time_reversal"] = {{"max_residual", worst}, {"tested", tested}, {"skipped", skipped}};
  }

  const billiard::HStripParams params{cfg.system.k0};
  const auto fit = billiard::estimate_dynamical_holder(
      geom, billiard::make_reflection_angle_observable(), cfg.budgets.pair_budget,
      cfg.budgets.separation_cap, rng.subdomain(5), params);
  j["holder_fit"] = {{"observable", "reflection-angle"},
                     {"K_hat", fit.K_hat},
                     {"theta_hat", fit.theta_hat},
                     {"violation_fraction", fit.violation_fraction},
                     {"pairs_used", fit.pairs_used},
                     {"pairs_skipped", fit.pairs_skipped},
                     {"cap_exceeded", fit.cap_exceeded},
                     {"bins_used", fit.bins_used}};

  manifest.emit("billiard.json", j.dump(2) + "\n");
}

// ---- regularity ------------------------------------------------------------------

void cmd_regularity(const ExperimentConfig& cfg, RunManifest& manifest, const ExecPolicy&) {
  namespace reg = cltlab::regularity;
  const auto& in = cfg.regularity_inputs;
  json j;
  j["provenance"] = manifest.provenance();

  auto budget_json = [](const reg::Budget& b) {
    return json{{"K", b.K}, {"theta", b.theta}, {"sup_norm", b.sup_norm}};
  };
  j["inputs"] = {{"f", budget_json(in.f)}, {"g", budget_json(in.g)}};

  const auto fg = reg::product_budget(
      reg::Budget{in.f.K, in.f.theta, in.f.sup_norm, reg::HolderClass::both},
      reg::Budget{in.g.K, in.g.theta, in.g.sup_norm, reg::HolderClass::both});
  j["product"] = budget_json(fg);

  const auto pulled = reg::pullback_budget(in.g, 1, reg::StepDirection::forward);
  j["pullback_one_step"] = budget_json(pulled);

  const auto multi = reg::multitime_budget({in.g, in.g}, {0, 1});
  j["multitime_two_factors"] = budget_json(multi);

  json pair_rows = json::array();
  for (std::size_t n = 0; n <= in.n_max; ++n) {
    const auto pb = reg::billiard_pair_bound(in.f, in.g, cfg.billiard_constants, n);
    pair_rows.push_back({{"n", n}, {"bound", pb.bound}, {"rate", pb.rate}});
  }
  j["billiard_pair_bound"] = pair_rows;

  json multi_rows = json::array();
  for (std::size_t n = 0; n <= in.n_max; ++n)
    multi_rows.push_back(
        {{"n", n},
         {"bound", reg::billiard_multi_bound(in.f, in.r, in.g, in.k, cfg.billiard_constants, n)}});
  j["billiard_multi_bound"] = {{"r", in.r}, {"k", in.k}, {"rows", multi_rows}};

  reg::AnosovBudget af;
  af.sup_norm = in.f.sup_norm;
  af.l1_norm = in.f.sup_norm * cfg.anosov_constants.volume_of_one;
  af.u_seminorm = in.f.K;
  reg::AnosovBudget ag;
  ag.sup_norm = in.g.sup_norm;
  ag.l1_norm = in.g.sup_norm * cfg.anosov_constants.volume_of_one;
  ag.s_seminorm = in.g.K;
  const auto aprod = reg::anosov_product_budget({ag, ag}, reg::ManifoldSide::stable,
                                                cfg.anosov_constants.volume_of_one);
  j["anosov_product_s_norm"] = aprod.s_norm();
  json anosov_rows = json::array();
  for (std::size_t n = 0; n <= in.n_max; ++n)
    anosov_rows.push_back({{"n", n}, {"bound", reg::anosov_pair_bound(af, ag, cfg.anosov_constants, n)}});
  j["anosov_pair_bound"] = anosov_rows;

  manifest.emit("regularity.json", j.dump(2) + "\n");
}

} // namespace

Command parse_command(const std::string& name) {
  if (name == "simulate") return Command::simulate;
  if (name == "correlations") return Command::correlations;
  if (name == "clt") return Command::clt;
  if (name == "bernstein") return Command::bernstein;
  if (name == "transfer") return Command::transfer_cmd;
  if (name == "billiard-check") return Command::billiard_check;
  if (name == "regularity") return Command::regularity_cmd;
  fail(ErrorKind::config, "unknown command '" + name + "'");
}

void run(Command cmd, const ExperimentConfig& cfg) {
  if (!cfg.seed_set)
    fail(ErrorKind::config, "config.seed: a root seed is required (no wall-clock seeding)");
  const auto started = std::chrono::steady_clock::now();
  RunManifest manifest(cfg.output_dir, cfg.config_hash(), cfg.seed);
  const ExecPolicy exec{cfg.workers};
  switch (cmd) {
    case Command::simulate: cmd_simulate(cfg, manifest, exec); break;
    case Command::correlations: cmd_correlations(cfg, manifest, exec); break;
    case Command::clt: cmd_clt(cfg, manifest, exec); break;
    case Command::bernstein: cmd_bernstein(cfg, manifest, exec); break;
    case Command::transfer_cmd: cmd_transfer(cfg, manifest, exec); break;
    case Command::billiard_check: cmd_billiard_check(cfg, manifest, exec); break;
    case Command::regularity_cmd: cmd_regularity(cfg, manifest, exec); break;
  }
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);
  manifest.set_wall_seconds(elapsed.count());
  manifest.finalize();
}

int run_guarded(Command cmd, const ExperimentConfig& cfg) noexcept {
  try {
    run(cmd, cfg);
    return 0;
  } catch (const Error& e) {
    int code = 3;
    if (e.kind() == ErrorKind::config) code = 2;
    if (e.kind() == ErrorKind::degenerate_observable) code = 4;
    try {
      ensure_directory(cfg.output_dir);
      nlohmann::json err{{"error", e.what()}, {"exit_code", code}};
      write_text_file(cfg.output_dir + "/error.json", err.dump(2) + "\n");
    } catch (...) {
    }
    std::fprintf(stderr, "error: %s\n", e.what());
    return code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

} // namespace cltlab::cli
