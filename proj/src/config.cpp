#include "cltlab/config.hpp"

#include <fstream>

#include "cltlab/observable.hpp"

namespace cltlab::cli {

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& field, const std::string& why) {
  fail(ErrorKind::config, "config." + field + ": " + why);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_fail(key, "has the wrong type");
  }
}

} // namespace

std::uint64_t ExperimentConfig::config_hash() const {
  // FNV-1a over the canonical dump plus the effective seed. The destination
  // directory and the worker count do not influence any output byte, so they
  // are excluded from the hash.
  json semantic = raw;
  semantic.erase("output_dir");
  semantic.erase("workers");
  const std::string dump = semantic.dump() + "#seed=" + std::to_string(seed);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

ExperimentConfig parse_config_json(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  if (j.contains("seed")) {
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.seed_set = true;
  }
  cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
  cfg.workers = get_or<unsigned>(j, "workers", cfg.workers);
  cfg.normalization = get_or<std::string>(j, "normalization", cfg.normalization);
  if (cfg.normalization != "empirical" && cfg.normalization != "green-kubo")
    config_fail("normalization", "must be 'empirical' or 'green-kubo'");

  if (j.contains("system")) {
    const json& s = j.at("system");
    cfg.system.family = get_or<std::string>(s, "family", cfg.system.family);
    cfg.system.iterate_power = get_or<unsigned>(s, "iterate_power", 1u);
    if (cfg.system.iterate_power < 1) config_fail("system.iterate_power", "must be >= 1");
    if (s.contains("matrix")) {
      const json& m = s.at("matrix");
      if (!m.is_array() || m.size() != 2 || m[0].size() != 2 || m[1].size() != 2)
        config_fail("system.matrix", "must be a 2x2 integer matrix");
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) cfg.system.matrix[r][c] = m[r][c].get<long long>();
    }
    cfg.system.breakpoints = get_or<std::vector<double>>(s, "breakpoints", {});
    cfg.system.coefficients = get_or<std::vector<std::vector<double>>>(s, "coefficients", {});
    cfg.system.ulam_bins = get_or<std::size_t>(s, "ulam_bins", cfg.system.ulam_bins);
    cfg.system.dump_ulam_matrix = get_or<bool>(s, "dump_ulam_matrix", false);
    cfg.system.free_path_cap = get_or<double>(s, "free_path_cap", cfg.system.free_path_cap);
    cfg.system.k0 = get_or<int>(s, "k0", cfg.system.k0);
    if (s.contains("scatterers")) {
      for (const auto& sc : s.at("scatterers")) {
        billiard::Scatterer sct;
        const auto center = sc.at("center").get<std::vector<double>>();
        if (center.size() != 2) config_fail("system.scatterers.center", "must have 2 entries");
        sct.center = {center[0], center[1]};
        sct.radius = sc.at("radius").get<double>();
        cfg.system.scatterers.push_back(sct);
      }
    }
  }

  if (j.contains("observable")) {
    const json& o = j.at("observable");
    cfg.observable = get_or<std::string>(o, "name", cfg.observable);
    cfg.observable_values = get_or<std::vector<double>>(o, "values", {});
  }

  if (j.contains("constants")) {
    const json& c = j.at("constants");
    if (c.contains("billiard")) {
      const json& b = c.at("billiard");
      cfg.billiard_constants.theta_upsilon =
          get_or<double>(b, "theta_upsilon", cfg.billiard_constants.theta_upsilon);
      cfg.billiard_constants.kappa = get_or<double>(b, "kappa", cfg.billiard_constants.kappa);
      cfg.billiard_constants.c0 = get_or<double>(b, "c0", cfg.billiard_constants.c0);
      if (!(cfg.billiard_constants.theta_upsilon > 0.0 && cfg.billiard_constants.theta_upsilon < 1.0))
        config_fail("constants.billiard.theta_upsilon", "must lie in (0,1)");
      if (!(cfg.billiard_constants.kappa > 0.0))
        config_fail("constants.billiard.kappa", "must be positive");
    }
    if (c.contains("anosov")) {
      const json& a = c.at("anosov");
      cfg.anosov_constants.theta = get_or<double>(a, "theta", cfg.anosov_constants.theta);
      cfg.anosov_constants.c0 = get_or<double>(a, "c0", cfg.anosov_constants.c0);
      cfg.anosov_constants.volume_of_one =
          get_or<double>(a, "volume_of_one", cfg.anosov_constants.volume_of_one);
    }
    if (c.contains("pw")) {
      const json& p = c.at("pw");
      cfg.pw_constants.K = get_or<double>(p, "K", cfg.pw_constants.K);
      cfg.pw_constants.Lambda = get_or<double>(p, "Lambda", cfg.pw_constants.Lambda);
      cfg.pw_constants.b = get_or<double>(p, "b", cfg.pw_constants.b);
      cfg.pw_constants.A = get_or<double>(p, "A", cfg.pw_constants.A);
      cfg.pw_constants.lambda = get_or<double>(p, "lambda", cfg.pw_constants.lambda);
    }
  }

  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    cfg.schedule.n = get_or<std::size_t>(s, "n", cfg.schedule.n);
    cfg.schedule.a = get_or<double>(s, "a", cfg.schedule.a);
    cfg.schedule.b = get_or<double>(s, "b", cfg.schedule.b);
    cfg.schedule.t_grid = get_or<std::vector<double>>(s, "t_grid", cfg.schedule.t_grid);
    if (!(0.0 < cfg.schedule.b && cfg.schedule.b < cfg.schedule.a && cfg.schedule.a < 0.5))
      config_fail("schedule.a/schedule.b", "need 0 < b < a < 1/2");
  }

  if (j.contains("budgets")) {
    const json& b = j.at("budgets");
    cfg.budgets.samples = get_or<std::size_t>(b, "samples", cfg.budgets.samples);
    cfg.budgets.pair_budget = get_or<std::size_t>(b, "pair_budget", cfg.budgets.pair_budget);
    cfg.budgets.grid_size = get_or<std::size_t>(b, "grid_size", cfg.budgets.grid_size);
    cfg.budgets.lags = get_or<std::size_t>(b, "lags", cfg.budgets.lags);
    cfg.budgets.clt_n = get_or<std::size_t>(b, "clt_n", cfg.budgets.clt_n);
    cfg.budgets.clt_samples = get_or<std::size_t>(b, "clt_samples", cfg.budgets.clt_samples);
    cfg.budgets.separation_cap = get_or<std::size_t>(b, "separation_cap", cfg.budgets.separation_cap);
    cfg.budgets.histogram_bins = get_or<std::size_t>(b, "histogram_bins", cfg.budgets.histogram_bins);
    cfg.budgets.steps = get_or<std::size_t>(b, "steps", cfg.budgets.steps);
    if (cfg.budgets.samples == 0 || cfg.budgets.grid_size < 2)
      config_fail("budgets", "budgets must be positive");
  }

  if (j.contains("regularity")) {
    const json& r = j.at("regularity");
    auto read_budget = [&](const char* key, regularity::Budget& b, regularity::HolderClass tag) {
      if (!r.contains(key)) return;
      const json& q = r.at(key);
      b.K = get_or<double>(q, "K", b.K);
      b.theta = get_or<double>(q, "theta", b.theta);
      b.sup_norm = get_or<double>(q, "sup_norm", b.sup_norm);
      b.tag = tag;
      regularity::validate(b);
    };
    read_budget("f", cfg.regularity_inputs.f, regularity::HolderClass::h_plus_star);
    read_budget("g", cfg.regularity_inputs.g, regularity::HolderClass::h_minus_star);
    cfg.regularity_inputs.n_max = get_or<std::size_t>(r, "n_max", cfg.regularity_inputs.n_max);
    cfg.regularity_inputs.r = get_or<std::size_t>(r, "r", cfg.regularity_inputs.r);
    cfg.regularity_inputs.k = get_or<std::size_t>(r, "k", cfg.regularity_inputs.k);
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::config, "config: parse error in '" + path + "': " + e.what());
  }
  return parse_config_json(j);
}

IntervalMap build_interval_system(const SystemConfig& cfg) {
  IntervalMap base;
  if (cfg.family == "doubling") {
    base = make_doubling_map();
  } else if (cfg.family == "tent") {
    base = make_tent_map();
  } else if (cfg.family == "piecewise-poly") {
    base = make_piecewise_poly_map(cfg.breakpoints, cfg.coefficients);
    transfer::attach_ulam_sampler(base, cfg.ulam_bins);
  } else {
    fail(ErrorKind::config, "config.system.family: '" + cfg.family + "' is not an interval map");
  }
  if (cfg.iterate_power > 1) return iterate_power(base, cfg.iterate_power);
  return base;
}

ToralAutomorphism build_toral_system(const SystemConfig& cfg) {
  if (cfg.family != "toral" && cfg.family != "cat")
    fail(ErrorKind::config, "config.system.family: '" + cfg.family + "' is not a toral map");
  return make_toral_automorphism(cfg.matrix, cfg.family);
}

billiard::Geometry build_geometry(const SystemConfig& cfg) {
  if (cfg.family != "billiard")
    fail(ErrorKind::config, "config.system.family: '" + cfg.family + "' is not a billiard");
  billiard::Geometry geom;
  geom.scatterers = cfg.scatterers;
  geom.free_path_cap = cfg.free_path_cap;
  geom.prepare();
  return geom;
}

Observable<UnitIntervalPoint> build_interval_observable(const ExperimentConfig& cfg) {
  if (cfg.observable == "cos-first-coordinate") return make_cos_observable();
  if (cfg.observable == "sawtooth") return make_sawtooth_observable();
  if (cfg.observable == "tabulated")
    return make_tabulated_observable(cfg.observable_values, "tabulated");
  fail(ErrorKind::config, "config.observable: unknown interval observable '" + cfg.observable + "'");
}

Observable<TorusPoint> build_torus_observable(const ExperimentConfig& cfg) {
  if (cfg.observable == "cos-first-coordinate") return make_cos_observable_torus();
  if (cfg.observable == "sawtooth") return make_sawtooth_observable_torus();
  fail(ErrorKind::config, "config.observable: unknown torus observable '" + cfg.observable + "'");
}

Observable<billiard::CollisionCoordinate> build_billiard_observable(
    const ExperimentConfig& cfg, const billiard::Geometry& geom) {
  if (cfg.observable == "reflection-angle") return billiard::make_reflection_angle_observable();
  if (cfg.observable == "free-path") return billiard::make_free_path_observable(geom);
  fail(ErrorKind::config, "config.observable: unknown billiard observable '" + cfg.observable + "'");
}

} // namespace cltlab::cli
