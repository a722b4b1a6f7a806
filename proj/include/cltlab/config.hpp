#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cltlab/billiard.hpp"
#include "cltlab/regularity.hpp"
#include "cltlab/systems.hpp"
#include "cltlab/transfer.hpp"

namespace cltlab::cli {

struct SystemConfig {
  std::string family = "doubling"; // doubling | tent | piecewise-poly | toral | billiard
  unsigned iterate_power = 1;
  // toral
  std::array<std::array<long long, 2>, 2> matrix{{{2, 1}, {1, 1}}};
  // piecewise-poly
  std::vector<double> breakpoints;
  std::vector<std::vector<double>> coefficients;
  std::size_t ulam_bins = 4096; // sampler resolution for non-Lebesgue maps
  bool dump_ulam_matrix = false;
  // billiard
  std::vector<billiard::Scatterer> scatterers;
  double free_path_cap = 100.0;
  int k0 = 2;
};

struct ScheduleConfig {
  std::size_t n = 10000;
  double a = 0.4;
  double b = 0.2;
  std::vector<double> t_grid{0.5, 1.0, 2.0, 4.0};
};

struct BudgetConfig {
  std::size_t samples = 100000;      // ensemble budget
  std::size_t pair_budget = 10000;   // Holder pair sampling
  std::size_t grid_size = 16384;     // transfer grid
  std::size_t lags = 20;             // correlation lags 0..lags
  std::size_t clt_n = 2000;
  std::size_t clt_samples = 5000;    // N
  std::size_t separation_cap = 100;
  std::size_t histogram_bins = 40;
  std::size_t steps = 1000;          // simulate trajectory length
};

struct RegularityInputs {
  regularity::Budget f{1.0, 0.5, 1.0, regularity::HolderClass::h_plus_star};
  regularity::Budget g{1.0, 0.5, 1.0, regularity::HolderClass::h_minus_star};
  std::size_t n_max = 20;
  std::size_t r = 2;
  std::size_t k = 2;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string output_dir = "out";
  unsigned workers = 0;
  SystemConfig system;
  std::string observable = "sawtooth";
  std::vector<double> observable_values; // for observable == "tabulated"
  regularity::BilliardBoundConstants billiard_constants;
  regularity::AnosovBoundConstants anosov_constants;
  transfer::PwConstants pw_constants;
  ScheduleConfig schedule;
  BudgetConfig budgets;
  RegularityInputs regularity_inputs;
  std::string normalization = "empirical"; // or "green-kubo"
  nlohmann::json raw;                      // canonical source for hashing

  std::uint64_t config_hash() const;
};

ExperimentConfig parse_config_json(const nlohmann::json& j);
ExperimentConfig parse_config_file(const std::string& path);

// System factories (dispatch on family).
IntervalMap build_interval_system(const SystemConfig& cfg);
ToralAutomorphism build_toral_system(const SystemConfig& cfg);
billiard::Geometry build_geometry(const SystemConfig& cfg);

Observable<UnitIntervalPoint> build_interval_observable(const ExperimentConfig& cfg);
Observable<TorusPoint> build_torus_observable(const ExperimentConfig& cfg);
Observable<billiard::CollisionCoordinate> build_billiard_observable(const ExperimentConfig& cfg,
                                                                    const billiard::Geometry& geom);

} // namespace cltlab::cli
