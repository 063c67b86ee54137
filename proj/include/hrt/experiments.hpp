#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrt/instance_gen.hpp"
#include "hrt/oracles.hpp"
#include "hrt/scheduler.hpp"

namespace hrt {

struct ExperimentReport {
  std::string experiment;
  std::uint64_t seed = 0;
  int trials = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<nlohmann::json> records;  // flat objects, one per trial (or per trial and round)
  nlohmann::json summary = nlohmann::json::object();
  nlohmann::json machine = nlohmann::json::object();
};

nlohmann::json report_to_json(const ExperimentReport& report);
/// Columns are the union of record keys in first-seen order.
std::string report_to_csv(const ExperimentReport& report);
/// Summary block as aligned "key  value" lines.
std::string report_table(const ExperimentReport& report);

double median(std::vector<double> values);

struct SpeedupConfig {
  std::vector<int> sizes{25, 50, 75};
  int trials = 3;
  std::uint64_t seed = 1;
  GenConfig gen;  // n_tasks is overridden per size
  QuadratureConfig quadrature;
  int bound_repeats = 5;

  SpeedupConfig() {
    gen.n_agents = 3;
    gen.fit_priors = false;
  }
};

/// Wall time of bound propagation vs. quadrature on EDF schedules of generated instances.
ExperimentReport cmd_speedup(const SpeedupConfig& config);

struct ConservatismConfig {
  int trials = 20;
  std::uint64_t seed = 1;
  GenConfig gen;
  std::size_t mc_samples = 100000;
  double robustness = 0.95;

  ConservatismConfig() {
    gen.n_agents = 3;
    gen.fit_priors = false;
  }
};

/// Percent added time of the bound's makespan quantile over the Monte Carlo quantile.
ExperimentReport cmd_conservatism(const ConservatismConfig& config);

struct KalmanConfig {
  int trials = 50;
  std::uint64_t seed = 1;
  GenConfig gen;  // component distributions and noise
  int prior_agents = 50;
  int prior_iterations = 20;
  int test_iterations = 20;
  int bootstrap = 200;
};

/// Frozen population prior vs. adaptive filter, one fresh agent per trial.
/// Error is the sum over iterations of |observed - one-step-ahead prediction|.
ExperimentReport cmd_kalman(const KalmanConfig& config);

struct SessionConfig {
  int trials = 1;
  std::uint64_t seed = 1;
  GenConfig gen;
  std::optional<std::string> instance_path;  // replaces generation when set
  std::optional<std::string> truth_path;     // hidden curves for a loaded instance
  StrategyConfig strategy;
  int rounds = 5;
  SearchConfig search;

  SessionConfig() {
    gen.n_tasks = 6;
    gen.n_agents = 2;
    gen.bootstrap = 50;
    search.population_size = 32;
    search.time_limit.reset();
    search.max_generations = 20;
  }
};

/// Closed loop: optimize, simulate execution, filter observations, repeat.
ExperimentReport cmd_session(const SessionConfig& config);

/// Config documents; missing fields keep defaults. Throw ConfigError.
SpeedupConfig speedup_config(const nlohmann::json& doc);
ConservatismConfig conservatism_config(const nlohmann::json& doc);
KalmanConfig kalman_config(const nlohmann::json& doc);
SessionConfig session_config(const nlohmann::json& doc);
SearchConfig search_config(const nlohmann::json& doc, SearchConfig base = {});
StrategyConfig strategy_config(const nlohmann::json& doc, StrategyConfig base = {});
nlohmann::json search_to_json(const SearchConfig& v);
nlohmann::json strategy_to_json(const StrategyConfig& v);

}  // namespace hrt
