#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>

#include <json.hpp>

#include "hrt/index.hpp"
#include "hrt/learning_curve.hpp"
#include "hrt/model.hpp"
#include "hrt/projection.hpp"

namespace hrt {

/// A normal(a, b) or uniform[a, b] draw. A zero-width distribution is a point mass.
struct Component {
  enum class Kind { normal, uniform };
  Kind kind = Kind::normal;
  double a = 0.0;
  double b = 0.0;

  static Component normal(double mean, double sd) { return {Kind::normal, mean, sd}; }
  static Component uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static Component point(double v) { return {Kind::uniform, v, v}; }

  double draw(std::mt19937_64& rng) const;
};

/// Task, agent and joint task-agent contributions to one curve parameter.
struct ComponentSet {
  Component task;
  Component agent;
  Component joint;
};

struct GenConfig {
  int n_tasks = 25;
  int n_agents = 3;
  int n_robots = 0;  // the last n_robots agents are robots
  int iterations = 1;
  std::uint64_t seed = 0;
  double deadline_fraction = 0.2;
  std::array<double, 4> precondition_weights{0.4, 0.3, 0.2, 0.1};
  double wait_probability = 0.5;
  double wait_min = 5.0;
  double wait_max = 30.0;
  double epsilon = 0.05;
  double rel_deadline_fraction = 0.0;
  bool with_time_budget = true;

  ComponentSet c{Component::normal(60, 15), Component::normal(20, 10), Component::uniform(0, 20)};
  ComponentSet k{Component::normal(30, 10), Component::normal(10, 5), Component::uniform(0, 10)};
  ComponentSet beta{Component::uniform(0.1, 0.8), Component::uniform(0.1, 0.8), Component::uniform(0.1, 0.8)};
  double noise_fraction = 0.08;  // hidden noise stddev as a fraction of the curve mean

  /// Population priors are fitted from simulated workers; without them agents carry no curve_prior.
  bool fit_priors = true;
  int prior_workers = 20;
  int prior_iterations = 5;
  int bootstrap = 200;

  /// Throws ConfigError.
  void validate() const;
};

struct TrueCurve {
  CurveParams<double> curve;
  double noise_fraction = 0.0;

  [[nodiscard]] double mean(int i) const { return curve_mean(curve, double(i)); }
  [[nodiscard]] double stddev(int i) const { return noise_fraction * mean(i); }
};

/// Hidden per (agent_id, task_id) curves. Only simulations and oracles may read this.
struct GroundTruth {
  std::map<std::pair<std::string, std::string>, TrueCurve> curves;

  [[nodiscard]] const TrueCurve& at(const std::string& agent, const std::string& task) const;
};

struct Generated {
  ProblemInstance instance;
  GroundTruth truth;
};

Generated generate(const GenConfig& config);

/// curve_mean + hidden noise, floored at 0.1 s.
double sample_execution(const GroundTruth& truth, const std::string& agent, const std::string& task, int iteration,
                        std::mt19937_64& rng);

/// Durations drawn from the hidden curves rather than the priors.
DurationModel truth_model(const InstanceIndex& index, const GroundTruth& truth);

/// Samples one fresh worker curve for a task: task components fixed, agent and joint components redrawn.
TrueCurve sample_worker_curve(const GenConfig& config, double c_task, double k_task, double beta_task,
                              std::mt19937_64& rng);

nlohmann::json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& doc);

void to_json(nlohmann::json& j, const GenConfig& v);
/// Missing fields keep their defaults.
void from_json(const nlohmann::json& j, GenConfig& v);

}  // namespace hrt
