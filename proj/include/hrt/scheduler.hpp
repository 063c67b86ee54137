#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "hrt/index.hpp"
#include "hrt/model.hpp"
#include "hrt/projection.hpp"
#include "hrt/stochastic.hpp"

namespace hrt {

/// z = z1 + lambda * z2.
struct ObjectiveValue {
  double z = 0.0;
  double z1 = 0.0;  // mean of the makespan upper bound
  double z2 = 0.0;  // assignment entropy term
  double lambda = 0.0;
};

struct SearchConfig {
  int population_size = 64;
  double elite_fraction = 0.25;
  double reassign_weight = 0.4;
  double swap_agents_weight = 0.3;
  double swap_adjacent_weight = 0.3;
  std::optional<double> time_limit = 5.0;  // seconds
  std::optional<int> max_generations;      // 0 keeps the seeded population only
  std::uint64_t seed = 0;
  double lambda = 0.0;
  int mutation_retries = 64;
  MaxBoundConfig bound;

  /// Throws ConfigError.
  void validate() const;
};

enum class StrategyKind { exploit, explore_exploit, annealed };

struct StrategyConfig {
  StrategyKind kind = StrategyKind::exploit;
  double lambda_explore = 50.0;
  int total_rounds = 5;
};

std::string strategy_name(StrategyKind kind);
StrategyKind parse_strategy(const std::string& name);

/// Mean absolute deviation of cumulative per-agent repetition counts, averaged over tasks and agents.
double entropy_term(const Plan& plan, const InstanceIndex& index);
double entropy_term(const Schedule& schedule, const InstanceIndex& index);

/// A scored candidate. Non-robust schedules are infeasible: they are ranked below every robust one.
struct Evaluation {
  ObjectiveValue value;
  RobustnessReport report;
  bool robust = false;
  int failed = 0;
};

Evaluation objective(const Plan& plan, const InstanceIndex& index, const DurationModel& model, double lambda,
                     const MaxBoundConfig& bound = {});
Evaluation objective(const Schedule& schedule, const InstanceIndex& index, const DurationModel& model, double lambda,
                     const MaxBoundConfig& bound = {});

/// Ranking used everywhere: robust first, then fewer failed deadlines, then lower z.
bool ranks_before(const Evaluation& a, const Evaluation& b);

/// Earliest-deadline-first list schedule on projected mean durations. Throws InfeasiblePrecedence.
Plan edf_seed(const InstanceIndex& index, const DurationModel& model);

/// One random neighborhood move (reassign, swap agents, swap adjacent), retried until acyclic.
/// Returns the input unchanged when the neighborhood is empty; throws ExhaustedRetries otherwise.
Plan mutate(const Plan& plan, const InstanceIndex& index, std::mt19937_64& rng, const SearchConfig& config = {});

struct EvolveResult {
  Plan best;
  Evaluation evaluation;
  std::vector<ObjectiveValue> history;  // best candidate per generation, generation 0 = seeded population
  int generations = 0;
};

EvolveResult evolve(const InstanceIndex& index, const DurationModel& model, const SearchConfig& config);

/// lambda for a 1-based round of a session.
double strategy_lambda(const StrategyConfig& strategy, int round);

}  // namespace hrt
