#pragma once

#include <string>
#include <vector>

#include "hrt/index.hpp"
#include "hrt/model.hpp"
#include "hrt/scheduler.hpp"
#include "hrt/stochastic.hpp"

namespace hrt {

/// Closed-loop round helpers shared by the bench sessions and the coordination service.
///
/// The learning state lives in the instance itself: each agent's curve_prior holds the current
/// filter state and completed_reps the repetitions finished in earlier rounds.

struct ScoredSchedule {
  Schedule schedule;
  Evaluation evaluation;
  PropagationResult propagation;
  double lambda = 0.0;
};

/// Scores an existing schedule against the current learning state.
ScoredSchedule score_schedule(const ProblemInstance& current, const Schedule& schedule, double lambda,
                              const MaxBoundConfig& bound = {});

/// Runs evolve for one round; the search seed is offset by the round number.
ScoredSchedule optimize_round(const ProblemInstance& current, const SearchConfig& search, double lambda, int round);

/// One expected duration report for a human-assigned iteration.
struct ExpectedObservation {
  std::string agent_id;
  std::string task_id;
  int iteration_index = 1;
  IterationRef ref;
};

std::vector<ExpectedObservation> expected_observations(const ProblemInstance& current, const Schedule& schedule);

struct ObservationMismatch {
  std::vector<IterationRef> missing;
  std::vector<DurationObservation> unexpected;

  [[nodiscard]] bool empty() const { return missing.empty() && unexpected.empty(); }
};

ObservationMismatch match_observations(const std::vector<ExpectedObservation>& expected,
                                       const std::vector<DurationObservation>& observations);

/// Filters every observation into its (agent, task) state in iteration order and advances completed_reps
/// by the round's assignments (robots included).
void apply_round(ProblemInstance& current, const Schedule& schedule, std::vector<DurationObservation> observations);

/// Finish times of a plan under fixed realized durations (by iteration index).
std::vector<double> replay_finish_times(const Plan& plan, const InstanceIndex& index,
                                        const std::vector<double>& durations);

}  // namespace hrt
