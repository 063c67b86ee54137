#include "hrt/rounds.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "hrt/errors.hpp"
#include "hrt/learning_curve.hpp"
#include "hrt/projection.hpp"

namespace hrt {

ScoredSchedule score_schedule(const ProblemInstance& current, const Schedule& schedule, double lambda,
                              const MaxBoundConfig& bound) {
  const InstanceIndex index(current);
  const DurationModel model = DurationModel::from_priors(index);
  const Plan plan = to_plan(schedule, index);
  ScoredSchedule out;
  out.schedule = schedule;
  out.lambda = lambda;
  out.propagation = propagate(plan, index, model.durations(plan, index), bound);
  out.evaluation = objective(plan, index, model, lambda, bound);
  return out;
}

ScoredSchedule optimize_round(const ProblemInstance& current, const SearchConfig& search, double lambda, int round) {
  const InstanceIndex index(current);
  const DurationModel model = DurationModel::from_priors(index);
  SearchConfig cfg = search;
  cfg.lambda = lambda;
  cfg.seed = search.seed + static_cast<std::uint64_t>(round);
  const EvolveResult result = evolve(index, model, cfg);

  ScoredSchedule out;
  out.schedule = to_schedule(result.best, index);
  out.evaluation = result.evaluation;
  out.lambda = lambda;
  out.propagation = propagate(result.best, index, model.durations(result.best, index), cfg.bound);
  return out;
}

std::vector<ExpectedObservation> expected_observations(const ProblemInstance& current, const Schedule& schedule) {
  std::vector<ExpectedObservation> out;
  for (const auto& agent : current.agents) {
    if (agent.kind != AgentKind::human) continue;
    auto lane = schedule.agent_orders.find(agent.agent_id);
    if (lane == schedule.agent_orders.end()) continue;
    std::map<std::string, int> seen;
    for (const auto& ref : lane->second) {
      const int k = seen[ref.task]++;
      out.push_back({agent.agent_id, ref.task, agent.reps(ref.task) + k + 1, ref});
    }
  }
  return out;
}

ObservationMismatch match_observations(const std::vector<ExpectedObservation>& expected,
                                       const std::vector<DurationObservation>& observations) {
  using Key = std::tuple<std::string, std::string, int>;
  std::map<Key, int> submitted;
  for (const auto& o : observations) ++submitted[{o.agent_id, o.task_id, o.iteration_index}];

  ObservationMismatch mismatch;
  std::map<Key, bool> wanted;
  for (const auto& e : expected) {
    const Key key{e.agent_id, e.task_id, e.iteration_index};
    wanted[key] = true;
    if (submitted[key] == 0) mismatch.missing.push_back(e.ref);
  }
  std::map<Key, int> used;
  for (const auto& o : observations) {
    const Key key{o.agent_id, o.task_id, o.iteration_index};
    if (!wanted.count(key) || ++used[key] > 1 || !(o.observed_duration > 0.0)) mismatch.unexpected.push_back(o);
  }
  return mismatch;
}

void apply_round(ProblemInstance& current, const Schedule& schedule, std::vector<DurationObservation> observations) {
  std::sort(observations.begin(), observations.end(), [](const auto& a, const auto& b) {
    return std::tie(a.agent_id, a.task_id, a.iteration_index) < std::tie(b.agent_id, b.task_id, b.iteration_index);
  });
  for (const auto& o : observations) {
    AgentSpec* agent = nullptr;
    for (auto& a : current.agents)
      if (a.agent_id == o.agent_id) agent = &a;
    if (!agent) throw ConfigError("observation for unknown agent " + o.agent_id);
    auto state = agent->curve_prior.find(o.task_id);
    if (state == agent->curve_prior.end())
      throw ConfigError("agent " + o.agent_id + " has no curve state for " + o.task_id);
    state->second = kalman_update(state->second, o);
  }
  for (auto& agent : current.agents) {
    auto lane = schedule.agent_orders.find(agent.agent_id);
    if (lane == schedule.agent_orders.end()) continue;
    for (const auto& ref : lane->second) ++agent.completed_reps[ref.task];
  }
}

std::vector<double> replay_finish_times(const Plan& plan, const InstanceIndex& index,
                                        const std::vector<double>& durations) {
  const auto order = topological_order(plan, index);
  std::vector<double> finish(index.iteration_count(), 0.0);
  std::vector<std::size_t> prev(index.iteration_count(), index.iteration_count());
  for (const auto& lane : plan.lanes)
    for (std::size_t j = 1; j < lane.size(); ++j) prev[lane[j]] = lane[j - 1];
  for (std::size_t it : order) {
    double start = 0.0;
    for (const auto& e : index.preds(it)) start = std::max(start, finish[e.from] + e.wait);
    if (prev[it] != index.iteration_count()) start = std::max(start, finish[prev[it]]);
    finish[it] = start + durations[it];
  }
  return finish;
}

}  // namespace hrt
