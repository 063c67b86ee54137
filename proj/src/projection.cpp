#include "hrt/projection.hpp"

#include "hrt/errors.hpp"
#include "hrt/learning_curve.hpp"

namespace hrt {

DurationModel::DurationModel(const InstanceIndex& index, const Source& source) : tasks_(index.task_count()) {
  table_.resize(index.agent_count() * tasks_);
  for (std::size_t a = 0; a < index.agent_count(); ++a) {
    for (std::size_t t = 0; t < tasks_; ++t) {
      auto& row = table_[a * tasks_ + t];
      const int base = index.completed_reps(a, t);
      for (int k = 0; k < index.task(t).iterations; ++k) row.push_back(source(a, t, base + k + 1));
    }
  }
}

DurationModel DurationModel::from_priors(const InstanceIndex& index) {
  return DurationModel(index, [&](std::size_t a, std::size_t t, int i) {
    const AgentSpec& agent = index.agent(a);
    const std::string& task = index.task(t).task_id;
    auto it = agent.curve_prior.find(task);
    if (it == agent.curve_prior.end())
      throw ConfigError("agent " + agent.agent_id + " has no curve prior for task " + task);
    GaussianDist d = project_duration(it->second, i);
    if (agent.kind == AgentKind::robot) d.stddev = 0.0;
    return d;
  });
}

std::vector<GaussianDist> DurationModel::durations(const Plan& plan, const InstanceIndex& index) const {
  std::vector<GaussianDist> out;
  durations_into(plan, index, out);
  return out;
}

void DurationModel::durations_into(const Plan& plan, const InstanceIndex& index,
                                   std::vector<GaussianDist>& out) const {
  out.assign(index.iteration_count(), GaussianDist{});
  std::vector<std::size_t> seen(tasks_);
  for (std::size_t a = 0; a < plan.lanes.size(); ++a) {
    std::fill(seen.begin(), seen.end(), 0);
    for (std::size_t it : plan.lanes[a]) {
      const std::size_t t = index.task_of(it);
      out[it] = duration(a, t, seen[t]++);
    }
  }
}

}  // namespace hrt
