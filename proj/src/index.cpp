#include "hrt/index.hpp"

#include <limits>

#include "hrt/errors.hpp"

namespace hrt {

InstanceIndex::InstanceIndex(ProblemInstance instance) : instance_(std::move(instance)) {
  const ValidationResult check = validate_instance(instance_);
  if (!check.ok()) {
    std::string msg = "invalid instance:";
    for (const auto& v : check.violations) msg += " " + v + ";";
    throw ConfigError(msg);
  }

  by_task_.resize(instance_.tasks.size());
  for (std::size_t t = 0; t < instance_.tasks.size(); ++t) {
    const auto& spec = instance_.tasks[t];
    for (int n = 1; n <= spec.iterations; ++n) {
      lookup_[{spec.task_id, n}] = refs_.size();
      by_task_[t].push_back(refs_.size());
      refs_.push_back({spec.task_id, n});
      task_of_.push_back(t);
    }
  }

  preds_.resize(refs_.size());
  succs_.resize(refs_.size());
  for (std::size_t t = 0; t < instance_.tasks.size(); ++t) {
    const auto& spec = instance_.tasks[t];
    for (const auto& pre : spec.preconditions) {
      const std::size_t from = index_of(pre.ref);
      for (int n = 1; n <= spec.iterations; ++n) {
        if (pre.at && *pre.at != n) continue;
        const std::size_t to = by_task_[t][static_cast<std::size_t>(n - 1)];
        preds_[to].push_back({from, pre.wait});
        succs_[from].push_back(to);
      }
    }
  }

  for (std::size_t t = 0; t < instance_.tasks.size(); ++t) {
    const auto& spec = instance_.tasks[t];
    if (spec.abs_deadline) {
      Deadline d;
      d.ref = {DeadlineRef::Kind::absolute, spec.task_id, 0};
      d.bound = *spec.abs_deadline;
      d.targets = by_task_[t];
      deadlines_.push_back(std::move(d));
    }
    for (std::size_t r = 0; r < spec.rel_deadlines.size(); ++r) {
      const auto& rel = spec.rel_deadlines[r];
      Deadline d;
      d.ref = {DeadlineRef::Kind::relative, spec.task_id, static_cast<int>(r)};
      d.bound = rel.budget;
      d.targets = {index_of(rel.end)};
      d.anchor = by_task_[t][static_cast<std::size_t>(rel.anchor - 1)];
      deadlines_.push_back(std::move(d));
    }
  }
  if (instance_.time_budget) {
    Deadline d;
    d.ref = {DeadlineRef::Kind::time_budget, "", 0};
    d.bound = *instance_.time_budget;
    for (std::size_t it = 0; it < refs_.size(); ++it)
      if (succs_[it].empty()) d.targets.push_back(it);
    deadlines_.push_back(std::move(d));
  }

  reps_.assign(instance_.agents.size() * instance_.tasks.size(), 0);
  for (std::size_t a = 0; a < instance_.agents.size(); ++a)
    for (std::size_t t = 0; t < instance_.tasks.size(); ++t)
      reps_[a * instance_.tasks.size() + t] = instance_.agents[a].reps(instance_.tasks[t].task_id);
}

std::size_t InstanceIndex::index_of(const IterationRef& ref) const {
  auto it = lookup_.find(ref);
  if (it == lookup_.end()) throw ConfigError("unknown iteration " + to_string(ref));
  return it->second;
}

std::size_t InstanceIndex::agent_index(const std::string& id) const {
  for (std::size_t a = 0; a < instance_.agents.size(); ++a)
    if (instance_.agents[a].agent_id == id) return a;
  throw ConfigError("unknown agent " + id);
}

Plan to_plan(const Schedule& schedule, const InstanceIndex& index) {
  Plan plan;
  plan.lanes.resize(index.agent_count());
  for (const auto& [agent, order] : schedule.agent_orders) {
    auto& lane = plan.lanes[index.agent_index(agent)];
    for (const auto& ref : order) lane.push_back(index.index_of(ref));
  }
  return plan;
}

Schedule to_schedule(const Plan& plan, const InstanceIndex& index) {
  Schedule s;
  for (std::size_t a = 0; a < plan.lanes.size(); ++a) {
    const std::string& id = index.agent(a).agent_id;
    auto& order = s.agent_orders[id];
    for (std::size_t it : plan.lanes[a]) {
      order.push_back(index.ref(it));
      s.assignment[index.ref(it)] = id;
    }
  }
  return s;
}

std::vector<std::size_t> owners(const Plan& plan, std::size_t iteration_count) {
  std::vector<std::size_t> owner(iteration_count, std::numeric_limits<std::size_t>::max());
  for (std::size_t a = 0; a < plan.lanes.size(); ++a)
    for (std::size_t it : plan.lanes[a]) owner[it] = a;
  return owner;
}

std::optional<std::vector<std::size_t>> try_topological_order(const Plan& plan, const InstanceIndex& index) {
  const std::size_t count = index.iteration_count();
  std::vector<int> indegree(count, 0);
  std::vector<std::size_t> lane_next(count, std::numeric_limits<std::size_t>::max());
  for (std::size_t it = 0; it < count; ++it) indegree[it] = static_cast<int>(index.preds(it).size());
  for (const auto& lane : plan.lanes) {
    for (std::size_t j = 1; j < lane.size(); ++j) {
      lane_next[lane[j - 1]] = lane[j];
      ++indegree[lane[j]];
    }
  }

  std::vector<std::size_t> order;
  order.reserve(count);
  std::vector<std::size_t> ready;
  for (std::size_t it = count; it-- > 0;)
    if (indegree[it] == 0) ready.push_back(it);
  while (!ready.empty()) {
    const std::size_t v = ready.back();
    ready.pop_back();
    order.push_back(v);
    auto release = [&](std::size_t w) {
      if (--indegree[w] == 0) ready.push_back(w);
    };
    for (std::size_t w : index.succs(v)) release(w);
    if (lane_next[v] != std::numeric_limits<std::size_t>::max()) release(lane_next[v]);
  }
  if (order.size() != count) return std::nullopt;
  return order;
}

std::vector<std::size_t> topological_order(const Plan& plan, const InstanceIndex& index) {
  auto order = try_topological_order(plan, index);
  if (!order) throw CycleError("schedule graph has a cycle");
  return *std::move(order);
}

}  // namespace hrt
