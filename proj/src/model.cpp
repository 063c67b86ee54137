#include "hrt/model.hpp"

#include <cmath>
#include <functional>
#include <set>

namespace hrt {

std::string to_string(const IterationRef& ref) { return ref.task + "#" + std::to_string(ref.n); }

std::string to_string(const DeadlineRef& ref) {
  switch (ref.kind) {
    case DeadlineRef::Kind::absolute:
      return "abs:" + ref.task;
    case DeadlineRef::Kind::relative:
      return "rel:" + ref.task + "#" + std::to_string(ref.index);
    case DeadlineRef::Kind::time_budget:
      return "time_budget";
  }
  return "?";
}

const TaskSpec* ProblemInstance::find_task(const std::string& id) const {
  for (const auto& t : tasks)
    if (t.task_id == id) return &t;
  return nullptr;
}

const AgentSpec* ProblemInstance::find_agent(const std::string& id) const {
  for (const auto& a : agents)
    if (a.agent_id == id) return &a;
  return nullptr;
}

int RobustnessReport::failed_count() const {
  int failed = 0;
  for (const auto& d : per_deadline) failed += d.pass ? 0 : 1;
  return failed;
}

std::vector<IterationRef> all_iterations(const ProblemInstance& instance) {
  std::vector<IterationRef> out;
  for (const auto& t : instance.tasks)
    for (int n = 1; n <= t.iterations; ++n) out.push_back({t.task_id, n});
  return out;
}

namespace {

using Graph = std::map<IterationRef, std::vector<IterationRef>>;

bool has_cycle(const Graph& graph) {
  enum class Mark { none, active, done };
  std::map<IterationRef, Mark> marks;
  std::function<bool(const IterationRef&)> visit = [&](const IterationRef& v) {
    auto& m = marks[v];
    if (m == Mark::active) return true;
    if (m == Mark::done) return false;
    m = Mark::active;
    if (auto it = graph.find(v); it != graph.end())
      for (const auto& w : it->second)
        if (visit(w)) return true;
    marks[v] = Mark::done;
    return false;
  };
  for (const auto& [v, _] : graph)
    if (visit(v)) return true;
  return false;
}

bool resolves(const ProblemInstance& instance, const IterationRef& ref) {
  const TaskSpec* t = instance.find_task(ref.task);
  return t != nullptr && ref.n >= 1 && ref.n <= t->iterations;
}

// Precedence edges predecessor -> dependent over resolvable refs.
Graph precedence_graph(const ProblemInstance& instance) {
  Graph g;
  for (const auto& t : instance.tasks) {
    for (int n = 1; n <= t.iterations; ++n) g[{t.task_id, n}];
    for (const auto& pre : t.preconditions) {
      if (!resolves(instance, pre.ref)) continue;
      for (int n = 1; n <= t.iterations; ++n) {
        if (pre.at && *pre.at != n) continue;
        g[pre.ref].push_back({t.task_id, n});
      }
    }
  }
  return g;
}

}  // namespace

ValidationResult validate_instance(const ProblemInstance& instance) {
  ValidationResult result;
  auto violation = [&](std::string msg) { result.violations.push_back(std::move(msg)); };

  if (!(instance.epsilon > 0.0 && instance.epsilon < 1.0))
    violation("epsilon out of range: " + std::to_string(instance.epsilon));
  if (instance.agents.empty()) violation("no agents");
  if (instance.time_budget && !(*instance.time_budget > 0.0)) violation("time_budget must be positive");

  std::set<std::string> task_ids;
  for (const auto& t : instance.tasks) {
    if (!task_ids.insert(t.task_id).second) violation("duplicate task id " + t.task_id);
    if (t.iterations < 1) violation("task " + t.task_id + " has iterations < 1");
    if (t.duration_lb && t.duration_ub && *t.duration_lb > *t.duration_ub)
      violation("task " + t.task_id + ": lb > ub");
    if ((t.duration_lb && *t.duration_lb < 0.0) || (t.duration_ub && *t.duration_ub < 0.0))
      violation("task " + t.task_id + ": negative duration bound");
    if (t.abs_deadline && !std::isfinite(*t.abs_deadline))
      violation("task " + t.task_id + ": non-finite deadline");
    for (const auto& pre : t.preconditions) {
      if (!resolves(instance, pre.ref))
        violation("task " + t.task_id + ": dangling reference " + to_string(pre.ref));
      if (!(pre.wait >= 0.0)) violation("task " + t.task_id + ": negative wait");
      if (pre.at && (*pre.at < 1 || *pre.at > t.iterations))
        violation("task " + t.task_id + ": precondition anchor out of range");
    }
    for (const auto& rel : t.rel_deadlines) {
      if (!resolves(instance, rel.end))
        violation("task " + t.task_id + ": dangling reference " + to_string(rel.end));
      if (rel.anchor < 1 || rel.anchor > t.iterations)
        violation("task " + t.task_id + ": relative deadline anchor out of range");
      if (!(rel.budget >= 0.0)) violation("task " + t.task_id + ": negative relative deadline");
    }
  }

  std::set<std::string> agent_ids;
  for (const auto& a : instance.agents) {
    if (!agent_ids.insert(a.agent_id).second) violation("duplicate agent id " + a.agent_id);
    for (const auto& [task, reps] : a.completed_reps) {
      if (!instance.find_task(task)) violation("agent " + a.agent_id + ": dangling reference " + task);
      if (reps < 0) violation("agent " + a.agent_id + ": negative completed_reps");
    }
    for (const auto& [task, state] : a.curve_prior) {
      if (!instance.find_task(task)) violation("agent " + a.agent_id + ": dangling reference " + task);
      if (a.kind == AgentKind::robot && (state.x.k != 0.0 || state.residual_std != 0.0 || state.R != 0.0))
        violation("agent " + a.agent_id + ": robot curve must be fixed (k = 0, zero noise)");
    }
  }

  if (has_cycle(precedence_graph(instance))) violation("precedence cycle");
  return result;
}

ValidationResult validate_schedule(const Schedule& schedule, const ProblemInstance& instance) {
  ValidationResult result;
  auto violation = [&](std::string msg) { result.violations.push_back(std::move(msg)); };

  const auto iterations = all_iterations(instance);
  for (const auto& ref : iterations) {
    auto it = schedule.assignment.find(ref);
    if (it == schedule.assignment.end()) {
      violation("unassigned iteration " + to_string(ref));
    } else if (!instance.find_agent(it->second)) {
      violation("iteration " + to_string(ref) + " assigned to unknown agent " + it->second);
    }
  }
  for (const auto& [ref, agent] : schedule.assignment)
    if (!resolves(instance, ref)) violation("dangling reference " + to_string(ref));

  std::map<IterationRef, int> seen;
  for (const auto& [agent, order] : schedule.agent_orders) {
    if (!instance.find_agent(agent)) violation("order for unknown agent " + agent);
    for (const auto& ref : order) {
      ++seen[ref];
      auto it = schedule.assignment.find(ref);
      if (it == schedule.assignment.end() || it->second != agent)
        violation("order of " + agent + " lists " + to_string(ref) + " not assigned to it");
    }
  }
  for (const auto& ref : iterations) {
    const int count = seen.count(ref) ? seen[ref] : 0;
    if (count != 1) violation(to_string(ref) + " appears " + std::to_string(count) + " times in agent orders");
  }

  Graph g = precedence_graph(instance);
  for (const auto& [agent, order] : schedule.agent_orders)
    for (std::size_t j = 1; j < order.size(); ++j) g[order[j - 1]].push_back(order[j]);
  if (has_cycle(g)) violation("precedence and agent orders form a cycle");
  return result;
}

}  // namespace hrt
