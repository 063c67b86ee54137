#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hrt/model.hpp"

namespace hrt {

/// Dense form of a Schedule: lanes[a] is agent a's ordered list of iteration indices.
struct Plan {
  std::vector<std::vector<std::size_t>> lanes;

  friend bool operator==(const Plan&, const Plan&) = default;
};

/// Integer-indexed view of a validated ProblemInstance for the hot evaluation paths.
class InstanceIndex {
 public:
  struct Edge {
    std::size_t from;
    double wait;
  };

  struct Deadline {
    DeadlineRef ref;
    double bound = 0.0;
    std::vector<std::size_t> targets;  // iterations that must finish by `bound`
    std::optional<std::size_t> anchor; // relative deadlines: start anchor
  };

  /// Throws ConfigError when the instance does not validate.
  explicit InstanceIndex(ProblemInstance instance);

  [[nodiscard]] const ProblemInstance& instance() const { return instance_; }
  [[nodiscard]] std::size_t iteration_count() const { return refs_.size(); }
  [[nodiscard]] std::size_t agent_count() const { return instance_.agents.size(); }
  [[nodiscard]] std::size_t task_count() const { return instance_.tasks.size(); }

  [[nodiscard]] const IterationRef& ref(std::size_t it) const { return refs_[it]; }
  [[nodiscard]] std::size_t index_of(const IterationRef& ref) const;
  [[nodiscard]] std::size_t task_of(std::size_t it) const { return task_of_[it]; }
  [[nodiscard]] const TaskSpec& task(std::size_t t) const { return instance_.tasks[t]; }
  [[nodiscard]] const AgentSpec& agent(std::size_t a) const { return instance_.agents[a]; }
  [[nodiscard]] std::size_t agent_index(const std::string& id) const;
  [[nodiscard]] std::span<const Edge> preds(std::size_t it) const { return preds_[it]; }
  [[nodiscard]] std::span<const std::size_t> succs(std::size_t it) const { return succs_[it]; }
  [[nodiscard]] std::span<const std::size_t> iterations_of_task(std::size_t t) const { return by_task_[t]; }
  [[nodiscard]] const std::vector<Deadline>& deadlines() const { return deadlines_; }
  [[nodiscard]] int completed_reps(std::size_t agent, std::size_t task) const {
    return reps_[agent * task_count() + task];
  }

 private:
  ProblemInstance instance_;
  std::vector<IterationRef> refs_;
  std::map<IterationRef, std::size_t> lookup_;
  std::vector<std::size_t> task_of_;
  std::vector<std::vector<std::size_t>> by_task_;
  std::vector<std::vector<Edge>> preds_;
  std::vector<std::vector<std::size_t>> succs_;
  std::vector<Deadline> deadlines_;
  std::vector<int> reps_;
};

Plan to_plan(const Schedule& schedule, const InstanceIndex& index);
Schedule to_schedule(const Plan& plan, const InstanceIndex& index);

/// Topological order of the precedence + lane graph; nullopt when cyclic.
std::optional<std::vector<std::size_t>> try_topological_order(const Plan& plan, const InstanceIndex& index);

/// As above; throws CycleError when cyclic.
std::vector<std::size_t> topological_order(const Plan& plan, const InstanceIndex& index);

/// Owning agent per iteration (npos when unassigned).
std::vector<std::size_t> owners(const Plan& plan, std::size_t iteration_count);

}  // namespace hrt
