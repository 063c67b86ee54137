#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hrt/gaussian.hpp"
#include "hrt/learning_curve.hpp"

namespace hrt {

/// The n-th iteration (1-based) of a task.
struct IterationRef {
  std::string task;
  int n = 1;

  auto operator<=>(const IterationRef&) const = default;
};

std::string to_string(const IterationRef& ref);

struct Precondition {
  IterationRef ref;
  double wait = 0.0;
  std::optional<int> at;  // dependent iteration; every iteration of the task when empty
};

/// Completion of `end` within `budget` seconds of the start of iteration `anchor` of the owning task.
struct RelativeDeadline {
  int anchor = 1;
  IterationRef end;
  double budget = 0.0;
};

struct TaskSpec {
  std::string task_id;
  int iterations = 1;
  std::optional<double> duration_lb;
  std::optional<double> duration_ub;
  std::vector<Precondition> preconditions;
  std::optional<double> abs_deadline;
  std::vector<RelativeDeadline> rel_deadlines;
};

enum class AgentKind { human, robot };

struct AgentSpec {
  std::string agent_id;
  AgentKind kind = AgentKind::human;
  std::map<std::string, KalmanState> curve_prior;  // task_id -> state
  std::map<std::string, int> completed_reps;       // task_id -> repetitions so far

  [[nodiscard]] int reps(const std::string& task) const {
    auto it = completed_reps.find(task);
    return it == completed_reps.end() ? 0 : it->second;
  }
};

struct ProblemInstance {
  std::vector<TaskSpec> tasks;
  std::vector<AgentSpec> agents;
  double epsilon = 0.05;
  std::optional<double> time_budget;

  [[nodiscard]] const TaskSpec* find_task(const std::string& id) const;
  [[nodiscard]] const AgentSpec* find_agent(const std::string& id) const;
};

/// Agent assignment plus per-agent total order of iterations.
struct Schedule {
  std::map<IterationRef, std::string> assignment;
  std::map<std::string, std::vector<IterationRef>> agent_orders;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct DeadlineRef {
  enum class Kind { absolute, relative, time_budget };
  Kind kind = Kind::absolute;
  std::string task;  // owning task; empty for the time budget
  int index = 0;     // position in rel_deadlines

  auto operator<=>(const DeadlineRef&) const = default;
};

std::string to_string(const DeadlineRef& ref);

struct DeadlineCheck {
  DeadlineRef ref;
  double epsilon = 0.0;
  double probability = 1.0;  // satisfaction probability under the upper bound
  double margin = 0.0;       // bound minus the (1 - epsilon) quantile
  bool pass = true;
};

struct RobustnessReport {
  std::vector<DeadlineCheck> per_deadline;
  std::vector<IterationRef> duration_ub_flags;  // iterations likely to overrun duration_ub
  GaussianDist makespan_ub;
  bool robust = true;

  [[nodiscard]] int failed_count() const;
};

struct ValidationResult {
  std::vector<std::string> violations;

  [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Structural checks: references, ranges, precedence acyclicity. Never throws.
ValidationResult validate_instance(const ProblemInstance& instance);

/// Schedule invariants against an instance: coverage, lane consistency, acyclicity.
ValidationResult validate_schedule(const Schedule& schedule, const ProblemInstance& instance);

/// Every iteration-ref of the instance in task order.
std::vector<IterationRef> all_iterations(const ProblemInstance& instance);

}  // namespace hrt
