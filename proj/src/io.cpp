#include "hrt/io.hpp"

#include <fstream>

#include "hrt/errors.hpp"

namespace hrt {
namespace {

json matrix_json(const Eigen::Matrix3d& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return rows;
}

Eigen::Matrix3d matrix_from(const json& j) {
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
  return m;
}

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& v) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) v = it->get<T>();
  else v.reset();
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

void to_json(json& j, const IterationRef& v) { j = {{"task", v.task}, {"n", v.n}}; }
void from_json(const json& j, IterationRef& v) {
  v.task = j.at("task").get<std::string>();
  v.n = j.at("n").get<int>();
}

void to_json(json& j, const GaussianDist& v) { j = {{"mean", v.mean}, {"stddev", v.stddev}}; }
void from_json(const json& j, GaussianDist& v) {
  v.mean = j.at("mean").get<double>();
  v.stddev = j.at("stddev").get<double>();
}

void to_json(json& j, const CurveParams<double>& v) { j = {{"c", v.c}, {"k", v.k}, {"beta", v.beta}}; }
void from_json(const json& j, CurveParams<double>& v) {
  v.c = j.at("c").get<double>();
  v.k = j.at("k").get<double>();
  v.beta = j.at("beta").get<double>();
}

void to_json(json& j, const KalmanState& v) {
  j = {{"x", v.x},         {"P", matrix_json(v.P)}, {"Q", matrix_json(v.Q)},
       {"R", v.R},         {"alpha", v.alpha},      {"residual_std", v.residual_std}};
}
void from_json(const json& j, KalmanState& v) {
  v.x = j.at("x").get<CurveParams<double>>();
  v.P = j.contains("P") ? matrix_from(j.at("P")) : Eigen::Matrix3d::Zero();
  v.Q = j.contains("Q") ? matrix_from(j.at("Q")) : Eigen::Matrix3d::Zero();
  v.R = j.value("R", 0.0);
  v.alpha = j.value("alpha", 0.9);
  v.residual_std = j.value("residual_std", std::sqrt(std::max(v.R, 0.0)));
}

void to_json(json& j, const TaskSpec& v) {
  j = {{"task_id", v.task_id}, {"iterations", v.iterations}};
  put_optional(j, "duration_lb", v.duration_lb);
  put_optional(j, "duration_ub", v.duration_ub);
  json pre = json::array();
  for (const auto& p : v.preconditions) {
    json e = {{"ref", p.ref}, {"wait", p.wait}};
    put_optional(e, "at", p.at);
    pre.push_back(std::move(e));
  }
  j["preconditions"] = std::move(pre);
  put_optional(j, "abs_deadline", v.abs_deadline);
  json rel = json::array();
  for (const auto& r : v.rel_deadlines) rel.push_back({{"anchor", r.anchor}, {"end", r.end}, {"budget", r.budget}});
  j["rel_deadlines"] = std::move(rel);
}
void from_json(const json& j, TaskSpec& v) {
  v.task_id = j.at("task_id").get<std::string>();
  v.iterations = j.value("iterations", 1);
  get_optional(j, "duration_lb", v.duration_lb);
  get_optional(j, "duration_ub", v.duration_ub);
  v.preconditions.clear();
  for (const auto& e : j.value("preconditions", json::array())) {
    Precondition p;
    p.ref = e.at("ref").get<IterationRef>();
    p.wait = e.value("wait", 0.0);
    get_optional(e, "at", p.at);
    v.preconditions.push_back(std::move(p));
  }
  get_optional(j, "abs_deadline", v.abs_deadline);
  v.rel_deadlines.clear();
  for (const auto& e : j.value("rel_deadlines", json::array()))
    v.rel_deadlines.push_back({e.value("anchor", 1), e.at("end").get<IterationRef>(), e.at("budget").get<double>()});
}

std::string kind_name(AgentKind kind) { return kind == AgentKind::robot ? "robot" : "human"; }

void to_json(json& j, const AgentSpec& v) {
  j = {{"agent_id", v.agent_id},
       {"kind", kind_name(v.kind)},
       {"curve_prior", v.curve_prior},
       {"completed_reps", v.completed_reps}};
}
void from_json(const json& j, AgentSpec& v) {
  v.agent_id = j.at("agent_id").get<std::string>();
  const std::string kind = j.value("kind", std::string("human"));
  if (kind != "human" && kind != "robot") throw ConfigError("agent kind must be human or robot, got " + kind);
  v.kind = kind == "robot" ? AgentKind::robot : AgentKind::human;
  v.curve_prior = j.value("curve_prior", std::map<std::string, KalmanState>{});
  v.completed_reps = j.value("completed_reps", std::map<std::string, int>{});
}

void to_json(json& j, const ProblemInstance& v) {
  j = {{"tasks", v.tasks}, {"agents", v.agents}, {"epsilon", v.epsilon}};
  put_optional(j, "time_budget", v.time_budget);
}
void from_json(const json& j, ProblemInstance& v) {
  v.tasks = j.at("tasks").get<std::vector<TaskSpec>>();
  v.agents = j.at("agents").get<std::vector<AgentSpec>>();
  v.epsilon = j.at("epsilon").get<double>();
  get_optional(j, "time_budget", v.time_budget);
}

void to_json(json& j, const Schedule& v) {
  json assignment = json::array();
  for (const auto& [ref, agent] : v.assignment) assignment.push_back({{"ref", ref}, {"agent", agent}});
  json orders = json::object();
  for (const auto& [agent, order] : v.agent_orders) orders[agent] = order;
  j = {{"assignment", std::move(assignment)}, {"agent_orders", std::move(orders)}};
}
void from_json(const json& j, Schedule& v) {
  v.assignment.clear();
  v.agent_orders.clear();
  for (const auto& e : j.at("assignment")) v.assignment[e.at("ref").get<IterationRef>()] = e.at("agent").get<std::string>();
  for (const auto& [agent, order] : j.at("agent_orders").items())
    v.agent_orders[agent] = order.get<std::vector<IterationRef>>();
}

void to_json(json& j, const DurationObservation& v) {
  j = {{"agent_id", v.agent_id},
       {"task_id", v.task_id},
       {"iteration_index", v.iteration_index},
       {"observed_duration", v.observed_duration}};
}
void from_json(const json& j, DurationObservation& v) {
  v.agent_id = j.at("agent_id").get<std::string>();
  v.task_id = j.at("task_id").get<std::string>();
  v.iteration_index = j.at("iteration_index").get<int>();
  v.observed_duration = j.at("observed_duration").get<double>();
}

void to_json(json& j, const RobustnessReport& v) {
  json per = json::array();
  for (const auto& d : v.per_deadline) {
    per.push_back({{"deadline", to_string(d.ref)},
                   {"epsilon", d.epsilon},
                   {"probability", d.probability},
                   {"margin", d.margin},
                   {"pass", d.pass}});
  }
  j = {{"per_deadline", std::move(per)},
       {"duration_ub_flags", v.duration_ub_flags},
       {"makespan_ub", v.makespan_ub},
       {"robust", v.robust}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return guarded("json file", [&] { return json::parse(in); });
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

ProblemInstance parse_instance(const json& doc) {
  return guarded("instance", [&] { return doc.get<ProblemInstance>(); });
}

Schedule parse_schedule(const json& doc) {
  return guarded("schedule", [&] { return doc.get<Schedule>(); });
}

PriorLibrary parse_prior_library(const json& doc) {
  return guarded("prior library", [&] { return doc.get<PriorLibrary>(); });
}

void apply_prior_library(ProblemInstance& instance, const PriorLibrary& library) {
  for (auto& agent : instance.agents) {
    if (agent.kind == AgentKind::robot) continue;
    for (const auto& task : instance.tasks) {
      if (agent.curve_prior.count(task.task_id)) continue;
      if (auto it = library.find(task.task_id); it != library.end()) agent.curve_prior[task.task_id] = it->second;
    }
  }
}

}  // namespace hrt
