#include "hrt/service.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "hrt/errors.hpp"
#include "hrt/experiments.hpp"
#include "hrt/projection.hpp"

namespace hrt {

using nlohmann::json;

namespace {

json ref_json(const IterationRef& ref) { return {{"ref", to_string(ref)}, {"task", ref.task}, {"n", ref.n}}; }

json error_body(const std::string& message, json details = nullptr) {
  json body = {{"error", message}};
  if (!details.is_null()) body["details"] = std::move(details);
  return body;
}

class EventLog {
 public:
  explicit EventLog(std::filesystem::path path) : path_(std::move(path)) {}

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

  void append(const std::vector<json>& events) {
    std::string chunk;
    for (const auto& e : events) chunk += e.dump() + '\n';
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw ConfigError("cannot append to " + path_.string());
    out << chunk;
    out.flush();
    if (!out) throw ConfigError("write failed for " + path_.string());
  }

  static std::vector<json> read(const std::filesystem::path& path) {
    std::vector<json> events;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        events.push_back(json::parse(line));
      } catch (const json::exception&) {
        break;  // torn tail from an interrupted write
      }
    }
    return events;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace

struct CoordinationService::Session {
  explicit Session(std::filesystem::path log_path) : log(std::move(log_path)) {}

  std::mutex write;
  EventLog log;

  std::string id;
  ProblemInstance base;
  StrategyConfig strategy;
  SearchConfig search;

  ProblemInstance current;
  int round = 1;
  bool completed = false;
  Schedule schedule;
  double lambda = 0.0;
  std::vector<json> history;
  std::map<std::string, json> replies;  // idempotency key -> stored response
  std::map<std::pair<std::string, std::string>, std::vector<json>> observed;

  // Published documents; readers never take `write`.
  mutable std::mutex publish;
  std::shared_ptr<const json> schedule_doc;
  std::shared_ptr<const json> agents_doc;

  json schedule_document() const {
    const ScoredSchedule scored = score_schedule(current, schedule, lambda, search.bound);
    const InstanceIndex index(current);
    const Plan plan = to_plan(schedule, index);
    const DurationModel model = DurationModel::from_priors(index);
    const auto durations = model.durations(plan, index);

    json iterations = json::array();
    for (const auto& [agent, lane] : schedule.agent_orders) {
      for (const auto& ref : lane) {
        const std::size_t it = index.index_of(ref);
        const GaussianDist& f = scored.propagation.finish[it];
        iterations.push_back({{"ref", to_string(ref)},
                              {"agent", agent},
                              {"start_mean", scored.propagation.start_mean[it]},
                              {"finish_mean", f.mean},
                              {"finish_stddev", f.stddev},
                              {"duration", durations[it]}});
      }
    }
    json expected = json::array();
    for (const auto& e : expected_observations(current, schedule)) {
      expected.push_back(
          {{"agent_id", e.agent_id}, {"task_id", e.task_id}, {"iteration_index", e.iteration_index},
           {"ref", to_string(e.ref)}});
    }
    const ObjectiveValue& v = scored.evaluation.value;
    return {{"session_id", id},
            {"round", round},
            {"total_rounds", strategy.total_rounds},
            {"completed", completed},
            {"strategy", strategy_to_json(strategy)},
            {"lambda", lambda},
            {"mode", lambda > 0.0 ? "explore" : "exploit"},
            {"schedule", schedule},
            {"robust", scored.evaluation.robust},
            {"objective", {{"z", v.z}, {"z1", v.z1}, {"z2", v.z2}, {"lambda", v.lambda}}},
            {"robustness", scored.evaluation.report},
            {"iterations", iterations},
            {"expected_observations", completed ? json::array() : expected}};
  }

  json agents_document() const {
    json agents = json::array();
    for (const auto& agent : current.agents) {
      json tasks = json::array();
      for (const auto& task : current.tasks) {
        json entry = {{"task_id", task.task_id}, {"completed_reps", agent.reps(task.task_id)}};
        if (auto s = agent.curve_prior.find(task.task_id); s != agent.curve_prior.end()) {
          GaussianDist next = project_duration(s->second, agent.reps(task.task_id) + 1);
          if (agent.kind == AgentKind::robot) next.stddev = 0.0;
          entry["curve"] = s->second.x;
          entry["residual_std"] = s->second.residual_std;
          entry["next"] = next;
        }
        auto obs = observed.find({agent.agent_id, task.task_id});
        entry["observations"] = obs == observed.end() ? json::array() : json(obs->second);
        tasks.push_back(std::move(entry));
      }
      agents.push_back({{"agent_id", agent.agent_id}, {"kind", kind_name(agent.kind)}, {"tasks", std::move(tasks)}});
    }
    return {{"session_id", id}, {"round", round}, {"agents", std::move(agents)}};
  }

  void publish_documents() {
    auto s = std::make_shared<const json>(schedule_document());
    auto a = std::make_shared<const json>(agents_document());
    std::lock_guard lock(publish);
    schedule_doc = std::move(s);
    agents_doc = std::move(a);
  }

  json state() const {
    json obs = json::array();
    for (const auto& [key, list] : observed)
      obs.push_back({{"agent_id", key.first}, {"task_id", key.second}, {"observations", list}});
    return {{"session_id", id},
            {"base", base},
            {"strategy", strategy_to_json(strategy)},
            {"search", search_to_json(search)},
            {"current", current},
            {"round", round},
            {"completed", completed},
            {"schedule", schedule},
            {"lambda", lambda},
            {"history", history},
            {"replies", replies},
            {"observed", obs}};
  }

  // Event folds, shared by live requests and restart replay.
  void on_created(const json& e) {
    id = e.at("session_id").get<std::string>();
    base = parse_instance(e.at("instance"));
    current = base;
    strategy = strategy_config(e.at("strategy"));
    search = search_config(e.at("search"));
  }

  void on_scheduled(const json& e) {
    round = e.at("round").get<int>();
    lambda = e.at("lambda").get<double>();
    schedule = parse_schedule(e.at("schedule"));
  }

  void on_observed(const json& e) {
    std::vector<DurationObservation> obs = e.at("observations").get<std::vector<DurationObservation>>();
    apply_round(current, schedule, obs);
    for (const auto& o : obs)
      observed[{o.agent_id, o.task_id}].push_back(
          {{"iteration_index", o.iteration_index}, {"observed_duration", o.observed_duration}, {"round", round}});
    history.push_back({{"round", round}, {"lambda", lambda}, {"schedule", schedule}, {"observations", obs}});
    if (e.contains("idempotency_key") && !e["idempotency_key"].is_null())
      replies[e["idempotency_key"].get<std::string>()] = e.at("response");
    if (round >= strategy.total_rounds) completed = true;
  }

  void apply(const json& e) {
    const std::string type = e.at("type").get<std::string>();
    if (type == "created") on_created(e);
    else if (type == "scheduled") on_scheduled(e);
    else if (type == "observed") on_observed(e);
    else throw ConfigError("unknown event type " + type);
  }
};

ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file,
                                  const std::function<const char*(const char*)>& getenv) {
  ServiceConfig cfg;
  if (file) {
    const json doc = read_json_file(*file);
    try {
      cfg.host = doc.value("host", cfg.host);
      cfg.port = doc.value("port", cfg.port);
      if (doc.contains("data_dir")) cfg.data_dir = doc["data_dir"].get<std::string>();
      if (doc.contains("prior_library")) cfg.prior_library = doc["prior_library"].get<std::string>();
      if (doc.contains("search")) cfg.search = search_config(doc["search"], cfg.search);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("service config: ") + e.what());
    }
  }
  if (const char* v = getenv("HRT_HOST"); v && *v) cfg.host = v;
  if (const char* v = getenv("HRT_PORT"); v && *v) {
    try {
      cfg.port = std::stoi(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("HRT_PORT is not a number: ") + v);
    }
  }
  if (const char* v = getenv("HRT_DATA_DIR"); v && *v) cfg.data_dir = v;
  if (const char* v = getenv("HRT_PRIOR_LIBRARY"); v && *v) cfg.prior_library = v;
  if (cfg.port < 0 || cfg.port > 65535) throw ConfigError("port out of range");
  return cfg;
}

CoordinationService::CoordinationService(ServiceConfig config) : config_(std::move(config)) {
  if (config_.prior_library) priors_ = parse_prior_library(read_json_file(*config_.prior_library));
  std::filesystem::create_directories(config_.data_dir);
  std::vector<std::filesystem::path> logs;
  for (const auto& entry : std::filesystem::directory_iterator(config_.data_dir))
    if (entry.path().extension() == ".jsonl") logs.push_back(entry.path());
  std::sort(logs.begin(), logs.end());
  for (const auto& log : logs) replay(log);
}

CoordinationService::~CoordinationService() = default;

void CoordinationService::replay(const std::filesystem::path& log) {
  auto session = std::make_shared<Session>(log);
  const auto events = EventLog::read(log);
  if (events.empty()) return;
  for (const auto& e : events) session->apply(e);
  session->publish_documents();
  sessions_[session->id] = std::move(session);
}

std::string CoordinationService::new_session_id() {
  std::lock_guard lock(id_mutex_);
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  for (;;) {
    std::ostringstream s;
    s << std::hex << rng();
    std::string id = s.str();
    std::shared_lock read(sessions_mutex_);
    if (!sessions_.count(id) && !std::filesystem::exists(config_.data_dir / (id + ".jsonl"))) return id;
  }
}

std::shared_ptr<CoordinationService::Session> CoordinationService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::string> CoordinationService::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

json CoordinationService::session_state(const std::string& id) const {
  auto s = find(id);
  if (!s) return nullptr;
  std::lock_guard lock(s->write);
  return s->state();
}

Response CoordinationService::create_session(const json& body) {
  if (!body.is_object() || !body.contains("instance")) return {400, error_body("body must carry an instance")};

  ProblemInstance instance;
  StrategyConfig strategy;
  SearchConfig search = config_.search;
  try {
    instance = parse_instance(body["instance"]);
    if (body.contains("strategy")) strategy = strategy_config(body["strategy"]);
    if (body.contains("search")) search = search_config(body["search"], search);
  } catch (const ConfigError& e) {
    return {400, error_body(e.what())};
  }

  apply_prior_library(instance, priors_);
  ValidationResult v = validate_instance(instance);
  for (const auto& agent : instance.agents)
    for (const auto& task : instance.tasks)
      if (!agent.curve_prior.count(task.task_id))
        v.violations.push_back("agent " + agent.agent_id + " has no curve prior for task " + task.task_id);
  if (!v.ok()) return {400, error_body("instance failed validation", v.violations)};

  const std::string id = new_session_id();
  auto session = std::make_shared<Session>(config_.data_dir / (id + ".jsonl"));
  const json created = {{"type", "created"},
                        {"session_id", id},
                        {"instance", instance},
                        {"strategy", strategy_to_json(strategy)},
                        {"search", search_to_json(search)}};

  std::lock_guard lock(session->write);
  session->apply(created);
  json scheduled;
  try {
    const double lambda = strategy_lambda(strategy, 1);
    const ScoredSchedule scored = optimize_round(session->current, search, lambda, 1);
    scheduled = {{"type", "scheduled"}, {"round", 1}, {"lambda", lambda}, {"schedule", scored.schedule}};
    session->apply(scheduled);
    session->publish_documents();
  } catch (const Error& e) {
    return {422, error_body(std::string("no schedule could be constructed: ") + e.what())};
  }
  session->log.append({created, scheduled});
  {
    std::unique_lock write(sessions_mutex_);
    sessions_[id] = session;
  }
  return {201, *session->schedule_doc};
}

Response CoordinationService::get_schedule(const std::string& id) const {
  auto s = find(id);
  if (!s) return {404, error_body("unknown session " + id)};
  std::lock_guard lock(s->publish);
  return {200, *s->schedule_doc};
}

Response CoordinationService::get_agents(const std::string& id) const {
  auto s = find(id);
  if (!s) return {404, error_body("unknown session " + id)};
  std::lock_guard lock(s->publish);
  return {200, *s->agents_doc};
}

Response CoordinationService::post_observations(const std::string& id, const json& body,
                                                const std::optional<std::string>& idempotency_key) {
  auto s = find(id);
  if (!s) return {404, error_body("unknown session " + id)};
  std::lock_guard lock(s->write);

  std::optional<std::string> key = idempotency_key;
  if (!key && body.is_object() && body.contains("idempotency_key") && body["idempotency_key"].is_string())
    key = body["idempotency_key"].get<std::string>();
  if (key) {
    if (auto it = s->replies.find(*key); it != s->replies.end())
      return {it->second.at("status").get<int>(), it->second.at("body")};
  }
  if (s->completed) return {410, error_body("session has completed all rounds")};

  std::vector<DurationObservation> observations;
  try {
    const json& list = body.is_array() ? body : body.at("observations");
    observations = list.get<std::vector<DurationObservation>>();
  } catch (const json::exception& e) {
    return {400, error_body(std::string("malformed observations: ") + e.what())};
  }

  const auto expected = expected_observations(s->current, s->schedule);
  const ObservationMismatch mismatch = match_observations(expected, observations);
  if (!mismatch.empty()) {
    json missing = json::array();
    for (const auto& ref : mismatch.missing) missing.push_back(ref_json(ref));
    return {409, {{"error", "observations do not match the expected set"},
                  {"missing", missing},
                  {"unexpected", mismatch.unexpected}}};
  }

  // Build the successor state on a copy; commit only after the events are durable.
  Session next(s->log.path());
  next.id = s->id;
  next.base = s->base;
  next.strategy = s->strategy;
  next.search = s->search;
  next.current = s->current;
  next.round = s->round;
  next.completed = s->completed;
  next.schedule = s->schedule;
  next.lambda = s->lambda;
  next.history = s->history;
  next.replies = s->replies;
  next.observed = s->observed;

  json observed = {{"type", "observed"}, {"round", s->round}, {"observations", observations}};
  observed["idempotency_key"] = key ? json(*key) : json(nullptr);
  observed["response"] = nullptr;
  next.on_observed(observed);

  std::vector<json> events;
  json reply;
  if (next.completed) {
    next.publish_documents();
    reply = {{"session_id", id}, {"round", next.round}, {"completed", true}, {"agents", next.agents_doc->at("agents")}};
  } else {
    try {
      const int round = next.round + 1;
      const double lambda = strategy_lambda(next.strategy, round);
      const ScoredSchedule scored = optimize_round(next.current, next.search, lambda, round);
      events.push_back({{"type", "scheduled"}, {"round", round}, {"lambda", lambda}, {"schedule", scored.schedule}});
      next.on_scheduled(events.back());
      next.publish_documents();
    } catch (const Error& e) {
      return {422, error_body(std::string("rescheduling failed: ") + e.what())};
    }
    reply = *next.schedule_doc;
    reply["agents"] = next.agents_doc->at("agents");
  }
  observed["response"] = {{"status", 200}, {"body", reply}};
  if (key) next.replies[*key] = observed["response"];
  events.insert(events.begin(), observed);
  s->log.append(events);

  s->current = std::move(next.current);
  s->round = next.round;
  s->completed = next.completed;
  s->schedule = std::move(next.schedule);
  s->lambda = next.lambda;
  s->history = std::move(next.history);
  s->replies = std::move(next.replies);
  s->observed = std::move(next.observed);
  {
    std::lock_guard publish(s->publish);
    s->schedule_doc = next.schedule_doc;
    s->agents_doc = next.agents_doc;
  }
  return {200, reply};
}

}  // namespace hrt
