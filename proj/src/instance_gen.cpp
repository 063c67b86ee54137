#include "hrt/instance_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "hrt/errors.hpp"

namespace hrt {

using nlohmann::json;

double Component::draw(std::mt19937_64& rng) const {
  if (kind == Kind::normal) {
    if (b <= 0.0) return a;
    return std::normal_distribution<double>(a, b)(rng);
  }
  if (b <= a) return a;
  return std::uniform_real_distribution<double>(a, b)(rng);
}

void GenConfig::validate() const {
  auto unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (n_tasks < 1 || n_tasks > 100) throw ConfigError("n_tasks must be in [1, 100]");
  if (n_agents < 1 || n_agents > 3) throw ConfigError("n_agents must be in [1, 3]");
  if (n_robots < 0 || n_robots > n_agents) throw ConfigError("n_robots must be in [0, n_agents]");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!unit(deadline_fraction) || !unit(wait_probability) || !unit(rel_deadline_fraction))
    throw ConfigError("fractions and probabilities must be in [0, 1]");
  if (std::any_of(precondition_weights.begin(), precondition_weights.end(), [](double w) { return w < 0.0; }) ||
      std::accumulate(precondition_weights.begin(), precondition_weights.end(), 0.0) <= 0.0)
    throw ConfigError("precondition weights must be non-negative and not all zero");
  if (wait_min < 0.0 || wait_min > wait_max) throw ConfigError("wait range must satisfy 0 <= a <= b");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must be in (0, 1)");
  if (noise_fraction < 0.0) throw ConfigError("noise_fraction must be >= 0");
  for (const ComponentSet* set : {&c, &k, &beta})
    for (const Component* comp : {&set->task, &set->agent, &set->joint})
      if ((comp->kind == Component::Kind::normal && comp->b < 0.0) ||
          (comp->kind == Component::Kind::uniform && comp->b < comp->a))
        throw ConfigError("malformed component distribution");
  if (fit_priors && (prior_workers < 2 || prior_iterations < 3 || bootstrap < 2))
    throw ConfigError("prior fitting needs >= 2 workers, >= 3 iterations and bootstrap >= 2");
}

const TrueCurve& GroundTruth::at(const std::string& agent, const std::string& task) const {
  auto it = curves.find({agent, task});
  if (it == curves.end()) throw ConfigError("no ground truth for " + agent + "/" + task);
  return it->second;
}

TrueCurve sample_worker_curve(const GenConfig& config, double c_task, double k_task, double beta_task,
                              std::mt19937_64& rng) {
  const double ca = config.c.agent.draw(rng);
  const double ka = config.k.agent.draw(rng);
  const double ba = config.beta.agent.draw(rng);
  const double cj = config.c.joint.draw(rng);
  const double kj = config.k.joint.draw(rng);
  const double bj = config.beta.joint.draw(rng);
  return {clamp_curve({c_task + ca + cj, k_task + ka + kj, (beta_task + ba + bj) / 3.0}), config.noise_fraction};
}

Generated generate(const GenConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto bernoulli = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  const auto n_tasks = static_cast<std::size_t>(config.n_tasks);
  const auto n_agents = static_cast<std::size_t>(config.n_agents);
  const std::size_t first_robot = n_agents - static_cast<std::size_t>(config.n_robots);

  Generated out;
  ProblemInstance& inst = out.instance;
  inst.epsilon = config.epsilon;

  char buf[32];
  for (std::size_t t = 0; t < n_tasks; ++t) {
    std::snprintf(buf, sizeof buf, "T%03zu", t + 1);
    TaskSpec spec;
    spec.task_id = buf;
    spec.iterations = config.iterations;
    inst.tasks.push_back(spec);
  }
  for (std::size_t a = 0; a < n_agents; ++a) {
    AgentSpec agent;
    agent.agent_id = "A" + std::to_string(a + 1);
    agent.kind = a >= first_robot ? AgentKind::robot : AgentKind::human;
    inst.agents.push_back(agent);
  }

  // Curves: task + agent + joint components.
  std::vector<std::array<double, 3>> task_part(n_tasks), agent_part(n_agents);
  for (auto& p : task_part) p = {config.c.task.draw(rng), config.k.task.draw(rng), config.beta.task.draw(rng)};
  for (auto& p : agent_part) p = {config.c.agent.draw(rng), config.k.agent.draw(rng), config.beta.agent.draw(rng)};
  for (std::size_t a = 0; a < n_agents; ++a) {
    for (std::size_t t = 0; t < n_tasks; ++t) {
      const double cj = config.c.joint.draw(rng);
      const double kj = config.k.joint.draw(rng);
      const double bj = config.beta.joint.draw(rng);
      TrueCurve truth;
      truth.curve = clamp_curve({task_part[t][0] + agent_part[a][0] + cj, task_part[t][1] + agent_part[a][1] + kj,
                                 (task_part[t][2] + agent_part[a][2] + bj) / 3.0});
      truth.noise_fraction = config.noise_fraction;
      if (inst.agents[a].kind == AgentKind::robot) truth = {{truth.curve.c, 0.0, 0.0}, 0.0};
      out.truth.curves[{inst.agents[a].agent_id, inst.tasks[t].task_id}] = truth;
    }
  }

  // Precedence over earlier tasks only.
  std::vector<std::vector<std::pair<std::size_t, double>>> pred_edges(n_tasks);
  std::discrete_distribution<int> pred_count(config.precondition_weights.begin(), config.precondition_weights.end());
  for (std::size_t t = 1; t < n_tasks; ++t) {
    const auto want = std::min<std::size_t>(static_cast<std::size_t>(pred_count(rng)), t);
    std::vector<std::size_t> earlier(t);
    std::iota(earlier.begin(), earlier.end(), 0);
    std::shuffle(earlier.begin(), earlier.end(), rng);
    earlier.resize(want);
    std::sort(earlier.begin(), earlier.end());
    for (std::size_t p : earlier) {
      Precondition pre;
      pre.ref = {inst.tasks[p].task_id, inst.tasks[p].iterations};
      if (bernoulli(config.wait_probability)) pre.wait = uniform(config.wait_min, config.wait_max);
      inst.tasks[t].preconditions.push_back(pre);
      pred_edges[t].emplace_back(p, pre.wait);
    }
  }

  if (config.fit_priors) {
    PriorFitConfig fit;
    fit.bootstrap = config.bootstrap;
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t t = 0; t < n_tasks; ++t) {
      std::vector<WorkerSamples> workers(static_cast<std::size_t>(config.prior_workers));
      for (auto& w : workers) {
        const TrueCurve curve = sample_worker_curve(config, task_part[t][0], task_part[t][1], task_part[t][2], rng);
        for (int i = 1; i <= config.prior_iterations; ++i)
          w.push_back({i, std::max(0.1, curve.mean(i) + curve.stddev(i) * unit(rng))});
      }
      fit.seed = rng();
      const KalmanState prior = fit_population_prior(workers, fit);
      for (std::size_t a = 0; a < n_agents; ++a) {
        const std::string& id = inst.tasks[t].task_id;
        inst.agents[a].curve_prior[id] = inst.agents[a].kind == AgentKind::robot
                                             ? KalmanState::fixed(out.truth.at(inst.agents[a].agent_id, id).curve.c)
                                             : prior;
      }
    }
  } else {
    for (auto& agent : inst.agents)
      if (agent.kind == AgentKind::robot)
        for (const auto& task : inst.tasks)
          agent.curve_prior[task.task_id] = KalmanState::fixed(out.truth.at(agent.agent_id, task.task_id).curve.c);
  }

  // Scheduler-visible duration estimates: priors when fitted, the hidden curves otherwise.
  auto estimate = [&](std::size_t a, std::size_t t, int i) -> GaussianDist {
    const AgentSpec& agent = inst.agents[a];
    const std::string& id = inst.tasks[t].task_id;
    if (config.fit_priors) {
      GaussianDist d = project_duration(agent.curve_prior.at(id), i);
      if (agent.kind == AgentKind::robot) d.stddev = 0.0;
      return d;
    }
    const TrueCurve& c = out.truth.at(agent.agent_id, id);
    return {c.mean(i), c.stddev(i)};
  };

  double mu = 0.0;
  double var = 0.0;
  std::vector<double> fastest(n_tasks, 0.0);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    double task_mu = 0.0;
    double task_var = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n_agents; ++a) {
      double m = 0.0;
      for (int i = 1; i <= config.iterations; ++i) {
        const GaussianDist d = estimate(a, t, i);
        m += d.mean;
        task_var += d.variance() / double(n_agents);
      }
      task_mu += m / double(n_agents);
      best = std::min(best, estimate(a, t, 1).mean);
    }
    mu += task_mu;
    var += task_var;
    fastest[t] = best;
  }
  const double budget = (mu + 3.0 * std::sqrt(var)) / double(n_agents);
  if (config.with_time_budget) inst.time_budget = budget;

  std::vector<double> earliest(n_tasks, 0.0);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    double ready = 0.0;
    for (const auto& [p, wait] : pred_edges[t]) ready = std::max(ready, earliest[p] + wait);
    earliest[t] = ready + fastest[t];
  }

  for (std::size_t t = 0; t < n_tasks; ++t) {
    if (bernoulli(config.deadline_fraction)) {
      const double lo = std::min(earliest[t], budget);
      const double hi = std::max(earliest[t], budget);
      inst.tasks[t].abs_deadline = hi > lo ? uniform(lo, hi) : lo;
    }
    if (bernoulli(config.rel_deadline_fraction)) {
      double span = 0.0;
      for (int i = 1; i <= config.iterations; ++i) span += estimate(0, t, i).mean;
      inst.tasks[t].rel_deadlines.push_back(
          {1, {inst.tasks[t].task_id, config.iterations}, span * uniform(1.5, 2.5)});
    }
  }
  return out;
}

double sample_execution(const GroundTruth& truth, const std::string& agent, const std::string& task, int iteration,
                        std::mt19937_64& rng) {
  const TrueCurve& c = truth.at(agent, task);
  const double mean = c.mean(iteration);
  const double sd = c.stddev(iteration);
  if (sd <= 0.0) return std::max(0.1, mean);
  return std::max(0.1, std::normal_distribution<double>(mean, sd)(rng));
}

DurationModel truth_model(const InstanceIndex& index, const GroundTruth& truth) {
  return DurationModel(index, [&](std::size_t a, std::size_t t, int i) {
    const TrueCurve& c = truth.at(index.agent(a).agent_id, index.task(t).task_id);
    return GaussianDist{c.mean(i), c.stddev(i)};
  });
}

json truth_to_json(const GroundTruth& truth) {
  json curves = json::array();
  for (const auto& [key, c] : truth.curves) {
    curves.push_back({{"agent_id", key.first},
                      {"task_id", key.second},
                      {"c", c.curve.c},
                      {"k", c.curve.k},
                      {"beta", c.curve.beta},
                      {"noise_fraction", c.noise_fraction}});
  }
  return {{"oracle_only", true}, {"curves", curves}};
}

GroundTruth truth_from_json(const json& doc) {
  try {
    GroundTruth truth;
    for (const auto& c : doc.at("curves")) {
      truth.curves[{c.at("agent_id").get<std::string>(), c.at("task_id").get<std::string>()}] = {
          {c.at("c").get<double>(), c.at("k").get<double>(), c.at("beta").get<double>()},
          c.at("noise_fraction").get<double>()};
    }
    return truth;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("ground truth: ") + e.what());
  }
}

namespace {

json component_json(const Component& c) {
  return {{"kind", c.kind == Component::Kind::normal ? "normal" : "uniform"}, {"a", c.a}, {"b", c.b}};
}

void read_component(const json& j, Component& c) {
  const std::string kind = j.value("kind", c.kind == Component::Kind::normal ? "normal" : "uniform");
  if (kind == "normal") c.kind = Component::Kind::normal;
  else if (kind == "uniform") c.kind = Component::Kind::uniform;
  else throw ConfigError("unknown component kind " + kind);
  c.a = j.value("a", c.a);
  c.b = j.value("b", c.b);
}

json set_json(const ComponentSet& s) {
  return {{"task", component_json(s.task)}, {"agent", component_json(s.agent)}, {"joint", component_json(s.joint)}};
}

void read_set(const json& j, ComponentSet& s) {
  if (j.contains("task")) read_component(j["task"], s.task);
  if (j.contains("agent")) read_component(j["agent"], s.agent);
  if (j.contains("joint")) read_component(j["joint"], s.joint);
}

}  // namespace

void to_json(json& j, const GenConfig& v) {
  j = {{"n_tasks", v.n_tasks},
       {"n_agents", v.n_agents},
       {"n_robots", v.n_robots},
       {"iterations", v.iterations},
       {"seed", v.seed},
       {"deadline_fraction", v.deadline_fraction},
       {"precondition_weights", v.precondition_weights},
       {"wait_probability", v.wait_probability},
       {"wait_min", v.wait_min},
       {"wait_max", v.wait_max},
       {"epsilon", v.epsilon},
       {"rel_deadline_fraction", v.rel_deadline_fraction},
       {"with_time_budget", v.with_time_budget},
       {"c", set_json(v.c)},
       {"k", set_json(v.k)},
       {"beta", set_json(v.beta)},
       {"noise_fraction", v.noise_fraction},
       {"fit_priors", v.fit_priors},
       {"prior_workers", v.prior_workers},
       {"prior_iterations", v.prior_iterations},
       {"bootstrap", v.bootstrap}};
}

void from_json(const json& j, GenConfig& v) {
  try {
    v.n_tasks = j.value("n_tasks", v.n_tasks);
    v.n_agents = j.value("n_agents", v.n_agents);
    v.n_robots = j.value("n_robots", v.n_robots);
    v.iterations = j.value("iterations", v.iterations);
    v.seed = j.value("seed", v.seed);
    v.deadline_fraction = j.value("deadline_fraction", v.deadline_fraction);
    v.precondition_weights = j.value("precondition_weights", v.precondition_weights);
    v.wait_probability = j.value("wait_probability", v.wait_probability);
    v.wait_min = j.value("wait_min", v.wait_min);
    v.wait_max = j.value("wait_max", v.wait_max);
    v.epsilon = j.value("epsilon", v.epsilon);
    v.rel_deadline_fraction = j.value("rel_deadline_fraction", v.rel_deadline_fraction);
    v.with_time_budget = j.value("with_time_budget", v.with_time_budget);
    if (j.contains("c")) read_set(j["c"], v.c);
    if (j.contains("k")) read_set(j["k"], v.k);
    if (j.contains("beta")) read_set(j["beta"], v.beta);
    v.noise_fraction = j.value("noise_fraction", v.noise_fraction);
    v.fit_priors = j.value("fit_priors", v.fit_priors);
    v.prior_workers = j.value("prior_workers", v.prior_workers);
    v.prior_iterations = j.value("prior_iterations", v.prior_iterations);
    v.bootstrap = j.value("bootstrap", v.bootstrap);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("gen config: ") + e.what());
  }
}

}  // namespace hrt
