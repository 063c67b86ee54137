#include "hrt/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "hrt/errors.hpp"
#include "hrt/io.hpp"
#include "hrt/projection.hpp"
#include "hrt/rounds.hpp"
#include "hrt/stochastic.hpp"

namespace hrt {

using nlohmann::json;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

json machine_info() {
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return {{"hardware_threads", std::thread::hardware_concurrency()},
          {"compiler", __VERSION__},
          {"timestamp", stamp}};
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

json describe(const std::vector<double>& v) {
  if (v.empty()) return json::object();
  return {{"median", median(v)},
          {"mean", mean_of(v)},
          {"stddev", stddev_of(v)},
          {"min", *std::min_element(v.begin(), v.end())},
          {"max", *std::max_element(v.begin(), v.end())},
          {"ci95", 1.96 * stddev_of(v) / std::sqrt(double(v.size()))}};
}

std::string cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return quoted + "\"";
  }
  return v.dump();
}

std::mt19937_64 trial_rng(std::uint64_t seed, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial)};
  return std::mt19937_64(seq);
}

template <typename T>
void read(const json& doc, const char* key, T& field) {
  if (doc.contains(key)) field = doc.at(key).get<T>();
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

json report_to_json(const ExperimentReport& report) {
  return {{"experiment", report.experiment},
          {"seed", report.seed},
          {"trials", report.trials},
          {"config", report.config},
          {"summary", report.summary},
          {"machine", report.machine},
          {"records", report.records}};
}

std::string report_to_csv(const ExperimentReport& report) {
  std::vector<std::string> columns;
  for (const auto& r : report.records)
    for (const auto& [key, _] : r.items())
      if (std::find(columns.begin(), columns.end(), key) == columns.end()) columns.push_back(key);
  std::ostringstream out;
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& r : report.records) {
    for (std::size_t c = 0; c < columns.size(); ++c)
      out << (c ? "," : "") << (r.contains(columns[c]) ? cell(r[columns[c]]) : "");
    out << '\n';
  }
  return out.str();
}

std::string report_table(const ExperimentReport& report) {
  std::ostringstream out;
  out << report.experiment << "  seed=" << report.seed << "  trials=" << report.trials << '\n';
  const json flat = report.summary.flatten();
  std::size_t width = 0;
  for (const auto& [key, _] : flat.items()) width = std::max(width, key.size());
  for (const auto& [key, value] : flat.items())
    out << "  " << std::left << std::setw(static_cast<int>(width)) << key.substr(1) << "  " << value.dump() << '\n';
  return out.str();
}

ExperimentReport cmd_speedup(const SpeedupConfig& config) {
  if (config.trials < 1 || config.sizes.empty() || config.bound_repeats < 1)
    throw ConfigError("speedup needs trials >= 1, sizes and bound_repeats >= 1");
  ExperimentReport report;
  report.experiment = "speedup";
  report.seed = config.seed;
  report.trials = config.trials;
  report.machine = machine_info();
  report.config = {{"sizes", config.sizes},
                   {"gen", config.gen},
                   {"bound_repeats", config.bound_repeats},
                   {"quadrature", {{"min_points", config.quadrature.min_points},
                                   {"max_step", config.quadrature.max_step}}}};

  json per_size = json::array();
  double previous_ratio = 0.0;
  bool increasing = true;
  for (int size : config.sizes) {
    std::vector<double> bound_s, quad_s, ratios;
    for (int trial = 0; trial < config.trials; ++trial) {
      GenConfig gen = config.gen;
      gen.n_tasks = size;
      gen.seed = trial_rng(config.seed, size * 1000 + trial)();
      const Generated g = generate(gen);
      const InstanceIndex index(g.instance);
      const DurationModel model = truth_model(index, g.truth);
      const Plan plan = edf_seed(index, model);
      const auto durations = model.durations(plan, index);

      std::vector<double> runs;
      PropagationResult bound;
      for (int r = 0; r < config.bound_repeats; ++r) {
        const auto t0 = clock_type::now();
        bound = propagate(plan, index, durations);
        runs.push_back(seconds_since(t0));
      }
      const double bound_time = median(runs);

      const auto t0 = clock_type::now();
      const QuadratureResult quad = quadrature_propagate(plan, index, durations, config.quadrature);
      const double quad_time = seconds_since(t0);

      const double ratio = quad_time / std::max(bound_time, 1e-9);
      bound_s.push_back(bound_time);
      quad_s.push_back(quad_time);
      ratios.push_back(ratio);
      report.records.push_back({{"size", size},
                                {"trial", trial},
                                {"iterations", index.iteration_count()},
                                {"bound_seconds", bound_time},
                                {"quadrature_seconds", quad_time},
                                {"speedup", ratio},
                                {"grid_points", quad.makespan.mass.size()},
                                {"bound_makespan_mean", bound.makespan_ub.mean},
                                {"bound_makespan_stddev", bound.makespan_ub.stddev},
                                {"quadrature_makespan_mean", quad.makespan.mean()},
                                {"quadrature_makespan_stddev", quad.makespan.stddev()}});
    }
    const double ratio = median(ratios);
    if (ratio <= previous_ratio) increasing = false;
    previous_ratio = ratio;
    per_size.push_back({{"size", size},
                        {"bound_seconds", describe(bound_s)},
                        {"quadrature_seconds", describe(quad_s)},
                        {"median_speedup", ratio}});
  }
  report.summary = {{"per_size", per_size}, {"speedup_increasing", increasing}};
  return report;
}

ExperimentReport cmd_conservatism(const ConservatismConfig& config) {
  if (config.trials < 1 || config.mc_samples < 1 || !(config.robustness > 0.0 && config.robustness < 1.0))
    throw ConfigError("conservatism needs trials >= 1, mc_samples >= 1, robustness in (0, 1)");
  ExperimentReport report;
  report.experiment = "conservatism";
  report.seed = config.seed;
  report.trials = config.trials;
  report.machine = machine_info();
  report.config = {{"gen", config.gen}, {"mc_samples", config.mc_samples}, {"robustness", config.robustness}};

  std::vector<double> percents;
  for (int trial = 0; trial < config.trials; ++trial) {
    auto rng = trial_rng(config.seed, trial);
    GenConfig gen = config.gen;
    gen.seed = rng();
    const Generated g = generate(gen);
    const InstanceIndex index(g.instance);
    const DurationModel model = truth_model(index, g.truth);
    const Plan plan = edf_seed(index, model);
    const auto durations = model.durations(plan, index);

    const PropagationResult prop = propagate(plan, index, durations);
    const double bound_q = quantile(prop.makespan_ub, config.robustness);
    const MonteCarloReport mc = monte_carlo_oracle(plan, index, durations, config.mc_samples, rng());
    const double mc_q = mc.makespan_quantile(config.robustness);
    const double pct = mc_q > 0.0 ? 100.0 * (bound_q - mc_q) / mc_q : 0.0;
    percents.push_back(pct);
    report.records.push_back({{"trial", trial},
                              {"iterations", index.iteration_count()},
                              {"bound_quantile", bound_q},
                              {"mc_quantile", mc_q},
                              {"bound_mean", prop.makespan_ub.mean},
                              {"mc_mean", mc.makespan_mean},
                              {"percent_added", pct}});
  }
  report.summary = {{"percent_added", describe(percents)},
                    {"never_negative", std::all_of(percents.begin(), percents.end(),
                                                   [](double p) { return p >= 0.0; })}};
  return report;
}

ExperimentReport cmd_kalman(const KalmanConfig& config) {
  if (config.trials < 1 || config.prior_agents < 2 || config.prior_iterations < 3 || config.test_iterations < 1)
    throw ConfigError("kalman needs trials >= 1, prior_agents >= 2, prior_iterations >= 3, test_iterations >= 1");
  ExperimentReport report;
  report.experiment = "kalman";
  report.seed = config.seed;
  report.trials = config.trials;
  report.machine = machine_info();
  report.config = {{"gen", config.gen},
                   {"prior_agents", config.prior_agents},
                   {"prior_iterations", config.prior_iterations},
                   {"test_iterations", config.test_iterations},
                   {"bootstrap", config.bootstrap}};

  std::vector<double> population_err, adaptive_err;
  int improved = 0;
  for (int trial = 0; trial < config.trials; ++trial) {
    auto rng = trial_rng(config.seed, trial);
    std::normal_distribution<double> unit(0.0, 1.0);
    auto observe = [&](const TrueCurve& c, int i) { return std::max(0.1, c.mean(i) + c.stddev(i) * unit(rng)); };

    const double c_task = config.gen.c.task.draw(rng);
    const double k_task = config.gen.k.task.draw(rng);
    const double b_task = config.gen.beta.task.draw(rng);

    std::vector<WorkerSamples> workers(static_cast<std::size_t>(config.prior_agents));
    for (auto& w : workers) {
      const TrueCurve curve = sample_worker_curve(config.gen, c_task, k_task, b_task, rng);
      for (int i = 1; i <= config.prior_iterations; ++i) w.push_back({i, observe(curve, i)});
    }
    PriorFitConfig fit;
    fit.bootstrap = config.bootstrap;
    fit.seed = rng();
    const KalmanState prior = fit_population_prior(workers, fit);

    const TrueCurve agent = sample_worker_curve(config.gen, c_task, k_task, b_task, rng);
    KalmanState state = prior;
    double pop = 0.0;
    double adapt = 0.0;
    for (int i = 1; i <= config.test_iterations; ++i) {
      const double y = observe(agent, i);
      pop += std::abs(y - curve_mean(prior.x, double(i)));
      adapt += std::abs(y - curve_mean(state.x, double(i)));
      state = kalman_update(state, {"agent", "task", i, y});
    }
    population_err.push_back(pop);
    adaptive_err.push_back(adapt);
    improved += adapt < pop ? 1 : 0;
    report.records.push_back({{"trial", trial},
                              {"population_error", pop},
                              {"adaptive_error", adapt},
                              {"improved", adapt < pop},
                              {"true_c", agent.curve.c},
                              {"true_k", agent.curve.k},
                              {"true_beta", agent.curve.beta},
                              {"prior_c", prior.x.c},
                              {"prior_k", prior.x.k},
                              {"prior_beta", prior.x.beta},
                              {"final_c", state.x.c},
                              {"final_k", state.x.k},
                              {"final_beta", state.x.beta}});
  }
  report.summary = {{"population_error", describe(population_err)},
                    {"adaptive_error", describe(adaptive_err)},
                    {"improvement_fraction", double(improved) / double(config.trials)},
                    {"median_improvement", median(population_err) - median(adaptive_err)}};
  return report;
}

ExperimentReport cmd_session(const SessionConfig& config) {
  if (config.trials < 1 || config.rounds < 1) throw ConfigError("session needs trials >= 1 and rounds >= 1");
  config.search.validate();
  StrategyConfig strategy = config.strategy;
  strategy.total_rounds = config.rounds;

  ExperimentReport report;
  report.experiment = "session";
  report.seed = config.seed;
  report.trials = config.trials;
  report.machine = machine_info();
  report.config = {{"strategy", strategy_to_json(strategy)},
                   {"rounds", config.rounds},
                   {"search", search_to_json(config.search)}};
  if (config.instance_path) report.config["instance_path"] = *config.instance_path;
  else report.config["gen"] = config.gen;

  std::vector<double> z2_all, lambdas;
  std::vector<std::vector<double>> makespans(static_cast<std::size_t>(config.rounds));
  for (int trial = 0; trial < config.trials; ++trial) {
    auto rng = trial_rng(config.seed, trial);
    Generated g;
    if (config.instance_path) {
      g.instance = parse_instance(read_json_file(*config.instance_path));
      if (config.truth_path) {
        g.truth = truth_from_json(read_json_file(*config.truth_path));
      } else {
        for (const auto& agent : g.instance.agents) {
          for (const auto& [task, state] : agent.curve_prior) {
            const double noise = agent.kind == AgentKind::robot ? 0.0 : config.gen.noise_fraction;
            g.truth.curves[{agent.agent_id, task}] = {state.x, noise};
          }
        }
      }
    } else {
      GenConfig gen = config.gen;
      gen.seed = rng();
      g = generate(gen);
    }

    SearchConfig search = config.search;
    search.seed = rng();
    ProblemInstance current = g.instance;
    for (int round = 1; round <= config.rounds; ++round) {
      const double lambda = strategy_lambda(strategy, round);
      const ScoredSchedule scored = optimize_round(current, search, lambda, round);

      const InstanceIndex index(current);
      const Plan plan = to_plan(scored.schedule, index);
      std::vector<double> realized(index.iteration_count(), 0.0);
      std::vector<DurationObservation> observations;
      for (const auto& [agent_id, lane] : scored.schedule.agent_orders) {
        const AgentSpec& agent = index.agent(index.agent_index(agent_id));
        std::map<std::string, int> seen;
        for (const auto& ref : lane) {
          const int i = agent.reps(ref.task) + ++seen[ref.task];
          const double d = sample_execution(g.truth, agent_id, ref.task, i, rng);
          realized[index.index_of(ref)] = d;
          if (agent.kind == AgentKind::human) observations.push_back({agent_id, ref.task, i, d});
        }
      }
      const auto finish = replay_finish_times(plan, index, realized);
      const double makespan = finish.empty() ? 0.0 : *std::max_element(finish.begin(), finish.end());

      const ObjectiveValue& v = scored.evaluation.value;
      report.records.push_back({{"trial", trial},
                                {"round", round},
                                {"lambda", lambda},
                                {"z", v.z},
                                {"z1", v.z1},
                                {"z2", v.z2},
                                {"robust", scored.evaluation.robust},
                                {"failed_deadlines", scored.evaluation.failed},
                                {"realized_makespan", makespan}});
      z2_all.push_back(v.z2);
      makespans[static_cast<std::size_t>(round - 1)].push_back(makespan);
      if (trial == 0) lambdas.push_back(lambda);

      if (round < config.rounds) apply_round(current, scored.schedule, observations);
    }
  }

  json by_round = json::array();
  for (int r = 0; r < config.rounds; ++r)
    by_round.push_back({{"round", r + 1}, {"realized_makespan", describe(makespans[static_cast<std::size_t>(r)])}});
  report.summary = {{"strategy", strategy_name(strategy.kind)},
                    {"mean_z2", mean_of(z2_all)},
                    {"lambda_trace", lambdas},
                    {"by_round", by_round}};
  return report;
}

json search_to_json(const SearchConfig& v) {
  json j = {{"population_size", v.population_size},
            {"elite_fraction", v.elite_fraction},
            {"reassign_weight", v.reassign_weight},
            {"swap_agents_weight", v.swap_agents_weight},
            {"swap_adjacent_weight", v.swap_adjacent_weight},
            {"seed", v.seed},
            {"lambda", v.lambda},
            {"mutation_retries", v.mutation_retries}};
  j["time_limit"] = v.time_limit ? json(*v.time_limit) : json(nullptr);
  j["max_generations"] = v.max_generations ? json(*v.max_generations) : json(nullptr);
  return j;
}

json strategy_to_json(const StrategyConfig& v) {
  return {{"kind", strategy_name(v.kind)}, {"lambda_explore", v.lambda_explore}, {"total_rounds", v.total_rounds}};
}

SearchConfig search_config(const json& doc, SearchConfig base) {
  try {
    read(doc, "population_size", base.population_size);
    read(doc, "elite_fraction", base.elite_fraction);
    read(doc, "reassign_weight", base.reassign_weight);
    read(doc, "swap_agents_weight", base.swap_agents_weight);
    read(doc, "swap_adjacent_weight", base.swap_adjacent_weight);
    read(doc, "seed", base.seed);
    read(doc, "lambda", base.lambda);
    read(doc, "mutation_retries", base.mutation_retries);
    if (doc.contains("time_limit")) {
      if (doc["time_limit"].is_null()) base.time_limit.reset();
      else base.time_limit = doc["time_limit"].get<double>();
    }
    if (doc.contains("max_generations")) {
      if (doc["max_generations"].is_null()) base.max_generations.reset();
      else base.max_generations = doc["max_generations"].get<int>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("search config: ") + e.what());
  }
  base.validate();
  return base;
}

StrategyConfig strategy_config(const json& doc, StrategyConfig base) {
  try {
    if (doc.contains("kind")) base.kind = parse_strategy(doc["kind"].get<std::string>());
    read(doc, "lambda_explore", base.lambda_explore);
    read(doc, "total_rounds", base.total_rounds);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("strategy config: ") + e.what());
  }
  if (base.total_rounds < 1) throw ConfigError("total_rounds must be >= 1");
  if (base.lambda_explore < 0.0) throw ConfigError("lambda_explore must be >= 0");
  return base;
}

namespace {

template <typename Cfg>
void read_common(const json& doc, Cfg& cfg) {
  read(doc, "trials", cfg.trials);
  read(doc, "seed", cfg.seed);
  if (doc.contains("gen")) from_json(doc["gen"], cfg.gen);
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

SpeedupConfig speedup_config(const json& doc) {
  return guarded("speedup config", [&] {
    SpeedupConfig cfg;
    read_common(doc, cfg);
    read(doc, "sizes", cfg.sizes);
    read(doc, "bound_repeats", cfg.bound_repeats);
    read(doc, "min_points", cfg.quadrature.min_points);
    read(doc, "max_step", cfg.quadrature.max_step);
    return cfg;
  });
}

ConservatismConfig conservatism_config(const json& doc) {
  return guarded("conservatism config", [&] {
    ConservatismConfig cfg;
    read_common(doc, cfg);
    read(doc, "mc_samples", cfg.mc_samples);
    read(doc, "robustness", cfg.robustness);
    return cfg;
  });
}

KalmanConfig kalman_config(const json& doc) {
  return guarded("kalman config", [&] {
    KalmanConfig cfg;
    read_common(doc, cfg);
    read(doc, "prior_agents", cfg.prior_agents);
    read(doc, "prior_iterations", cfg.prior_iterations);
    read(doc, "test_iterations", cfg.test_iterations);
    read(doc, "bootstrap", cfg.bootstrap);
    return cfg;
  });
}

SessionConfig session_config(const json& doc) {
  return guarded("session config", [&] {
    SessionConfig cfg;
    read_common(doc, cfg);
    read(doc, "rounds", cfg.rounds);
    if (doc.contains("instance")) cfg.instance_path = doc["instance"].get<std::string>();
    if (doc.contains("truth")) cfg.truth_path = doc["truth"].get<std::string>();
    if (doc.contains("strategy")) cfg.strategy = strategy_config(doc["strategy"], cfg.strategy);
    if (doc.contains("search")) cfg.search = search_config(doc["search"], cfg.search);
    return cfg;
  });
}

}  // namespace hrt
