#include "hrt/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "hrt/errors.hpp"

namespace hrt {

void SearchConfig::validate() const {
  if (population_size < 2) throw ConfigError("population_size must be >= 2");
  if (!(elite_fraction > 0.0 && elite_fraction < 1.0)) throw ConfigError("elite_fraction must be in (0, 1)");
  if (reassign_weight < 0 || swap_agents_weight < 0 || swap_adjacent_weight < 0 ||
      reassign_weight + swap_agents_weight + swap_adjacent_weight <= 0)
    throw ConfigError("mutation weights must be non-negative and not all zero");
  if (!time_limit && !max_generations) throw ConfigError("need a time_limit or max_generations");
  if (time_limit && !(*time_limit > 0.0)) throw ConfigError("time_limit must be positive");
  if (max_generations && *max_generations < 0) throw ConfigError("max_generations must be >= 0");
}

std::string strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::exploit:
      return "exploit";
    case StrategyKind::explore_exploit:
      return "explore_exploit";
    case StrategyKind::annealed:
      return "annealed";
  }
  return "?";
}

StrategyKind parse_strategy(const std::string& name) {
  if (name == "exploit") return StrategyKind::exploit;
  if (name == "explore_exploit") return StrategyKind::explore_exploit;
  if (name == "annealed") return StrategyKind::annealed;
  throw ConfigError("unknown strategy " + name);
}

double strategy_lambda(const StrategyConfig& strategy, int round) {
  switch (strategy.kind) {
    case StrategyKind::exploit:
      return 0.0;
    case StrategyKind::explore_exploit:
      return strategy.lambda_explore;
    case StrategyKind::annealed:
      return round <= (strategy.total_rounds + 1) / 2 ? strategy.lambda_explore : 0.0;
  }
  return 0.0;
}

double entropy_term(const Plan& plan, const InstanceIndex& index) {
  const std::size_t n_agents = index.agent_count();
  const std::size_t n_tasks = index.task_count();
  if (n_agents == 0 || n_tasks == 0) return 0.0;

  std::vector<double> reps(n_agents * n_tasks, 0.0);
  for (std::size_t a = 0; a < n_agents; ++a)
    for (std::size_t t = 0; t < n_tasks; ++t) reps[a * n_tasks + t] = index.completed_reps(a, t);
  for (std::size_t a = 0; a < plan.lanes.size(); ++a)
    for (std::size_t it : plan.lanes[a]) reps[a * n_tasks + index.task_of(it)] += 1.0;

  double total = 0.0;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    double mean = 0.0;
    for (std::size_t a = 0; a < n_agents; ++a) mean += reps[a * n_tasks + t];
    mean /= double(n_agents);
    for (std::size_t a = 0; a < n_agents; ++a) total += std::abs(mean - reps[a * n_tasks + t]);
  }
  return total / double(n_tasks * n_agents);
}

double entropy_term(const Schedule& schedule, const InstanceIndex& index) {
  return entropy_term(to_plan(schedule, index), index);
}

Evaluation objective(const Plan& plan, const InstanceIndex& index, const DurationModel& model, double lambda,
                     const MaxBoundConfig& bound) {
  const auto durations = model.durations(plan, index);
  const PropagationResult prop = propagate(plan, index, durations, bound);
  Evaluation e;
  e.report = check_robustness(prop, index, allocate_risk(index), bound);
  e.robust = e.report.robust;
  e.failed = e.report.failed_count();
  e.value.lambda = lambda;
  e.value.z1 = prop.makespan_ub.mean;
  e.value.z2 = entropy_term(plan, index);
  e.value.z = e.value.z1 + lambda * e.value.z2;
  return e;
}

Evaluation objective(const Schedule& schedule, const InstanceIndex& index, const DurationModel& model, double lambda,
                     const MaxBoundConfig& bound) {
  return objective(to_plan(schedule, index), index, model, lambda, bound);
}

bool ranks_before(const Evaluation& a, const Evaluation& b) {
  if (a.robust != b.robust) return a.robust;
  if (a.failed != b.failed) return a.failed < b.failed;
  return a.value.z < b.value.z;
}

Plan edf_seed(const InstanceIndex& index, const DurationModel& model) {
  const std::size_t count = index.iteration_count();
  const double inf = std::numeric_limits<double>::infinity();

  // Deadlines are inherited by every ancestor.
  std::vector<double> deadline(count, inf);
  for (std::size_t it = 0; it < count; ++it)
    if (const auto& d = index.task(index.task_of(it)).abs_deadline) deadline[it] = *d;
  bool changed = true;
  for (std::size_t pass = 0; changed && pass <= count; ++pass) {
    changed = false;
    for (std::size_t it = 0; it < count; ++it) {
      for (std::size_t s : index.succs(it)) {
        if (deadline[s] < deadline[it]) {
          deadline[it] = deadline[s];
          changed = true;
        }
      }
    }
  }

  std::vector<std::size_t> agents_by_id(index.agent_count());
  for (std::size_t a = 0; a < agents_by_id.size(); ++a) agents_by_id[a] = a;
  std::sort(agents_by_id.begin(), agents_by_id.end(),
            [&](std::size_t x, std::size_t y) { return index.agent(x).agent_id < index.agent(y).agent_id; });

  Plan plan;
  plan.lanes.resize(index.agent_count());
  std::vector<int> missing(count);
  for (std::size_t it = 0; it < count; ++it) missing[it] = static_cast<int>(index.preds(it).size());
  std::vector<double> finish(count, 0.0);
  std::vector<double> available(index.agent_count(), 0.0);
  std::vector<std::size_t> occurrences(index.agent_count() * index.task_count(), 0);
  std::vector<bool> done(count, false);

  for (std::size_t placed = 0; placed < count; ++placed) {
    std::size_t pick = count;
    for (std::size_t it = 0; it < count; ++it) {
      if (done[it] || missing[it] > 0) continue;
      if (pick == count || deadline[it] < deadline[pick] ||
          (deadline[it] == deadline[pick] && index.ref(it) < index.ref(pick)))
        pick = it;
    }
    if (pick == count) throw InfeasiblePrecedence("precedence graph has a cycle");

    double ready = 0.0;
    for (const auto& e : index.preds(pick)) ready = std::max(ready, finish[e.from] + e.wait);
    const std::size_t task = index.task_of(pick);
    const auto& lb = index.task(task).duration_lb;

    std::size_t best_agent = agents_by_id.front();
    double best_finish = inf;
    for (std::size_t a : agents_by_id) {
      double d = model.duration(a, task, occurrences[a * index.task_count() + task]).mean;
      if (lb) d = std::max(d, *lb);
      const double f = std::max(available[a], ready) + d;
      if (f < best_finish) {
        best_finish = f;
        best_agent = a;
      }
    }

    plan.lanes[best_agent].push_back(pick);
    ++occurrences[best_agent * index.task_count() + task];
    available[best_agent] = best_finish;
    finish[pick] = best_finish;
    done[pick] = true;
    for (std::size_t s : index.succs(pick)) --missing[s];
  }
  return plan;
}

Plan mutate(const Plan& plan, const InstanceIndex& index, std::mt19937_64& rng, const SearchConfig& config) {
  const std::size_t n_agents = plan.lanes.size();
  std::size_t total = 0;
  std::size_t longest = 0;
  std::size_t busy_lanes = 0;
  for (const auto& lane : plan.lanes) {
    total += lane.size();
    longest = std::max(longest, lane.size());
    busy_lanes += lane.empty() ? 0 : 1;
  }

  const double w_reassign = (n_agents >= 2 && total > 0) ? config.reassign_weight : 0.0;
  const double w_swap = busy_lanes >= 2 ? config.swap_agents_weight : 0.0;
  const double w_adjacent = longest >= 2 ? config.swap_adjacent_weight : 0.0;
  if (w_reassign + w_swap + w_adjacent <= 0.0) return plan;
  std::discrete_distribution<int> pick_op({w_reassign, w_swap, w_adjacent});

  // Location of the r-th scheduled iteration, counting lane by lane.
  auto locate = [&](std::size_t r) {
    for (std::size_t a = 0; a < n_agents; ++a) {
      if (r < plan.lanes[a].size()) return std::pair{a, r};
      r -= plan.lanes[a].size();
    }
    return std::pair{n_agents, std::size_t{0}};
  };
  auto uniform = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  for (int attempt = 0; attempt < config.mutation_retries; ++attempt) {
    Plan next = plan;
    switch (pick_op(rng)) {
      case 0: {
        const auto [from, pos] = locate(uniform(total));
        std::size_t to = uniform(n_agents - 1);
        if (to >= from) ++to;
        const std::size_t it = next.lanes[from][pos];
        next.lanes[from].erase(next.lanes[from].begin() + static_cast<std::ptrdiff_t>(pos));
        auto& target = next.lanes[to];
        target.insert(target.begin() + static_cast<std::ptrdiff_t>(uniform(target.size() + 1)), it);
        break;
      }
      case 1: {
        const auto [la, pa] = locate(uniform(total));
        const std::size_t others = total - plan.lanes[la].size();
        std::size_t r = uniform(others);
        std::size_t lb = 0;
        for (; lb < n_agents; ++lb) {
          if (lb == la) continue;
          if (r < plan.lanes[lb].size()) break;
          r -= plan.lanes[lb].size();
        }
        std::swap(next.lanes[la][pa], next.lanes[lb][r]);
        break;
      }
      default: {
        std::vector<std::size_t> eligible;
        for (std::size_t a = 0; a < n_agents; ++a)
          if (plan.lanes[a].size() >= 2) eligible.push_back(a);
        auto& lane = next.lanes[eligible[uniform(eligible.size())]];
        const std::size_t j = uniform(lane.size() - 1);
        std::swap(lane[j], lane[j + 1]);
        break;
      }
    }
    if (try_topological_order(next, index)) return next;
  }
  throw ExhaustedRetries("no acyclic mutation found in " + std::to_string(config.mutation_retries) + " attempts");
}

namespace {

struct Candidate {
  Plan plan;
  Evaluation eval;
};

void rank(std::vector<Candidate>& population) {
  std::stable_sort(population.begin(), population.end(),
                   [](const Candidate& a, const Candidate& b) { return ranks_before(a.eval, b.eval); });
}

}  // namespace

EvolveResult evolve(const InstanceIndex& index, const DurationModel& model, const SearchConfig& config) {
  config.validate();
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  auto out_of_time = [&] {
    return config.time_limit &&
           std::chrono::duration<double>(clock::now() - started).count() >= *config.time_limit;
  };

  std::mt19937_64 rng(config.seed);
  auto score = [&](Plan plan) {
    Evaluation e = objective(plan, index, model, config.lambda, config.bound);
    return Candidate{std::move(plan), std::move(e)};
  };
  auto mutate_or_keep = [&](const Plan& parent) {
    try {
      return mutate(parent, index, rng, config);
    } catch (const ExhaustedRetries&) {
      return parent;
    }
  };

  const Plan seed = edf_seed(index, model);
  std::vector<Candidate> population;
  population.push_back(score(seed));
  std::uniform_int_distribution<int> depth(1, 3);
  while (static_cast<int>(population.size()) < config.population_size) {
    Plan variant = seed;
    for (int d = depth(rng); d > 0; --d) variant = mutate_or_keep(variant);
    population.push_back(score(std::move(variant)));
  }
  rank(population);

  EvolveResult result;
  result.history.push_back(population.front().eval.value);

  const auto elite_target = static_cast<std::size_t>(
      std::max(1.0, std::ceil(config.elite_fraction * double(config.population_size))));
  while ((!config.max_generations || result.generations < *config.max_generations) && !out_of_time()) {
    const auto robust = static_cast<std::size_t>(std::count_if(
        population.begin(), population.end(), [](const Candidate& c) { return c.eval.robust; }));
    // Non-robust candidates are only retained while nothing robust has been found.
    const std::size_t elites = robust > 0 ? std::min(elite_target, robust) : elite_target;
    population.resize(std::min(elites, population.size()));

    std::uniform_int_distribution<std::size_t> parent(0, population.size() - 1);
    const std::size_t parents = population.size();
    while (static_cast<int>(population.size()) < config.population_size) {
      const Plan& p = population[parent(rng) % parents].plan;
      population.push_back(score(mutate_or_keep(p)));
    }
    rank(population);
    ++result.generations;
    result.history.push_back(population.front().eval.value);
  }

  result.best = population.front().plan;
  result.evaluation = population.front().eval;
  return result;
}

}  // namespace hrt
