#include "hrt/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hrt/errors.hpp"

namespace hrt {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

double log_product_cdf(std::span<const GaussianDist> inputs, double y) {
  double total = 0.0;
  for (const auto& x : inputs) {
    total += log_cdf(x, y);
    if (total == -std::numeric_limits<double>::infinity()) break;
  }
  return total;
}

// Initial guess: rightmost mean, average stddev of the inputs that overlap the rightmost one.
GaussianDist initial_guess(std::span<const GaussianDist> inputs, double z_tail) {
  const auto top = std::max_element(inputs.begin(), inputs.end(), [](const auto& a, const auto& b) {
    return a.mean < b.mean || (a.mean == b.mean && a.stddev < b.stddev);
  });
  const double reach = top->mean - z_tail * top->stddev;
  double sigma_sum = 0.0;
  int overlapping = 0;
  for (const auto& x : inputs) {
    if (x.mean + z_tail * x.stddev >= reach) {
      sigma_sum += x.stddev;
      ++overlapping;
    }
  }
  double sigma = sigma_sum / overlapping;
  if (!(sigma > 0.0)) {
    for (const auto& x : inputs) sigma += x.stddev;
    sigma /= static_cast<double>(inputs.size());
  }
  return {top->mean, sigma};
}

}  // namespace

double product_cdf(std::span<const GaussianDist> inputs, double y) {
  return std::exp(log_product_cdf(inputs, y));
}

bool cdf_below_product(const GaussianDist& g, std::span<const GaussianDist> inputs, double y) {
  const double log_prod = log_product_cdf(inputs, y);
  if (log_prod > std::log(0.5)) {
    // Upper region: compare survival functions to keep precision near 1.
    const double prod_tail = -std::expm1(log_prod);
    return ccdf(g, y) >= prod_tail;
  }
  return log_cdf(g, y) <= log_prod;
}

std::vector<double> dominance_check_points(const GaussianDist& g, std::span<const GaussianDist> inputs,
                                           const MaxBoundConfig& config) {
  std::vector<double> points;
  const double lo = g.mean - config.check_span * g.stddev;
  const double hi = g.mean + config.check_span * g.stddev;
  if (config.check_points <= 1) {
    points.push_back(g.mean);
  } else {
    for (int j = 0; j < config.check_points; ++j)
      points.push_back(lo + (hi - lo) * j / double(config.check_points - 1));
  }

  if (config.tail_points > 0 && config.tail_probability > 0.0) {
    const double z_tail = -standard_quantile(config.tail_probability);
    const double left = g.mean - z_tail * g.stddev;
    const double per_input = config.tail_probability / static_cast<double>(inputs.size());
    const double z_right = -standard_quantile(per_input);
    double right = -std::numeric_limits<double>::infinity();
    for (const auto& x : inputs) right = std::max(right, x.mean + z_right * x.stddev);
    for (int j = 1; j <= config.tail_points; ++j) {
      const double f = j / double(config.tail_points);
      if (left < lo) points.push_back(lo + (left - lo) * f);
      if (right > hi) points.push_back(hi + (right - hi) * f);
    }
  }
  return points;
}

bool passes_dominance_check(const GaussianDist& g, std::span<const GaussianDist> inputs,
                            const MaxBoundConfig& config) {
  for (double y : dominance_check_points(g, inputs, config))
    if (!cdf_below_product(g, inputs, y)) return false;
  return true;
}

GaussianDist max_gaussian_ub(std::span<const GaussianDist> inputs, const MaxBoundConfig& config) {
  if (inputs.empty()) throw ConfigError("max_gaussian_ub needs at least one input");
  if (inputs.size() == 1) return inputs.front();

  const bool all_deterministic =
      std::all_of(inputs.begin(), inputs.end(), [](const auto& x) { return x.deterministic(); });
  if (all_deterministic) {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& x : inputs) top = std::max(top, x.mean);
    return {top, 0.0};
  }

  // A point mass that every other input almost surely precedes is its own bound.
  double top_point = -std::numeric_limits<double>::infinity();
  for (const auto& x : inputs)
    if (x.deterministic()) top_point = std::max(top_point, x.mean);
  if (std::isfinite(top_point) && -std::expm1(log_product_cdf(inputs, top_point)) <= config.tail_probability) {
    return {top_point, 0.0};
  }

  const double z_tail = config.tail_probability > 0.0 ? -standard_quantile(config.tail_probability) : 6.0;
  const GaussianDist start = initial_guess(inputs, z_tail);
  const double c = config.step_divisor;

  double sigma = start.stddev;
  for (int round = 0; round <= config.sigma_rounds; ++round) {
    GaussianDist candidate{start.mean, sigma};
    for (int step = 0; step < config.mu_steps; ++step) {
      if (passes_dominance_check(candidate, inputs, config)) return candidate;
      candidate.mean += sigma / c;
    }
    sigma += sigma / c;
  }

  // Shifting the mean right always terminates: every check point's product CDF tends to 1.
  GaussianDist candidate = start;
  while (!passes_dominance_check(candidate, inputs, config)) candidate.mean += candidate.stddev / c;
  return candidate;
}

PropagationResult propagate(const Plan& plan, const InstanceIndex& index, std::span<const GaussianDist> durations,
                            const MaxBoundConfig& config) {
  const std::size_t count = index.iteration_count();
  if (durations.size() != count) {
    throw MissingDuration("expected " + std::to_string(count) + " durations, got " +
                          std::to_string(durations.size()));
  }
  const auto order = topological_order(plan, index);
  const auto owner = owners(plan, count);
  for (std::size_t it = 0; it < count; ++it)
    if (owner[it] == kNone) throw MissingDuration("iteration " + to_string(index.ref(it)) + " is not scheduled");

  std::vector<std::size_t> lane_prev(count, kNone);
  for (const auto& lane : plan.lanes)
    for (std::size_t j = 1; j < lane.size(); ++j) lane_prev[lane[j]] = lane[j - 1];

  PropagationResult result;
  result.finish.resize(count);
  result.start_mean.assign(count, 0.0);
  result.duration.assign(durations.begin(), durations.end());

  std::vector<GaussianDist> inputs;
  for (std::size_t it : order) {
    inputs.clear();
    for (const auto& e : index.preds(it)) inputs.push_back(shifted(result.finish[e.from], e.wait));
    if (lane_prev[it] != kNone) inputs.push_back(result.finish[lane_prev[it]]);
    const GaussianDist start = inputs.empty() ? GaussianDist{0.0, 0.0} : max_gaussian_ub(inputs, config);

    GaussianDist& d = result.duration[it];
    if (const auto& lb = index.task(index.task_of(it)).duration_lb) d.mean = std::max(d.mean, *lb);
    result.start_mean[it] = start.mean;
    result.finish[it] = sum_gaussian(start, d);
  }

  inputs.clear();
  for (const auto& lane : plan.lanes)
    if (!lane.empty()) inputs.push_back(result.finish[lane.back()]);
  result.makespan_ub = inputs.empty() ? GaussianDist{0.0, 0.0} : max_gaussian_ub(inputs, config);
  return result;
}

PropagationResult propagate(const Schedule& schedule, const InstanceIndex& index,
                            const std::map<IterationRef, GaussianDist>& durations, const MaxBoundConfig& config) {
  std::vector<GaussianDist> dense(index.iteration_count());
  for (std::size_t it = 0; it < dense.size(); ++it) {
    auto found = durations.find(index.ref(it));
    if (found == durations.end()) throw MissingDuration("no duration for " + to_string(index.ref(it)));
    dense[it] = found->second;
  }
  return propagate(to_plan(schedule, index), index, dense, config);
}

RiskAllocation allocate_risk(const InstanceIndex& index) {
  RiskAllocation alloc;
  const auto& deadlines = index.deadlines();
  if (deadlines.empty()) return alloc;
  const double share = index.instance().epsilon / static_cast<double>(deadlines.size());
  for (const auto& d : deadlines) alloc.per_deadline_epsilon[d.ref] = share;
  return alloc;
}

RobustnessReport check_robustness(const PropagationResult& prop, const InstanceIndex& index,
                                  const RiskAllocation& alloc, const MaxBoundConfig& config) {
  RobustnessReport report;
  report.makespan_ub = prop.makespan_ub;

  std::vector<GaussianDist> inputs;
  for (const auto& d : index.deadlines()) {
    DeadlineCheck check;
    check.ref = d.ref;
    check.epsilon = alloc.per_deadline_epsilon.at(d.ref);

    GaussianDist dist;
    switch (d.ref.kind) {
      case DeadlineRef::Kind::time_budget:
        dist = prop.makespan_ub;
        break;
      case DeadlineRef::Kind::relative: {
        const GaussianDist& end = prop.finish[d.targets.front()];
        dist = {end.mean - prop.start_mean[*d.anchor], end.stddev};
        break;
      }
      case DeadlineRef::Kind::absolute:
        inputs.clear();
        for (std::size_t t : d.targets) inputs.push_back(prop.finish[t]);
        dist = max_gaussian_ub(inputs, config);
        break;
    }

    const double required = quantile(dist, 1.0 - check.epsilon);
    check.margin = d.bound - required;
    check.pass = required <= d.bound;
    check.probability = cdf(dist, d.bound);
    report.per_deadline.push_back(check);
  }

  const double eps = index.instance().epsilon;
  const double share = index.deadlines().empty() ? eps : eps / static_cast<double>(index.deadlines().size());
  for (std::size_t it = 0; it < index.iteration_count(); ++it) {
    const auto& ub = index.task(index.task_of(it)).duration_ub;
    if (ub && ccdf(prop.duration[it], *ub) > share) report.duration_ub_flags.push_back(index.ref(it));
  }

  report.robust = std::all_of(report.per_deadline.begin(), report.per_deadline.end(),
                              [](const auto& c) { return c.pass; });
  return report;
}

}  // namespace hrt
