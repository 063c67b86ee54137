#include "hrt/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "hrt/errors.hpp"

namespace hrt {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

void check_lost(double lost, double tolerance, const char* op) {
  if (lost > tolerance)
    throw GridOverflow(std::string(op) + " pushed " + std::to_string(lost) + " probability mass off the grid");
}

std::vector<std::size_t> lane_predecessors(const Plan& plan, std::size_t count) {
  std::vector<std::size_t> prev(count, kNone);
  for (const auto& lane : plan.lanes)
    for (std::size_t j = 1; j < lane.size(); ++j) prev[lane[j]] = lane[j - 1];
  return prev;
}

GaussianDist floored(GaussianDist d, const InstanceIndex& index, std::size_t it) {
  if (const auto& lb = index.task(index.task_of(it)).duration_lb) d.mean = std::max(d.mean, *lb);
  return d;
}

}  // namespace

double GridDensity::total_mass() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

double GridDensity::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < mass.size(); ++k) m += mass[k] * (double(k) * step);
  return m / total_mass();
}

double GridDensity::stddev() const {
  const double mu = mean();
  double v = 0.0;
  for (std::size_t k = 0; k < mass.size(); ++k) {
    const double d = double(k) * step - mu;
    v += mass[k] * d * d;
  }
  return std::sqrt(v / total_mass());
}

std::vector<double> GridDensity::cdf() const {
  std::vector<double> out(mass.size());
  std::partial_sum(mass.begin(), mass.end(), out.begin());
  return out;
}

double GridDensity::cdf_at(double y) const {
  if (y < 0.0) return 0.0;
  const auto last = static_cast<std::size_t>(std::floor(y / step));
  double total = 0.0;
  for (std::size_t k = 0; k <= last && k < mass.size(); ++k) total += mass[k];
  return total;
}

QuadratureGrid make_grid(const InstanceIndex& index, std::span<const GaussianDist> durations,
                         const QuadratureConfig& config) {
  double range = 0.0;
  for (std::size_t it = 0; it < durations.size(); ++it) {
    const GaussianDist d = floored(durations[it], index, it);
    range += std::max(d.mean, 0.0) + 6.0 * d.stddev;
    double wait = 0.0;
    for (const auto& e : index.preds(it)) wait = std::max(wait, e.wait);
    range += wait;
  }
  range = std::max(range, 1.0);
  QuadratureGrid grid;
  grid.points = config.min_points;
  if (config.max_step > 0.0)
    grid.points = std::max(grid.points, static_cast<std::size_t>(std::ceil(range / config.max_step)) + 1);
  grid.step = range / double(grid.points - 1);
  return grid;
}

GridDensity discretize(const GaussianDist& g, const QuadratureGrid& grid) {
  GridDensity out{grid.step, std::vector<double>(grid.points, 0.0)};
  if (g.deterministic()) {
    const double pos = std::max(g.mean, 0.0) / grid.step;
    const auto k = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - double(k);
    if (k >= grid.points || (frac > 0.0 && k + 1 >= grid.points)) throw GridOverflow("point mass beyond grid");
    out.mass[k] += 1.0 - frac;
    if (frac > 0.0) out.mass[k + 1] += frac;
    return out;
  }
  double below = cdf(g, -0.5 * grid.step);
  for (std::size_t k = 0; k < grid.points; ++k) {
    const double upper = cdf(g, (double(k) + 0.5) * grid.step);
    out.mass[k] = upper - below;
    below = upper;
  }
  out.mass[0] += cdf(g, -0.5 * grid.step);
  return out;
}

GridDensity grid_max(std::span<const GridDensity> inputs) {
  if (inputs.empty()) throw ConfigError("grid_max needs at least one input");
  if (inputs.size() == 1) return inputs.front();
  const std::size_t n = inputs.front().mass.size();
  std::vector<double> joint(n, 1.0);
  for (const auto& in : inputs) {
    double running = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      running += in.mass[k];
      joint[k] *= running;
    }
  }
  GridDensity out{inputs.front().step, std::vector<double>(n)};
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    out.mass[k] = std::max(joint[k] - prev, 0.0);
    prev = joint[k];
  }
  return out;
}

GridDensity grid_sum(const GridDensity& a, const GridDensity& b, double mass_tolerance) {
  const std::size_t n = a.mass.size();
  GridDensity out{a.step, std::vector<double>(n, 0.0)};
  // Direct quadrature of the convolution integral at every grid node.
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    const double* pa = a.mass.data();
    const double* pb = b.mass.data() + k;
    for (std::size_t j = 0; j <= k; ++j) acc += pa[j] * pb[-static_cast<std::ptrdiff_t>(j)];
    out.mass[k] = acc;
  }
  check_lost(a.total_mass() * b.total_mass() - out.total_mass(), mass_tolerance, "convolution");
  return out;
}

GridDensity grid_shift(const GridDensity& a, double offset, double mass_tolerance) {
  if (offset == 0.0) return a;
  const std::size_t n = a.mass.size();
  GridDensity out{a.step, std::vector<double>(n, 0.0)};
  const double pos = offset / a.step;
  const auto whole = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - double(whole);
  double lost = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double m = a.mass[k];
    if (m == 0.0) continue;
    const std::size_t lo = k + whole;
    if (lo < n) out.mass[lo] += (1.0 - frac) * m;
    else lost += (1.0 - frac) * m;
    if (lo + 1 < n) out.mass[lo + 1] += frac * m;
    else lost += frac * m;
  }
  check_lost(lost, mass_tolerance, "wait shift");
  return out;
}

QuadratureResult quadrature_oracle(const Plan& plan, const InstanceIndex& index,
                                   std::span<const GridDensity> durations, double mass_tolerance) {
  const std::size_t count = index.iteration_count();
  if (durations.size() != count) throw MissingDuration("quadrature needs one density per iteration");
  for (const auto& d : durations) {
    if (d.mass.size() != durations.front().mass.size() || d.step != durations.front().step)
      throw ConfigError("densities must share one grid");
    if (std::any_of(d.mass.begin(), d.mass.end(), [](double m) { return m < 0.0; }))
      throw ConfigError("negative density");
    if (std::abs(d.total_mass() - 1.0) > 1e-6) throw ConfigError("density does not integrate to 1");
  }

  const auto order = topological_order(plan, index);
  const auto prev = lane_predecessors(plan, count);

  QuadratureResult result;
  result.finish.resize(count);
  std::vector<GridDensity> inputs;
  for (std::size_t it : order) {
    inputs.clear();
    for (const auto& e : index.preds(it)) inputs.push_back(grid_shift(result.finish[e.from], e.wait, mass_tolerance));
    if (prev[it] != kNone) inputs.push_back(result.finish[prev[it]]);
    if (inputs.empty()) {
      result.finish[it] = durations[it];
    } else {
      result.finish[it] = grid_sum(grid_max(inputs), durations[it], mass_tolerance);
    }
  }

  inputs.clear();
  for (const auto& lane : plan.lanes)
    if (!lane.empty()) inputs.push_back(result.finish[lane.back()]);
  result.makespan = inputs.empty() ? durations.front() : grid_max(inputs);
  return result;
}

QuadratureResult quadrature_propagate(const Plan& plan, const InstanceIndex& index,
                                      std::span<const GaussianDist> durations, const QuadratureConfig& config) {
  const QuadratureGrid grid = make_grid(index, durations, config);
  std::vector<GridDensity> densities;
  densities.reserve(durations.size());
  for (std::size_t it = 0; it < durations.size(); ++it)
    densities.push_back(discretize(floored(durations[it], index, it), grid));
  return quadrature_oracle(plan, index, densities, config.mass_tolerance);
}

double MonteCarloReport::makespan_quantile(double p) const {
  if (makespan_sorted.empty()) return 0.0;
  const double rank = std::ceil(p * double(makespan_sorted.size()));
  const auto k = static_cast<std::size_t>(std::clamp(rank, 1.0, double(makespan_sorted.size())));
  return makespan_sorted[k - 1];
}

MonteCarloReport monte_carlo_oracle(const Plan& plan, const InstanceIndex& index,
                                    std::span<const GaussianDist> durations, std::size_t n_samples,
                                    std::uint64_t seed) {
  const std::size_t count = index.iteration_count();
  if (durations.size() != count) throw MissingDuration("monte carlo needs one duration per iteration");
  const auto order = topological_order(plan, index);
  const auto prev = lane_predecessors(plan, count);

  std::vector<GaussianDist> dist(count);
  for (std::size_t it = 0; it < count; ++it) dist[it] = floored(durations[it], index, it);

  const auto& deadlines = index.deadlines();
  std::vector<std::size_t> hits(deadlines.size(), 0);
  std::size_t all_hits = 0;

  MonteCarloReport report;
  report.samples = n_samples;
  report.makespan_sorted.reserve(n_samples);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> start(count), finish(count);
  double makespan_sum = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    double makespan = 0.0;
    for (std::size_t it : order) {
      double t = 0.0;
      for (const auto& e : index.preds(it)) t = std::max(t, finish[e.from] + e.wait);
      if (prev[it] != kNone) t = std::max(t, finish[prev[it]]);
      const double d = dist[it].deterministic() ? dist[it].mean : dist[it].mean + dist[it].stddev * unit(rng);
      start[it] = t;
      finish[it] = t + std::max(d, 0.0);
      makespan = std::max(makespan, finish[it]);
    }
    bool all = true;
    for (std::size_t j = 0; j < deadlines.size(); ++j) {
      const auto& dl = deadlines[j];
      bool ok = true;
      switch (dl.ref.kind) {
        case DeadlineRef::Kind::time_budget:
          ok = makespan <= dl.bound;
          break;
        case DeadlineRef::Kind::relative:
          ok = finish[dl.targets.front()] - start[*dl.anchor] <= dl.bound;
          break;
        case DeadlineRef::Kind::absolute:
          for (std::size_t t : dl.targets) ok = ok && finish[t] <= dl.bound;
          break;
      }
      hits[j] += ok ? 1 : 0;
      all = all && ok;
    }
    all_hits += all ? 1 : 0;
    makespan_sum += makespan;
    report.makespan_sorted.push_back(makespan);
  }

  std::sort(report.makespan_sorted.begin(), report.makespan_sorted.end());
  const double n = std::max<double>(double(n_samples), 1.0);
  report.makespan_mean = makespan_sum / n;
  for (std::size_t j = 0; j < deadlines.size(); ++j) report.deadline_success[deadlines[j].ref] = double(hits[j]) / n;
  report.all_success = n_samples ? double(all_hits) / n : 1.0;
  return report;
}

}  // namespace hrt
