#pragma once

#include <map>
#include <span>
#include <vector>

#include "hrt/gaussian.hpp"
#include "hrt/index.hpp"
#include "hrt/model.hpp"

namespace hrt {

/// Line-search and dominance-check settings for max_gaussian_ub.
struct MaxBoundConfig {
  int check_points = 12;           // uniform over [mu - span*sigma, mu + span*sigma]
  double check_span = 3.0;
  int tail_points = 3;             // per side, out to the tail guards
  double tail_probability = 1e-10; // mass allowed outside the guarded range
  double step_divisor = 10.0;      // mu and sigma steps are sigma / step_divisor
  int mu_steps = 100;              // mu steps tried before each sigma widening
  int sigma_rounds = 40;
};

/// Product of the input CDFs at y.
double product_cdf(std::span<const GaussianDist> inputs, double y);

/// F_g(y) <= prod_i F_i(y), evaluated in log / complement space as appropriate.
bool cdf_below_product(const GaussianDist& g, std::span<const GaussianDist> inputs, double y);

/// The check points used to accept a candidate bound.
std::vector<double> dominance_check_points(const GaussianDist& g, std::span<const GaussianDist> inputs,
                                           const MaxBoundConfig& config = {});

bool passes_dominance_check(const GaussianDist& g, std::span<const GaussianDist> inputs,
                            const MaxBoundConfig& config = {});

/// Gaussian whose CDF lies below the CDF of max(inputs) at every check point.
/// Inputs must be non-empty.
GaussianDist max_gaussian_ub(std::span<const GaussianDist> inputs, const MaxBoundConfig& config = {});

/// Finish-time upper bounds, indexed by InstanceIndex iteration index.
struct PropagationResult {
  std::vector<GaussianDist> finish;
  std::vector<double> start_mean;
  std::vector<GaussianDist> duration;  // durations actually used (duration_lb applied)
  GaussianDist makespan_ub;

  [[nodiscard]] const GaussianDist& finish_of(const InstanceIndex& index, const IterationRef& ref) const {
    return finish[index.index_of(ref)];
  }
};

/// Walks the schedule DAG in topological order, finish = max_ub(preds + waits, lane predecessor) + duration.
/// Throws CycleError or MissingDuration.
PropagationResult propagate(const Plan& plan, const InstanceIndex& index, std::span<const GaussianDist> durations,
                            const MaxBoundConfig& config = {});

PropagationResult propagate(const Schedule& schedule, const InstanceIndex& index,
                            const std::map<IterationRef, GaussianDist>& durations, const MaxBoundConfig& config = {});

struct RiskAllocation {
  std::map<DeadlineRef, double> per_deadline_epsilon;
};

/// Uniform split of epsilon over all deadlines (time budget included).
RiskAllocation allocate_risk(const InstanceIndex& index);

RobustnessReport check_robustness(const PropagationResult& prop, const InstanceIndex& index,
                                  const RiskAllocation& alloc, const MaxBoundConfig& config = {});

}  // namespace hrt
