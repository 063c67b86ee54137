#pragma once

#include <functional>
#include <vector>

#include "hrt/gaussian.hpp"
#include "hrt/index.hpp"

namespace hrt {

/// Projected duration of each (agent, task, occurrence) for one scheduling round.
///
/// The k-th occurrence (0-based, in lane order) of a task on an agent's lane is that
/// agent's iteration completed_reps + k + 1 of the task, so durations depend on the plan.
class DurationModel {
 public:
  /// (agent, task, cumulative 1-based iteration) -> duration.
  using Source = std::function<GaussianDist(std::size_t, std::size_t, int)>;

  DurationModel(const InstanceIndex& index, const Source& source);

  /// Projects from each agent's curve_prior; robots get zero spread. Throws ConfigError on a missing prior.
  static DurationModel from_priors(const InstanceIndex& index);

  [[nodiscard]] const GaussianDist& duration(std::size_t agent, std::size_t task, std::size_t occurrence) const {
    return table_[agent * tasks_ + task][occurrence];
  }

  /// Per-iteration durations implied by a plan.
  [[nodiscard]] std::vector<GaussianDist> durations(const Plan& plan, const InstanceIndex& index) const;
  void durations_into(const Plan& plan, const InstanceIndex& index, std::vector<GaussianDist>& out) const;

 private:
  std::size_t tasks_ = 0;
  std::vector<std::vector<GaussianDist>> table_;
};

}  // namespace hrt
