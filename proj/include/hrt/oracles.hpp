#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "hrt/gaussian.hpp"
#include "hrt/index.hpp"

namespace hrt {

/// Uniform grid starting at 0; mass[k] is the probability mass at node k * step.
struct GridDensity {
  double step = 1.0;
  std::vector<double> mass;

  [[nodiscard]] double density(std::size_t k) const { return mass[k] / step; }
  [[nodiscard]] double total_mass() const;
  [[nodiscard]] double mean() const;
  [[nodiscard]] double stddev() const;
  [[nodiscard]] std::vector<double> cdf() const;
  /// CDF at an arbitrary y, piecewise constant between nodes.
  [[nodiscard]] double cdf_at(double y) const;
};

struct QuadratureConfig {
  std::size_t min_points = 2048;
  double max_step = 2.0;        // grid grows past min_points to keep this resolution; 0 disables
  double mass_tolerance = 1e-6;
};

struct QuadratureGrid {
  double step = 1.0;
  std::size_t points = 0;
};

/// Grid over [0, sum(mu + 6 sigma) + waits] for a schedule's durations.
QuadratureGrid make_grid(const InstanceIndex& index, std::span<const GaussianDist> durations,
                         const QuadratureConfig& config = {});

/// Cell masses of a normal on the grid; mass below 0 is folded onto node 0.
GridDensity discretize(const GaussianDist& g, const QuadratureGrid& grid);

/// Exact (to grid resolution) operations on independent grid variables.
GridDensity grid_max(std::span<const GridDensity> inputs);
GridDensity grid_sum(const GridDensity& a, const GridDensity& b, double mass_tolerance = 1e-6);
GridDensity grid_shift(const GridDensity& a, double offset, double mass_tolerance = 1e-6);

struct QuadratureResult {
  std::vector<GridDensity> finish;  // by iteration index
  GridDensity makespan;
};

/// Numerical max (order statistics) and convolution along the schedule DAG.
/// Throws GridOverflow when mass leaves the grid, ConfigError on malformed densities.
QuadratureResult quadrature_oracle(const Plan& plan, const InstanceIndex& index,
                                   std::span<const GridDensity> durations, double mass_tolerance = 1e-6);

/// Discretizes Gaussian durations (duration_lb applied to the mean) and runs quadrature_oracle.
QuadratureResult quadrature_propagate(const Plan& plan, const InstanceIndex& index,
                                      std::span<const GaussianDist> durations, const QuadratureConfig& config = {});

struct MonteCarloReport {
  std::size_t samples = 0;
  std::vector<double> makespan_sorted;
  double makespan_mean = 0.0;
  std::map<DeadlineRef, double> deadline_success;
  double all_success = 1.0;

  [[nodiscard]] double makespan_quantile(double p) const;
};

/// Replays the finish-time recursion on sampled durations (truncated at 0). Deterministic per seed.
MonteCarloReport monte_carlo_oracle(const Plan& plan, const InstanceIndex& index,
                                    std::span<const GaussianDist> durations, std::size_t n_samples,
                                    std::uint64_t seed);

}  // namespace hrt
