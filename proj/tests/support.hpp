#pragma once

// Shared builders and independent oracles for the test binaries.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "hrt/index.hpp"
#include "hrt/model.hpp"
#include "hrt/projection.hpp"
#include "hrt/scheduler.hpp"

namespace testing {

inline double normal_cdf(double mean, double sd, double y) {
  if (sd == 0.0) return y >= mean ? 1.0 : 0.0;
  return 0.5 * std::erfc(-(y - mean) / (sd * std::sqrt(2.0)));
}

inline double normal_pdf(double mean, double sd, double y) {
  const double z = (y - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}

/// Mean and stddev of X + Y by trapezoid quadrature of the convolution integral. The inner
/// integral runs over the narrower of the two densities.
inline hrt::GaussianDist convolve_moments(hrt::GaussianDist a, hrt::GaussianDist b, int n = 600) {
  if (a.stddev > b.stddev) std::swap(a, b);
  const double mean = a.mean + b.mean;
  const double spread = 10.0 * std::hypot(a.stddev, b.stddev);
  const double ylo = mean - spread, h = 2.0 * spread / n;
  const double xlo = a.mean - 10.0 * a.stddev, hx = 20.0 * a.stddev / n;
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double y = ylo + j * h;
    double f = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = xlo + i * hx;
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      f += w * normal_pdf(a.mean, a.stddev, x) * normal_pdf(b.mean, b.stddev, y - x);
    }
    f *= hx;
    const double w = (j == 0 || j == n) ? 0.5 : 1.0;
    m0 += w * f;
    m1 += w * f * y;
    m2 += w * f * y * y;
  }
  const double mu = m1 / m0;
  return {mu, std::sqrt(std::max(m2 / m0 - mu * mu, 0.0))};
}

inline hrt::TaskSpec task(const std::string& id, int iterations = 1) {
  hrt::TaskSpec t;
  t.task_id = id;
  t.iterations = iterations;
  return t;
}

inline hrt::Precondition after(const std::string& task, int n = 1, double wait = 0.0) {
  hrt::Precondition p;
  p.ref = {task, n};
  p.wait = wait;
  return p;
}

/// Human whose every task has a constant-duration prior (k = 0) with the given observation variance.
inline hrt::AgentSpec human(const std::string& id, const std::vector<std::string>& tasks, double duration,
                            double variance = 0.0) {
  hrt::AgentSpec a;
  a.agent_id = id;
  for (const auto& t : tasks) {
    hrt::KalmanState s = hrt::KalmanState::fixed(duration);
    s.R = variance;
    s.residual_std = std::sqrt(variance);
    a.curve_prior[t] = s;
  }
  return a;
}

inline hrt::AgentSpec robot(const std::string& id, const std::vector<std::string>& tasks, double duration) {
  hrt::AgentSpec a;
  a.agent_id = id;
  a.kind = hrt::AgentKind::robot;
  for (const auto& t : tasks) a.curve_prior[t] = hrt::KalmanState::fixed(duration);
  return a;
}

inline std::vector<std::string> ids(const hrt::ProblemInstance& inst) {
  std::vector<std::string> out;
  for (const auto& t : inst.tasks) out.push_back(t.task_id);
  return out;
}

/// Every plan: all assignments and, per lane, all orders. Cyclic plans are skipped.
inline void enumerate_plans(const hrt::InstanceIndex& index, const std::function<void(const hrt::Plan&)>& visit) {
  const std::size_t n = index.iteration_count();
  const std::size_t agents = index.agent_count();
  std::vector<std::size_t> owner(n, 0);
  for (;;) {
    hrt::Plan plan;
    plan.lanes.assign(agents, {});
    for (std::size_t it = 0; it < n; ++it) plan.lanes[owner[it]].push_back(it);
    for (auto& lane : plan.lanes) std::sort(lane.begin(), lane.end());

    std::function<void(std::size_t)> permute = [&](std::size_t a) {
      if (a == agents) {
        if (hrt::try_topological_order(plan, index)) visit(plan);
        return;
      }
      auto& lane = plan.lanes[a];
      std::sort(lane.begin(), lane.end());
      do {
        permute(a + 1);
      } while (std::next_permutation(lane.begin(), lane.end()));
    };
    permute(0);

    std::size_t k = 0;
    while (k < n && ++owner[k] == agents) owner[k++] = 0;
    if (k == n) break;
  }
}

/// Dense-grid dominance slack: min over the grid of prod F_i(y) - F_g(y).
inline double dominance_slack(const hrt::GaussianDist& g, const std::vector<hrt::GaussianDist>& inputs,
                              int points = 1000) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double sigma_max = 0.0;
  for (const auto& x : inputs) {
    lo = std::min(lo, x.mean);
    hi = std::max(hi, x.mean);
    sigma_max = std::max(sigma_max, x.stddev);
  }
  lo -= 6.0 * sigma_max;
  hi += 6.0 * sigma_max;
  double worst = std::numeric_limits<double>::infinity();
  for (int j = 0; j < points; ++j) {
    const double y = lo + (hi - lo) * j / double(points - 1);
    double prod = 1.0;
    for (const auto& x : inputs) prod *= normal_cdf(x.mean, x.stddev, y);
    worst = std::min(worst, prod - normal_cdf(g.mean, g.stddev, y));
  }
  return worst;
}

}  // namespace testing
