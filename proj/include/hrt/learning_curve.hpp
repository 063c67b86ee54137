#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hrt/gaussian.hpp"

namespace hrt {

/// Exponential learning curve y(i) = c + k * exp(-beta * i).
template <typename Scalar>
struct CurveParams {
  Scalar c{1};
  Scalar k{0};
  Scalar beta{0};

  using Vector = Eigen::Matrix<Scalar, 3, 1>;

  [[nodiscard]] Vector vector() const { return Vector(c, k, beta); }
  static CurveParams from_vector(const Vector& v) { return {v(0), v(1), v(2)}; }

  friend bool operator==(const CurveParams&, const CurveParams&) = default;
};

template <typename Scalar>
Scalar curve_mean(const CurveParams<Scalar>& p, Scalar i) {
  return p.c + p.k * std::exp(-p.beta * i);
}

/// Gradient of curve_mean with respect to (c, k, beta).
template <typename Scalar>
Eigen::Matrix<Scalar, 1, 3> curve_jacobian(const CurveParams<Scalar>& p, Scalar i) {
  const Scalar e = std::exp(-p.beta * i);
  return Eigen::Matrix<Scalar, 1, 3>(Scalar(1), e, -p.k * i * e);
}

/// Physical range enforced after every fit and filter step.
struct CurveBounds {
  double c_min = 0.1;
  double k_min = 0.0;
  double beta_min = 0.0;
  double beta_max = 5.0;
};

CurveParams<double> clamp_curve(CurveParams<double> p, const CurveBounds& bounds = {});

/// Filter state for one (agent, task) stream.
struct KalmanState {
  CurveParams<double> x;
  Eigen::Matrix3d P = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d Q = Eigen::Matrix3d::Zero();
  double R = 0.0;
  double alpha = 0.9;
  double residual_std = 0.0;

  /// Fixed-capability state (robots): k = 0, no uncertainty.
  static KalmanState fixed(double duration);

  friend bool operator==(const KalmanState&, const KalmanState&) = default;
};

struct DurationObservation {
  std::string agent_id;
  std::string task_id;
  int iteration_index = 1;  // cumulative repetition count for (agent, task), 1-based
  double observed_duration = 0.0;

  friend bool operator==(const DurationObservation&, const DurationObservation&) = default;
};

struct CurveSample {
  int iteration = 1;
  double duration = 0.0;
};

/// One worker's recorded performances.
using WorkerSamples = std::vector<CurveSample>;

struct PriorFitConfig {
  int bootstrap = 200;
  double q_scale = 1e-4;
  double r_scale = 1.0;
  double alpha = 0.9;
  std::uint64_t seed = 0;
};

/// Nonlinear least-squares fit of the curve to pooled samples.
/// Throws DegenerateData with fewer than three distinct iteration indices.
CurveParams<double> fit_curve(std::span<const CurveSample> samples);

/// Population prior: pooled fit plus a worker-level bootstrap covariance.
KalmanState fit_population_prior(std::span<const WorkerSamples> workers, const PriorFitConfig& config = {});

/// Adaptive EKF measurement update. Pure: returns the successor state.
KalmanState kalman_update(const KalmanState& state, const DurationObservation& obs,
                          const CurveBounds& bounds = {});

/// Predicted duration at iteration i: curve mean, parameter plus observation noise.
GaussianDist project_duration(const KalmanState& state, int i);

}  // namespace hrt
