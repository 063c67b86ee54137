#include "hrt/learning_curve.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <random>
#include <set>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "hrt/errors.hpp"

namespace hrt {
namespace {

struct CurveResidual : Eigen::DenseFunctor<double> {
  explicit CurveResidual(std::span<const CurveSample> s)
      : Eigen::DenseFunctor<double>(3, static_cast<int>(s.size())), samples(s) {}

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    for (std::size_t j = 0; j < samples.size(); ++j) {
      const double i = samples[j].iteration;
      f(static_cast<Eigen::Index>(j)) = x(0) + x(1) * std::exp(-x(2) * i) - samples[j].duration;
    }
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const {
    for (std::size_t j = 0; j < samples.size(); ++j) {
      const double i = samples[j].iteration;
      const double e = std::exp(-x(2) * i);
      const auto row = static_cast<Eigen::Index>(j);
      jac(row, 0) = 1.0;
      jac(row, 1) = e;
      jac(row, 2) = -x(1) * i * e;
    }
    return 0;
  }

  std::span<const CurveSample> samples;
};

// For fixed beta the model is linear in (c, k).
double linear_fit(std::span<const CurveSample> samples, double beta, Eigen::Vector3d& out) {
  Eigen::MatrixXd A(samples.size(), 2);
  Eigen::VectorXd y(samples.size());
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    A(row, 0) = 1.0;
    A(row, 1) = std::exp(-beta * samples[j].iteration);
    y(row) = samples[j].duration;
  }
  const Eigen::Vector2d ck = A.colPivHouseholderQr().solve(y);
  out = Eigen::Vector3d(ck(0), ck(1), beta);
  return (A * ck - y).squaredNorm();
}

double sse(std::span<const CurveSample> samples, const CurveParams<double>& p) {
  double total = 0.0;
  for (const auto& s : samples) {
    const double r = curve_mean(p, static_cast<double>(s.iteration)) - s.duration;
    total += r * r;
  }
  return total;
}

CurveParams<double> refine(std::span<const CurveSample> samples, Eigen::Vector3d start) {
  CurveResidual functor(samples);
  Eigen::LevenbergMarquardt<CurveResidual> lm(functor);
  lm.setXtol(1e-12);
  lm.setFtol(1e-12);
  Eigen::VectorXd x = start;
  lm.minimize(x);
  if (!x.allFinite()) x = start;
  const CurveParams<double> refined = clamp_curve(CurveParams<double>::from_vector(x));
  const CurveParams<double> seeded = clamp_curve(CurveParams<double>::from_vector(start));
  return sse(samples, refined) <= sse(samples, seeded) ? refined : seeded;
}

// Drops replicates outside the 3*IQR fences of any coordinate.
Eigen::MatrixXd trim_outliers(const Eigen::MatrixXd& fits) {
  const Eigen::Index n = fits.rows();
  std::vector<bool> keep(static_cast<std::size_t>(n), true);
  for (Eigen::Index col = 0; col < fits.cols(); ++col) {
    std::vector<double> v(fits.col(col).data(), fits.col(col).data() + n);
    std::sort(v.begin(), v.end());
    const double q1 = v[static_cast<std::size_t>(0.25 * double(n - 1))];
    const double q3 = v[static_cast<std::size_t>(0.75 * double(n - 1))];
    const double lo = q1 - 3.0 * (q3 - q1);
    const double hi = q3 + 3.0 * (q3 - q1);
    for (Eigen::Index r = 0; r < n; ++r)
      if (fits(r, col) < lo || fits(r, col) > hi) keep[static_cast<std::size_t>(r)] = false;
  }
  std::vector<Eigen::Index> rows;
  for (Eigen::Index r = 0; r < n; ++r)
    if (keep[static_cast<std::size_t>(r)]) rows.push_back(r);
  if (rows.size() < 2) return fits;
  return fits(rows, Eigen::all);
}

}  // namespace

CurveParams<double> clamp_curve(CurveParams<double> p, const CurveBounds& bounds) {
  p.c = std::max(p.c, bounds.c_min);
  p.k = std::max(p.k, bounds.k_min);
  p.beta = std::clamp(p.beta, bounds.beta_min, bounds.beta_max);
  return p;
}

KalmanState KalmanState::fixed(double duration) {
  KalmanState s;
  s.x = {duration, 0.0, 0.0};
  s.alpha = 0.9;
  return s;
}

CurveParams<double> fit_curve(std::span<const CurveSample> samples) {
  std::set<int> distinct;
  for (const auto& s : samples) distinct.insert(s.iteration);
  if (distinct.size() < 3) {
    throw DegenerateData("curve fit needs at least 3 distinct iteration indices, got " +
                         std::to_string(distinct.size()));
  }

  // Coarse scan over beta seeds the nonlinear refinement.
  static constexpr std::array<double, 9> kBetaSeeds = {0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.8, 1.2, 2.0};
  Eigen::Vector3d best_start;
  double best_sse = std::numeric_limits<double>::infinity();
  for (double beta : kBetaSeeds) {
    Eigen::Vector3d candidate;
    const double e = linear_fit(samples, beta, candidate);
    if (e < best_sse) {
      best_sse = e;
      best_start = candidate;
    }
  }

  return refine(samples, best_start);
}

KalmanState fit_population_prior(std::span<const WorkerSamples> workers, const PriorFitConfig& config) {
  if (workers.size() < 2) throw DegenerateData("population prior needs at least 2 workers");

  std::vector<CurveSample> pooled;
  for (const auto& w : workers) pooled.insert(pooled.end(), w.begin(), w.end());
  const CurveParams<double> center = fit_curve(pooled);

  Eigen::VectorXd residuals(pooled.size());
  for (std::size_t j = 0; j < pooled.size(); ++j) {
    residuals(static_cast<Eigen::Index>(j)) =
        pooled[j].duration - curve_mean(center, static_cast<double>(pooled[j].iteration));
  }
  const double residual_mean = residuals.mean();
  const double residual_var =
      pooled.size() > 1 ? (residuals.array() - residual_mean).square().sum() / double(pooled.size() - 1) : 0.0;

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, workers.size() - 1);
  Eigen::MatrixXd fits(std::max(config.bootstrap, 0), 3);
  std::vector<CurveSample> resample;
  for (int b = 0; b < config.bootstrap; ++b) {
    resample.clear();
    for (std::size_t w = 0; w < workers.size(); ++w) {
      const auto& chosen = workers[pick(rng)];
      resample.insert(resample.end(), chosen.begin(), chosen.end());
    }
    CurveParams<double> fit = center;
    try {
      fit = refine(resample, center.vector());
    } catch (const DegenerateData&) {
    }
    fits.row(b) = fit.vector().transpose();
  }

  KalmanState state;
  state.x = center;
  if (config.bootstrap > 1) {
    const Eigen::MatrixXd kept = trim_outliers(fits);
    const Eigen::RowVector3d mean = kept.colwise().mean();
    const Eigen::MatrixXd centered = kept.rowwise() - mean;
    state.P = (centered.transpose() * centered) / double(kept.rows() - 1);
  }
  state.Q = config.q_scale * state.P;
  state.R = config.r_scale * state.P.trace() / 3.0;
  state.alpha = config.alpha;
  state.residual_std = std::sqrt(residual_var);
  return state;
}

KalmanState kalman_update(const KalmanState& state, const DurationObservation& obs, const CurveBounds& bounds) {
  const double i = obs.iteration_index;
  const Eigen::RowVector3d H = curve_jacobian(state.x, i);
  const double innovation = obs.observed_duration - curve_mean(state.x, i);
  const double S = (H * state.P * H.transpose())(0, 0) + state.R;

  Eigen::Vector3d K = Eigen::Vector3d::Zero();
  if (S > 1e-12) K = state.P * H.transpose() / S;
  const Eigen::Vector3d correction = K * innovation;

  KalmanState next = state;
  next.x = clamp_curve(CurveParams<double>::from_vector(state.x.vector() + correction), bounds);

  // Joseph form keeps P_post symmetric PSD.
  const Eigen::Matrix3d IKH = Eigen::Matrix3d::Identity() - K * H;
  const Eigen::Matrix3d P_post = IKH * state.P * IKH.transpose() + K * state.R * K.transpose();

  const double residual_post = obs.observed_duration - curve_mean(next.x, i);
  const double a = state.alpha;
  next.R = a * state.R + (1.0 - a) * (residual_post * residual_post + (H * P_post * H.transpose())(0, 0));
  next.Q = a * state.Q + (1.0 - a) * correction * correction.transpose();

  Eigen::Matrix3d P = P_post + state.Q;
  P = 0.5 * (P + P.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(P);
  if (eig.eigenvalues().minCoeff() < 0.0) {
    const Eigen::Vector3d clipped = eig.eigenvalues().cwiseMax(0.0);
    P = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    P = 0.5 * (P + P.transpose());
  }
  next.P = P;
  next.Q = 0.5 * (next.Q + next.Q.transpose());
  next.residual_std = std::sqrt(std::max(next.R, 0.0));
  return next;
}

GaussianDist project_duration(const KalmanState& state, int i) {
  const double at = i;
  const Eigen::RowVector3d H = curve_jacobian(state.x, at);
  const double var = (H * state.P * H.transpose())(0, 0) + state.R;
  return {curve_mean(state.x, at), std::sqrt(std::max(var, 0.0))};
}

}  // namespace hrt
