#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include <unsupported/Eigen/SpecialFunctions>

namespace hrt {

/// Normal distribution parameterized by mean and standard deviation (seconds).
/// A zero stddev is a point mass whose CDF is the step at `mean`.
template <typename Scalar>
struct Gaussian {
  Scalar mean{0};
  Scalar stddev{0};

  [[nodiscard]] bool deterministic() const { return !(stddev > Scalar(0)); }
  [[nodiscard]] Scalar variance() const { return stddev * stddev; }

  friend bool operator==(const Gaussian&, const Gaussian&) = default;
};

using GaussianDist = Gaussian<double>;

template <typename Scalar>
Scalar standard_cdf(Scalar z) {
  return Scalar(0.5) * std::erfc(-z / std::numbers::sqrt2_v<Scalar>);
}

template <typename Scalar>
Scalar standard_ccdf(Scalar z) {
  return Scalar(0.5) * std::erfc(z / std::numbers::sqrt2_v<Scalar>);
}

template <typename Scalar>
Scalar standard_pdf(Scalar z) {
  return std::exp(Scalar(-0.5) * z * z) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
}

/// log Phi(z), accurate in both tails.
template <typename Scalar>
Scalar standard_log_cdf(Scalar z) {
  if (z > Scalar(0)) return std::log1p(-standard_ccdf(z));
  if (z > Scalar(-30)) return std::log(standard_cdf(z));
  // Mills-ratio asymptote; erfc underflows past here.
  const Scalar z2 = z * z;
  return Scalar(-0.5) * z2 - std::log(-z) - Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) +
         std::log1p(-Scalar(1) / z2 + Scalar(3) / (z2 * z2));
}

template <typename Scalar>
Scalar standard_quantile(Scalar p) {
  return Eigen::numext::ndtri(p);
}

template <typename Scalar>
Scalar cdf(const Gaussian<Scalar>& g, Scalar y) {
  if (g.deterministic()) return y >= g.mean ? Scalar(1) : Scalar(0);
  return standard_cdf((y - g.mean) / g.stddev);
}

template <typename Scalar>
Scalar ccdf(const Gaussian<Scalar>& g, Scalar y) {
  if (g.deterministic()) return y >= g.mean ? Scalar(0) : Scalar(1);
  return standard_ccdf((y - g.mean) / g.stddev);
}

template <typename Scalar>
Scalar log_cdf(const Gaussian<Scalar>& g, Scalar y) {
  if (g.deterministic()) return y >= g.mean ? Scalar(0) : -std::numeric_limits<Scalar>::infinity();
  return standard_log_cdf((y - g.mean) / g.stddev);
}

template <typename Scalar>
Scalar pdf(const Gaussian<Scalar>& g, Scalar y) {
  if (g.deterministic()) return y == g.mean ? std::numeric_limits<Scalar>::infinity() : Scalar(0);
  return standard_pdf((y - g.mean) / g.stddev) / g.stddev;
}

template <typename Scalar>
Scalar quantile(const Gaussian<Scalar>& g, Scalar p) {
  if (g.deterministic()) return g.mean;
  return g.mean + g.stddev * standard_quantile(p);
}

/// Distribution of the sum of two independent normals.
template <typename Scalar>
Gaussian<Scalar> sum_gaussian(const Gaussian<Scalar>& a, const Gaussian<Scalar>& b) {
  return {a.mean + b.mean, std::hypot(a.stddev, b.stddev)};
}

template <typename Scalar>
Gaussian<Scalar> operator+(const Gaussian<Scalar>& a, const Gaussian<Scalar>& b) {
  return sum_gaussian(a, b);
}

template <typename Scalar>
Gaussian<Scalar> shifted(Gaussian<Scalar> g, Scalar offset) {
  g.mean += offset;
  return g;
}

}  // namespace hrt
