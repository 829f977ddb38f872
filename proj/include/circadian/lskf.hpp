#pragma once

// Level-set Kalman filter: square-root covariance time-update driven by the
// averaged-velocity ODE for the Gaussian level set, and the square-root
// cubature measurement update.

#include <functional>
#include <optional>
#include <string>

#include <Eigen/Core>

namespace circadian {

/// Gaussian belief N(mean, M Mᵀ).
struct SqrtGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd factor;

  Eigen::Index dim() const { return mean.size(); }
  Eigen::MatrixXd covariance() const { return factor * factor.transpose(); }
  /// Throws NumericalError if the mean or factor contains non-finite values.
  void validate() const;
};

/// Diagonal process noise for the clock: K = diag(σ_P², σ_P², σ_L²).
struct ProcessNoise {
  double sigma_p = 0.0;
  double sigma_l = 0.0;

  static ProcessNoise isotropic(double sigma_k) { return {sigma_k, sigma_k}; }
  Eigen::MatrixXd matrix() const;
};

/// Scalar measurement z with variance R.
struct Measurement {
  double value = 0.0;
  double variance = 1.0;
};

using DriftFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& state, double t)>;
using MeasurementFn = std::function<double(const Eigen::VectorXd& state)>;

/// Derivative of the concatenated (mean | M) system. Column 0 is d(mean)/dt,
/// columns 1..d are dM/dt:
///   dM/dt = v(x̄ + M) - avg + ½ K (Mᵀ)⁻¹,   d(x̄)/dt = avg,
///   avg   = (1/2d) Σ_i [v(x̄ + x_i) + v(x̄ - x_i)].
/// Throws NumericalError when M is singular.
Eigen::MatrixXd level_set_rhs(const Eigen::VectorXd& mean, const Eigen::MatrixXd& factor,
                              const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& drift,
                              const Eigen::MatrixXd& noise);

struct TimeUpdateOptions {
  double rtol = 1e-6;
  double atol = 1e-8;
  double max_step = 1.0 / 60.0;  // hours
};

/// Propagates the belief from t0 to t1 (t1 > t0) with an adaptive Dormand-Prince
/// solver. The factor is regularised before and after integration.
SqrtGaussian time_update(const SqrtGaussian& belief, const DriftFn& drift,
                         const Eigen::MatrixXd& noise, double t0, double t1,
                         const TimeUpdateOptions& opts = {});

/// If σ_min(M) < 1e-8 σ_max(M), replaces M by the lower Cholesky factor of
/// M Mᵀ + 1e-8 I. Returns true when the factor was changed.
bool regularize(SqrtGaussian& belief);

/// Cubature points as a d × 2d matrix: x̄ + √d·M in the first d columns, x̄ - √d·M after.
Eigen::MatrixXd cubature_points(const SqrtGaussian& belief);

struct MeasurementUpdateOptions {
  /// Measurement-space period (24 h for phases); unset for linear measurements.
  std::optional<double> period = 24.0;
  /// Innovations beyond gate_sigmas · sqrt(innovation variance) are rejected.
  /// Non-positive disables the gate.
  double gate_sigmas = 6.0;
};

struct MeasurementUpdateResult {
  SqrtGaussian belief;
  bool accepted = false;
  double predicted = 0.0;        // z̄
  double innovation = 0.0;       // wrap(z - z̄)
  double innovation_sd = 0.0;    // |T11|
  std::string reason;            // empty when accepted
};

/// Square-root cubature measurement update. On rejection the prior belief is
/// returned unchanged with `accepted == false`.
MeasurementUpdateResult measurement_update(const SqrtGaussian& belief, const Measurement& meas,
                                           const MeasurementFn& h,
                                           const MeasurementUpdateOptions& opts = {});

}  // namespace circadian
