#pragma once

// Forger-Jewett-Kronauer pacemaker with the photic processor, the
// steps-to-light conversion, and a forward simulator for the heart-rate rhythm.
//
// Time is measured in hours everywhere in this library.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace circadian {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDayHours = 24.0;
inline constexpr double kMinutesPerHour = 60.0;

/// Pacemaker variable x, its complement x_c, and the activated-photoreceptor
/// fraction n.
struct ClockState {
  double x = 0.0;
  double xc = 0.0;
  double n = 0.0;

  Eigen::Vector3d vec() const { return {x, xc, n}; }
  static ClockState from(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
  bool finite() const;
};

struct ClockParams {
  double vdp_mu = 0.23;
  double tau_x = 24.2;
  double light_k = 0.55;
  double alpha0 = 0.16;
  double p_exp = 0.6;
  double i0 = 9500.0;
  double beta = 0.013;
  double photic_gain = 19.875;
  double phi_ref = -1.0;

  /// Throws ValidationError unless every rate is positive and tau_x is in (20, 28).
  void validate() const;
};

/// Parameters of the harmonic-plus-AR(1) heart-rate model.
struct HRModelParams {
  double hr_baseline = 70.0;
  double amplitude = 4.0;
  double hr_phase = 3.0;
  double period = 24.0;
  double activity_gain = 0.3;
  double ar_coef = 0.9;
  double noise_sd = 3.0;
};

/// Per-minute step counts. `time_min` holds minutes since the start of the
/// record and is strictly increasing.
struct ActivityTrace {
  std::vector<double> time_min;
  std::vector<double> steps;

  std::size_t size() const { return steps.size(); }
  /// m = max(steps) / 2 over the whole record.
  double activity_scale() const;
  void validate() const;
};

/// alpha(I) = alpha0 * (I / I0)^p. Throws ValidationError for I < 0.
double photic_alpha(double intensity, const ClockParams& params);

/// B = G * alpha(I) * (1 - n) * (1 - 0.4 x) * (1 - 0.4 x_c).
double photic_drive(const ClockState& state, double intensity, const ClockParams& params);

/// Drift of (x, x_c, n) per hour. Throws NumericalError on a non-finite state.
Eigen::Vector3d clock_drift(const ClockState& state, double intensity, const ClockParams& params);
Eigen::Vector3d clock_drift(const Eigen::Vector3d& state, double intensity, const ClockParams& params);

/// Piecewise steps-to-light map with breakpoints 0, 0.1m, 0.25m, 0.4m.
/// Throws ConfigError when m <= 0.
double steps_to_light(double steps, double m);

/// Converts a whole trace using its own activity scale.
std::vector<double> steps_to_light(const ActivityTrace& activity);

/// Heart rate for each sample of `activity`, with AR(1) noise started from
/// its stationary law. Deterministic for a given seed; noise_sd == 0 gives the
/// noise-free rhythm.
std::vector<double> hr_forward(const HRModelParams& params, const ActivityTrace& activity,
                               std::uint64_t rng_seed);

/// Light intensity held constant over each minute, starting at t = 0 h.
class LightSchedule {
 public:
  LightSchedule() = default;
  explicit LightSchedule(std::vector<double> lux_per_minute);

  /// Lux during minute `minute`; zero outside the recorded span.
  double at_minute(std::int64_t minute) const;
  double at(double t_hours) const;
  std::size_t minutes() const { return lux_.size(); }
  std::span<const double> lux() const { return lux_; }

 private:
  std::vector<double> lux_;
};

struct TimedState {
  double t = 0.0;
  ClockState state;
};

/// Integrates the deterministic clock ODE from `state` over [t0, t1] using the
/// zero-order-hold light schedule. The result starts with the initial state and
/// then holds the state at every whole minute in (t0, t1) and at t1. n is
/// clamped to [0, 1] after each minute.
std::vector<TimedState> integrate_clock(const ClockState& state, const LightSchedule& light,
                                        double t0, double t1, const ClockParams& params,
                                        double rtol = 1e-8, double atol = 1e-10);

}  // namespace circadian
