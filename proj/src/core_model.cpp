#include "circadian/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "circadian/errors.hpp"
#include "ode.hpp"

namespace circadian {

bool ClockState::finite() const {
  return std::isfinite(x) && std::isfinite(xc) && std::isfinite(n);
}

void ClockParams::validate() const {
  const double positives[] = {vdp_mu, tau_x, light_k, alpha0, p_exp, i0, beta, photic_gain};
  for (double v : positives) {
    if (!(v > 0.0)) throw ValidationError("clock parameters must be strictly positive");
  }
  if (!(tau_x > 20.0 && tau_x < 28.0)) throw ValidationError("tau_x must lie in (20, 28) h");
  if (!std::isfinite(phi_ref)) throw ValidationError("phi_ref must be finite");
}

double ActivityTrace::activity_scale() const {
  if (steps.empty()) return 0.0;
  return *std::max_element(steps.begin(), steps.end()) / 2.0;
}

void ActivityTrace::validate() const {
  if (time_min.size() != steps.size()) throw ValidationError("activity time/steps length mismatch");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i] >= 0.0)) throw ValidationError("step counts must be non-negative");
    if (i > 0 && !(time_min[i] > time_min[i - 1])) {
      throw ValidationError("activity times must be strictly increasing");
    }
  }
}

double photic_alpha(double intensity, const ClockParams& params) {
  if (!(intensity >= 0.0)) throw ValidationError("light intensity must be non-negative");
  if (intensity == 0.0) return 0.0;
  return params.alpha0 * std::pow(intensity / params.i0, params.p_exp);
}

double photic_drive(const ClockState& s, double intensity, const ClockParams& params) {
  const double b_hat = params.photic_gain * photic_alpha(intensity, params) * (1.0 - s.n);
  return b_hat * (1.0 - 0.4 * s.x) * (1.0 - 0.4 * s.xc);
}

Eigen::Vector3d clock_drift(const ClockState& s, double intensity, const ClockParams& params) {
  if (!s.finite()) throw NumericalError("clock state is not finite");
  const double alpha = photic_alpha(intensity, params);
  const double b = params.photic_gain * alpha * (1.0 - s.n) * (1.0 - 0.4 * s.x) * (1.0 - 0.4 * s.xc);
  const double w = kPi / 12.0;
  const double freq = 24.0 / (0.99669 * params.tau_x);
  Eigen::Vector3d d;
  d[0] = w * (s.xc + b);
  d[1] = w * (params.vdp_mu * (s.xc - 4.0 / 3.0 * s.xc * s.xc * s.xc) -
              s.x * (freq * freq + params.light_k * b));
  d[2] = 60.0 * (alpha * (1.0 - s.n) - params.beta * s.n);
  return d;
}

Eigen::Vector3d clock_drift(const Eigen::Vector3d& state, double intensity,
                            const ClockParams& params) {
  return clock_drift(ClockState::from(state), intensity, params);
}

double steps_to_light(double steps, double m) {
  if (!(m > 0.0)) throw ConfigError("activity scale must be positive (record contains no movement)");
  if (steps <= 0.0) return 0.0;
  if (steps < 0.1 * m) return 100.0;
  if (steps < 0.25 * m) return 200.0;
  if (steps < 0.4 * m) return 500.0;
  return 2000.0;
}

std::vector<double> steps_to_light(const ActivityTrace& activity) {
  const double m = activity.activity_scale();
  std::vector<double> lux(activity.size());
  for (std::size_t i = 0; i < lux.size(); ++i) lux[i] = steps_to_light(activity.steps[i], m);
  return lux;
}

std::vector<double> hr_forward(const HRModelParams& p, const ActivityTrace& activity,
                               std::uint64_t rng_seed) {
  activity.validate();
  if (!(std::abs(p.ar_coef) < 1.0)) throw ValidationError("|ar_coef| must be < 1");
  if (!(p.noise_sd >= 0.0)) throw ValidationError("noise_sd must be non-negative");

  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double a = p.ar_coef;
  const double stationary_sd = p.noise_sd / std::sqrt(1.0 - a * a);
  const double omega = 2.0 * kPi / p.period;

  std::vector<double> hr(activity.size());
  double v = stationary_sd * gauss(rng);
  for (std::size_t i = 0; i < hr.size(); ++i) {
    if (i > 0) {
      // Gaps of k minutes carry a^k of the previous noise.
      const double k = std::round(activity.time_min[i] - activity.time_min[i - 1]);
      const double carry = std::pow(a, k);
      const double innov_sd = stationary_sd * std::sqrt(std::max(0.0, 1.0 - carry * carry));
      v = carry * v + innov_sd * gauss(rng);
    }
    const double t = activity.time_min[i] / kMinutesPerHour;
    hr[i] = p.hr_baseline - p.amplitude * std::cos(omega * (t - p.hr_phase)) +
            p.activity_gain * activity.steps[i] + v;
  }
  return hr;
}

LightSchedule::LightSchedule(std::vector<double> lux_per_minute) : lux_(std::move(lux_per_minute)) {
  for (double v : lux_) {
    if (!(v >= 0.0)) throw ValidationError("light intensity must be non-negative");
  }
}

double LightSchedule::at_minute(std::int64_t minute) const {
  if (minute < 0 || static_cast<std::size_t>(minute) >= lux_.size()) return 0.0;
  return lux_[static_cast<std::size_t>(minute)];
}

double LightSchedule::at(double t_hours) const {
  return at_minute(static_cast<std::int64_t>(std::floor(t_hours * kMinutesPerHour + 1e-9)));
}

std::vector<TimedState> integrate_clock(const ClockState& state, const LightSchedule& light,
                                        double t0, double t1, const ClockParams& params,
                                        double rtol, double atol) {
  std::vector<TimedState> out;
  out.push_back({t0, state});
  detail::OdeState y = {state.x, state.xc, state.n};
  constexpr double kMinute = 1.0 / kMinutesPerHour;
  double t = t0;
  while (t < t1 - 1e-12) {
    const auto minute = static_cast<std::int64_t>(std::floor(t * kMinutesPerHour + 1e-9));
    const double seg_end = std::min(t1, static_cast<double>(minute + 1) * kMinute);
    const double lux = light.at_minute(minute);
    auto rhs = [&](const detail::OdeState& s, detail::OdeState& ds, double) {
      const Eigen::Vector3d d = clock_drift(ClockState{s[0], s[1], s[2]}, lux, params);
      ds[0] = d[0];
      ds[1] = d[1];
      ds[2] = d[2];
    };
    detail::integrate_dopri(rhs, y, t, seg_end, rtol, atol, kMinute);
    y[2] = std::clamp(y[2], 0.0, 1.0);
    t = seg_end;
    out.push_back({t, ClockState{y[0], y[1], y[2]}});
  }
  return out;
}

}  // namespace circadian
