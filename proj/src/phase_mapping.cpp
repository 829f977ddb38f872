#include "circadian/phase_mapping.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "circadian/errors.hpp"

namespace circadian {

double state_angle(double x, double xc) {
  if (x == 0.0 && xc == 0.0) throw NumericalError("angle undefined at the origin of the (x, x_c) plane");
  double theta = -std::atan2(xc, x);
  if (theta < 0.0) theta += 2.0 * kPi;
  if (theta >= 2.0 * kPi) theta -= 2.0 * kPi;
  return theta;
}

DayPhaseMap::DayPhaseMap(int day_index, std::vector<double> unrolled_angles,
                         std::vector<double> times)
    : day_index_(day_index), angles_(std::move(unrolled_angles)), times_(std::move(times)) {
  if (angles_.size() != times_.size() || angles_.size() < 2) {
    throw ValidationError("day map needs at least two matching angle/time pairs");
  }
  for (std::size_t i = 1; i < angles_.size(); ++i) {
    if (!(angles_[i] > angles_[i - 1]) || !(times_[i] > times_[i - 1])) {
      throw ValidationError("day map angles and times must be strictly increasing");
    }
  }
}

namespace {

double interp(std::span<const double> xs, std::span<const double> ys, double x) {
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  hi = std::clamp<std::size_t>(hi, 1, xs.size() - 1);
  const std::size_t lo = hi - 1;
  const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + w * (ys[hi] - ys[lo]);
}

}  // namespace

double DayPhaseMap::time_at(double u) const {
  const double span_u = total_angle();
  const double span_t = end_time() - start_time();
  double shift = 0.0;
  // Periodic continuation: one revolution per sampled span.
  while (u < angles_.front()) {
    u += span_u;
    shift -= span_t;
  }
  while (u > angles_.back()) {
    u -= span_u;
    shift += span_t;
  }
  return interp(angles_, times_, u) + shift;
}

double DayPhaseMap::angle_at(double t) const {
  const double span_u = total_angle();
  const double span_t = end_time() - start_time();
  double shift = 0.0;
  while (t < times_.front()) {
    t += span_t;
    shift -= span_u;
  }
  while (t > times_.back()) {
    t -= span_t;
    shift += span_u;
  }
  return interp(times_, angles_, t) + shift;
}

namespace {

std::vector<TimedState> day_window(std::span<const TimedState> trajectory, int day_index) {
  const double t0 = kDayHours * day_index;
  const double t1 = t0 + kDayHours;
  constexpr double eps = 1e-9;
  std::vector<TimedState> out;
  for (const auto& s : trajectory) {
    if (s.t >= t0 - eps && s.t <= t1 + eps) out.push_back(s);
  }
  return out;
}

}  // namespace

DayPhaseMap build_day_map(std::span<const TimedState> trajectory, int day_index) {
  const auto window = day_window(trajectory, day_index);
  if (window.size() < 3) throw ValidationError("trajectory does not cover the requested day");
  const double t0 = kDayHours * day_index;
  if (window.front().t > t0 + 1.0 / 60.0 + 1e-9 || window.back().t < t0 + kDayHours - 1.0 / 60.0 - 1e-9) {
    throw ValidationError("trajectory does not cover the requested day");
  }

  std::vector<double> angles;
  std::vector<double> times;
  double prev_theta = state_angle(window.front().state.x, window.front().state.xc);
  double unrolled = prev_theta;
  angles.push_back(unrolled);
  times.push_back(window.front().t);
  for (std::size_t k = 1; k < window.size(); ++k) {
    const double theta = state_angle(window[k].state.x, window[k].state.xc);
    unrolled += wrap_angle(theta - prev_theta);
    prev_theta = theta;
    if (unrolled > angles.back() && window[k].t > times.back()) {
      angles.push_back(unrolled);
      times.push_back(window[k].t);
    }
  }
  const double total = angles.back() - angles.front();
  if (std::abs(total - 2.0 * kPi) > 0.1 * 2.0 * kPi) {
    throw NumericalError("degenerate cycle: mean trajectory does not complete one revolution in the day");
  }
  return DayPhaseMap(day_index, std::move(angles), std::move(times));
}

PredictedPhase predicted_phase(std::span<const TimedState> trajectory, int day_index) {
  const auto w = day_window(trajectory, day_index);
  if (w.size() < 3) throw ValidationError("trajectory does not cover the requested day");

  std::vector<std::size_t> minima;
  for (std::size_t k = 1; k + 1 < w.size(); ++k) {
    if (w[k].state.x <= w[k - 1].state.x && w[k].state.x < w[k + 1].state.x) minima.push_back(k);
  }
  double lo = w[0].state.x, hi = w[0].state.x;
  std::size_t global = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k].state.x < lo) {
      lo = w[k].state.x;
      global = k;
    }
    hi = std::max(hi, w[k].state.x);
  }

  PredictedPhase out;
  std::size_t pick = global;
  if (!minima.empty()) {
    std::size_t best = minima.front();
    for (auto k : minima) {
      if (w[k].state.x < w[best].state.x) best = k;
    }
    pick = best;
    const double tol = 0.01 * std::max(hi - lo, 1e-12);
    std::size_t earliest = best;
    int close = 0;
    for (auto k : minima) {
      if (w[k].state.x - w[best].state.x <= tol) {
        ++close;
        earliest = std::min(earliest, k);
      }
    }
    if (close > 1) {
      out.ambiguous = true;
      pick = earliest;
    }
  }

  double t = w[pick].t;
  if (pick > 0 && pick + 1 < w.size()) {
    // Vertex of the parabola through three (possibly unevenly spaced) samples.
    const double t0 = w[pick - 1].t, t1 = w[pick].t, t2 = w[pick + 1].t;
    const double y0 = w[pick - 1].state.x, y1 = w[pick].state.x, y2 = w[pick + 1].state.x;
    const double d0 = (y1 - y0) / (t1 - t0);
    const double d1 = (y2 - y1) / (t2 - t1);
    const double curv = (d1 - d0) / (t2 - t0);
    if (curv > 0.0) {
      const double vertex = 0.5 * (t0 + t1) - d0 / (2.0 * curv);
      t = std::clamp(vertex, t0, t2);
    }
  }
  out.time = t;
  out.hours = wrap_hours(t);
  return out;
}

double state_phase(const Eigen::Vector3d& state, const DayPhaseMap& map, double anchor_time) {
  const double anchor_angle = map.angle_at(anchor_time);
  const double theta = state_angle(state[0], state[1]);
  const double ahead = map.time_at(anchor_angle + wrap_angle(theta - anchor_angle)) - anchor_time;
  return anchor_time - ahead;
}

double measurement_fn(const Eigen::Vector3d& state, const DayPhaseMap& map, double anchor_time,
                      double phi_ref) {
  return wrap_hours(wrap_hours(state_phase(state, map, anchor_time)) + phi_ref);
}

PhasePosterior PhasePosterior::from_samples(int day_index, std::vector<double> samples) {
  PhasePosterior p;
  p.day_index = day_index;
  for (double& s : samples) s = wrap_hours(s);
  const auto summary = circular_summary(samples);
  p.mean = summary.mean;
  p.sd = summary.sd;
  p.interval = highest_density_arc(samples, 0.95);
  p.samples = std::move(samples);
  return p;
}

PhasePosterior mc_transform(const SqrtGaussian& belief, const DayPhaseMap& map, double anchor_time,
                            std::size_t n, std::uint64_t rng_seed) {
  if (n < kMinPosteriorSamples) throw ValidationError("mc_transform needs at least 1000 samples");
  belief.validate();
  if (belief.dim() != 3) throw ValidationError("mc_transform expects a 3-dimensional clock belief");

  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> out;
  out.reserve(n);
  std::size_t undefined = 0;
  Eigen::Vector3d xi;
  for (std::size_t k = 0; k < n; ++k) {
    for (int j = 0; j < 3; ++j) xi[j] = gauss(rng);
    const Eigen::Vector3d x = belief.mean + belief.factor * xi;
    if (x[0] == 0.0 && x[1] == 0.0) {
      ++undefined;
      continue;
    }
    out.push_back(state_phase(x, map, anchor_time));
  }
  if (undefined * 100 > n) throw NumericalError("degenerate belief: too many samples at the origin");
  return PhasePosterior::from_samples(map.day_index(), std::move(out));
}

}  // namespace circadian
