#pragma once

// Arithmetic on clock times modulo 24 h.

#include <cmath>
#include <span>

#include "circadian/core_model.hpp"

namespace circadian {

/// Representative of t in [0, 24).
inline double wrap_hours(double t) {
  double r = std::fmod(t, kDayHours);
  if (r < 0.0) r += kDayHours;
  if (r >= kDayHours) r -= kDayHours;
  return r;
}

/// a - b reduced to (-12, 12].
inline double wrap_diff(double a, double b) {
  double r = std::fmod(a - b, kDayHours);
  if (r <= -kDayHours / 2) r += kDayHours;
  if (r > kDayHours / 2) r -= kDayHours;
  return r;
}

/// Angle reduced to (-π, π].
inline double wrap_angle(double a) {
  double r = std::fmod(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

struct CircularSummary {
  double mean = 0.0;        // hours in [0, 24)
  double resultant = 0.0;   // mean resultant length R̄ in [0, 1]
  double sd = 0.0;          // sqrt(-2 ln R̄) in hours
  double variance() const { return sd * sd; }
};

/// Resultant-vector mean and circular standard deviation of clock times.
CircularSummary circular_summary(std::span<const double> hours);

/// Closed arc [lower, upper] on the 24 h circle; lower > upper means it wraps
/// through midnight.
struct CircularInterval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double t) const;
  double width() const;
};

/// Shortest arc containing at least `mass` of the samples.
CircularInterval highest_density_arc(std::span<const double> hours, double mass = 0.95);

}  // namespace circadian
