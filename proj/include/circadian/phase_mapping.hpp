#pragma once

// Mapping between clock states and clock time.
//
// The angle of a state is taken in the (x, x_c) plane and grows with time along
// the limit cycle (θ = π at the daily minimum of x). A day map g_i relates the
// unrolled angle of the mean trajectory on day i to absolute time.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "circadian/circular.hpp"
#include "circadian/core_model.hpp"
#include "circadian/lskf.hpp"

namespace circadian {

/// Angle in [0, 2π) of the projection of (x, x_c); continuous across the
/// branch boundaries. Throws NumericalError at the origin.
double state_angle(double x, double xc);

class DayPhaseMap {
 public:
  DayPhaseMap() = default;
  DayPhaseMap(int day_index, std::vector<double> unrolled_angles, std::vector<double> times);

  int day_index() const { return day_index_; }
  std::span<const double> angles() const { return angles_; }
  std::span<const double> times() const { return times_; }
  double start_time() const { return times_.front(); }
  double end_time() const { return times_.back(); }
  double total_angle() const { return angles_.back() - angles_.front(); }

  /// g(u) for an unrolled angle u; outside the sampled revolution the map is
  /// continued periodically (one revolution per sampled span).
  double time_at(double unrolled_angle) const;
  /// Inverse of time_at.
  double angle_at(double t) const;

 private:
  int day_index_ = 0;
  std::vector<double> angles_;
  std::vector<double> times_;
};

/// Builds g_i from a mean trajectory sampled at most one minute apart over
/// [24 i, 24 (i + 1)]. Non-monotone samples are dropped after unrolling.
/// Throws NumericalError when the window does not hold one revolution (±10%).
DayPhaseMap build_day_map(std::span<const TimedState> trajectory, int day_index);

struct PredictedPhase {
  double time = 0.0;     // absolute hours
  double hours = 0.0;    // time mod 24
  bool ambiguous = false;
};

/// Time of the minimum of x over day `day_index`, refined by a parabola through
/// the three samples around the discrete minimum.
PredictedPhase predicted_phase(std::span<const TimedState> trajectory, int day_index);

/// Clock phase (absolute hours) of `state`, observed at `anchor_time`, the time
/// of the daily minimum of the mean trajectory. A state that sits Δ hours ahead
/// of the mean along the cycle reaches its minimum Δ hours earlier:
///   phase(x) = anchor - [g(θ_a + wrap(θ(x) - θ_a)) - anchor],  θ_a = g⁻¹(anchor).
double state_phase(const Eigen::Vector3d& state, const DayPhaseMap& map, double anchor_time);

/// Predicted HR phase of a clock state: (phase(x) + phi_ref) mod 24.
double measurement_fn(const Eigen::Vector3d& state, const DayPhaseMap& map, double anchor_time,
                      double phi_ref);

struct PhasePosterior {
  int day_index = 0;
  std::vector<double> samples;  // hours in [0, 24)
  double mean = 0.0;
  double sd = 0.0;
  CircularInterval interval;

  /// Summaries computed from `samples` (95% shortest arc).
  static PhasePosterior from_samples(int day_index, std::vector<double> samples);
};

inline constexpr std::size_t kMinPosteriorSamples = 1000;

/// Draws N samples from the belief, maps each through state_phase, and
/// summarises them. Throws NumericalError when over 1% of the draws land at
/// the origin of the (x, x_c) plane.
PhasePosterior mc_transform(const SqrtGaussian& belief, const DayPhaseMap& map,
                            double anchor_time, std::size_t n, std::uint64_t rng_seed);

}  // namespace circadian
