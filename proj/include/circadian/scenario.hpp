#pragma once

// Synthetic wearable data for the three lifestyle scenarios, and an
// Euler-Maruyama simulator for the stochastic clock.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "circadian/core_model.hpp"
#include "circadian/lskf.hpp"
#include "circadian/records.hpp"

namespace circadian {

struct ScenarioConfig {
  int id = 1;
  double mu_l = 5.0;       // steps/min, morning and evening
  double mu_h = 25.0;      // steps/min, afternoon
  double sigma_l = 7.5;
  double sigma_h = 30.0;
  double sigma_s = 0.0;    // sleep-time activity noise
  double sigma_t = 0.0;    // sleep timing jitter, hours
  double sleep_offset = 7.0;
  double sleep_onset = 23.0;
  HRModelParams hr;        // hr.hr_phase is the true HR phase
  double true_phase = 4.0;
  /// Reads hr.noise_sd as the stationary SD of the AR(1) noise instead of the
  /// innovation SD.
  bool hr_noise_marginal = false;
  int days = 20;
  std::uint64_t seed = 1;

  /// Parameters of scenario 1, 2 or 3. Throws ValidationError otherwise.
  static ScenarioConfig scenario(int id, int days = 20, std::uint64_t seed = 1);
  void validate() const;
};

struct SleepTimes {
  double offset = 7.0;  // wake-up, hours of day
  double onset = 23.0;  // sleep start, hours of day
};

struct DayTruth {
  double phase = 4.0;
  SleepTimes sleep;
};

struct SyntheticDataset {
  std::vector<WearableRecord> records;  // dense minute grid, all fields present
  std::vector<DayTruth> truth;
  std::uint64_t seed = 0;
};

/// Independent generator for (seed, day, stream); used so that changing one
/// scenario knob does not shift the random draws of another.
std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t day, std::uint64_t stream);

/// t_off ~ offset + N(0, σ_t²), t_on ~ onset + N(0, σ_t²), clipped so that
/// t_off + 1 < t_on and both lie in (0, 24). Always consumes two normals.
SleepTimes gen_sleep_times(const ScenarioConfig& cfg, std::mt19937_64& rng);

/// Steps for the 1440 minutes of one day. Always consumes one normal per minute.
std::vector<double> gen_activity(const ScenarioConfig& cfg, const SleepTimes& sleep,
                                 std::mt19937_64& rng);

SyntheticDataset gen_dataset(const ScenarioConfig& cfg);

/// Light per minute from a record's steps (missing steps count as no movement),
/// using the record-wide activity scale.
std::vector<double> light_from_records(const std::vector<WearableRecord>& records);

struct SdeOptions {
  double dt = 1.0 / 600.0;  // hours (6 s)
  int record_every = 10;    // steps between stored states
};

/// Euler-Maruyama for dx = v(x) dt + √K dW with the zero-order-hold light input;
/// n is clamped to [0, 1]. Throws NumericalError when |x| exceeds 1e3.
std::vector<TimedState> simulate_truth_sde(const ClockParams& params, const LightSchedule& light,
                                           const Eigen::Matrix3d& noise, const ClockState& x0,
                                           double t0, double t1, std::mt19937_64& rng,
                                           const SdeOptions& opts = {});

}  // namespace circadian
