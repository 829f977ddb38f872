#include "circadian/scenario.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "circadian/errors.hpp"

namespace circadian {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

enum Stream : std::uint64_t { kSleepStream = 1, kActivityStream = 2, kHRStream = 3 };

constexpr int kMinutesPerDay = 1440;

}  // namespace

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t day, std::uint64_t stream) {
  const std::uint64_t s = splitmix64(splitmix64(splitmix64(seed) ^ day) ^ (stream * 0x632BE59BD9B4E019ULL));
  return std::mt19937_64(s);
}

ScenarioConfig ScenarioConfig::scenario(int id, int days, std::uint64_t seed) {
  ScenarioConfig c;
  c.id = id;
  c.days = days;
  c.seed = seed;
  switch (id) {
    case 1:
      break;
    case 2:
      c.sigma_t = 1.5;
      break;
    case 3:
      c.sigma_t = 1.5;
      c.sigma_s = 2.0;
      c.hr.noise_sd = 7.0;
      c.hr.ar_coef = 0.95;
      break;
    default:
      throw ValidationError("scenario id must be 1, 2 or 3");
  }
  return c;
}

void ScenarioConfig::validate() const {
  if (id < 1 || id > 3) throw ValidationError("scenario id must be 1, 2 or 3");
  const double sds[] = {sigma_l, sigma_h, sigma_s, sigma_t, hr.noise_sd};
  for (double s : sds) {
    if (!(s >= 0.0)) throw ValidationError("scenario standard deviations must be non-negative");
  }
  if (!(sleep_onset > sleep_offset)) throw ValidationError("sleep onset must follow sleep offset");
  if (days < 1) throw ValidationError("scenario needs at least one day");
  if (!(std::abs(hr.ar_coef) < 1.0)) throw ValidationError("|ar_coef| must be < 1");
}

SleepTimes gen_sleep_times(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double z_off = gauss(rng);
  const double z_on = gauss(rng);
  constexpr double eps = 1.0 / 60.0;
  SleepTimes s;
  s.offset = std::clamp(cfg.sleep_offset + cfg.sigma_t * z_off, eps, kDayHours - 1.0 - 2.0 * eps);
  s.onset = std::clamp(cfg.sleep_onset + cfg.sigma_t * z_on, s.offset + 1.0 + eps, kDayHours - eps);
  return s;
}

std::vector<double> gen_activity(const ScenarioConfig& cfg, const SleepTimes& sleep,
                                 std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> steps(kMinutesPerDay);
  auto positive = [](double v) { return v > 0.0 ? v : 0.0; };
  for (int m = 0; m < kMinutesPerDay; ++m) {
    const double z = gauss(rng);
    const double t = m / kMinutesPerHour;
    double v = 0.0;
    if (t < sleep.offset || t >= sleep.onset) {
      v = positive(cfg.sigma_s * z);
    } else if (t < sleep.offset + 5.0) {
      v = positive(cfg.mu_l + cfg.sigma_l * z);
    } else if (t < sleep.offset + 10.0) {
      v = positive(cfg.mu_h + cfg.sigma_h * z);
    } else {
      v = positive(cfg.mu_l + cfg.sigma_l * z);
    }
    steps[static_cast<std::size_t>(m)] = v;
  }
  return steps;
}

SyntheticDataset gen_dataset(const ScenarioConfig& cfg) {
  cfg.validate();
  SyntheticDataset ds;
  ds.seed = cfg.seed;
  const auto total = static_cast<std::size_t>(cfg.days) * kMinutesPerDay;

  ActivityTrace activity;
  activity.time_min.reserve(total);
  activity.steps.reserve(total);
  for (int day = 0; day < cfg.days; ++day) {
    auto sleep_rng = derived_rng(cfg.seed, static_cast<std::uint64_t>(day), kSleepStream);
    auto act_rng = derived_rng(cfg.seed, static_cast<std::uint64_t>(day), kActivityStream);
    const SleepTimes sleep = gen_sleep_times(cfg, sleep_rng);
    const auto steps = gen_activity(cfg, sleep, act_rng);
    for (int m = 0; m < kMinutesPerDay; ++m) {
      activity.time_min.push_back(static_cast<double>(day * kMinutesPerDay + m));
      activity.steps.push_back(steps[static_cast<std::size_t>(m)]);
    }
    ds.truth.push_back({cfg.true_phase, sleep});
  }

  const std::uint64_t hr_seed = derived_rng(cfg.seed, 0, kHRStream)();
  HRModelParams hr_params = cfg.hr;
  if (cfg.hr_noise_marginal) {
    hr_params.noise_sd *= std::sqrt(1.0 - hr_params.ar_coef * hr_params.ar_coef);
  }
  const auto hr = hr_forward(hr_params, activity, hr_seed);

  ds.records.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    ds.records[i].minute = static_cast<std::int64_t>(i);
    ds.records[i].hr = hr[i];
    ds.records[i].steps = activity.steps[i];
  }
  return ds;
}

std::vector<double> light_from_records(const std::vector<WearableRecord>& records) {
  double max_steps = 0.0;
  for (const auto& r : records) {
    if (r.steps) max_steps = std::max(max_steps, *r.steps);
  }
  const double m = max_steps / 2.0;
  if (!(m > 0.0)) throw ConfigError("record contains no movement; steps-to-light scale undefined");
  std::int64_t last = records.empty() ? -1 : records.back().minute;
  std::vector<double> lux(static_cast<std::size_t>(last + 1), 0.0);
  for (const auto& r : records) {
    if (r.minute < 0) continue;
    lux[static_cast<std::size_t>(r.minute)] = steps_to_light(r.steps.value_or(0.0), m);
  }
  return lux;
}

std::vector<TimedState> simulate_truth_sde(const ClockParams& params, const LightSchedule& light,
                                           const Eigen::Matrix3d& noise, const ClockState& x0,
                                           double t0, double t1, std::mt19937_64& rng,
                                           const SdeOptions& opts) {
  if (!(opts.dt > 0.0 && opts.dt <= 1.0 / 60.0 + 1e-15)) {
    throw ValidationError("Euler-Maruyama step must be in (0, 1 min]");
  }
  if (opts.record_every < 1) throw ValidationError("record_every must be positive");
  Eigen::Matrix3d root = Eigen::Matrix3d::Zero();
  if (!noise.isZero(0.0)) {
    // Symmetric square root tolerates semi-definite K.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(noise);
    root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto steps = static_cast<std::int64_t>(std::llround((t1 - t0) / opts.dt));
  const double sqrt_dt = std::sqrt(opts.dt);
  Eigen::Vector3d x = x0.vec();
  std::vector<TimedState> out;
  out.push_back({t0, x0});
  for (std::int64_t k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * opts.dt;
    const Eigen::Vector3d drift = clock_drift(x, light.at(t), params);
    Eigen::Vector3d dw(gauss(rng), gauss(rng), gauss(rng));
    x += drift * opts.dt + root * dw * sqrt_dt;
    x[2] = std::clamp(x[2], 0.0, 1.0);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e3) {
      throw NumericalError("Euler-Maruyama integration became unstable");
    }
    if ((k + 1) % opts.record_every == 0 || k + 1 == steps) {
      out.push_back({t0 + static_cast<double>(k + 1) * opts.dt, ClockState::from(x)});
    }
  }
  return out;
}

}  // namespace circadian
