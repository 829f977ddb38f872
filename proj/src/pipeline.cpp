#include "circadian/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <thread>

#include "circadian/circular.hpp"
#include "circadian/errors.hpp"

namespace circadian {

namespace {

constexpr int kMinutesPerDay = 1440;

enum SeedStream : std::uint64_t {
  kMcmcStream = 20,
  kPriorSampleStream = 21,
  kPosteriorSampleStream = 22,
  kReplicateStream = 23,
};

std::uint64_t seed_for(std::uint64_t base, int day, SeedStream stream) {
  return derived_rng(base, static_cast<std::uint64_t>(day), stream)();
}

struct Snapshot {
  double t;
  SqrtGaussian belief;
};

class Propagator {
 public:
  Propagator(const LightSchedule& light, const RunConfig& cfg)
      : light_(light), cfg_(cfg), noise_(cfg.noise.matrix()) {}

  // Propagates `belief` from t0 to t1, recording the belief at t0, at every
  // whole minute in between and at t1.
  std::vector<Snapshot> run(SqrtGaussian belief, double t0, double t1) const {
    std::vector<Snapshot> out;
    out.push_back({t0, belief});
    double t = t0;
    while (t < t1 - 1e-12) {
      const auto minute = static_cast<std::int64_t>(std::floor(t * kMinutesPerHour + 1e-9));
      const double seg_end = std::min(static_cast<double>(minute + 1) / kMinutesPerHour, t1);
      belief = step(belief, t, seg_end, light_.at_minute(minute));
      t = seg_end;
      out.push_back({t, belief});
    }
    return out;
  }

  SqrtGaussian step(const SqrtGaussian& belief, double t0, double t1, double lux) const {
    if (!(t1 > t0)) return belief;
    const ClockParams& params = cfg_.clock;
    DriftFn drift = [&params, lux](const Eigen::VectorXd& x, double) -> Eigen::VectorXd {
      return clock_drift(Eigen::Vector3d(x), lux, params);
    };
    SqrtGaussian next = time_update(belief, drift, noise_, t0, t1, cfg_.solver);
    next.mean[2] = std::clamp(next.mean[2], 0.0, 1.0);
    return next;
  }

  const LightSchedule& light() const { return light_; }

 private:
  const LightSchedule& light_;
  const RunConfig& cfg_;
  Eigen::MatrixXd noise_;
};

std::vector<TimedState> mean_trajectory(const std::vector<Snapshot>& snaps) {
  std::vector<TimedState> traj;
  traj.reserve(snaps.size());
  for (const auto& s : snaps) traj.push_back({s.t, ClockState::from(Eigen::Vector3d(s.belief.mean))});
  return traj;
}

// Belief at time t inside the span covered by `snaps`.
SqrtGaussian belief_at(const std::vector<Snapshot>& snaps, double t, const Propagator& prop) {
  auto it = std::upper_bound(snaps.begin(), snaps.end(), t,
                             [](double v, const Snapshot& s) { return v < s.t; });
  if (it == snaps.begin()) throw NumericalError("requested belief before the propagated span");
  const Snapshot& base = *std::prev(it);
  const auto minute = static_cast<std::int64_t>(std::floor(base.t * kMinutesPerHour + 1e-9));
  return prop.step(base.belief, base.t, t, prop.light().at_minute(minute));
}

SqrtGaussian initial_belief(const RunConfig& cfg, const LightSchedule& light) {
  SqrtGaussian b;
  b.mean = cfg.initial_mean;
  if (cfg.spinup_days > 0) {
    std::vector<double> lux;
    const auto first = light.lux().subspan(0, std::min<std::size_t>(light.minutes(), kMinutesPerDay));
    for (int d = 0; d < cfg.spinup_days; ++d) lux.insert(lux.end(), first.begin(), first.end());
    const auto traj = integrate_clock(ClockState::from(cfg.initial_mean), LightSchedule(std::move(lux)), 0.0,
                                      kDayHours * cfg.spinup_days, cfg.clock);
    b.mean = traj.back().state.vec();
  }
  b.factor = std::sqrt(cfg.initial_cov_scale) * Eigen::MatrixXd::Identity(3, 3);
  return b;
}

std::vector<DayMeasurement> checked_measurements(const std::vector<WearableRecord>& records,
                                                 const RunConfig& cfg, int days,
                                                 const std::vector<DayMeasurement>* given) {
  if (!given) return extract_daily_hr_phases(records, cfg.mcmc);
  if (static_cast<int>(given->size()) != days) {
    throw ConfigError("supplied measurements do not cover every day of the record");
  }
  return *given;
}

LightSchedule record_light(const std::vector<WearableRecord>& records) {
  return LightSchedule(light_from_records(records));
}

void check_record(const std::vector<WearableRecord>& records) {
  if (day_count(records) < 2) throw ConfigError("at least two days of records are required");
}

PhasePosterior trimmed(PhasePosterior p, bool keep) {
  if (!keep) {
    p.samples.clear();
    p.samples.shrink_to_fit();
  }
  return p;
}

// The assimilation loop; with `assimilate` false it reduces to the model-only
// baseline.
RunResult run_model(const std::vector<WearableRecord>& records, const RunConfig& cfg,
                    const std::vector<DayMeasurement>* measurements, bool assimilate) {
  cfg.validate();
  check_record(records);
  const int days = day_count(records);
  const LightSchedule light = record_light(records);
  std::vector<DayMeasurement> meas;
  if (assimilate) meas = checked_measurements(records, cfg, days, measurements);

  const Propagator prop(light, cfg);
  RunResult result;
  result.config = cfg;
  SqrtGaussian belief = initial_belief(cfg, light);
  double t_cur = 0.0;

  for (int day = 0; day < days; ++day) {
    const double day_end = kDayHours * (day + 1);
    const auto snaps = prop.run(belief, t_cur, day_end);
    const auto traj = mean_trajectory(snaps);
    const PredictedPhase pred = predicted_phase(traj, day);
    const DayPhaseMap map = build_day_map(traj, day);
    const double anchor = pred.time;

    DailyResult dr;
    dr.day_index = day;
    dr.predicted_time = anchor;
    dr.ambiguous_minimum = pred.ambiguous;

    SqrtGaussian at_anchor = belief_at(snaps, anchor, prop);
    const PhasePosterior prior =
        mc_transform(at_anchor, map, anchor, cfg.mc_samples, seed_for(cfg.seed, day, kPriorSampleStream));
    dr.prior = trimmed(prior, cfg.keep_samples);

    if (!assimilate) {
      dr.posterior = dr.prior;
    } else {
      const DayMeasurement& m = meas[static_cast<std::size_t>(day)];
      dr.measurement = m.estimate;
      if (dr.measurement) dr.measurement->phase_samples.clear();
      if (!m.estimate) {
        dr.skip_reason = m.skip_reason;
      } else if (m.estimate->low_quality) {
        dr.skip_reason = "low-quality HR phase: " + m.estimate->flag;
      } else {
        const double phi_ref = cfg.clock.phi_ref;
        MeasurementFn h = [&map, anchor, phi_ref](const Eigen::VectorXd& x) {
          return measurement_fn(Eigen::Vector3d(x), map, anchor, phi_ref);
        };
        const Measurement z{m.estimate->phase_mean, m.estimate->phase_var};
        const auto upd = measurement_update(at_anchor, z, h, {kDayHours, cfg.gate_sigmas});
        dr.measurement_accepted = upd.accepted;
        dr.predicted_measurement = upd.predicted;
        dr.innovation = upd.innovation;
        dr.innovation_sd = upd.innovation_sd;
        if (upd.accepted) {
          at_anchor = upd.belief;
          const PhasePosterior post = mc_transform(at_anchor, map, anchor, cfg.mc_samples,
                                                   seed_for(cfg.seed, day, kPosteriorSampleStream));
          dr.posterior = trimmed(post, cfg.keep_samples);
        } else {
          dr.skip_reason = "measurement rejected: " + upd.reason;
        }
      }
    }
    result.days.push_back(std::move(dr));
    belief = at_anchor;
    t_cur = anchor;
  }
  return result;
}

}  // namespace

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::kFilter:
      return "filter";
    case Estimator::kModelOnly:
      return "model-only";
    case Estimator::kHROnly:
      return "hr-only";
  }
  return "filter";
}

Estimator parse_estimator(const std::string& name) {
  if (name == "filter") return Estimator::kFilter;
  if (name == "model-only") return Estimator::kModelOnly;
  if (name == "hr-only") return Estimator::kHROnly;
  throw ConfigError("unknown estimator '" + name + "' (filter, model-only, hr-only)");
}

void RunConfig::validate() const {
  if (!initial_mean.allFinite()) throw ConfigError("initial mean must be finite");
  if (spinup_days < 0) throw ConfigError("spin-up days must be non-negative");
  if (!(initial_cov_scale > 0.0) || !std::isfinite(initial_cov_scale)) {
    throw ConfigError("initial covariance scale must be positive");
  }
  if (!(noise.sigma_p >= 0.0) || !(noise.sigma_l >= 0.0)) {
    throw ConfigError("process noise magnitudes must be non-negative");
  }
  if (mc_samples < kMinPosteriorSamples) throw ConfigError("at least 1000 Monte Carlo samples are required");
  if (!(solver.rtol > 0.0 && solver.atol > 0.0 && solver.max_step > 0.0)) {
    throw ConfigError("solver tolerances must be positive");
  }
  try {
    clock.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

int day_count(const std::vector<WearableRecord>& records) {
  if (records.empty()) return 0;
  return static_cast<int>((records.back().minute + kMinutesPerDay) / kMinutesPerDay);
}

HRWindow day_window(const std::vector<WearableRecord>& records, int day) {
  std::vector<std::int64_t> minute;
  std::vector<double> hr, steps;
  const std::int64_t lo = static_cast<std::int64_t>(day) * kMinutesPerDay;
  const std::int64_t hi = lo + kMinutesPerDay;
  for (const auto& r : records) {
    if (r.minute < lo || r.minute >= hi || !r.hr) continue;
    minute.push_back(r.minute);
    hr.push_back(*r.hr);
    steps.push_back(r.steps.value_or(0.0));
  }
  return HRWindow(day, std::move(minute), std::move(hr), std::move(steps));
}

std::vector<DayMeasurement> extract_daily_hr_phases(const std::vector<WearableRecord>& records,
                                                    const McmcConfig& mcmc) {
  const int days = day_count(records);
  std::vector<DayMeasurement> out;
  out.reserve(static_cast<std::size_t>(days));
  for (int day = 0; day < days; ++day) {
    DayMeasurement m;
    m.day_index = day;
    const HRWindow w = day_window(records, day);
    if (w.size() < kMinWindowSamples) {
      m.skip_reason = "fewer than 60 HR samples";
    } else {
      McmcConfig c = mcmc;
      c.seed = seed_for(mcmc.seed, day, kMcmcStream);
      m.estimate = extract_hr_phase(w, c);
    }
    out.push_back(std::move(m));
  }
  return out;
}

RunResult run_filter(const std::vector<WearableRecord>& records, RunConfig cfg,
                     const std::vector<DayMeasurement>* measurements) {
  cfg.estimator = Estimator::kFilter;
  return run_model(records, cfg, measurements, true);
}

RunResult run_model_only(const std::vector<WearableRecord>& records, RunConfig cfg) {
  cfg.estimator = Estimator::kModelOnly;
  return run_model(records, cfg, nullptr, false);
}

RunResult run_hr_only(const std::vector<WearableRecord>& records, RunConfig cfg,
                      const std::vector<DayMeasurement>* measurements) {
  cfg.estimator = Estimator::kHROnly;
  cfg.validate();
  check_record(records);
  const int days = day_count(records);
  const auto meas = checked_measurements(records, cfg, days, measurements);
  RunResult result;
  result.config = cfg;
  for (int day = 0; day < days; ++day) {
    const DayMeasurement& m = meas[static_cast<std::size_t>(day)];
    DailyResult dr;
    dr.day_index = day;
    dr.measurement = m.estimate;
    if (!m.estimate) {
      dr.skip_reason = m.skip_reason;
    } else if (m.estimate->low_quality) {
      dr.skip_reason = "low-quality HR phase: " + m.estimate->flag;
    } else {
      std::vector<double> shifted = m.estimate->phase_samples;
      for (double& s : shifted) s = wrap_hours(s - cfg.clock.phi_ref);
      PhasePosterior post = PhasePosterior::from_samples(day, std::move(shifted));
      post.mean = wrap_hours(m.estimate->phase_mean - cfg.clock.phi_ref);
      post.sd = std::sqrt(m.estimate->phase_var);
      dr.posterior = trimmed(std::move(post), cfg.keep_samples);
      dr.measurement_accepted = true;
    }
    if (dr.measurement) dr.measurement->phase_samples.clear();
    result.days.push_back(std::move(dr));
  }
  return result;
}

RunResult run(const std::vector<WearableRecord>& records, const RunConfig& cfg,
              const std::vector<DayMeasurement>* measurements) {
  switch (cfg.estimator) {
    case Estimator::kFilter:
      return run_filter(records, cfg, measurements);
    case Estimator::kModelOnly:
      return run_model_only(records, cfg);
    case Estimator::kHROnly:
      return run_hr_only(records, cfg, measurements);
  }
  throw ConfigError("unknown estimator");
}

EvaluationReport evaluate_run(const RunResult& result, double true_phase, int scenario,
                              double sigma) {
  std::vector<PhasePosterior> est;
  std::vector<double> truth;
  for (const auto& d : result.days) {
    if (!d.posterior) continue;
    est.push_back(*d.posterior);
    truth.push_back(true_phase);
  }
  return evaluate(est, truth, scenario, sigma, result.config.seed);
}

std::uint64_t replicate_seed(std::uint64_t base, int rep) {
  return seed_for(base, rep, kReplicateStream);
}

SweepResult sweep(const ScenarioConfig& scenario, const RunConfig& cfg, const SweepConfig& sw) {
  if (sw.sigmas.empty()) throw ConfigError("sweep grid is empty");
  if (sw.replicates < 1) throw ConfigError("sweep needs at least one replicate");

  // One task per replicate: the HR extraction is shared by its grid points.
  // Seeds depend only on the replicate index, so the thread count never
  // changes the result.
  auto replicate = [&](int rep) {
    ScenarioConfig sc = scenario;
    sc.seed = replicate_seed(scenario.seed, rep);
    const SyntheticDataset ds = gen_dataset(sc);
    RunConfig rc = cfg;
    rc.seed = replicate_seed(cfg.seed, rep);
    rc.mcmc.seed = replicate_seed(cfg.mcmc.seed, rep);
    const auto meas = extract_daily_hr_phases(ds.records, rc.mcmc);
    std::vector<EvaluationReport> reports;
    for (double s : sw.sigmas) {
      switch (sw.axis) {
        case SweepAxis::kIsotropic:
          rc.noise = ProcessNoise::isotropic(s);
          break;
        case SweepAxis::kSigmaP:
          rc.noise = {s, sw.fixed_sigma};
          break;
        case SweepAxis::kSigmaL:
          rc.noise = {sw.fixed_sigma, s};
          break;
      }
      const RunResult r = run_filter(ds.records, rc, &meas);
      EvaluationReport rep_eval = evaluate_run(r, sc.true_phase, sc.id, s);
      rep_eval.seed = sc.seed;
      reports.push_back(std::move(rep_eval));
    }
    return reports;
  };

  const int n = sw.replicates;
  unsigned threads = sw.threads > 0 ? static_cast<unsigned>(sw.threads) : std::thread::hardware_concurrency();
  threads = std::clamp(threads, 1u, static_cast<unsigned>(n));
  std::vector<std::vector<EvaluationReport>> per_rep(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int rep = next++; rep < n; rep = next++) {
      try {
        per_rep[static_cast<std::size_t>(rep)] = replicate(rep);
      } catch (...) {
        errors[static_cast<std::size_t>(rep)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SweepResult out;
  for (auto& reps : per_rep) {
    for (auto& r : reps) out.reports.push_back(std::move(r));
  }
  out.rows = sweep_aggregate(out.reports);
  return out;
}

namespace {

nlohmann::json posterior_json(const PhasePosterior& p, bool samples) {
  nlohmann::json j{{"mean_h", p.mean},
                   {"sd_h", p.sd},
                   {"ci95", {p.interval.lower, p.interval.upper}}};
  if (samples) j["samples"] = p.samples;
  return j;
}

}  // namespace

nlohmann::json to_json(const RunConfig& cfg) {
  return nlohmann::json{
      {"estimator", to_string(cfg.estimator)},
      {"initial_mean", {cfg.initial_mean[0], cfg.initial_mean[1], cfg.initial_mean[2]}},
      {"initial_cov_scale", cfg.initial_cov_scale},
      {"spinup_days", cfg.spinup_days},
      {"sigma_p", cfg.noise.sigma_p},
      {"sigma_l", cfg.noise.sigma_l},
      {"phi_ref", cfg.clock.phi_ref},
      {"mc_samples", cfg.mc_samples},
      {"rtol", cfg.solver.rtol},
      {"atol", cfg.solver.atol},
      {"gate_sigmas", cfg.gate_sigmas},
      {"seed", cfg.seed},
      {"mcmc",
       {{"walkers", cfg.mcmc.walkers},
        {"sweeps", cfg.mcmc.sweeps},
        {"burn_in_fraction", cfg.mcmc.burn_in_fraction},
        {"seed", cfg.mcmc.seed}}}};
}

nlohmann::json to_json(const RunResult& result, const std::optional<EvaluationReport>& evaluation) {
  nlohmann::json days = nlohmann::json::array();
  for (const auto& d : result.days) {
    nlohmann::json j{{"day_index", d.day_index}};
    if (result.config.estimator != Estimator::kHROnly) {
      j["predicted_time_h"] = d.predicted_time;
      j["ambiguous_minimum"] = d.ambiguous_minimum;
    }
    if (d.prior) j["prior"] = posterior_json(*d.prior, result.config.keep_samples);
    j["posterior"] = d.posterior ? posterior_json(*d.posterior, result.config.keep_samples)
                                 : nlohmann::json(nullptr);
    if (d.measurement) {
      const auto& m = *d.measurement;
      j["measurement"] = {{"phase_mean_h", m.phase_mean}, {"phase_var_h2", m.phase_var},
                          {"acceptance", m.acceptance},   {"ess", m.ess},
                          {"chain_length", m.chain_length}, {"low_quality", m.low_quality},
                          {"flag", m.flag}};
    }
    if (result.config.estimator == Estimator::kFilter && d.measurement && !d.measurement->low_quality) {
      j["update"] = {{"accepted", d.measurement_accepted},
                     {"predicted_measurement_h", d.predicted_measurement},
                     {"innovation_h", d.innovation},
                     {"innovation_sd_h", d.innovation_sd}};
    }
    if (!d.skip_reason.empty()) j["skip_reason"] = d.skip_reason;
    days.push_back(std::move(j));
  }
  nlohmann::json out{{"schema_version", kSchemaVersion}, {"config", to_json(result.config)}, {"days", days}};
  if (evaluation) out["evaluation"] = *evaluation;
  return out;
}

void write_daily_csv(std::ostream& out, const RunResult& result) {
  out << "day_index,prior_mean_h,prior_sd_h,posterior_mean_h,posterior_sd_h,ci_lower_h,ci_upper_h,"
         "hr_phase_h,hr_phase_var_h2,accepted\n";
  const auto old = out.precision(10);
  for (const auto& d : result.days) {
    out << d.day_index << ',';
    if (d.prior) out << d.prior->mean << ',' << d.prior->sd;
    else out << ',';
    out << ',';
    if (d.posterior) {
      out << d.posterior->mean << ',' << d.posterior->sd << ',' << d.posterior->interval.lower << ','
          << d.posterior->interval.upper;
    } else {
      out << ",,,";
    }
    out << ',';
    if (d.measurement) out << d.measurement->phase_mean << ',' << d.measurement->phase_var;
    else out << ',';
    out << ',' << (d.measurement_accepted ? 1 : 0) << '\n';
  }
  out.precision(old);
}

}  // namespace circadian
