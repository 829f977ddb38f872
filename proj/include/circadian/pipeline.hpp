#pragma once

// Daily phase estimation over a wearable record: the assimilation loop and the
// model-only and HR-only baselines.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "circadian/core_model.hpp"
#include "circadian/hr_mcmc.hpp"
#include "circadian/lskf.hpp"
#include "circadian/metrics.hpp"
#include "circadian/phase_mapping.hpp"
#include "circadian/records.hpp"
#include "circadian/scenario.hpp"

namespace circadian {

inline constexpr int kSchemaVersion = 1;

enum class Estimator { kFilter, kModelOnly, kHROnly };

std::string to_string(Estimator e);
/// "filter", "model-only" or "hr-only"; throws ConfigError otherwise.
Estimator parse_estimator(const std::string& name);

struct RunConfig {
  Eigen::Vector3d initial_mean{1.0, 0.0, 0.5};
  double initial_cov_scale = 0.1;  // Σ₀ = scale · I
  /// When positive, the initial mean is replaced by the state reached after
  /// this many repetitions of the first day's light, starting from
  /// initial_mean (an entrained start that uses no HR data).
  int spinup_days = 0;
  ProcessNoise noise = ProcessNoise::isotropic(0.1);  // K = 1e-2 I
  ClockParams clock;               // includes phi_ref
  McmcConfig mcmc;
  std::size_t mc_samples = 10000;
  TimeUpdateOptions solver;
  double gate_sigmas = 6.0;
  std::uint64_t seed = 1;
  Estimator estimator = Estimator::kFilter;
  bool keep_samples = false;       // retain posterior samples in DailyResult

  /// Throws ConfigError on invalid settings.
  void validate() const;
};

/// HR-phase measurement for one calendar day, or why there is none.
struct DayMeasurement {
  int day_index = 0;
  std::optional<HRPhaseEstimate> estimate;
  std::string skip_reason;

  bool usable() const { return estimate.has_value() && !estimate->low_quality; }
};

struct DailyResult {
  int day_index = 0;
  double predicted_time = 0.0;            // absolute hours of the predicted minimum
  bool ambiguous_minimum = false;
  std::optional<PhasePosterior> prior;    // before the measurement update
  std::optional<PhasePosterior> posterior;
  std::optional<HRPhaseEstimate> measurement;
  std::string skip_reason;                // why no update happened, if any
  bool measurement_accepted = false;
  double predicted_measurement = 0.0;
  double innovation = 0.0;
  double innovation_sd = 0.0;
};

struct RunResult {
  RunConfig config;
  std::vector<DailyResult> days;
};

/// Number of calendar days covered by a minute grid starting at midnight.
int day_count(const std::vector<WearableRecord>& records);

/// Minutes of day `day` that carry HR, as an MCMC window.
HRWindow day_window(const std::vector<WearableRecord>& records, int day);

/// Runs the HR-phase extractor on every day. Days with fewer than 60 HR
/// samples get a skip reason instead of an estimate. Per-day sampler seeds are
/// derived from mcmc.seed.
std::vector<DayMeasurement> extract_daily_hr_phases(const std::vector<WearableRecord>& records,
                                                    const McmcConfig& mcmc);

/// Runs the configured estimator. `measurements` may be supplied to reuse
/// HR extractions across runs on the same record; it must then hold one entry
/// per day. Throws ConfigError when the record spans fewer than two days or
/// contains no movement.
RunResult run(const std::vector<WearableRecord>& records, const RunConfig& cfg,
              const std::vector<DayMeasurement>* measurements = nullptr);

RunResult run_filter(const std::vector<WearableRecord>& records, RunConfig cfg,
                     const std::vector<DayMeasurement>* measurements = nullptr);
RunResult run_model_only(const std::vector<WearableRecord>& records, RunConfig cfg);
RunResult run_hr_only(const std::vector<WearableRecord>& records, RunConfig cfg,
                      const std::vector<DayMeasurement>* measurements = nullptr);

/// Evaluates the days with a posterior against a constant true phase.
EvaluationReport evaluate_run(const RunResult& result, double true_phase, int scenario = 0,
                              double sigma = 0.0);

enum class SweepAxis { kIsotropic, kSigmaP, kSigmaL };

struct SweepConfig {
  SweepAxis axis = SweepAxis::kIsotropic;
  std::vector<double> sigmas;
  int replicates = 1;
  /// The noise component not being swept, for kSigmaP / kSigmaL.
  double fixed_sigma = 0.0;
  /// Worker threads across replicates; 0 means one per hardware thread.
  int threads = 0;
};

struct SweepResult {
  std::vector<EvaluationReport> reports;
  std::vector<SweepRow> rows;
};

/// Generates one dataset per replicate (derived seeds), runs the filter at
/// every grid point and aggregates RMSE / NCR. HR extractions are shared across
/// grid points of a replicate. Replicates run in parallel; the result does not
/// depend on the thread count.
SweepResult sweep(const ScenarioConfig& scenario, const RunConfig& cfg, const SweepConfig& sweep);

/// Seed for replicate `rep` derived from `base`.
std::uint64_t replicate_seed(std::uint64_t base, int rep);

nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const RunResult& result,
                       const std::optional<EvaluationReport>& evaluation = std::nullopt);

/// Flat per-day summary for plotting.
void write_daily_csv(std::ostream& out, const RunResult& result);

}  // namespace circadian
