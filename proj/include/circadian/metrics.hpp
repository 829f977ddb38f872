#pragma once

// Phase-estimate quality: circular RMSE, non-coverage rate and sweep tables.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "circadian/phase_mapping.hpp"

namespace circadian {

struct EvaluationReport {
  std::vector<int> day_index;
  std::vector<double> abs_error;   // |wrap_diff(mean, truth)|, hours
  std::vector<double> posterior_sd;
  double rmse = 0.0;
  double ncr = 0.0;
  std::size_t n_days = 0;
  int scenario = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// √(mean wrap_diff(mean_i, truth_i)²). Throws ValidationError on empty input
/// or a length mismatch.
double rmse(std::span<const PhasePosterior> estimates, std::span<const double> truth);

/// Fraction of days whose truth lies outside the 95% interval.
double ncr(std::span<const PhasePosterior> estimates, std::span<const double> truth);

EvaluationReport evaluate(std::span<const PhasePosterior> estimates, std::span<const double> truth,
                          int scenario = 0, double sigma = 0.0, std::uint64_t seed = 0);

struct SweepRow {
  double sigma = 0.0;
  std::size_t replicates = 0;
  double rmse_mean = 0.0;
  double rmse_sem = 0.0;
  double ncr_mean = 0.0;
  double ncr_sem = 0.0;
};

/// Groups reports by `sigma` (ascending) and returns mean and standard error
/// of RMSE and NCR per group. The SEM of a single report is 0.
std::vector<SweepRow> sweep_aggregate(std::span<const EvaluationReport> reports);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

void to_json(nlohmann::json& j, const EvaluationReport& r);
void to_json(nlohmann::json& j, const SweepRow& r);

}  // namespace circadian
