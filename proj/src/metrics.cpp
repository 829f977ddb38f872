#include "circadian/metrics.hpp"

#include <cmath>
#include <map>
#include <ostream>

#include "circadian/circular.hpp"
#include "circadian/errors.hpp"

namespace circadian {

namespace {

void check_lengths(std::span<const PhasePosterior> estimates, std::span<const double> truth) {
  if (estimates.size() != truth.size()) {
    throw ValidationError("estimate and truth lists differ in length (" +
                          std::to_string(estimates.size()) + " vs " +
                          std::to_string(truth.size()) + ")");
  }
  if (estimates.empty()) throw ValidationError("no days to evaluate");
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sem_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

}  // namespace

double rmse(std::span<const PhasePosterior> estimates, std::span<const double> truth) {
  check_lengths(estimates, truth);
  double ss = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double e = wrap_diff(estimates[i].mean, truth[i]);
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(estimates.size()));
}

double ncr(std::span<const PhasePosterior> estimates, std::span<const double> truth) {
  check_lengths(estimates, truth);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (estimates[i].interval.contains(wrap_hours(truth[i]))) ++covered;
  }
  return 1.0 - static_cast<double>(covered) / static_cast<double>(estimates.size());
}

EvaluationReport evaluate(std::span<const PhasePosterior> estimates, std::span<const double> truth,
                          int scenario, double sigma, std::uint64_t seed) {
  EvaluationReport r;
  r.rmse = rmse(estimates, truth);
  r.ncr = ncr(estimates, truth);
  r.n_days = estimates.size();
  r.scenario = scenario;
  r.sigma = sigma;
  r.seed = seed;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    r.day_index.push_back(estimates[i].day_index);
    r.abs_error.push_back(std::abs(wrap_diff(estimates[i].mean, truth[i])));
    r.posterior_sd.push_back(estimates[i].sd);
  }
  return r;
}

std::vector<SweepRow> sweep_aggregate(std::span<const EvaluationReport> reports) {
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : reports) {
    auto& g = groups[r.sigma];
    g.first.push_back(r.rmse);
    g.second.push_back(r.ncr);
  }
  std::vector<SweepRow> rows;
  for (const auto& [sigma, g] : groups) {
    SweepRow row;
    row.sigma = sigma;
    row.replicates = g.first.size();
    row.rmse_mean = mean_of(g.first);
    row.rmse_sem = sem_of(g.first, row.rmse_mean);
    row.ncr_mean = mean_of(g.second);
    row.ncr_sem = sem_of(g.second, row.ncr_mean);
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "sigma,replicates,rmse_mean,rmse_sem,ncr_mean,ncr_sem\n";
  const auto old = out.precision(10);
  for (const auto& r : rows) {
    out << r.sigma << ',' << r.replicates << ',' << r.rmse_mean << ',' << r.rmse_sem << ','
        << r.ncr_mean << ',' << r.ncr_sem << '\n';
  }
  out.precision(old);
}

void to_json(nlohmann::json& j, const EvaluationReport& r) {
  j = nlohmann::json{{"rmse_h", r.rmse},
                     {"ncr", r.ncr},
                     {"n_days", r.n_days},
                     {"scenario", r.scenario},
                     {"sigma", r.sigma},
                     {"seed", r.seed},
                     {"day_index", r.day_index},
                     {"abs_error_h", r.abs_error},
                     {"posterior_sd_h", r.posterior_sd}};
}

void to_json(nlohmann::json& j, const SweepRow& r) {
  j = nlohmann::json{{"sigma", r.sigma},         {"replicates", r.replicates},
                     {"rmse_mean", r.rmse_mean}, {"rmse_sem", r.rmse_sem},
                     {"ncr_mean", r.ncr_mean},   {"ncr_sem", r.ncr_sem}};
}

}  // namespace circadian
