// Python bindings for the core operations. Results that have a JSON form in
// the CLI are returned as JSON text; the Python package parses them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "circadian/core_model.hpp"
#include "circadian/errors.hpp"
#include "circadian/metrics.hpp"
#include "circadian/pipeline.hpp"
#include "circadian/records.hpp"
#include "circadian/scenario.hpp"

namespace py = pybind11;
using namespace circadian;

namespace {

// Columns in, records out; NaN marks a missing cell.
std::vector<WearableRecord> to_records(const std::vector<std::int64_t>& minute, const std::vector<double>& hr,
                                       const std::vector<double>& steps) {
  if (hr.size() != minute.size() || steps.size() != minute.size()) {
    throw ValidationError("minute, hr and steps must have the same length");
  }
  std::vector<WearableRecord> out(minute.size());
  for (std::size_t i = 0; i < minute.size(); ++i) {
    out[i].minute = minute[i];
    if (!std::isnan(hr[i])) out[i].hr = hr[i];
    if (!std::isnan(steps[i])) out[i].steps = steps[i];
  }
  return out;
}

py::dict from_records(const std::vector<WearableRecord>& recs) {
  std::vector<std::int64_t> minute;
  std::vector<double> hr, steps;
  for (const auto& r : recs) {
    minute.push_back(r.minute);
    hr.push_back(r.hr.value_or(NAN));
    steps.push_back(r.steps.value_or(NAN));
  }
  py::dict d;
  d["minute"] = minute;
  d["hr"] = hr;
  d["steps"] = steps;
  return d;
}

struct RunOptions {
  std::string estimator = "filter";
  std::optional<double> sigma_k;
  double sigma_p = 0.1;
  double sigma_l = 0.1;
  double phi_ref = -1.0;
  int spinup_days = 0;
  std::uint64_t seed = 1;
  int walkers = 32;
  int sweeps = 2000;
  std::size_t mc_samples = 10000;
};

RunConfig make_config(const RunOptions& o) {
  RunConfig cfg;
  cfg.estimator = parse_estimator(o.estimator);
  cfg.noise = o.sigma_k ? ProcessNoise::isotropic(*o.sigma_k) : ProcessNoise{o.sigma_p, o.sigma_l};
  cfg.clock.phi_ref = o.phi_ref;
  cfg.spinup_days = o.spinup_days;
  cfg.seed = o.seed;
  cfg.mcmc.seed = o.seed;
  cfg.mcmc.walkers = o.walkers;
  cfg.mcmc.sweeps = o.sweeps;
  cfg.mc_samples = o.mc_samples;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_circadian, m) {
  m.doc() = "Circadian phase estimation from wearable heart rate and steps";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("read_csv", [](const std::string& path) {
    const IngestResult in = ingest_csv_file(path);
    py::dict d = from_records(in.records);
    d["start_date"] = in.start_date;
    d["missing_hr"] = in.gaps.missing_hr;
    d["hr_gaps"] = in.gaps.hr_gaps.size();
    return d;
  }, py::arg("path"), "Parses a canonical CSV onto the minute grid.");

  m.def("write_csv", [](const std::string& path, const std::vector<std::int64_t>& minute,
                        const std::vector<double>& hr, const std::vector<double>& steps,
                        std::optional<std::string> start_date) {
    write_csv_file(path, to_records(minute, hr, steps), start_date);
  }, py::arg("path"), py::arg("minute"), py::arg("hr"), py::arg("steps"), py::arg("start_date") = py::none());

  m.def("simulate", [](int scenario, int days, std::uint64_t seed, bool hr_noise_marginal) {
    ScenarioConfig sc = ScenarioConfig::scenario(scenario, days, seed);
    sc.hr_noise_marginal = hr_noise_marginal;
    const SyntheticDataset ds = gen_dataset(sc);
    py::dict d = from_records(ds.records);
    std::vector<double> phase;
    for (const auto& t : ds.truth) phase.push_back(t.phase);
    d["true_phase"] = phase;
    return d;
  }, py::arg("scenario") = 1, py::arg("days") = 20, py::arg("seed") = 1, py::arg("hr_noise_marginal") = false);

  m.def("run", [](const std::vector<std::int64_t>& minute, const std::vector<double>& hr,
                  const std::vector<double>& steps, const std::string& estimator, std::optional<double> sigma_k,
                  double sigma_p, double sigma_l, double phi_ref, int spinup_days, std::uint64_t seed, int walkers,
                  int sweeps, std::size_t mc_samples, std::optional<double> true_phase) {
    const auto records = to_records(minute, hr, steps);
    const RunConfig cfg = make_config(
        {estimator, sigma_k, sigma_p, sigma_l, phi_ref, spinup_days, seed, walkers, sweeps, mc_samples});
    RunResult r;
    {
      py::gil_scoped_release release;
      r = run(records, cfg);
    }
    std::optional<EvaluationReport> ev;
    if (true_phase) ev = evaluate_run(r, *true_phase);
    return to_json(r, ev).dump();
  }, py::arg("minute"), py::arg("hr"), py::arg("steps"), py::arg("estimator") = "filter",
     py::arg("sigma_k") = py::none(), py::arg("sigma_p") = 0.1, py::arg("sigma_l") = 0.1, py::arg("phi_ref") = -1.0,
     py::arg("spinup_days") = 0, py::arg("seed") = 1, py::arg("walkers") = 32, py::arg("sweeps") = 2000,
     py::arg("mc_samples") = 10000, py::arg("true_phase") = py::none(),
     "Runs an estimator and returns the result document as JSON text.");

  m.def("extract", [](const std::vector<std::int64_t>& minute, const std::vector<double>& hr,
                      const std::vector<double>& steps, int walkers, int sweeps, std::uint64_t seed) {
    McmcConfig mc;
    mc.walkers = walkers;
    mc.sweeps = sweeps;
    mc.seed = seed;
    std::vector<DayMeasurement> meas;
    {
      const auto records = to_records(minute, hr, steps);
      py::gil_scoped_release release;
      meas = extract_daily_hr_phases(records, mc);
    }
    py::list out;
    for (const auto& d : meas) {
      py::dict day;
      day["day_index"] = d.day_index;
      if (d.estimate) {
        day["phase_mean"] = d.estimate->phase_mean;
        day["phase_var"] = d.estimate->phase_var;
        day["acceptance"] = d.estimate->acceptance;
        day["ess"] = d.estimate->ess;
        day["low_quality"] = d.estimate->low_quality;
      } else {
        day["skip_reason"] = d.skip_reason;
      }
      out.append(day);
    }
    return out;
  }, py::arg("minute"), py::arg("hr"), py::arg("steps"), py::arg("walkers") = 32, py::arg("sweeps") = 2000,
     py::arg("seed") = 1);

  m.def("sweep", [](int scenario, int days, std::uint64_t seed, const std::vector<double>& grid,
                    const std::string& axis, double fixed, int replicates, int spinup_days, int walkers,
                    int sweeps) {
    ScenarioConfig sc = ScenarioConfig::scenario(scenario, days, seed);
    RunOptions o;
    o.seed = seed;
    o.spinup_days = spinup_days;
    o.walkers = walkers;
    o.sweeps = sweeps;
    const RunConfig cfg = make_config(o);
    SweepConfig sw;
    sw.sigmas = grid;
    sw.replicates = replicates;
    sw.fixed_sigma = fixed;
    if (axis == "isotropic") sw.axis = SweepAxis::kIsotropic;
    else if (axis == "sigma-p") sw.axis = SweepAxis::kSigmaP;
    else if (axis == "sigma-l") sw.axis = SweepAxis::kSigmaL;
    else throw ConfigError("axis must be isotropic, sigma-p or sigma-l");
    SweepResult res;
    {
      py::gil_scoped_release release;
      res = sweep(sc, cfg, sw);
    }
    return nlohmann::json(res.rows).dump();
  }, py::arg("scenario"), py::arg("days"), py::arg("seed"), py::arg("grid"), py::arg("axis") = "isotropic",
     py::arg("fixed") = 0.0, py::arg("replicates") = 1, py::arg("spinup_days") = 0, py::arg("walkers") = 32,
     py::arg("sweeps") = 2000);

  m.def("steps_to_light", py::overload_cast<double, double>(&steps_to_light), py::arg("steps"), py::arg("m"));

  m.def("clock_drift", [](double x, double xc, double n, double lux) {
    const Eigen::Vector3d d = clock_drift(ClockState{x, xc, n}, lux, ClockParams{});
    return std::vector<double>{d[0], d[1], d[2]};
  }, py::arg("x"), py::arg("xc"), py::arg("n"), py::arg("lux"));

  m.def("rmse", [](const std::vector<double>& mean, const std::vector<double>& truth) {
    std::vector<PhasePosterior> est(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) est[i].mean = mean[i];
    return rmse(est, truth);
  }, py::arg("mean"), py::arg("truth"));

  m.attr("schema_version") = kSchemaVersion;
}
