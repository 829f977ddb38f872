// Command-line front end: simulate, extract, filter, evaluate, sweep, pipeline.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "circadian/errors.hpp"
#include "circadian/metrics.hpp"
#include "circadian/pipeline.hpp"
#include "circadian/records.hpp"
#include "circadian/scenario.hpp"

namespace {

using namespace circadian;
using nlohmann::json;

constexpr const char* kSeedEnv = "CIRCADIAN_SEED";

struct RunFlags {
  std::string estimator = "filter";
  std::optional<double> sigma_k;
  double sigma_p = 0.1;
  double sigma_l = 0.1;
  double phi_ref = -1.0;
  std::vector<double> init{1.0, 0.0, 0.5};
  double init_cov = 0.1;
  int spinup_days = 0;
  int walkers = 32;
  int sweeps = 2000;
  double burn_in = 0.5;
  std::size_t mc_samples = 10000;
  double rtol = 1e-6;
  double atol = 1e-8;
  double gate = 6.0;
  bool keep_samples = false;
};

struct ScenarioFlags {
  int id = 1;
  int days = 20;
  bool hr_noise_marginal = false;
};

std::uint64_t g_seed = 1;

void add_seed(CLI::App* app) {
  app->add_option("--seed", g_seed, "Master random seed (overridden by $CIRCADIAN_SEED)");
}

void add_run_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--estimator", f.estimator, "filter, model-only or hr-only")
      ->check(CLI::IsMember({"filter", "model-only", "hr-only"}));
  app->add_option("--sigma-k", f.sigma_k, "Isotropic process noise; sets sigma-p and sigma-l");
  app->add_option("--sigma-p", f.sigma_p, "Process noise on (x, x_c)");
  app->add_option("--sigma-l", f.sigma_l, "Process noise on n");
  app->add_option("--phi-ref", f.phi_ref, "HR phase minus clock phase, hours");
  app->add_option("--init", f.init, "Initial mean x,x_c,n")->delimiter(',')->expected(3);
  app->add_option("--init-cov", f.init_cov, "Initial covariance scale (Sigma0 = s*I)");
  app->add_option("--spinup-days", f.spinup_days, "Entrain the initial mean on day-0 light first");
  app->add_option("--walkers", f.walkers, "MCMC walkers");
  app->add_option("--sweeps", f.sweeps, "MCMC sweeps");
  app->add_option("--burn-in", f.burn_in, "MCMC burn-in fraction");
  app->add_option("--mc-samples", f.mc_samples, "Monte Carlo samples per posterior");
  app->add_option("--rtol", f.rtol, "ODE relative tolerance");
  app->add_option("--atol", f.atol, "ODE absolute tolerance");
  app->add_option("--gate", f.gate, "Innovation gate in standard deviations (<= 0 disables)");
  app->add_flag("--keep-samples", f.keep_samples, "Emit posterior samples in the result JSON");
}

void add_scenario_flags(CLI::App* app, ScenarioFlags& f) {
  app->add_option("--scenario", f.id, "Scenario 1, 2 or 3")->check(CLI::Range(1, 3));
  app->add_option("--days", f.days, "Number of days")->check(CLI::PositiveNumber);
  app->add_flag("--hr-noise-marginal", f.hr_noise_marginal,
                "Treat the HR noise SD as the stationary SD of the AR(1) noise");
}

McmcConfig mcmc_config(const RunFlags& f) {
  McmcConfig m;
  m.walkers = f.walkers;
  m.sweeps = f.sweeps;
  m.burn_in_fraction = f.burn_in;
  m.seed = g_seed;
  return m;
}

RunConfig run_config(const RunFlags& f) {
  RunConfig c;
  c.estimator = parse_estimator(f.estimator);
  c.noise = f.sigma_k ? ProcessNoise::isotropic(*f.sigma_k) : ProcessNoise{f.sigma_p, f.sigma_l};
  c.clock.phi_ref = f.phi_ref;
  c.initial_mean = Eigen::Vector3d(f.init[0], f.init[1], f.init[2]);
  c.initial_cov_scale = f.init_cov;
  c.spinup_days = f.spinup_days;
  c.mcmc = mcmc_config(f);
  c.mc_samples = f.mc_samples;
  c.solver.rtol = f.rtol;
  c.solver.atol = f.atol;
  c.gate_sigmas = f.gate;
  c.seed = g_seed;
  c.keep_samples = f.keep_samples;
  c.validate();
  return c;
}

ScenarioConfig scenario_config(const ScenarioFlags& f) {
  ScenarioConfig c = ScenarioConfig::scenario(f.id, f.days, g_seed);
  c.hr_noise_marginal = f.hr_noise_marginal;
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<WearableRecord> load_records(const std::string& path) {
  IngestResult in = ingest_csv_file(path);
  std::cerr << "ingested " << in.gaps.minutes << " minutes, " << in.gaps.missing_hr
            << " without HR in " << in.gaps.hr_gaps.size() << " gaps, " << in.gaps.missing_steps
            << " without steps\n";
  return std::move(in.records);
}

json measurement_json(const std::vector<DayMeasurement>& meas) {
  json days = json::array();
  for (const auto& m : meas) {
    json j{{"day_index", m.day_index}};
    if (m.estimate) {
      const auto& e = *m.estimate;
      j["phase_mean_h"] = e.phase_mean;
      j["phase_var_h2"] = e.phase_var;
      j["acceptance"] = e.acceptance;
      j["ess"] = e.ess;
      j["chain_length"] = e.chain_length;
      j["low_quality"] = e.low_quality;
      j["flag"] = e.flag;
    } else {
      j["skip_reason"] = m.skip_reason;
    }
    days.push_back(std::move(j));
  }
  return json{{"schema_version", kSchemaVersion}, {"days", days}};
}

// Posterior summaries of a result document, for `evaluate`.
std::vector<PhasePosterior> posteriors_from_json(const json& doc) {
  if (!doc.contains("days")) throw ValidationError("result JSON has no 'days'");
  std::vector<PhasePosterior> out;
  for (const auto& d : doc.at("days")) {
    if (!d.contains("posterior") || d.at("posterior").is_null()) continue;
    const auto& p = d.at("posterior");
    PhasePosterior post;
    post.day_index = d.at("day_index").get<int>();
    post.mean = p.at("mean_h").get<double>();
    post.sd = p.at("sd_h").get<double>();
    post.interval.lower = p.at("ci95").at(0).get<double>();
    post.interval.upper = p.at("ci95").at(1).get<double>();
    out.push_back(std::move(post));
  }
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + item + "' as a number");
    }
  }
  return v;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Circadian phase estimation from wearable heart rate and steps"};
  app.set_config("--config", "", "TOML/INI file with option values (flags take precedence)");
  app.require_subcommand(1);

  // simulate
  ScenarioFlags sim_flags;
  std::string sim_out, sim_truth, sim_date;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scenario record");
  add_scenario_flags(sim, sim_flags);
  add_seed(sim);
  sim->add_option("--out,-o", sim_out, "Output CSV (default stdout)");
  sim->add_option("--truth", sim_truth, "Also write per-day truth as CSV");
  sim->add_option("--start-date", sim_date, "Write ISO timestamps starting at YYYY-MM-DD");

  // extract
  RunFlags ext_flags;
  std::string ext_in, ext_out;
  auto* ext = app.add_subcommand("extract", "Per-day HR phase extraction");
  ext->add_option("--in,-i", ext_in, "Input CSV")->required();
  ext->add_option("--out,-o", ext_out, "Output JSON (default stdout)");
  ext->add_option("--walkers", ext_flags.walkers, "MCMC walkers");
  ext->add_option("--sweeps", ext_flags.sweeps, "MCMC sweeps");
  ext->add_option("--burn-in", ext_flags.burn_in, "MCMC burn-in fraction");
  add_seed(ext);

  // filter
  RunFlags flt_flags;
  std::string flt_in, flt_out, flt_csv;
  std::optional<double> flt_truth;
  auto* flt = app.add_subcommand("filter", "Estimate daily clock phase from a record");
  flt->add_option("--in,-i", flt_in, "Input CSV")->required();
  flt->add_option("--out,-o", flt_out, "Result JSON (default stdout)");
  flt->add_option("--csv", flt_csv, "Per-day summary CSV");
  flt->add_option("--truth-phase", flt_truth, "Evaluate against a constant true phase, hours");
  add_run_flags(flt, flt_flags);
  add_seed(flt);

  // evaluate
  std::string ev_in, ev_out;
  double ev_truth = 4.0;
  auto* ev = app.add_subcommand("evaluate", "RMSE and NCR of a result JSON");
  ev->add_option("--result,-r", ev_in, "Result JSON from filter or pipeline")->required();
  ev->add_option("--truth-phase", ev_truth, "Constant true phase, hours");
  ev->add_option("--out,-o", ev_out, "Evaluation JSON (default stdout)");

  // sweep
  ScenarioFlags sw_scn;
  RunFlags sw_flags;
  std::string sw_grid = "1e-4,3e-4,1e-3,3e-3,1e-2,3e-2,1e-1";
  std::string sw_axis = "isotropic";
  std::string sw_out, sw_json;
  int sw_reps = 1;
  double sw_fixed = 0.0;
  int sw_threads = 0;
  auto* sw = app.add_subcommand("sweep", "RMSE/NCR over a process-noise grid");
  add_scenario_flags(sw, sw_scn);
  add_run_flags(sw, sw_flags);
  add_seed(sw);
  sw->add_option("--grid", sw_grid, "Comma-separated noise magnitudes");
  sw->add_option("--axis", sw_axis, "isotropic, sigma-p or sigma-l")
      ->check(CLI::IsMember({"isotropic", "sigma-p", "sigma-l"}));
  sw->add_option("--fixed", sw_fixed, "Value of the noise component not swept");
  sw->add_option("--replicates", sw_reps, "Datasets per grid point")->check(CLI::PositiveNumber);
  sw->add_option("--threads", sw_threads, "Worker threads (0 = one per core)")->check(CLI::NonNegativeNumber);
  sw->add_option("--out,-o", sw_out, "Sweep CSV (default stdout)");
  sw->add_option("--json", sw_json, "Also write per-report JSON");

  // pipeline
  ScenarioFlags pl_scn;
  RunFlags pl_flags;
  std::string pl_out, pl_csv, pl_data;
  auto* pl = app.add_subcommand("pipeline", "simulate, filter and evaluate in one step");
  add_scenario_flags(pl, pl_scn);
  add_run_flags(pl, pl_flags);
  add_seed(pl);
  pl->add_option("--out,-o", pl_out, "Result JSON (default stdout)");
  pl->add_option("--csv", pl_csv, "Per-day summary CSV");
  pl->add_option("--data", pl_data, "Also write the simulated record as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::kConfig);
  }

  if (const char* env = std::getenv(kSeedEnv)) {
    try {
      g_seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string(kSeedEnv) + " must be a non-negative integer");
    }
  }

  if (*sim) {
    const ScenarioConfig cfg = scenario_config(sim_flags);
    const SyntheticDataset ds = gen_dataset(cfg);
    std::ostringstream csv;
    write_csv(csv, ds.records, sim_date.empty() ? std::nullopt : std::optional<std::string>(sim_date));
    write_text(sim_out, csv.str());
    if (!sim_truth.empty()) {
      std::ostringstream t;
      t << "day_index,true_phase_h,sleep_offset_h,sleep_onset_h\n";
      for (std::size_t i = 0; i < ds.truth.size(); ++i) {
        t << i << ',' << ds.truth[i].phase << ',' << ds.truth[i].sleep.offset << ','
          << ds.truth[i].sleep.onset << '\n';
      }
      write_text(sim_truth, t.str());
    }
  } else if (*ext) {
    const auto records = load_records(ext_in);
    const auto meas = extract_daily_hr_phases(records, mcmc_config(ext_flags));
    write_text(ext_out, dump(measurement_json(meas)));
  } else if (*flt) {
    const RunConfig cfg = run_config(flt_flags);
    const auto records = load_records(flt_in);
    const RunResult result = run(records, cfg);
    std::optional<EvaluationReport> report;
    if (flt_truth) report = evaluate_run(result, *flt_truth);
    write_text(flt_out, dump(to_json(result, report)));
    if (!flt_csv.empty()) {
      std::ostringstream csv;
      write_daily_csv(csv, result);
      write_text(flt_csv, csv.str());
    }
  } else if (*ev) {
    std::ifstream in(ev_in);
    if (!in) throw ValidationError("cannot open '" + ev_in + "'");
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed result JSON: ") + e.what());
    }
    const auto posts = posteriors_from_json(doc);
    const std::vector<double> truth(posts.size(), ev_truth);
    const EvaluationReport report = evaluate(posts, truth);
    write_text(ev_out, dump(json(report)));
  } else if (*sw) {
    const ScenarioConfig scn = scenario_config(sw_scn);
    const RunConfig cfg = run_config(sw_flags);
    SweepConfig grid;
    grid.sigmas = parse_list(sw_grid);
    grid.replicates = sw_reps;
    grid.fixed_sigma = sw_fixed;
    grid.threads = sw_threads;
    grid.axis = sw_axis == "sigma-p"   ? SweepAxis::kSigmaP
                : sw_axis == "sigma-l" ? SweepAxis::kSigmaL
                                       : SweepAxis::kIsotropic;
    const SweepResult res = sweep(scn, cfg, grid);
    std::ostringstream csv;
    write_sweep_csv(csv, res.rows);
    write_text(sw_out, csv.str());
    if (!sw_json.empty()) {
      write_text(sw_json, dump(json{{"schema_version", kSchemaVersion},
                                    {"axis", sw_axis},
                                    {"reports", res.reports},
                                    {"rows", res.rows}}));
    }
  } else if (*pl) {
    const ScenarioConfig scn = scenario_config(pl_scn);
    const RunConfig cfg = run_config(pl_flags);
    const SyntheticDataset ds = gen_dataset(scn);
    if (!pl_data.empty()) write_csv_file(pl_data, ds.records);
    const RunResult result = run(ds.records, cfg);
    const EvaluationReport report = evaluate_run(result, scn.true_phase, scn.id,
                                                 cfg.noise.sigma_p);
    json doc = to_json(result, report);
    doc["scenario"] = {{"id", scn.id}, {"days", scn.days}, {"seed", scn.seed},
                       {"hr_noise_marginal", scn.hr_noise_marginal}};
    write_text(pl_out, dump(doc));
    if (!pl_csv.empty()) {
      std::ostringstream csv;
      write_daily_csv(csv, result);
      write_text(pl_csv, csv.str());
    }
  }
  return static_cast<int>(ExitCode::kSuccess);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const circadian::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(circadian::ExitCode::kNumerical);
  }
}
