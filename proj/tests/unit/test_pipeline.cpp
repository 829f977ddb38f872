#include <doctest.h>

#include <cmath>
#include <sstream>

#include "circadian/circular.hpp"
#include "circadian/errors.hpp"
#include "circadian/pipeline.hpp"
#include "oracles.hpp"

using namespace circadian;

namespace {

std::vector<WearableRecord> scenario_records(int days, std::uint64_t seed = 1) {
  return gen_dataset(ScenarioConfig::scenario(1, days, seed)).records;
}

// A measurement as the sampler would report it, built from Gaussian draws.
HRPhaseEstimate fake_estimate(int day, double mean, double sd, std::uint64_t seed) {
  oracle::Gen g(seed);
  HRPhaseEstimate e;
  e.day_index = day;
  e.phase_mean = mean;
  e.phase_var = sd * sd;
  e.acceptance = 0.4;
  e.ess = 1000;
  e.chain_length = 2000;
  for (int i = 0; i < 4000; ++i) e.phase_samples.push_back(wrap_hours(g.normal(mean, sd)));
  return e;
}

std::vector<DayMeasurement> measurements(int days, double mean, double sd) {
  std::vector<DayMeasurement> out;
  for (int d = 0; d < days; ++d) {
    DayMeasurement m;
    m.day_index = d;
    m.estimate = fake_estimate(d, mean, sd, 100 + d);
    out.push_back(m);
  }
  return out;
}

std::vector<DayMeasurement> skipped(int days) {
  std::vector<DayMeasurement> out(static_cast<std::size_t>(days));
  for (int d = 0; d < days; ++d) {
    out[static_cast<std::size_t>(d)].day_index = d;
    out[static_cast<std::size_t>(d)].skip_reason = "no data";
  }
  return out;
}

RunConfig quick_config() {
  RunConfig cfg;
  cfg.mc_samples = 2000;
  cfg.mcmc.walkers = 16;
  cfg.mcmc.sweeps = 400;
  return cfg;
}

}  // namespace

TEST_CASE("estimator names") {
  for (auto e : {Estimator::kFilter, Estimator::kModelOnly, Estimator::kHROnly}) {
    CHECK(parse_estimator(to_string(e)) == e);
  }
  CHECK_THROWS_AS(parse_estimator("ukf"), ConfigError);
}

TEST_CASE("config validation") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  RunConfig bad = cfg;
  bad.mc_samples = 999;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.noise.sigma_p = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.initial_cov_scale = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.spinup_days = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.solver.rtol = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.initial_mean[0] = NAN;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("records shorter than two days are refused") {
  const auto one_day = scenario_records(1);
  CHECK(day_count(one_day) == 1);
  CHECK_THROWS_AS(run(one_day, quick_config()), ConfigError);
  CHECK_THROWS_AS(run_model_only({}, quick_config()), ConfigError);
  RunConfig hr = quick_config();
  hr.estimator = Estimator::kHROnly;
  CHECK_THROWS_AS(run(one_day, hr), ConfigError);
}

TEST_CASE("day bookkeeping") {
  auto recs = scenario_records(3);
  CHECK(day_count(recs) == 3);
  recs.resize(2 * 1440 + 1);
  CHECK(day_count(recs) == 3);
  recs.resize(2 * 1440);
  CHECK(day_count(recs) == 2);

  for (int m = 1440; m < 1440 + 1000; ++m) recs[static_cast<std::size_t>(m)].hr.reset();
  recs[1500].steps.reset();
  const auto w = day_window(recs, 1);
  CHECK(w.size() == 440);
  const auto w0 = day_window(recs, 0);
  CHECK(w0.size() == 1440);
}

TEST_CASE("days without enough HR get a skip reason") {
  auto recs = scenario_records(2);
  for (int m = 1440; m < 2880 - 59; ++m) recs[static_cast<std::size_t>(m)].hr.reset();
  McmcConfig mc;
  mc.walkers = 16;
  mc.sweeps = 300;
  const auto meas = extract_daily_hr_phases(recs, mc);
  REQUIRE(meas.size() == 2);
  CHECK(meas[0].usable());
  CHECK_FALSE(meas[1].estimate);
  CHECK(meas[1].skip_reason.find("60") != std::string::npos);
}

TEST_CASE("supplied measurements must cover every day") {
  const auto recs = scenario_records(3);
  const auto meas = skipped(2);
  CHECK_THROWS_AS(run_filter(recs, quick_config(), &meas), ConfigError);
}

TEST_CASE("without usable measurements the filter is the model-only baseline") {
  const auto recs = scenario_records(4);
  RunConfig cfg = quick_config();
  cfg.spinup_days = 30;
  const auto meas = skipped(4);
  const auto filt = run_filter(recs, cfg, &meas);
  const auto model = run_model_only(recs, cfg);
  REQUIRE(filt.days.size() == 4);
  REQUIRE(model.days.size() == 4);
  for (std::size_t d = 0; d < 4; ++d) {
    REQUIRE(filt.days[d].prior);
    CHECK(filt.days[d].prior->mean == model.days[d].prior->mean);
    CHECK(filt.days[d].prior->sd == model.days[d].prior->sd);
    CHECK(filt.days[d].predicted_time == model.days[d].predicted_time);
    CHECK_FALSE(filt.days[d].posterior);
    CHECK(filt.days[d].skip_reason == "no data");
    // model-only publishes its prior as the posterior
    REQUIRE(model.days[d].posterior);
    CHECK(model.days[d].posterior->mean == model.days[d].prior->mean);
  }
  // the predicted minimum advances by about a day each day
  for (std::size_t d = 1; d < 4; ++d) {
    CHECK(std::abs(model.days[d].predicted_time - model.days[d - 1].predicted_time - 24.0) < 1.0);
  }
}

TEST_CASE("a posterior is published exactly for accepted updates") {
  const auto recs = scenario_records(5);
  RunConfig cfg = quick_config();
  cfg.spinup_days = 30;
  auto meas = measurements(5, 3.0, 0.5);
  meas[2].estimate.reset();
  meas[2].skip_reason = "fewer than 60 HR samples";
  meas[3].estimate->low_quality = true;
  meas[3].estimate->flag = "ess";
  const auto r = run_filter(recs, cfg, &meas);
  for (const auto& d : r.days) {
    CHECK(d.posterior.has_value() == d.measurement_accepted);
    CHECK(d.prior.has_value());
  }
  CHECK(r.days[0].measurement_accepted);
  CHECK_FALSE(r.days[2].measurement_accepted);
  CHECK(r.days[2].skip_reason.find("60") != std::string::npos);
  CHECK(r.days[3].skip_reason.find("low-quality") != std::string::npos);
  CHECK(r.days[4].measurement_accepted);
  // the missing day is spanned by the model; day 4 still lands near the truth
  CHECK(std::abs(wrap_diff(r.days[4].posterior->mean, 4.0)) < 0.5);

  const auto report = evaluate_run(r, 4.0);
  CHECK(report.n_days == 3);
}

TEST_CASE("the update moves the estimate toward the measurement") {
  const auto recs = scenario_records(3);
  RunConfig cfg = quick_config();
  cfg.spinup_days = 30;
  const auto meas = measurements(3, 4.0, 0.3);  // one hour later than the entrained phase
  const auto r = run_filter(recs, cfg, &meas);
  for (const auto& d : r.days) {
    REQUIRE(d.posterior);
    const double prior_err = std::abs(wrap_diff(d.prior->mean + cfg.clock.phi_ref, 4.0));
    const double post_err = std::abs(wrap_diff(d.posterior->mean + cfg.clock.phi_ref, 4.0));
    CHECK(post_err < prior_err);
    CHECK(d.posterior->sd < d.prior->sd);
    CHECK(std::abs(d.innovation) <= 6.0 * d.innovation_sd);
  }
}

TEST_CASE("hr-only passes the extracted phase through") {
  const auto recs = scenario_records(3);
  RunConfig cfg = quick_config();
  cfg.estimator = Estimator::kHROnly;
  auto meas = measurements(3, 0.5, 0.4);
  meas[1].estimate->low_quality = true;
  meas[1].estimate->flag = "acceptance";
  const auto r = run(recs, cfg, &meas);
  REQUIRE(r.days.size() == 3);
  for (std::size_t d : {0u, 2u}) {
    REQUIRE(r.days[d].posterior);
    CHECK(r.days[d].posterior->mean == doctest::Approx(wrap_hours(0.5 - cfg.clock.phi_ref)));
    CHECK(r.days[d].posterior->sd * r.days[d].posterior->sd == doctest::Approx(0.16));
    CHECK(r.days[d].posterior->interval.contains(1.5));
    CHECK_FALSE(r.days[d].prior);
  }
  CHECK_FALSE(r.days[1].posterior);
  CHECK(r.days[1].skip_reason.find("acceptance") != std::string::npos);
}

TEST_CASE("initial-condition robustness") {
  const auto recs = scenario_records(10);
  const auto meas = measurements(10, 3.0, 0.5);
  RunConfig a = quick_config();
  RunConfig b = quick_config();
  b.initial_mean = {-0.8, 0.6, 0.2};
  const auto ra = run_filter(recs, a, &meas);
  const auto rb = run_filter(recs, b, &meas);
  for (std::size_t d = 7; d < 10; ++d) {
    REQUIRE(ra.days[d].posterior);
    REQUIRE(rb.days[d].posterior);
    CHECK(std::abs(wrap_diff(ra.days[d].posterior->mean, rb.days[d].posterior->mean)) < 0.3);
  }
}

TEST_CASE("runs are deterministic and serialise identically") {
  const auto recs = scenario_records(2, 4);
  const RunConfig cfg = quick_config();
  const auto a = run(recs, cfg);
  const auto b = run(recs, cfg);
  CHECK(to_json(a).dump() == to_json(b).dump());

  const auto j = to_json(a);
  CHECK(j.at("schema_version") == kSchemaVersion);
  CHECK(j.at("days").size() == 2);
  CHECK(j.at("config").at("estimator") == "filter");
  CHECK(j.at("days")[0].contains("measurement"));

  std::ostringstream csv;
  write_daily_csv(csv, a);
  const std::string s = csv.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);
  CHECK(s.rfind("day_index,prior_mean_h", 0) == 0);
}

TEST_CASE("a one-point sweep yields one report") {
  ScenarioConfig sc = ScenarioConfig::scenario(1, 2, 3);
  RunConfig cfg = quick_config();
  SweepConfig sw;
  sw.sigmas = {1e-2};
  const auto res = sweep(sc, cfg, sw);
  REQUIRE(res.reports.size() == 1);
  REQUIRE(res.rows.size() == 1);
  CHECK(res.rows[0].replicates == 1);
  CHECK(res.rows[0].rmse_sem == 0.0);
  CHECK(res.rows[0].rmse_mean == res.reports[0].rmse);

  sw.sigmas.clear();
  CHECK_THROWS_AS(sweep(sc, cfg, sw), ConfigError);
  sw.sigmas = {1e-2};
  sw.replicates = 0;
  CHECK_THROWS_AS(sweep(sc, cfg, sw), ConfigError);
  CHECK(replicate_seed(5, 0) != replicate_seed(5, 1));
}

TEST_CASE("sweep results do not depend on the thread count") {
  ScenarioConfig sc = ScenarioConfig::scenario(1, 2, 5);
  RunConfig cfg = quick_config();
  SweepConfig sw;
  sw.sigmas = {1e-3, 1e-2};
  sw.replicates = 3;
  sw.threads = 1;
  const auto serial = sweep(sc, cfg, sw);
  sw.threads = 3;
  const auto parallel = sweep(sc, cfg, sw);
  REQUIRE(serial.reports.size() == 6);
  REQUIRE(parallel.reports.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(serial.reports[i].rmse == parallel.reports[i].rmse);
    CHECK(serial.reports[i].seed == parallel.reports[i].seed);
    CHECK(serial.reports[i].sigma == parallel.reports[i].sigma);
  }
  CHECK(serial.reports[0].seed != serial.reports[2].seed);
}
