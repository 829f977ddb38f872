#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "circadian/core_model.hpp"
#include "circadian/errors.hpp"
#include "circadian/phase_mapping.hpp"
#include "circadian/scenario.hpp"
#include "oracles.hpp"

using namespace circadian;

TEST_CASE("photic_alpha") {
  const ClockParams p;
  CHECK(photic_alpha(0.0, p) == 0.0);
  CHECK(photic_alpha(9500.0, p) == doctest::Approx(0.16).epsilon(1e-14));
  // pow(2000/9500, 0.6) in long double as the reference
  const long double ref = 0.16L * std::pow(2000.0L / 9500.0L, 0.6L);
  CHECK(photic_alpha(2000.0, p) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-14));
  CHECK_THROWS_AS(photic_alpha(-1.0, p), ValidationError);
}

TEST_CASE("photic_drive") {
  const ClockParams p;
  CHECK(photic_drive({0.3, -0.2, 0.1}, 0.0, p) == 0.0);
  CHECK(photic_drive({0.3, -0.2, 1.0}, 5000.0, p) == 0.0);
  CHECK(photic_drive({0.0, 0.0, 0.0}, 9500.0, p) == doctest::Approx(3.18).epsilon(1e-14));
}

TEST_CASE("clock_drift examples") {
  const ClockParams p;
  CHECK(clock_drift(ClockState{0, 0, 0}, 0.0, p).norm() == 0.0);

  const Eigen::Vector3d d = clock_drift(ClockState{0, 0, 0.5}, 0.0, p);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 0.0);
  CHECK(d[2] == doctest::Approx(-0.39).epsilon(1e-14));

  const Eigen::Vector3d e = clock_drift(ClockState{1, 0, 0}, 0.0, p);
  const double ratio = 24.0 / (0.99669 * 24.2);
  CHECK(e[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(e[1] == doctest::Approx(-(oracle::kPi / 12.0) * ratio * ratio).epsilon(1e-13));
  CHECK(e[2] == 0.0);

  CHECK_THROWS_AS(clock_drift(ClockState{NAN, 0, 0}, 0.0, p), NumericalError);
}

TEST_CASE("clock params validation") {
  ClockParams p;
  CHECK_NOTHROW(p.validate());
  p.tau_x = 30.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = ClockParams{};
  p.beta = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("steps_to_light branches") {
  CHECK(steps_to_light(0.0, 50.0) == 0.0);
  CHECK(steps_to_light(10.0, 50.0) == 200.0);
  CHECK(steps_to_light(25.0, 50.0) == 2000.0);
  // half-open breakpoints 0.1m, 0.25m, 0.4m
  CHECK(steps_to_light(4.999, 50.0) == 100.0);
  CHECK(steps_to_light(5.0, 50.0) == 200.0);
  CHECK(steps_to_light(12.5, 50.0) == 500.0);
  CHECK(steps_to_light(19.999, 50.0) == 500.0);
  CHECK(steps_to_light(20.0, 50.0) == 2000.0);
  CHECK_THROWS_AS(steps_to_light(1.0, 0.0), ConfigError);
}

TEST_CASE("steps_to_light is monotone in steps") {
  oracle::Gen g(11);
  for (int i = 0; i < 2000; ++i) {
    const double m = g.uniform(0.5, 100.0);
    const double a = g.uniform(0.0, 2.5 * m);
    const double b = a + g.uniform(0.0, m);
    CAPTURE(m);
    CAPTURE(a);
    CAPTURE(b);
    REQUIRE(steps_to_light(a, m) <= steps_to_light(b, m));
  }
}

TEST_CASE("activity scale is half the record maximum") {
  ActivityTrace a{{0, 1, 2, 3}, {3, 80, 10, 0}};
  CHECK(a.activity_scale() == 40.0);
  const auto lux = steps_to_light(a);
  CHECK(lux == std::vector<double>{100, 2000, 500, 0});
  ActivityTrace bad{{0, 0}, {1, 1}};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("hr_forward noise-free extremes") {
  HRModelParams p;
  p.noise_sd = 0.0;
  ActivityTrace a;
  for (int m = 0; m < 1440; ++m) {
    a.time_min.push_back(m);
    a.steps.push_back(0.0);
  }
  const auto hr = hr_forward(p, a, 1);
  CHECK(hr[180] == doctest::Approx(66.0).epsilon(1e-12));  // t = 3 h
  CHECK(hr[900] == doctest::Approx(74.0).epsilon(1e-12));  // t = 15 h
}

TEST_CASE("hr_forward minimum sits at hr_phase within one sample") {
  oracle::Gen g(5);
  ActivityTrace a;
  for (int m = 0; m < 1440; ++m) {
    a.time_min.push_back(m);
    a.steps.push_back(0.0);
  }
  for (int i = 0; i < 50; ++i) {
    HRModelParams p;
    p.noise_sd = 0.0;
    p.hr_phase = g.uniform(0.0, 24.0);
    p.amplitude = g.uniform(0.5, 10.0);
    const auto hr = hr_forward(p, a, 7);
    const auto it = std::min_element(hr.begin(), hr.end());
    const double t_min = static_cast<double>(it - hr.begin()) / 60.0;
    CAPTURE(p.hr_phase);
    CHECK(std::abs(std::remainder(t_min - p.hr_phase, 24.0)) <= 1.0 / 60.0 + 1e-12);
  }
}

TEST_CASE("hr_forward is deterministic per seed") {
  ActivityTrace a;
  for (int m = 0; m < 3000; ++m) {
    a.time_min.push_back(m);
    a.steps.push_back(m % 7);
  }
  const HRModelParams p;
  CHECK(hr_forward(p, a, 99) == hr_forward(p, a, 99));
  CHECK(hr_forward(p, a, 99) != hr_forward(p, a, 100));
}

TEST_CASE("hr_forward AR(1) noise has the stationary variance") {
  HRModelParams p;
  p.hr_baseline = 0.0;
  p.amplitude = 0.0;
  p.activity_gain = 0.0;
  p.ar_coef = 0.9;
  p.noise_sd = 3.0;
  ActivityTrace a;
  const int n = 1'000'000;
  a.time_min.resize(n);
  a.steps.assign(n, 0.0);
  for (int i = 0; i < n; ++i) a.time_min[static_cast<std::size_t>(i)] = i;
  const auto v = hr_forward(p, a, 2024);
  double s = 0.0, ss = 0.0;
  for (double x : v) {
    s += x;
    ss += x * x;
  }
  const double mean = s / n;
  const double var = ss / n - mean * mean;
  const double expected = 9.0 / (1.0 - 0.81);
  CHECK(std::abs(var / expected - 1.0) < 0.05);
}

TEST_CASE("n stays in [0, 1]: drift points inward at the boundaries") {
  const ClockParams p;
  oracle::Gen g(3);
  for (int i = 0; i < 5000; ++i) {
    const double x = g.uniform(-3, 3), xc = g.uniform(-3, 3), lux = g.uniform(0, 20000);
    REQUIRE(clock_drift(ClockState{x, xc, 0.0}, lux, p)[2] >= 0.0);
    REQUIRE(clock_drift(ClockState{x, xc, 1.0}, lux, p)[2] <= 0.0);
  }
}

TEST_CASE("n stays in [0, 1] along integrated trajectories") {
  const ClockParams p;
  oracle::Gen g(4);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> lux(2 * 1440);
    for (double& l : lux) l = g.coin(0.3) ? 0.0 : g.uniform(0.0, 10000.0);
    const ClockState x0{g.uniform(-1.5, 1.5), g.uniform(-1.5, 1.5), g.uniform(0.0, 1.0)};
    const auto traj = integrate_clock(x0, LightSchedule(lux), 0.0, 48.0, p);
    for (const auto& s : traj) {
      REQUIRE(s.state.n >= 0.0);
      REQUIRE(s.state.n <= 1.0);
      REQUIRE(s.state.finite());
    }
  }
}

TEST_CASE("entrainment under the mean scenario-1 light gives 24 h minima") {
  // Light from the mean activity profile with the activity scale of a
  // generated scenario-1 record.
  const auto ds = gen_dataset(ScenarioConfig::scenario(1, 20, 1));
  double max_steps = 0.0;
  for (const auto& r : ds.records) max_steps = std::max(max_steps, *r.steps);
  const auto profile = oracle::mean_profile(7.0, 23.0, 5.0, 25.0);
  std::vector<double> lux;
  for (int d = 0; d < 60; ++d)
    for (double s : profile) lux.push_back(steps_to_light(s, max_steps / 2.0));

  // the approach to the entrained orbit is slow, so only the second month counts
  const auto traj = integrate_clock(ClockState{1.0, 0.0, 0.5}, LightSchedule(lux), 0.0, 60 * 24.0,
                                    ClockParams{});
  std::vector<double> minima;
  for (int d = 30; d < 60; ++d) minima.push_back(predicted_phase(traj, d).time);
  MESSAGE("entrained minimum at " << std::fmod(minima.back(), 24.0) << " h");
  for (std::size_t i = 1; i < minima.size(); ++i) {
    CAPTURE(i);
    CHECK(minima[i] - minima[i - 1] == doctest::Approx(24.0).epsilon(0.05 / 24.0));
  }
}

TEST_CASE("light schedule holds each minute") {
  LightSchedule l({10.0, 20.0});
  CHECK(l.at(0.0) == 10.0);
  CHECK(l.at(1.0 / 60.0 - 1e-9) == 10.0);
  CHECK(l.at(1.0 / 60.0 + 1e-9) == 20.0);
  CHECK(l.at(5.0) == 0.0);
  CHECK_THROWS_AS(LightSchedule({-1.0}), ValidationError);
}
