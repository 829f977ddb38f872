#include "circadian/hr_mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "circadian/circular.hpp"
#include "circadian/errors.hpp"

namespace circadian {

namespace {

constexpr double kOmega = 2.0 * kPi / kDayHours;
constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

HRWindow::HRWindow(int day_index, std::vector<std::int64_t> minute, std::vector<double> hr,
                   std::vector<double> steps)
    : day_index_(day_index), minute_(std::move(minute)), hr_(std::move(hr)), steps_(std::move(steps)) {
  if (minute_.size() != hr_.size() || hr_.size() != steps_.size()) {
    throw ValidationError("HR window columns have different lengths");
  }
  const std::size_t n = hr_.size();
  time_h_.resize(n);
  gap_.resize(n);
  cos_wt_.resize(n);
  sin_wt_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && minute_[i] <= minute_[i - 1]) {
      throw ValidationError("HR window times must be strictly increasing");
    }
    if (!std::isfinite(hr_[i]) || !(steps_[i] >= 0.0)) {
      throw ValidationError("HR window holds non-finite HR or negative steps");
    }
    time_h_[i] = static_cast<double>(minute_[i]) / kMinutesPerHour;
    gap_[i] = i == 0 ? 0 : static_cast<int>(minute_[i] - minute_[i - 1]);
    cos_wt_[i] = std::cos(kOmega * time_h_[i]);
    sin_wt_[i] = std::sin(kOmega * time_h_[i]);
  }
}

double HRWindow::mean_hr() const {
  if (hr_.empty()) return 0.0;
  return std::accumulate(hr_.begin(), hr_.end(), 0.0) / static_cast<double>(hr_.size());
}

HRParamVector to_vector(const HRModelParams& p) {
  HRParamVector v;
  v << p.hr_baseline, p.amplitude, p.hr_phase, p.activity_gain, p.ar_coef, p.noise_sd;
  return v;
}

HRModelParams from_vector(const HRParamVector& v) {
  HRModelParams p;
  p.hr_baseline = v[kBaseline];
  p.amplitude = v[kAmplitude];
  p.hr_phase = v[kPhase];
  p.activity_gain = v[kGain];
  p.ar_coef = v[kArCoef];
  p.noise_sd = v[kNoiseSd];
  return p;
}

double ar1_loglik(const HRModelParams& p, const HRWindow& w) {
  if (w.size() == 0) throw ValidationError("empty HR window");
  if (!(std::abs(p.ar_coef) < 1.0)) throw ValidationError("|ar_coef| must be < 1");
  if (!(p.noise_sd > 0.0)) throw ValidationError("noise_sd must be positive");

  const double a = p.ar_coef;
  const double s2 = p.noise_sd * p.noise_sd;
  const double v0 = s2 / (1.0 - a * a);
  const double log_s2 = std::log(s2);
  const double log_v0 = std::log(v0);
  const bool standard_period = p.period == kDayHours;
  const double cphi = std::cos(kOmega * p.hr_phase);
  const double sphi = std::sin(kOmega * p.hr_phase);
  const double omega = 2.0 * kPi / p.period;

  const auto& hr = w.hr();
  const auto& steps = w.steps();
  const auto& cw = w.cos_wt();
  const auto& sw = w.sin_wt();
  const auto& gap = w.gap();

  double sum_sq = 0.0;   // Σ e²/var for unit gaps, scaled by 1/s2 at the end
  double other = 0.0;    // terms with non-unit variance
  std::size_t unit_terms = 0;
  double prev = 0.0;
  for (std::size_t i = 0; i < hr.size(); ++i) {
    const double wave = standard_period ? cw[i] * cphi + sw[i] * sphi
                                        : std::cos(omega * (w.time_h()[i] - p.hr_phase));
    const double r = hr[i] - (p.hr_baseline - p.amplitude * wave + p.activity_gain * steps[i]);
    if (i == 0) {
      other += log_v0 + r * r / v0;
    } else if (gap[i] == 1) {
      const double e = r - a * prev;
      sum_sq += e * e;
      ++unit_terms;
    } else {
      const double c = std::pow(a, gap[i]);
      const double var = v0 * (1.0 - c * c);
      const double e = r - c * prev;
      other += std::log(var) + e * e / var;
    }
    prev = r;
  }
  const double quad = sum_sq / s2 + static_cast<double>(unit_terms) * log_s2 + other;
  return -0.5 * (static_cast<double>(hr.size()) * kLog2Pi + quad);
}

HRPriors HRPriors::for_window(const HRWindow& window) {
  HRPriors p;
  p.baseline_mean = window.mean_hr();
  return p;
}

bool HRPriors::in_support(const HRModelParams& p) const {
  const double vals[] = {p.hr_baseline, p.amplitude, p.hr_phase, p.activity_gain, p.ar_coef, p.noise_sd};
  for (double v : vals) {
    if (!std::isfinite(v)) return false;
  }
  return p.amplitude >= 0.0 && p.activity_gain >= 0.0 && std::abs(p.ar_coef) < ar_bound &&
         p.noise_sd > 0.0;
}

double HRPriors::log_density(const HRModelParams& p) const {
  if (!in_support(p)) return kNegInf;
  if (flat) return 0.0;
  const double zb = (p.hr_baseline - baseline_mean) / baseline_sd;
  const double za = p.amplitude / amplitude_sd;
  const double zg = p.activity_gain / gain_sd;
  const double zs = p.noise_sd / noise_sd_scale;
  return -0.5 * (zb * zb + za * za + zg * zg + zs * zs);
}

double log_posterior(const HRModelParams& params, const HRWindow& window, const HRPriors& priors) {
  const double lp = priors.log_density(params);
  if (!std::isfinite(lp)) return kNegInf;
  return lp + ar1_loglik(params, window);
}

WalkerEnsemble make_ensemble(Eigen::MatrixXd walkers, const LogDensity& log_density) {
  const Eigen::Index dim = walkers.rows();
  const Eigen::Index n = walkers.cols();
  if (n % 2 != 0 || n < 2 * dim + 2) {
    throw ValidationError("ensemble needs an even number of walkers, at least 2*dim + 2");
  }
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      if (walkers.col(a) == walkers.col(b)) throw ValidationError("two walkers start at the same point");
    }
  }
  WalkerEnsemble e;
  e.log_prob.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    e.log_prob[k] = log_density(walkers.col(k));
    if (!std::isfinite(e.log_prob[k])) throw ValidationError("walker outside the target support");
  }
  e.walkers = std::move(walkers);
  return e;
}

Eigen::VectorXd stretch_proposal(const Eigen::VectorXd& walker, const Eigen::VectorXd& partner,
                                 double zeta) {
  return partner + zeta * (walker - partner);
}

double stretch_log_accept(double zeta, Eigen::Index dim, double log_prob_new, double log_prob_old) {
  if (!std::isfinite(log_prob_new)) return kNegInf;
  return static_cast<double>(dim - 1) * std::log(zeta) + log_prob_new - log_prob_old;
}

WalkerEnsemble stretch_move(WalkerEnsemble e, const LogDensity& log_density, std::mt19937_64& rng,
                            double a) {
  const Eigen::Index n = e.size();
  const Eigen::Index half = n / 2;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<Eigen::Index> pick(0, half - 1);

  for (int side = 0; side < 2; ++side) {
    const Eigen::Index first = side == 0 ? 0 : half;
    const Eigen::Index other = side == 0 ? half : 0;
    for (Eigen::Index k = first; k < first + half; ++k) {
      const Eigen::Index j = other + pick(rng);
      // ζ ~ g(ζ) ∝ 1/√ζ on [1/a, a] by inversion.
      const double u = unif(rng);
      const double zeta = std::pow((a - 1.0) * u + 1.0, 2) / a;
      const Eigen::VectorXd proposal = stretch_proposal(e.walkers.col(k), e.walkers.col(j), zeta);
      const double lp = log_density(proposal);
      const double log_accept = stretch_log_accept(zeta, e.dim(), lp, e.log_prob[k]);
      ++e.proposed;
      if (std::log(unif(rng)) < log_accept) {
        e.walkers.col(k) = proposal;
        e.log_prob[k] = lp;
        ++e.accepted;
      }
    }
  }
  ++e.sweeps;
  return e;
}

double integrated_autocorr_time(const std::vector<std::vector<double>>& chains) {
  if (chains.empty() || chains.front().size() < 2) return 1.0;
  const std::size_t len = chains.front().size();
  std::vector<double> acf(len, 0.0);
  std::size_t used = 0;
  std::vector<std::vector<double>> centered;
  centered.reserve(chains.size());
  std::vector<double> var0;
  for (const auto& c : chains) {
    const double mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(len);
    std::vector<double> x(len);
    double v = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      x[i] = c[i] - mean;
      v += x[i] * x[i];
    }
    if (v <= 0.0) continue;
    centered.push_back(std::move(x));
    var0.push_back(v);
  }
  used = centered.size();
  if (used == 0) return 1.0;

  double tau = 1.0;
  for (std::size_t lag = 1; lag < len; ++lag) {
    double rho = 0.0;
    for (std::size_t w = 0; w < used; ++w) {
      const auto& x = centered[w];
      double s = 0.0;
      for (std::size_t i = 0; i + lag < len; ++i) s += x[i] * x[i + lag];
      rho += s / var0[w];
    }
    rho /= static_cast<double>(used);
    tau += 2.0 * rho;
    if (static_cast<double>(lag) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0);
}

namespace {

// Baseline, amplitude and activity gain by least squares with the phase fixed.
struct ConditionalFit {
  double baseline, amplitude, gain, ar, noise_sd;
};

ConditionalFit fit_given_phase(const HRWindow& w, double phase) {
  const std::size_t n = w.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  const double cphi = std::cos(kOmega * phase), sphi = std::sin(kOmega * phase);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    x(r, 1) = -(w.cos_wt()[i] * cphi + w.sin_wt()[i] * sphi);
    x(r, 2) = w.steps()[i];
    y(r) = w.hr()[i];
  }
  Eigen::Vector3d beta = x.colPivHouseholderQr().solve(y);
  if (!beta.allFinite()) beta << w.mean_hr(), 1.0, 0.1;
  const Eigen::VectorXd resid = y - x * beta;

  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (w.gap()[i] != 1) continue;
    num += resid[static_cast<Eigen::Index>(i)] * resid[static_cast<Eigen::Index>(i - 1)];
    den += resid[static_cast<Eigen::Index>(i - 1)] * resid[static_cast<Eigen::Index>(i - 1)];
  }
  double ar = den > 0.0 ? num / den : 0.0;
  ar = std::clamp(ar, -0.9, 0.98);
  const double var = resid.squaredNorm() / static_cast<double>(n);
  const double sd = std::max(std::sqrt(var * (1.0 - ar * ar)), 0.1);
  return {beta[0], beta[1], beta[2], ar, sd};
}

}  // namespace

HRPhaseEstimate extract_hr_phase(const HRWindow& window, const McmcConfig& cfg) {
  if (window.size() < kMinWindowSamples) {
    throw ValidationError("HR window has fewer than 60 usable samples");
  }
  if (cfg.walkers < 2 * kHRParamCount + 2 || cfg.walkers % 2 != 0) {
    throw ConfigError("walker count must be even and at least 14");
  }
  if (cfg.sweeps < 2 || !(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0)) {
    throw ConfigError("invalid MCMC chain length or burn-in fraction");
  }

  const HRPriors priors = HRPriors::for_window(window);
  auto target = [&](const Eigen::VectorXd& v) {
    return log_posterior(from_vector(v), window, priors);
  };

  // Coarse grid over the phase with the remaining parameters at prior means.
  const double half_normal_mean = std::sqrt(2.0 / kPi);
  HRModelParams probe;
  probe.hr_baseline = priors.baseline_mean;
  probe.amplitude = priors.amplitude_sd * half_normal_mean;
  probe.activity_gain = priors.gain_sd * half_normal_mean;
  probe.ar_coef = 0.0;
  probe.noise_sd = priors.noise_sd_scale * half_normal_mean;
  double best_phase = 0.0;
  double best_lp = -std::numeric_limits<double>::infinity();
  for (int h = 0; h < 24; ++h) {
    probe.hr_phase = h;
    const double lp = log_posterior(probe, window, priors);
    if (lp > best_lp) {
      best_lp = lp;
      best_phase = h;
    }
  }

  ConditionalFit fit = fit_given_phase(window, best_phase);
  if (fit.amplitude < 0.0) {
    best_phase = wrap_hours(best_phase + 12.0);
    fit = fit_given_phase(window, best_phase);
  }
  HRParamVector center;
  center << fit.baseline, std::max(std::abs(fit.amplitude), 0.5), best_phase, std::max(fit.gain, 0.01),
      fit.ar, fit.noise_sd;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd init(kHRParamCount, cfg.walkers);
  for (int k = 0; k < cfg.walkers; ++k) {
    for (int attempt = 0;; ++attempt) {
      HRParamVector v = center;
      v[kBaseline] += 0.5 * gauss(rng);
      v[kAmplitude] = std::abs(v[kAmplitude] * (1.0 + 0.1 * gauss(rng)));
      v[kPhase] += 0.5 * gauss(rng);
      v[kGain] = std::abs(v[kGain] * (1.0 + 0.1 * gauss(rng)));
      v[kArCoef] = std::clamp(v[kArCoef] + 0.01 * gauss(rng), -0.99, 0.99);
      v[kNoiseSd] = std::abs(v[kNoiseSd] * (1.0 + 0.05 * gauss(rng)));
      if (std::isfinite(target(v))) {
        init.col(k) = v;
        break;
      }
      if (attempt > 1000) throw NumericalError("could not initialise walkers inside the prior support");
    }
  }

  WalkerEnsemble ens = make_ensemble(std::move(init), target);
  const int burn = static_cast<int>(std::floor(cfg.burn_in_fraction * cfg.sweeps));
  const int kept = cfg.sweeps - burn;
  std::vector<std::vector<double>> chains(static_cast<std::size_t>(cfg.walkers));
  for (auto& c : chains) c.reserve(static_cast<std::size_t>(kept));

  for (int s = 0; s < cfg.sweeps; ++s) {
    ens = stretch_move(std::move(ens), target, rng, cfg.stretch);
    // The likelihood is 24 h periodic in the phase; keep walkers on one branch.
    std::vector<double> ph(static_cast<std::size_t>(cfg.walkers));
    for (int k = 0; k < cfg.walkers; ++k) ph[static_cast<std::size_t>(k)] = ens.walkers(kPhase, k);
    const double centre = circular_summary(ph).mean;
    for (int k = 0; k < cfg.walkers; ++k) {
      ens.walkers(kPhase, k) = centre + wrap_diff(ens.walkers(kPhase, k), centre);
    }
    if (s >= burn) {
      for (int k = 0; k < cfg.walkers; ++k) chains[static_cast<std::size_t>(k)].push_back(ens.walkers(kPhase, k));
    }
  }

  HRPhaseEstimate est;
  est.day_index = window.day_index();
  est.chain_length = cfg.sweeps;
  est.acceptance = ens.acceptance_rate();
  est.phase_samples.reserve(static_cast<std::size_t>(kept) * chains.size());
  for (const auto& c : chains) {
    for (double v : c) est.phase_samples.push_back(wrap_hours(v));
  }
  const auto summary = circular_summary(est.phase_samples);
  est.phase_mean = summary.mean;
  est.phase_var = summary.variance();

  // Autocorrelation on deviations from the circular mean.
  for (auto& c : chains) {
    for (double& v : c) v = wrap_diff(v, summary.mean);
  }
  const double tau = integrated_autocorr_time(chains);
  est.ess = static_cast<double>(est.phase_samples.size()) / tau;

  if (!(est.acceptance > 0.05 && est.acceptance < 0.9)) {
    est.low_quality = true;
    est.flag = "acceptance rate outside (0.05, 0.9)";
  } else if (est.ess < 100.0) {
    est.low_quality = true;
    est.flag = "effective sample size below 100";
  } else if (!(est.phase_var > 0.0)) {
    est.low_quality = true;
    est.flag = "degenerate phase posterior";
  }
  return est;
}

}  // namespace circadian
