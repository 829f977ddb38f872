#pragma once

// Daily heart-rate phase extraction: exact harmonic + AR(1) likelihood and
// Goodman-Weare affine-invariant ensemble sampling.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "circadian/core_model.hpp"

namespace circadian {

/// One day of minute samples with HR present. Times are absolute hours; gaps
/// (runs of missing minutes) are carried by `gap` = minutes since the previous
/// sample.
class HRWindow {
 public:
  HRWindow() = default;
  /// `minute` are absolute minute indices (strictly increasing).
  HRWindow(int day_index, std::vector<std::int64_t> minute, std::vector<double> hr,
           std::vector<double> steps);

  int day_index() const { return day_index_; }
  std::size_t size() const { return hr_.size(); }
  const std::vector<double>& time_h() const { return time_h_; }
  const std::vector<double>& hr() const { return hr_; }
  const std::vector<double>& steps() const { return steps_; }
  const std::vector<std::int64_t>& minute() const { return minute_; }
  /// Minutes since the previous sample (0 for the first).
  const std::vector<int>& gap() const { return gap_; }
  const std::vector<double>& cos_wt() const { return cos_wt_; }
  const std::vector<double>& sin_wt() const { return sin_wt_; }
  double mean_hr() const;

 private:
  int day_index_ = 0;
  std::vector<std::int64_t> minute_;
  std::vector<double> time_h_;
  std::vector<double> hr_;
  std::vector<double> steps_;
  std::vector<int> gap_;
  std::vector<double> cos_wt_;
  std::vector<double> sin_wt_;
};

inline constexpr std::size_t kMinWindowSamples = 60;

/// Sampled parameter order.
enum HRParam : int { kBaseline = 0, kAmplitude, kPhase, kGain, kArCoef, kNoiseSd, kHRParamCount };
using HRParamVector = Eigen::Matrix<double, kHRParamCount, 1>;

HRParamVector to_vector(const HRModelParams& p);
HRModelParams from_vector(const HRParamVector& v);

/// Exact Gaussian log-likelihood of the residuals under a stationary AR(1)
/// process; a gap of k minutes carries α^k with innovation variance
/// σ²(1 - α^{2k})/(1 - α²). Throws ValidationError for |α| >= 1 or σ <= 0.
double ar1_loglik(const HRModelParams& params, const HRWindow& window);

/// Weakly-informative priors. The phase prior is uniform on the 24 h circle.
struct HRPriors {
  double baseline_mean = 70.0;
  double baseline_sd = 20.0;
  double amplitude_sd = 10.0;
  double gain_sd = 1.0;
  double ar_bound = 0.999;
  double noise_sd_scale = 10.0;
  /// When set, every prior density is constant on its support.
  bool flat = false;

  static HRPriors for_window(const HRWindow& window);
  bool in_support(const HRModelParams& p) const;
  double log_density(const HRModelParams& p) const;
};

/// ar1_loglik + log prior; -inf outside the prior support.
double log_posterior(const HRModelParams& params, const HRWindow& window, const HRPriors& priors);

using LogDensity = std::function<double(const Eigen::VectorXd&)>;

/// Walkers are the columns of `walkers`.
struct WalkerEnsemble {
  Eigen::MatrixXd walkers;
  Eigen::VectorXd log_prob;
  std::size_t sweeps = 0;
  std::size_t proposed = 0;
  std::size_t accepted = 0;

  Eigen::Index dim() const { return walkers.rows(); }
  Eigen::Index size() const { return walkers.cols(); }
  double acceptance_rate() const {
    return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  }
};

/// Evaluates the log density of every walker. Throws ValidationError if the
/// walker count is odd, below 2·dim + 2, two walkers coincide, or some walker
/// has zero density.
WalkerEnsemble make_ensemble(Eigen::MatrixXd walkers, const LogDensity& log_density);

/// Stretch proposal x_j + ζ (x_k - x_j).
Eigen::VectorXd stretch_proposal(const Eigen::VectorXd& walker, const Eigen::VectorXd& partner,
                                 double zeta);

/// log of the acceptance ratio ζ^{dim-1} π(x') / π(x_k).
double stretch_log_accept(double zeta, Eigen::Index dim, double log_prob_new, double log_prob_old);

/// One sweep of the complementary-half stretch move with parameter a.
WalkerEnsemble stretch_move(WalkerEnsemble ensemble, const LogDensity& log_density,
                            std::mt19937_64& rng, double a = 2.0);

struct McmcConfig {
  int walkers = 32;
  int sweeps = 2000;
  double burn_in_fraction = 0.5;
  double stretch = 2.0;
  std::uint64_t seed = 1;
};

struct HRPhaseEstimate {
  int day_index = 0;
  double phase_mean = 0.0;   // hours in [0, 24)
  double phase_var = 0.0;    // hours²
  double acceptance = 0.0;
  double ess = 0.0;
  int chain_length = 0;
  bool low_quality = false;
  std::string flag;
  std::vector<double> phase_samples;  // pooled post-burn-in, hours in [0, 24)
};

/// Integrated autocorrelation time of an ensemble chain (walker-averaged
/// autocorrelation, self-consistent window with c = 5). `chains[w][s]`.
double integrated_autocorr_time(const std::vector<std::vector<double>>& chains);

/// Runs the ensemble on one day and returns circular summaries of φ^HR.
/// Throws ValidationError if the window has fewer than 60 samples.
HRPhaseEstimate extract_hr_phase(const HRWindow& window, const McmcConfig& config = {});

}  // namespace circadian
