#pragma once

// Reference computations used by the tests. Each one is written independently
// of the library code it checks (dense algebra, fixed-step RK4, quadrature).

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>  // operatorNorm
#include <Eigen/QR>

#include "circadian/core_model.hpp"
#include "circadian/hr_mcmc.hpp"

namespace oracle {

constexpr double kPi = 3.14159265358979323846;

// Small random-input generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  Eigen::MatrixXd matrix(int rows, int cols, double sd = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = normal(0.0, sd);
    return m;
  }
  Eigen::VectorXd vector(int n, double sd = 1.0) { return matrix(n, 1, sd); }

  // Lower-triangular factor with a positive diagonal bounded away from zero.
  Eigen::MatrixXd factor(int d, double scale = 1.0) {
    Eigen::MatrixXd m = matrix(d, d, 0.3 * scale).triangularView<Eigen::Lower>();
    for (int i = 0; i < d; ++i) m(i, i) = scale * uniform(0.5, 1.5);
    return m;
  }

  // Every eigenvalue has real part <= -margin.
  Eigen::MatrixXd stable_matrix(int d, double margin = 0.2) {
    Eigen::MatrixXd w = matrix(d, d, 0.5);
    const double shift = w.operatorNorm() + margin;
    return w - shift * Eigen::MatrixXd::Identity(d, d);
  }

  Eigen::MatrixXd orthogonal(int d) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(matrix(d, d));
    return qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  }

  Eigen::MatrixXd spd(int d, double jitter = 0.1) {
    Eigen::MatrixXd a = matrix(d, d);
    return a * a.transpose() + jitter * Eigen::MatrixXd::Identity(d, d);
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Σ(t) for dΣ/dt = JΣ + ΣJᵀ + K and m(t) for dm/dt = Jm, by fixed-step RK4.
struct LinearMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline LinearMoments linear_moments(const Eigen::MatrixXd& j, const Eigen::MatrixXd& k,
                                    Eigen::VectorXd m, Eigen::MatrixXd s, double horizon,
                                    int steps = 20000) {
  const double h = horizon / steps;
  auto fs = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return j * x + x * j.transpose() + k;
  };
  auto fm = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return j * x; };
  for (int i = 0; i < steps; ++i) {
    const Eigen::MatrixXd s1 = fs(s), s2 = fs(s + 0.5 * h * s1), s3 = fs(s + 0.5 * h * s2),
                          s4 = fs(s + h * s3);
    s += h / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
    const Eigen::VectorXd m1 = fm(m), m2 = fm(m + 0.5 * h * m1), m3 = fm(m + 0.5 * h * m2),
                          m4 = fm(m + h * m3);
    m += h / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
  }
  return {m, s};
}

// Textbook Kalman update for z = Hx + v, v ~ N(0, R).
struct KalmanPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::VectorXd gain;
};

inline KalmanPosterior kalman_update(const Eigen::VectorXd& m, const Eigen::MatrixXd& p,
                                     const Eigen::RowVectorXd& h, double r, double z) {
  const double s = (h * p * h.transpose())(0, 0) + r;
  const Eigen::VectorXd k = p * h.transpose() / s;
  KalmanPosterior out;
  out.gain = k;
  out.mean = m + k * (z - (h * m)(0, 0));
  out.cov = p - k * s * k.transpose();
  return out;
}

// log N(r; 0, Σ) with the stationary AR(1) covariance on the window's minute
// grid, Σ_ij = σ² α^|t_i - t_j| / (1 - α²).
inline double dense_ar1_loglik(const circadian::HRModelParams& p, const circadian::HRWindow& w) {
  const auto n = static_cast<Eigen::Index>(w.size());
  Eigen::VectorXd r(n);
  Eigen::MatrixXd cov(n, n);
  const double omega = 2.0 * kPi / p.period;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(w.minute()[i]) / 60.0;
    r[i] = w.hr()[i] - (p.hr_baseline - p.amplitude * std::cos(omega * (t - p.hr_phase)) +
                        p.activity_gain * w.steps()[i]);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double lag = std::abs(static_cast<double>(w.minute()[i] - w.minute()[j]));
      cov(i, j) = p.noise_sd * p.noise_sd * std::pow(p.ar_coef, lag) / (1.0 - p.ar_coef * p.ar_coef);
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const Eigen::VectorXd y = llt.matrixL().solve(r);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (y.squaredNorm() + logdet + static_cast<double>(n) * std::log(2.0 * kPi));
}

// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// E[max(mu + sd Z, 0)] by quadrature.
inline double rectified_normal_mean(double mu, double sd) {
  auto f = [&](double x) {
    return x * std::exp(-0.5 * (x - mu) * (x - mu) / (sd * sd)) / (sd * std::sqrt(2.0 * kPi));
  };
  return simpson(f, 0.0, mu + 12.0 * sd);
}

// Mean activity profile of a scenario day, minute by minute.
inline std::vector<double> mean_profile(double offset, double onset, double mu_l, double mu_h) {
  std::vector<double> v(1440, 0.0);
  for (int m = 0; m < 1440; ++m) {
    const double t = m / 60.0;
    if (t < offset || t >= onset) continue;
    v[static_cast<std::size_t>(m)] = (t < offset + 5.0 || t >= offset + 10.0) ? mu_l : mu_h;
  }
  return v;
}

}  // namespace oracle
