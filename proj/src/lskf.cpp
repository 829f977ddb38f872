#include "circadian/lskf.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "circadian/core_model.hpp"
#include "circadian/errors.hpp"
#include "ode.hpp"

namespace circadian {

namespace {

constexpr double kRegularizationRatio = 1e-8;
constexpr double kRegularizationJitter = 1e-8;

double wrap_symmetric(double v, double period) {
  // (-period/2, period/2]
  double r = std::fmod(v, period);
  if (r <= -period / 2) r += period;
  if (r > period / 2) r -= period;
  return r;
}

}  // namespace

void SqrtGaussian::validate() const {
  if (factor.rows() != mean.size() || factor.cols() != mean.size()) {
    throw ValidationError("covariance factor must be square and match the mean dimension");
  }
  if (!mean.allFinite() || !factor.allFinite()) throw NumericalError("belief is not finite");
}

Eigen::MatrixXd ProcessNoise::matrix() const {
  if (!(sigma_p >= 0.0) || !(sigma_l >= 0.0)) {
    throw ValidationError("process noise magnitudes must be non-negative");
  }
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(3, 3);
  k(0, 0) = sigma_p * sigma_p;
  k(1, 1) = sigma_p * sigma_p;
  k(2, 2) = sigma_l * sigma_l;
  return k;
}

Eigen::MatrixXd level_set_rhs(const Eigen::VectorXd& mean, const Eigen::MatrixXd& factor,
                              const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& drift,
                              const Eigen::MatrixXd& noise) {
  const Eigen::Index d = mean.size();
  Eigen::MatrixXd plus(d, d);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    plus.col(i) = drift(mean + factor.col(i));
    avg += plus.col(i) + drift(mean - factor.col(i));
  }
  avg /= static_cast<double>(2 * d);

  Eigen::MatrixXd out(d, d + 1);
  out.col(0) = avg;
  out.rightCols(d) = plus.colwise() - avg;

  if (!noise.isZero(0.0)) {
    // ½ K (Mᵀ)⁻¹, i.e. solve X Mᵀ = ½ K  <=>  M Xᵀ = ½ Kᵀ.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(factor);
    if (!lu.isInvertible()) throw NumericalError("covariance factor is singular");
    const Eigen::MatrixXd xt = lu.solve(0.5 * noise.transpose());
    out.rightCols(d) += xt.transpose();
  }
  return out;
}

bool regularize(SqrtGaussian& belief) {
  const Eigen::Index d = belief.dim();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(belief.factor);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(d - 1);
  if (smin >= kRegularizationRatio * smax && smax > 0.0) return false;
  Eigen::MatrixXd sigma = belief.covariance();
  sigma = 0.5 * (sigma + sigma.transpose());
  sigma.diagonal().array() += kRegularizationJitter;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance degeneracy: refactorization failed");
  belief.factor = llt.matrixL();
  return true;
}

SqrtGaussian time_update(const SqrtGaussian& belief, const DriftFn& drift,
                         const Eigen::MatrixXd& noise, double t0, double t1,
                         const TimeUpdateOptions& opts) {
  belief.validate();
  if (!(t1 > t0)) throw ValidationError("time_update requires t1 > t0");
  const Eigen::Index d = belief.dim();
  if (noise.rows() != d || noise.cols() != d) throw ValidationError("noise matrix has wrong shape");

  SqrtGaussian cur = belief;
  regularize(cur);

  detail::OdeState y(static_cast<std::size_t>(d * (d + 1)));
  Eigen::Map<Eigen::MatrixXd>(y.data(), d, d + 1) << cur.mean, cur.factor;

  auto rhs = [&](const detail::OdeState& s, detail::OdeState& ds, double t) {
    Eigen::Map<const Eigen::MatrixXd> packed(s.data(), d, d + 1);
    const Eigen::VectorXd m = packed.col(0);
    const Eigen::MatrixXd f = packed.rightCols(d);
    auto v = [&](const Eigen::VectorXd& x) { return drift(x, t); };
    Eigen::Map<Eigen::MatrixXd>(ds.data(), d, d + 1) = level_set_rhs(m, f, v, noise);
  };
  detail::integrate_dopri(rhs, y, t0, t1, opts.rtol, opts.atol, opts.max_step);

  Eigen::Map<const Eigen::MatrixXd> packed(y.data(), d, d + 1);
  SqrtGaussian out{packed.col(0), packed.rightCols(d)};
  regularize(out);
  return out;
}

Eigen::MatrixXd cubature_points(const SqrtGaussian& belief) {
  const Eigen::Index d = belief.dim();
  const double s = std::sqrt(static_cast<double>(d));
  Eigen::MatrixXd pts(d, 2 * d);
  pts.leftCols(d) = (s * belief.factor).colwise() + belief.mean;
  pts.rightCols(d) = (-s * belief.factor).colwise() + belief.mean;
  return pts;
}

MeasurementUpdateResult measurement_update(const SqrtGaussian& belief, const Measurement& meas,
                                           const MeasurementFn& h,
                                           const MeasurementUpdateOptions& opts) {
  belief.validate();
  if (!(meas.variance > 0.0)) throw ValidationError("measurement variance must be positive");
  const Eigen::Index d = belief.dim();
  const Eigen::Index n = 2 * d;

  MeasurementUpdateResult res;
  res.belief = belief;

  const Eigen::MatrixXd pts = cubature_points(belief);
  Eigen::VectorXd z(n);
  for (Eigen::Index j = 0; j < n; ++j) z(j) = h(pts.col(j));

  double zbar = 0.0;
  if (opts.period) {
    const double p = *opts.period;
    double sx = 0.0, sy = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      sx += std::cos(2.0 * kPi * z(j) / p);
      sy += std::sin(2.0 * kPi * z(j) / p);
    }
    zbar = std::atan2(sy, sx) * p / (2.0 * kPi);
    if (zbar < 0.0) zbar += p;
  } else {
    zbar = z.mean();
  }

  const double w = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(1 + d, n + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double dz = opts.period ? wrap_symmetric(z(j) - zbar, *opts.period) : z(j) - zbar;
    block(0, j) = w * dz;
    block.block(1, j, d, 1) = w * (pts.col(j) - belief.mean);
  }
  block(0, n) = std::sqrt(meas.variance);

  // block = L Qᵀ with L lower triangular, from the QR of blockᵀ.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(block.transpose());
  Eigen::MatrixXd lower =
      qr.matrixQR().topRows(1 + d).triangularView<Eigen::Upper>().toDenseMatrix().transpose();
  for (Eigen::Index j = 0; j < 1 + d; ++j) {
    if (lower(j, j) < 0.0) lower.col(j) *= -1.0;
  }

  const double t11 = lower(0, 0);
  const Eigen::VectorXd t21 = lower.block(1, 0, d, 1);
  const Eigen::MatrixXd t22 = lower.block(1, 1, d, d);

  const double innovation =
      opts.period ? wrap_symmetric(meas.value - zbar, *opts.period) : meas.value - zbar;
  res.predicted = zbar;
  res.innovation = innovation;
  res.innovation_sd = t11;

  if (!(t11 > 1e-12 * std::max(1.0, std::sqrt(meas.variance)))) {
    res.reason = "innovation factor numerically singular";
    return res;
  }
  if (opts.gate_sigmas > 0.0 && std::abs(innovation) > opts.gate_sigmas * t11) {
    res.reason = "innovation outside gate";
    return res;
  }

  const Eigen::VectorXd gain = t21 / t11;
  res.belief.mean = belief.mean + gain * innovation;
  res.belief.factor = t22;
  res.accepted = true;
  return res;
}

}  // namespace circadian
