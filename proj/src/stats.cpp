#include "had/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "had/error.hpp"

namespace had::stats {

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd(std::span<const double> v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double prob) {
  if (v.empty()) throw ValidationError("quantile of empty sequence");
  std::sort(v.begin(), v.end());
  const double pos = prob * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

double normal_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<>(), x); }

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<>(), p);
}

double student_t_quantile(double p, double dof) {
  if (!std::isfinite(dof) || dof > 1e7) return normal_quantile(p);
  return boost::math::quantile(boost::math::students_t_distribution<>(dof), p);
}

double chi2_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<>(dof), x));
}

OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols()) throw ValidationError("regression design is rank deficient");
  OlsFit fit;
  fit.coef = qr.solve(y);
  fit.fitted = x * fit.coef;
  fit.residuals = y - fit.fitted;
  fit.xtx_inv = (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
  fit.leverage = ((x * fit.xtx_inv).array() * x.array()).rowwise().sum();
  return fit;
}

Eigen::MatrixXd hc2_covariance(const Eigen::MatrixXd& x, const OlsFit& fit) {
  const Eigen::ArrayXd omega =
      fit.residuals.array().square() / (1.0 - fit.leverage.array()).max(1e-12);
  const Eigen::MatrixXd meat = x.transpose() * (x.array().colwise() * omega).matrix();
  return fit.xtx_inv * meat * fit.xtx_inv;
}

double bell_mccaffrey_dof(const Eigen::MatrixXd& x, const OlsFit& fit, const Eigen::VectorXd& c) {
  // V = sum_g a_g^2 e_g^2 with a_g = c'A x_g / sqrt(1 - h_g). Under e ~ N(0, s^2 M),
  // dof = tr(DM)^2 / tr(DMDM) with D = diag(a^2), M = I - H.
  const Eigen::VectorXd ax = x * (fit.xtx_inv * c);
  const Eigen::ArrayXd one_minus_h = (1.0 - fit.leverage.array()).max(1e-12);
  const Eigen::ArrayXd a2 = ax.array().square() / one_minus_h;
  const double tr_dm = (a2 * one_minus_h).sum();
  const Eigen::MatrixXd w = x.transpose() * (x.array().colwise() * a2).matrix();
  const Eigen::MatrixXd aw = fit.xtx_inv * w;
  const double tr_dmdm =
      (a2.square() * (1.0 - 2.0 * fit.leverage.array())).sum() + (aw * aw).trace();
  if (!(tr_dmdm > 0.0)) return std::numeric_limits<double>::infinity();
  return tr_dm * tr_dm / tr_dmdm;
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

}  // namespace had::stats
