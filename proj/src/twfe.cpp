#include "had/twfe.hpp"

#include <algorithm>
#include <cmath>

#include "had/error.hpp"
#include "had/stats.hpp"

namespace had {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
}

void check_dose(const std::vector<double>& d) {
  if (d.size() < 3) throw ValidationError("TWFE needs at least 3 units");
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  if (*lo == *hi) throw ValidationError("dose has zero variance");
}

}  // namespace

TwfeEstimate twfe_fit(const DifferencedSample& sample, double alpha) {
  check_alpha(alpha);
  check_dose(sample.d);
  if (sample.dy.size() != sample.d.size()) throw ValidationError("dy and d differ in length");
  const auto n = static_cast<Eigen::Index>(sample.d.size());
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index g = 0; g < n; ++g) {
    x(g, 0) = 1.0;
    x(g, 1) = sample.d[static_cast<std::size_t>(g)];
    y(g) = sample.dy[static_cast<std::size_t>(g)];
  }
  const auto fit = stats::ols(x, y);
  const Eigen::MatrixXd v = stats::hc2_covariance(x, fit);

  TwfeEstimate est;
  est.alpha = alpha;
  est.G = sample.d.size();
  est.beta0 = fit.coef(0);
  est.beta_fe = fit.coef(1);
  est.se = std::sqrt(std::max(0.0, v(1, 1)));
  est.dof = stats::bell_mccaffrey_dof(x, fit, Eigen::Vector2d(0.0, 1.0));
  const double q = stats::student_t_quantile(1.0 - alpha / 2.0, est.dof);
  est.ci_low = est.beta_fe - q * est.se;
  est.ci_high = est.beta_fe + q * est.se;
  return est;
}

WeightReport twfe_weights(const std::vector<double>& d) {
  check_dose(d);
  const double m = stats::mean(d);
  WeightReport rep;
  rep.weights.reserve(d.size());
  double total = 0.0;
  for (double v : d) {
    rep.weights.push_back((v - m) * v);
    total += rep.weights.back();
  }
  for (double& w : rep.weights) {
    w /= total;
    if (w > 0.0) ++rep.n_positive;
    if (w < 0.0) {
      ++rep.n_negative;
      rep.negative_sum += w;
    }
  }
  return rep;
}

TwfeEstimate twfe_linear_trends(const Panel& panel, long base, long prev, long target, double alpha) {
  if (panel.pre_periods().size() < 3) {
    throw ValidationError("linear trends need at least 3 pre-treatment periods");
  }
  DifferencedSample sample;
  sample.dy = detrended_difference(panel, base, prev, target);
  sample.d = panel.unit_doses();
  sample.base_period = base;
  sample.target_period = target;
  return twfe_fit(sample, alpha);
}

CovariateTwfe twfe_covariates(const DifferencedSample& sample, double alpha) {
  check_alpha(alpha);
  check_dose(sample.d);
  const std::size_t k = sample.covariate_count;
  const auto n = static_cast<Eigen::Index>(sample.d.size());
  const auto kk = static_cast<Eigen::Index>(k + 1);
  if (sample.x.size() != sample.d.size() * k) throw ValidationError("covariate matrix has wrong shape");

  Eigen::MatrixXd xc(n, kk);
  for (Eigen::Index g = 0; g < n; ++g) {
    xc(g, 0) = 1.0;
    for (Eigen::Index j = 1; j < kk; ++j) {
      xc(g, j) = sample.x[static_cast<std::size_t>(g) * k + static_cast<std::size_t>(j - 1)];
    }
  }
  Eigen::MatrixXd design(n, 2 * kk);
  Eigen::VectorXd y(n);
  for (Eigen::Index g = 0; g < n; ++g) {
    const double dg = sample.d[static_cast<std::size_t>(g)];
    design.row(g) << xc.row(g), dg * xc.row(g);
    y(g) = sample.dy[static_cast<std::size_t>(g)];
  }
  const auto fit = stats::ols(design, y);
  const Eigen::MatrixXd v = stats::hc2_covariance(design, fit);

  const Eigen::VectorXd delta = fit.coef.tail(kk);
  const Eigen::VectorXd xbar = xc.colwise().mean().transpose();
  const Eigen::MatrixXd centred = xc.rowwise() - xbar.transpose();
  const Eigen::MatrixXd var_xbar = (centred.transpose() * centred) / (static_cast<double>(n) - 1.0) / static_cast<double>(n);

  CovariateTwfe out;
  out.alpha = alpha;
  out.G = sample.d.size();
  out.delta_hat.assign(delta.data(), delta.data() + delta.size());
  out.gamma_hat.assign(fit.coef.data(), fit.coef.data() + kk);
  out.as_hat = xbar.dot(delta);
  const double var = xbar.dot(v.bottomRightCorner(kk, kk) * xbar) + delta.dot(var_xbar * delta);
  out.se = std::sqrt(std::max(0.0, var));
  const double z = stats::normal_quantile(1.0 - alpha / 2.0);
  out.ci_low = out.as_hat - z * out.se;
  out.ci_high = out.as_hat + z * out.se;
  return out;
}

}  // namespace had
