#pragma once

#include <cstddef>
#include <vector>

#include "had/panel.hpp"

namespace had {

/// OLS of dy on (1, d) with HC2 standard errors and a Bell-McCaffrey t interval.
struct TwfeEstimate {
  double beta_fe = 0.0;
  double beta0 = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double dof = 0.0;
  double alpha = 0.05;
  std::size_t G = 0;
};

TwfeEstimate twfe_fit(const DifferencedSample& sample, double alpha = 0.05);

/// w_g proportional to (d_g - mean d) d_g, normalised to sum to one.
struct WeightReport {
  std::vector<double> weights;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  double negative_sum = 0.0;
};

WeightReport twfe_weights(const std::vector<double>& d);

/// Regression of the deviation from each unit's linear trend through
/// (prev, base) on the post-treatment dose.
TwfeEstimate twfe_linear_trends(const Panel& panel, long base, long prev, long target, double alpha = 0.05);

struct CovariateTwfe {
  /// Coefficients on d * (1, x): the first entry is the plain dose slope.
  std::vector<double> delta_hat;
  std::vector<double> gamma_hat;
  /// mean(x)' delta_hat.
  double as_hat = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double alpha = 0.05;
  std::size_t G = 0;
};

/// OLS of dy on (1, x, d, d * x). An intercept is prepended to sample.x, so
/// a sample without covariates reduces to twfe_fit.
CovariateTwfe twfe_covariates(const DifferencedSample& sample, double alpha = 0.05);

}  // namespace had
