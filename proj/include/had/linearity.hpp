#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "had/panel.hpp"

namespace had {

/// linearity: H0 E[y|d] is linear in d. mean_independence: H0 E[y|d] is constant.
enum class TestMode { linearity, mean_independence };
std::string to_string(TestMode mode);

struct StuteReport {
  double S = 0.0;
  /// Share of bootstrap statistics strictly above S.
  double p_value = 1.0;
  std::size_t B = 0;
  std::uint64_t seed = 0;
  TestMode mode = TestMode::linearity;
  std::vector<long> periods;
  std::vector<double> per_period_S;
  std::size_t G = 0;
  /// All residuals are zero: the null holds exactly and p = 1.
  bool degenerate = false;
};

struct StuteStatistic {
  double S = 0.0;
  /// Residuals in input order.
  std::vector<double> residuals;
};

/// Cramer-von Mises functional of the residual cusum process,
/// S = G^-2 sum_g (sum_{h<=g} e_(h))^2 with observations sorted by d
/// (stable: ties keep input order). Needs G >= 3; the bootstrap tests need G >= 10.
StuteStatistic stute_statistic(std::span<const double> d, std::span<const double> y,
                               TestMode mode = TestMode::linearity);

/// Wild-bootstrap Stute test with two-point multipliers. Draw b uses the
/// stream (seed, b), multipliers assigned in dose order.
StuteReport stute_test(std::span<const double> d, std::span<const double> y,
                       TestMode mode = TestMode::linearity, std::size_t B = 500,
                       std::uint64_t seed = 0);

/// Joint test over several outcome vectors sharing the same doses: statistic
/// is the sum of per-outcome statistics; each draw applies one multiplier per
/// unit to every outcome.
StuteReport stute_joint(std::span<const double> d, const std::vector<std::vector<double>>& outcomes,
                        TestMode mode = TestMode::linearity, std::size_t B = 500,
                        std::uint64_t seed = 0, std::vector<long> periods = {});

/// Panel form: outcome for period t is Y_t - Y_{F-1}, or with `linear_trends`
/// the deviation from each unit's pre-period linear trend.
StuteReport stute_joint(const Panel& panel, const std::vector<long>& periods, TestMode mode,
                        std::size_t B = 500, std::uint64_t seed = 0, bool linear_trends = false);

/// Covariate version: residuals from OLS of y on (x, d*x); the cusum uses
/// the joint indicator 1{d_h <= d_g, x_h <= x_g componentwise}.
/// x is row-major G x k and must contain an intercept column.
StuteReport stute_covariates(std::span<const double> d, std::span<const double> y,
                             std::span<const double> x, std::size_t k, std::size_t B = 500,
                             std::uint64_t seed = 0);

/// Statistic of stute_covariates without the bootstrap.
double stute_covariate_statistic(std::span<const double> d, std::span<const double> residuals,
                                 std::span<const double> x, std::size_t k);

struct YatchewReport {
  double sig2_lin = 0.0;
  double sig2_diff = 0.0;
  double sigW4_hat = 0.0;
  double T_hr = 0.0;
  /// 1 - Phi(T_hr).
  double p_value = 1.0;
  /// Homoskedastic statistic sqrt(G) (sig2_lin / sig2_diff - 1), for comparison.
  double T_homoskedastic = 0.0;
  double p_value_homoskedastic = 1.0;
  double alpha = 0.05;
  bool reject = false;
  std::size_t G = 0;
  TestMode mode = TestMode::linearity;
  bool degenerate = false;
};

/// Variance-ratio pieces without the sample-size precondition.
YatchewReport yatchew_components(std::span<const double> d, std::span<const double> y,
                                 TestMode mode = TestMode::linearity);

/// Heteroskedasticity-robust differencing test; rejects when T_hr >= q_(1-alpha).
YatchewReport yatchew_test(std::span<const double> d, std::span<const double> y, double alpha = 0.05,
                           TestMode mode = TestMode::linearity);

struct TestReport {
  std::string method;
  double statistic = 0.0;
  double p_value = 1.0;
  double df = 0.0;
  std::size_t G = 0;
  /// Number of distinct dose values.
  std::size_t K = 0;
  TestMode mode = TestMode::linearity;
};

/// Wald test (HC2 covariance, chi-square reference) that the coefficients on
/// d^2..d^(K-1) (linearity) or d..d^(K-1) (mean independence) vanish in a
/// saturated polynomial regression; powers of the standardized dose are used.
TestReport poly_test_discrete(std::span<const double> d, std::span<const double> y,
                              TestMode mode = TestMode::linearity);

}  // namespace had
