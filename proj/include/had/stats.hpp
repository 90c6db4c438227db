#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace had::stats {

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1 denominator).
double sd(std::span<const double> v);
/// Quantile with linear interpolation between order statistics (R type 7).
double quantile(std::vector<double> v, double prob);

double normal_cdf(double x);
double normal_quantile(double p);
double student_t_quantile(double p, double dof);
/// Upper tail of a chi-square distribution.
double chi2_sf(double x, double dof);

/// Least-squares fit with the quantities the robust-variance code needs.
struct OlsFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd residuals;
  Eigen::VectorXd fitted;
  Eigen::MatrixXd xtx_inv;
  /// Diagonal of the hat matrix.
  Eigen::VectorXd leverage;
};

/// OLS of y on the columns of x. Throws ValidationError when x is rank deficient.
OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// HC2 covariance: (X'X)^-1 X' diag(e^2 / (1 - h)) X (X'X)^-1.
Eigen::MatrixXd hc2_covariance(const Eigen::MatrixXd& x, const OlsFit& fit);

/// Bell-McCaffrey degrees of freedom for the HC2 variance of c'beta,
/// computed under a homoskedastic reference model.
double bell_mccaffrey_dof(const Eigen::MatrixXd& x, const OlsFit& fit, const Eigen::VectorXd& c);

/// Random stream for one (seed, index) pair. Streams for distinct indices are
/// independent of scheduling order.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index);

/// Two-point wild-bootstrap multiplier with mean 0 and unit second and third moments.
struct TwoPoint {
  static constexpr double kSqrt5 = 2.23606797749978969641;
  static constexpr double kHigh = (1.0 + kSqrt5) / 2.0;
  static constexpr double kLow = (1.0 - kSqrt5) / 2.0;
  static constexpr double kProbHigh = (kSqrt5 - 1.0) / (2.0 * kSqrt5);

  template <class Rng>
  static double draw(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < kProbHigh ? kHigh : kLow;
  }
};

}  // namespace had::stats
