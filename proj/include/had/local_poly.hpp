#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "had/kernel.hpp"

namespace had {

/// Weighted polynomial fit anchored at the left boundary of the dose support.
struct LocalFit {
  /// Intercept: the estimated boundary value of E[y | d].
  double point = 0.0;
  /// Coefficients on (d - boundary)^j, j = 0..p.
  std::vector<double> coefs;
  double h = 0.0;
  int p = 1;
  std::size_t n_eff = 0;
  /// y - fitted for every observation (weights are zero outside the window).
  std::vector<double> residuals;
  /// k((d - boundary) / h) / h.
  std::vector<double> weights;
};

/// Condition-number ceiling for the scaled weighted design.
inline constexpr double kMaxCondition = 1e10;

/// Weighted least squares of y on 1, (d-b), ..., (d-b)^p with weights
/// k((d-b)/h)/h. Observations left of the boundary get weight zero.
LocalFit local_fit(std::span<const double> d, std::span<const double> y, const KernelSpec& kernel,
                   double h, int p, double boundary = 0.0);

/// Nearest-neighbour residuals: for each point, the scaled deviation of y from
/// the average of its `matches` closest neighbours in x (ties grouped).
/// `x` must be sorted ascending.
std::vector<double> nn_residuals(std::span<const double> x, std::span<const double> y, int matches = 3);

/// Local-linear boundary estimate with robust bias correction from a
/// local-quadratic fit at pilot bandwidth b.
struct BoundaryFit {
  /// Conventional estimate (intercept of the order-p fit at bandwidth h).
  double tau_cl = 0.0;
  /// Bias-corrected estimate; tau_cl - tau_bc is the estimated first-order bias.
  double tau_bc = 0.0;
  double se_cl = 0.0;
  /// Standard error of tau_bc, accounting for the bias estimate's variability.
  double se_rb = 0.0;
  double h = 0.0;
  double b = 0.0;
  /// Observations with positive weight at max(h, b).
  std::size_t n_eff = 0;
  /// Observations with positive weight at h.
  std::size_t n_h = 0;
  /// Second derivative of E[y|d] at the boundary from the bias fit.
  double curvature = 0.0;
};

/// Robust bias-corrected boundary estimator with nearest-neighbour variance.
/// Inputs need not be sorted.
BoundaryFit boundary_fit(std::span<const double> d, std::span<const double> y,
                         const KernelSpec& kernel, double h, double b, double boundary = 0.0,
                         int p = 1, int matches = 3);

namespace detail {

/// Weighted polynomial fit on already-selected window data (x = d - boundary).
/// Coordinates are scaled by `scale`, so coefficient j must be divided by
/// scale^j to get the raw coefficient.
struct ScaledFit {
  Eigen::MatrixXd design;  // (x/scale)^j
  Eigen::VectorXd weights;
  Eigen::MatrixXd gram_inv;
  Eigen::VectorXd coef;  // scaled coefficients
};

ScaledFit scaled_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                     int order, double scale, bool strict);

}  // namespace detail

}  // namespace had
