#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "had/kernel.hpp"

namespace had {

/// Data-driven bandwidths for the boundary estimator.
struct BandwidthSelection {
  /// MSE-optimal bandwidth for the local-linear intercept.
  double h_star = 0.0;
  /// Pilot bandwidth for the local-quadratic bias fit; never below h_star.
  double b_star = 0.0;
  /// Estimated m''(boundary).
  double m2_hat = 0.0;
  /// Boundary density of the dose (histogram diagnostic).
  double f0_hat = 0.0;
  /// Implied boundary conditional variance, variance_const * f0_hat / kstar_sq_int.
  double s2_hat = 0.0;
  /// Plug-in variance constant: G h Var(mu_hat_h) at the pilot bandwidth.
  double variance_const = 0.0;
  /// Plug-in bias constant of mu_hat_h / h^2 (C m'' / 2 in the limit).
  double bias_const = 0.0;
  std::size_t G = 0;
  /// "flat-curvature cap", "boundary density zero", "rule-of-thumb fallback".
  std::vector<std::string> flags;
};

struct BandwidthOptions {
  double boundary = 0.0;
  /// Minimum number of observations inside every bandwidth.
  int min_obs = 21;
  /// Neighbours used by nearest-neighbour residuals.
  int nn_matches = 3;
  /// Weight on the bias-estimation variance term in the bandwidth denominator.
  double regularization = 1.0;
  /// Below this sample size a rule-of-thumb bandwidth is used.
  std::size_t min_dpi_size = 30;
};

/// Direct plug-in MSE-optimal bandwidth for the local-linear boundary
/// intercept: h* = {V / (G (C m'')^2)}^(1/5) with V and C m'' estimated from
/// pilot fits (global quartic and quintic for the curvature pilots, then a
/// local quadratic at the pilot bandwidth).
BandwidthSelection select_bandwidth(std::span<const double> d, std::span<const double> y,
                                    const KernelSpec& kernel, const BandwidthOptions& options = {});

/// Rule-of-thumb pilot: c_k * min(sd, IQR/1.349) * G^(-1/5), clamped to the data.
double rule_of_thumb_bandwidth(std::span<const double> d, const KernelSpec& kernel,
                               const BandwidthOptions& options = {});

}  // namespace had
