#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "had/bandwidth.hpp"
#include "had/kernel.hpp"
#include "had/panel.hpp"

namespace had {

enum class WasMode { qug, shifted, mass_point };
std::string to_string(WasMode mode);

/// Point estimate of the weighted average slope with its bias-corrected interval.
struct WasEstimate {
  double beta = 0.0;
  /// Boundary estimate of E[dy | d] (conventional, not bias corrected).
  double mu0_hat = 0.0;
  /// Estimated first-order bias of mu0_hat divided by mean(d); the interval is
  /// centred on beta + bias_hat.
  double bias_hat = 0.0;
  /// Variance of beta + bias_hat.
  double var_hat = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double alpha = 0.05;
  double h_used = 0.0;
  double b_used = 0.0;
  std::size_t n_eff = 0;
  double boundary = 0.0;
  double mean_d = 0.0;
  double mean_dy = 0.0;
  std::size_t G = 0;
  WasMode mode = WasMode::qug;
  /// mean(d) / min(d); reported in shifted mode.
  std::optional<double> dose_ratio;
  std::optional<BandwidthSelection> bandwidth;
  std::vector<std::string> warnings;
};

struct WasOptions {
  KernelSpec kernel = make_kernel(KernelName::epanechnikov);
  double alpha = 0.05;
  /// Fixed main bandwidth; skips data-driven selection.
  std::optional<double> bandwidth;
  /// Use b = h for the bias fit (default); otherwise b = b_star.
  bool rho1 = true;
  BandwidthOptions bw_options;
  /// Relative tolerance when matching doses to the minimum (mass-point mode).
  double mass_tol = 0.0;
};

/// Estimator for designs with a quasi-untreated group (boundary 0):
/// beta = (mean(dy) - mu_hat) / mean(d).
WasEstimate estimate_was(const DifferencedSample& sample, const WasOptions& options = {});

/// Same estimator with the boundary moved to min(d): targets the slope relative
/// to the lowest dose when no quasi-untreated group exists.
WasEstimate estimate_shifted(const DifferencedSample& sample, const WasOptions& options = {});

/// Ratio estimator when a positive share of units sits exactly at the lowest dose:
/// [mean(dy | d > dmin) - mean(dy | d = dmin)] / [mean(d | d > dmin) - dmin].
WasEstimate estimate_mass_point(const DifferencedSample& sample, const WasOptions& options = {});

/// Number of units whose dose matches min(d) within the relative tolerance.
std::size_t mass_point_count(const std::vector<double>& d, double tol = 0.0);

struct EventStudyPoint {
  long period = 0;
  bool is_pretrend = false;
  WasEstimate estimate;
};

/// Long-difference estimates Y_t - Y_{F-1} against the post-treatment dose for
/// every post period (up to `horizons`) and pre period (last `pre_periods`).
/// Bandwidths are selected per period.
std::vector<EventStudyPoint> event_study(const Panel& panel, const WasOptions& options = {},
                                         std::optional<std::size_t> horizons = {},
                                         std::optional<std::size_t> pre_periods = {},
                                         WasMode mode = WasMode::qug);

}  // namespace had
