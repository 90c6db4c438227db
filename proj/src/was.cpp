#include "had/was.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "had/error.hpp"
#include "had/local_poly.hpp"
#include "had/stats.hpp"

namespace had {

std::string to_string(WasMode mode) {
  switch (mode) {
    case WasMode::qug: return "qug";
    case WasMode::shifted: return "shifted";
    case WasMode::mass_point: return "mass_point";
  }
  return "unknown";
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 0.5)) throw ValidationError("alpha must lie in (0, 0.5]");
}

}  // namespace

WasEstimate estimate_was(const DifferencedSample& sample, const WasOptions& options) {
  check_alpha(options.alpha);
  const auto& d = sample.d;
  const auto& dy = sample.dy;
  if (d.size() != dy.size() || d.size() < 3) throw ValidationError("sample needs at least 3 units");
  if (*std::min_element(d.begin(), d.end()) < 0.0) throw ValidationError("negative dose");

  WasEstimate est;
  est.mode = WasMode::qug;
  est.alpha = options.alpha;
  est.G = d.size();
  est.mean_d = stats::mean(d);
  est.mean_dy = stats::mean(dy);
  if (!(est.mean_d > 0.0)) throw ValidationError("mean dose must be positive");

  double h = 0.0;
  double b = 0.0;
  if (options.bandwidth) {
    h = *options.bandwidth;
    if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("bandwidth must be positive");
    b = h;
  } else {
    BandwidthOptions bw_opts = options.bw_options;
    bw_opts.boundary = 0.0;
    auto sel = select_bandwidth(d, dy, options.kernel, bw_opts);
    h = sel.h_star;
    b = options.rho1 ? h : sel.b_star;
    for (const auto& f : sel.flags) est.warnings.push_back(f);
    est.bandwidth = std::move(sel);
  }

  const auto fit = boundary_fit(d, dy, options.kernel, h, b, 0.0, 1, options.bw_options.nn_matches);
  est.h_used = h;
  est.b_used = b;
  est.n_eff = fit.n_h;
  est.boundary = 0.0;
  est.mu0_hat = fit.tau_cl;
  est.beta = (est.mean_dy - fit.tau_cl) / est.mean_d;
  est.bias_hat = (fit.tau_cl - fit.tau_bc) / est.mean_d;
  est.se = fit.se_rb / est.mean_d;
  est.var_hat = est.se * est.se;
  const double z = stats::normal_quantile(1.0 - options.alpha / 2.0);
  const double centre = est.beta + est.bias_hat;
  est.ci_low = centre - z * est.se;
  est.ci_high = centre + z * est.se;
  return est;
}

WasEstimate estimate_shifted(const DifferencedSample& sample, const WasOptions& options) {
  const double dmin = *std::min_element(sample.d.begin(), sample.d.end());
  if (!(dmin > 0.0)) {
    throw ValidationError("shifted estimator needs min(d) > 0; units at zero dose form an untreated group");
  }
  DifferencedSample shifted = sample;
  for (double& v : shifted.d) v -= dmin;
  WasEstimate est = estimate_was(shifted, options);
  est.mode = WasMode::shifted;
  est.boundary = dmin;
  est.dose_ratio = stats::mean(sample.d) / dmin;
  return est;
}

std::size_t mass_point_count(const std::vector<double>& d, double tol) {
  const double dmin = *std::min_element(d.begin(), d.end());
  return static_cast<std::size_t>(std::count_if(
      d.begin(), d.end(), [&](double v) { return v - dmin <= tol * std::abs(dmin); }));
}

WasEstimate estimate_mass_point(const DifferencedSample& sample, const WasOptions& options) {
  check_alpha(options.alpha);
  const auto& d = sample.d;
  const auto& dy = sample.dy;
  const double dmin = *std::min_element(d.begin(), d.end());
  const double tol = options.mass_tol * std::abs(dmin);

  std::vector<double> y0, d0, y1, d1;
  for (std::size_t g = 0; g < d.size(); ++g) {
    if (d[g] - dmin <= tol) {
      y0.push_back(dy[g]);
      d0.push_back(d[g]);
    } else {
      y1.push_back(dy[g]);
      d1.push_back(d[g]);
    }
  }
  if (y0.size() < 2) {
    throw ValidationError("no mass point at the lowest dose (fewer than 2 units); use the shifted estimator");
  }
  if (y1.size() < 2) throw ValidationError("fewer than 2 units above the mass point");

  auto cov = [](const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = stats::mean(a), mb = stats::mean(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(a.size() - 1) / static_cast<double>(a.size());
  };

  const double num = stats::mean(y1) - stats::mean(y0);
  const double den = stats::mean(d1) - stats::mean(d0);
  if (!(den > 0.0)) throw ValidationError("empty dose contrast between cells");

  WasEstimate est;
  est.mode = WasMode::mass_point;
  est.alpha = options.alpha;
  est.G = d.size();
  est.mean_d = stats::mean(d);
  est.mean_dy = stats::mean(dy);
  est.boundary = dmin;
  est.mu0_hat = stats::mean(y0);
  est.n_eff = y0.size();
  est.beta = num / den;
  // Delta method over the cell means; cells are independent.
  const double var_num = cov(y1, y1) + cov(y0, y0);
  const double var_den = cov(d1, d1) + cov(d0, d0);
  const double cov_nd = cov(y1, d1) + cov(y0, d0);
  est.var_hat = std::max(0.0, (var_num - 2.0 * est.beta * cov_nd + est.beta * est.beta * var_den) / (den * den));
  est.se = std::sqrt(est.var_hat);
  const double z = stats::normal_quantile(1.0 - options.alpha / 2.0);
  est.ci_low = est.beta - z * est.se;
  est.ci_high = est.beta + z * est.se;
  return est;
}

std::vector<EventStudyPoint> event_study(const Panel& panel, const WasOptions& options,
                                         std::optional<std::size_t> horizons,
                                         std::optional<std::size_t> pre_periods, WasMode mode) {
  const long base = panel.base_period();
  auto run = [&](long target) {
    const auto sample = difference(panel, base, target);
    switch (mode) {
      case WasMode::shifted: return estimate_shifted(sample, options);
      case WasMode::mass_point: return estimate_mass_point(sample, options);
      case WasMode::qug: break;
    }
    return estimate_was(sample, options);
  };

  std::vector<EventStudyPoint> out;
  auto pre = panel.pre_periods();
  pre.pop_back();  // the base period itself
  const std::size_t n_pre = std::min(pre.size(), pre_periods.value_or(pre.size()));
  for (std::size_t i = pre.size() - n_pre; i < pre.size(); ++i) {
    out.push_back({pre[i], true, run(pre[i])});
  }
  const auto post = panel.post_periods();
  const std::size_t n_post = std::min(post.size(), horizons.value_or(post.size()));
  for (std::size_t i = 0; i < n_post; ++i) out.push_back({post[i], false, run(post[i])});
  return out;
}

}  // namespace had
