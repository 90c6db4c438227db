#include "had/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "had/error.hpp"
#include "had/local_poly.hpp"
#include "had/stats.hpp"

namespace had {

namespace {

double rot_constant(KernelName k) {
  switch (k) {
    case KernelName::uniform: return 1.843;
    case KernelName::triangular: return 2.576;
    case KernelName::epanechnikov: return 2.34;
  }
  return 2.34;
}

struct Window {
  Eigen::VectorXd x, y, w;
};

// Sorted prefix of observations with positive kernel weight at bandwidth h.
Window window(const std::vector<double>& xs, const std::vector<double>& ys, const KernelSpec& kernel,
              double h, bool divide_by_h) {
  std::vector<double> x, y, w;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double k = kernel(xs[i] / h);
    if (!(k > 0.0)) continue;
    x.push_back(xs[i]);
    y.push_back(ys[i]);
    w.push_back(divide_by_h ? k / h : k);
  }
  Window out;
  const auto n = static_cast<Eigen::Index>(x.size());
  out.x = Eigen::Map<Eigen::VectorXd>(x.data(), n);
  out.y = Eigen::Map<Eigen::VectorXd>(y.data(), n);
  out.w = Eigen::Map<Eigen::VectorXd>(w.data(), n);
  return out;
}

// Sandwich variance (scaled coordinates) of coefficient `j`, NN residuals.
double nn_sandwich(const detail::ScaledFit& fit, const Window& win, int j, int matches) {
  const std::vector<double> xv(win.x.data(), win.x.data() + win.x.size());
  const std::vector<double> yv(win.y.data(), win.y.data() + win.y.size());
  const auto res = nn_residuals(xv, yv, matches);
  const Eigen::Map<const Eigen::VectorXd> e(res.data(), static_cast<Eigen::Index>(res.size()));
  const Eigen::MatrixXd score = fit.design.array().colwise() * (win.w.array() * e.array());
  const Eigen::MatrixXd v = fit.gram_inv * (score.transpose() * score) * fit.gram_inv;
  return v(j, j);
}

struct PlugIn {
  double V = 0.0;
  double B1 = 0.0;
  double B2 = 0.0;
  double R = 0.0;
  double bw = 0.0;
  double lead_coef = 0.0;  // raw coefficient (o+1) from the first bias fit
};

// Variance and bias constants of the order-`o` estimator of derivative `nu`:
// variance from a fit at h_v, leading bias coefficient from an order-`o_b` fit
// at h_b1, next-order coefficient from an order-(o_b+1) fit at h_b2.
PlugIn plug_in(const std::vector<double>& xs, const std::vector<double>& ys, const KernelSpec& kernel,
               int o, int nu, int o_b, double h_v, double h_b1, double h_b2, double scale,
               int matches) {
  const std::size_t n_total = xs.size();
  const auto wv = window(xs, ys, kernel, h_v, true);
  const auto fit_v = detail::scaled_fit(wv.x, wv.y, wv.w, o, h_v, false);
  const double vv_scaled = nn_sandwich(fit_v, wv, nu, matches);

  const Eigen::VectorXd u = wv.x / h_v;
  const Eigen::VectorXd v1 = fit_v.design.transpose() * wv.w.cwiseProduct(u.array().pow(o + 1).matrix());
  const Eigen::VectorXd v2 = fit_v.design.transpose() * wv.w.cwiseProduct(u.array().pow(o + 2).matrix());
  const double bconst1 = (fit_v.gram_inv * v1)(nu);
  const double bconst2 = (fit_v.gram_inv * v2)(nu);

  const auto wb1 = window(xs, ys, kernel, h_b1, false);
  const auto fit_b1 = detail::scaled_fit(wb1.x, wb1.y, wb1.w, o_b, h_b1, false);
  const double beta_b1 = fit_b1.coef(o + 1) / std::pow(h_b1, o + 1);

  double reg = 0.0;
  if (scale > 0.0) {
    const double vb = nn_sandwich(fit_b1, wb1, o + 1, matches) / std::pow(h_b1, 2 * (o + 1));
    reg = 3.0 * bconst1 * bconst1 * vb;
  }

  const auto wb2 = window(xs, ys, kernel, h_b2, false);
  const auto fit_b2 = detail::scaled_fit(wb2.x, wb2.y, wb2.w, o_b + 1, h_b2, false);
  const double beta_b2 = fit_b2.coef(o + 2) / std::pow(h_b2, o + 2);

  PlugIn out;
  const double n = static_cast<double>(n_total);
  out.B1 = bconst1 * beta_b1;
  out.B2 = bconst2 * beta_b2;
  out.V = n * h_v * vv_scaled;
  out.R = reg;
  out.lead_coef = beta_b1;
  const double r_v = 2.0 * nu + 1.0;
  const double r_b = 2.0 * (o + 1 - nu);
  out.bw = std::pow(r_v * out.V / (n * r_b * (out.B1 * out.B1 + scale * out.R)), 1.0 / (2.0 * o + 3.0));
  return out;
}

double boundary_density(const std::vector<double>& xs) {
  // Histogram on [0, q20] with four bins; height of the bin touching the boundary.
  const double q = stats::quantile(xs, 0.2);
  if (!(q > 0.0)) return 0.0;
  const double width = q / 4.0;
  const auto count = std::count_if(xs.begin(), xs.end(), [&](double x) { return x >= 0.0 && x <= width; });
  return static_cast<double>(count) / (static_cast<double>(xs.size()) * width);
}

}  // namespace

double rule_of_thumb_bandwidth(std::span<const double> d, const KernelSpec& kernel,
                               const BandwidthOptions& options) {
  std::vector<double> xs(d.begin(), d.end());
  for (double& x : xs) x -= options.boundary;
  const double n = static_cast<double>(xs.size());
  const double iqr = stats::quantile(xs, 0.75) - stats::quantile(xs, 0.25);
  double h = rot_constant(kernel.name) * std::min(stats::sd(xs), iqr / 1.349) * std::pow(n, -0.2);
  if (!(h > 0.0)) h = stats::sd(xs) * std::pow(n, -0.2);
  const double bw_max = *std::max_element(xs.begin(), xs.end());
  std::vector<double> dist = xs;
  for (double& v : dist) v = std::abs(v);
  std::sort(dist.begin(), dist.end());
  const double bw_min = dist[std::min<std::size_t>(static_cast<std::size_t>(options.min_obs) - 1, dist.size() - 1)];
  return std::max(std::min(h, bw_max), bw_min);
}

BandwidthSelection select_bandwidth(std::span<const double> d, std::span<const double> y,
                                    const KernelSpec& kernel, const BandwidthOptions& options) {
  if (d.size() != y.size()) throw ValidationError("d and y differ in length");
  const std::size_t n = d.size();
  if (n < 3) throw ValidationError("bandwidth selection needs at least 3 observations");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = d[order[i]] - options.boundary;
    ys[i] = y[order[i]];
  }
  if (xs.front() < 0.0) throw ValidationError("doses below the boundary point");
  if (!(xs.back() > xs.front())) throw ValidationError("dose has zero variance");

  BandwidthSelection sel;
  sel.G = n;
  sel.f0_hat = boundary_density(xs);
  if (!(sel.f0_hat > 0.0)) sel.flags.emplace_back("boundary density zero");

  const double range = xs.back() - xs.front();
  const double bw_max = xs.back();
  std::vector<double> dist = xs;  // already |x| and sorted
  const double bw_min = dist[std::min<std::size_t>(static_cast<std::size_t>(options.min_obs) - 1, n - 1)];

  const double c_bw = rule_of_thumb_bandwidth(d, kernel, options);

  if (n < options.min_dpi_size) {
    sel.flags.emplace_back("rule-of-thumb fallback");
    sel.h_star = c_bw;
    sel.b_star = c_bw;
    const auto fit = local_fit(d, y, make_kernel(KernelName::uniform), bw_max * (1.0 + 1e-12), 2,
                               options.boundary);
    sel.m2_hat = 2.0 * fit.coefs[2];
    return sel;
  }

  constexpr int p = 1, q = 2, deriv = 0;
  const int m = options.nn_matches;
  auto clamp = [&](double h) {
    if (!std::isfinite(h)) h = bw_max;
    return std::max(std::min(h, bw_max), bw_min);
  };

  // Curvature pilots from global fits of order q+2 and q+3.
  const auto d1 = plug_in(xs, ys, kernel, q + 1, q + 1, q + 2, c_bw, range, range, 0.0, m);
  const auto d2 = plug_in(xs, ys, kernel, q + 2, q + 2, q + 3, c_bw, range, range, 0.0, m);
  const double bw_mp2 = clamp(d1.bw);
  const double bw_mp3 = clamp(d2.bw);

  const auto cb = plug_in(xs, ys, kernel, q, p + 1, q + 1, c_bw, bw_mp2, bw_mp3,
                          options.regularization, m);
  const double b = clamp(cb.bw);

  const auto ch = plug_in(xs, ys, kernel, p, deriv, q, c_bw, b, bw_mp2, options.regularization, m);
  double h = clamp(ch.bw);

  sel.m2_hat = 2.0 * ch.lead_coef;
  sel.bias_const = ch.B1;
  sel.variance_const = ch.V;
  sel.s2_hat = ch.V * sel.f0_hat / kernel.kstar_sq_int;

  const double tol = 1e-8 * stats::sd(ys) / (range * range);
  if (std::abs(sel.m2_hat) <= tol || !std::isfinite(sel.m2_hat)) {
    sel.flags.emplace_back("flat-curvature cap");
    h = bw_max;
  }
  sel.h_star = h;
  sel.b_star = std::max(b, h);
  return sel;
}

}  // namespace had
