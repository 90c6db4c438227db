#include "had/linearity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "had/error.hpp"
#include "had/stats.hpp"

namespace had {

std::string to_string(TestMode mode) {
  return mode == TestMode::linearity ? "linearity" : "mean_independence";
}

namespace {

constexpr Eigen::Index kBlock = 64;

std::vector<std::size_t> dose_order(std::span<const double> d) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  return order;
}

Eigen::MatrixXd null_design(std::span<const double> d, const std::vector<std::size_t>& order, TestMode mode) {
  const auto n = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd x(n, mode == TestMode::linearity ? 2 : 1);
  x.col(0).setOnes();
  if (mode == TestMode::linearity) {
    for (Eigen::Index i = 0; i < n; ++i) x(i, 1) = d[order[static_cast<std::size_t>(i)]];
  }
  return x;
}

Eigen::VectorXd gather(std::span<const double> v, const std::vector<std::size_t>& order) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[order[i]];
  return out;
}

// Column-wise G^-2 * sum of squared cumulative sums (rows already in dose order).
Eigen::RowVectorXd cusum_cvm(const Eigen::MatrixXd& e) {
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(e.cols());
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    acc += e.row(i);
    out += acc.cwiseAbs2();
  }
  const double g = static_cast<double>(e.rows());
  return out / (g * g);
}

bool all_zero(const Eigen::VectorXd& e, const Eigen::VectorXd& y) {
  const double scale = y.cwiseAbs().maxCoeff();
  return e.cwiseAbs().maxCoeff() <= 1e-10 * scale;
}

// G x width matrix of two-point multipliers for draws [first, first + width).
Eigen::MatrixXd multipliers(Eigen::Index g, std::size_t first, Eigen::Index width, std::uint64_t seed) {
  Eigen::MatrixXd h(g, width);
  for (Eigen::Index c = 0; c < width; ++c) {
    auto rng = stats::stream(seed, first + static_cast<std::size_t>(c));
    for (Eigen::Index i = 0; i < g; ++i) h(i, c) = stats::TwoPoint::draw(rng);
  }
  return h;
}

// Residual-maker of the null regression applied to each column.
struct Projector {
  Eigen::MatrixXd x;
  Eigen::MatrixXd xtx_inv_xt;
  explicit Projector(Eigen::MatrixXd design) : x(std::move(design)) {
    const Eigen::MatrixXd xtx = x.transpose() * x;
    xtx_inv_xt = xtx.ldlt().solve(x.transpose());
  }
  Eigen::MatrixXd residualize(const Eigen::MatrixXd& m) const { return m - x * (xtx_inv_xt * m); }
};

StuteReport joint_sorted(const std::vector<std::size_t>& order, const Projector& proj,
                         const std::vector<Eigen::VectorXd>& ys, TestMode mode, std::size_t B,
                         std::uint64_t seed) {
  if (B < 99) throw ValidationError("bootstrap needs B >= 99");
  StuteReport rep;
  rep.B = B;
  rep.seed = seed;
  rep.mode = mode;
  rep.G = order.size();

  std::vector<Eigen::VectorXd> res;
  bool degenerate = true;
  for (const auto& y : ys) {
    Eigen::VectorXd e = proj.residualize(y);
    if (all_zero(e, y)) e.setZero();
    else degenerate = false;
    const double s = cusum_cvm(e)(0);
    rep.per_period_S.push_back(s);
    rep.S += s;
    res.push_back(std::move(e));
  }
  if (degenerate) {
    rep.degenerate = true;
    rep.p_value = 1.0;
    return rep;
  }

  const auto g = static_cast<Eigen::Index>(order.size());
  std::size_t exceed = 0;
  for (std::size_t first = 0; first < B; first += kBlock) {
    const Eigen::Index width = std::min<Eigen::Index>(kBlock, static_cast<Eigen::Index>(B - first));
    const Eigen::MatrixXd h = multipliers(g, first, width, seed);
    Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(width);
    for (const auto& e : res) {
      const Eigen::MatrixXd star = proj.residualize(h.array().colwise() * e.array());
      total += cusum_cvm(star);
    }
    for (Eigen::Index c = 0; c < width; ++c)
      if (total(c) > rep.S) ++exceed;
  }
  rep.p_value = static_cast<double>(exceed) / static_cast<double>(B);
  return rep;
}

void check_sizes(std::span<const double> d, std::span<const double> y, std::size_t min_g) {
  if (d.size() != y.size()) throw ValidationError("d and y differ in length");
  if (d.size() < min_g) {
    throw ValidationError("test needs at least " + std::to_string(min_g) + " observations");
  }
}

void check_design(std::span<const double> d, TestMode mode) {
  if (mode == TestMode::linearity && *std::min_element(d.begin(), d.end()) == *std::max_element(d.begin(), d.end())) {
    throw ValidationError("constant dose: linear regression is degenerate");
  }
}

}  // namespace

StuteStatistic stute_statistic(std::span<const double> d, std::span<const double> y, TestMode mode) {
  check_sizes(d, y, 3);
  check_design(d, mode);
  const auto order = dose_order(d);
  const Projector proj(null_design(d, order, mode));
  const Eigen::VectorXd e = proj.residualize(gather(y, order));
  StuteStatistic out;
  out.S = cusum_cvm(e)(0);
  out.residuals.resize(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) out.residuals[order[i]] = e(static_cast<Eigen::Index>(i));
  return out;
}

StuteReport stute_test(std::span<const double> d, std::span<const double> y, TestMode mode,
                       std::size_t B, std::uint64_t seed) {
  check_sizes(d, y, 10);
  check_design(d, mode);
  const auto order = dose_order(d);
  const Projector proj(null_design(d, order, mode));
  return joint_sorted(order, proj, {gather(y, order)}, mode, B, seed);
}

StuteReport stute_joint(std::span<const double> d, const std::vector<std::vector<double>>& outcomes,
                        TestMode mode, std::size_t B, std::uint64_t seed, std::vector<long> periods) {
  if (outcomes.empty()) throw ValidationError("joint test needs at least one outcome");
  for (const auto& y : outcomes) check_sizes(d, y, 10);
  check_design(d, mode);
  const auto order = dose_order(d);
  const Projector proj(null_design(d, order, mode));
  std::vector<Eigen::VectorXd> ys;
  for (const auto& y : outcomes) ys.push_back(gather(y, order));
  auto rep = joint_sorted(order, proj, ys, mode, B, seed);
  rep.periods = std::move(periods);
  return rep;
}

StuteReport stute_joint(const Panel& panel, const std::vector<long>& periods, TestMode mode,
                        std::size_t B, std::uint64_t seed, bool linear_trends) {
  if (periods.empty()) throw ValidationError("joint test needs at least one period");
  const long base = panel.base_period();
  std::vector<std::vector<double>> outcomes;
  for (long t : periods) {
    if (linear_trends) {
      const auto pre = panel.pre_periods();
      if (pre.size() < 2) throw ValidationError("linear trends need at least 2 pre-periods");
      outcomes.push_back(detrended_difference(panel, base, pre[pre.size() - 2], t));
    } else {
      outcomes.push_back(difference(panel, base, t).dy);
    }
  }
  return stute_joint(panel.unit_doses(), outcomes, mode, B, seed, periods);
}

double stute_covariate_statistic(std::span<const double> d, std::span<const double> residuals,
                                 std::span<const double> x, std::size_t k) {
  const std::size_t n = d.size();
  double s = 0.0;
  for (std::size_t g = 0; g < n; ++g) {
    double c = 0.0;
    for (std::size_t h = 0; h < n; ++h) {
      bool below = d[h] <= d[g];
      for (std::size_t j = 0; j < k && below; ++j) below = x[h * k + j] <= x[g * k + j];
      if (below) c += residuals[h];
    }
    s += c * c;
  }
  const double gn = static_cast<double>(n);
  return s / (gn * gn);
}

StuteReport stute_covariates(std::span<const double> d, std::span<const double> y,
                             std::span<const double> x, std::size_t k, std::size_t B,
                             std::uint64_t seed) {
  check_sizes(d, y, 10);
  if (x.size() != d.size() * k || k == 0) throw ValidationError("covariate matrix has wrong shape");
  if (B < 99) throw ValidationError("bootstrap needs B >= 99");
  const std::size_t n = d.size();
  const auto order = dose_order(d);
  const auto gn = static_cast<Eigen::Index>(n);
  const auto kk = static_cast<Eigen::Index>(k);

  Eigen::MatrixXd xs(gn, kk);
  Eigen::VectorXd ds(gn);
  for (Eigen::Index i = 0; i < gn; ++i) {
    const std::size_t g = order[static_cast<std::size_t>(i)];
    ds(i) = d[g];
    for (Eigen::Index j = 0; j < kk; ++j) xs(i, j) = x[g * k + static_cast<std::size_t>(j)];
  }
  Eigen::MatrixXd design(gn, 2 * kk);
  design << xs, xs.array().colwise() * ds.array();
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < design.cols()) throw ValidationError("covariate design (x, d*x) is collinear");
  }
  const Projector proj(design);
  const Eigen::VectorXd ysorted = gather(y, order);
  Eigen::VectorXd e = proj.residualize(ysorted);

  StuteReport rep;
  rep.B = B;
  rep.seed = seed;
  rep.G = n;
  if (all_zero(e, ysorted)) {
    rep.degenerate = true;
    rep.per_period_S = {0.0};
    return rep;
  }

  // Indicator rows are formed in chunks: row g holds 1{d_h <= d_g, x_h <= x_g}.
  constexpr Eigen::Index kRows = 256;
  auto statistic = [&](const Eigen::MatrixXd& res) {
    Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(res.cols());
    for (Eigen::Index r0 = 0; r0 < gn; r0 += kRows) {
      const Eigen::Index rows = std::min(kRows, gn - r0);
      Eigen::MatrixXd ind = Eigen::MatrixXd::Zero(rows, gn);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index g = r0 + r;
        for (Eigen::Index h = 0; h < gn; ++h) {
          bool below = ds(h) <= ds(g);
          for (Eigen::Index j = 0; j < kk && below; ++j) below = xs(h, j) <= xs(g, j);
          ind(r, h) = below ? 1.0 : 0.0;
        }
      }
      s += (ind * res).colwise().squaredNorm();
    }
    return Eigen::RowVectorXd(s / (static_cast<double>(gn) * static_cast<double>(gn)));
  };

  rep.S = statistic(e)(0);
  rep.per_period_S = {rep.S};
  std::size_t exceed = 0;
  for (std::size_t first = 0; first < B; first += kBlock) {
    const Eigen::Index width = std::min<Eigen::Index>(kBlock, static_cast<Eigen::Index>(B - first));
    const Eigen::MatrixXd h = multipliers(gn, first, width, seed);
    const Eigen::RowVectorXd s = statistic(proj.residualize(h.array().colwise() * e.array()));
    for (Eigen::Index c = 0; c < width; ++c)
      if (s(c) > rep.S) ++exceed;
  }
  rep.p_value = static_cast<double>(exceed) / static_cast<double>(B);
  return rep;
}

YatchewReport yatchew_components(std::span<const double> d, std::span<const double> y, TestMode mode) {
  check_sizes(d, y, 3);
  check_design(d, mode);
  const auto order = dose_order(d);
  const Projector proj(null_design(d, order, mode));
  const Eigen::VectorXd ys = gather(y, order);
  const Eigen::VectorXd e = proj.residualize(ys);
  const auto n = ys.size();
  const double gn = static_cast<double>(n);

  YatchewReport r;
  r.G = static_cast<std::size_t>(n);
  r.mode = mode;
  r.sig2_lin = e.squaredNorm() / gn;
  double diff = 0.0, w4 = 0.0;
  for (Eigen::Index g = 1; g < n; ++g) {
    diff += (ys(g) - ys(g - 1)) * (ys(g) - ys(g - 1));
    w4 += e(g) * e(g) * e(g - 1) * e(g - 1);
  }
  r.sig2_diff = diff / (2.0 * gn);
  r.sigW4_hat = w4 / (gn - 1.0);
  if (!(r.sigW4_hat > 0.0) || all_zero(e, ys)) {
    r.degenerate = true;
    r.T_hr = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.T_hr = std::sqrt(gn) * (r.sig2_lin - r.sig2_diff) / std::sqrt(r.sigW4_hat);
  r.p_value = 1.0 - stats::normal_cdf(r.T_hr);
  if (r.sig2_diff > 0.0) {
    r.T_homoskedastic = std::sqrt(gn) * (r.sig2_lin / r.sig2_diff - 1.0);
    r.p_value_homoskedastic = 1.0 - stats::normal_cdf(r.T_homoskedastic);
  }
  return r;
}

YatchewReport yatchew_test(std::span<const double> d, std::span<const double> y, double alpha,
                           TestMode mode) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  check_sizes(d, y, 20);
  auto r = yatchew_components(d, y, mode);
  r.alpha = alpha;
  r.reject = !r.degenerate && r.T_hr >= stats::normal_quantile(1.0 - alpha);
  return r;
}

TestReport poly_test_discrete(std::span<const double> d, std::span<const double> y, TestMode mode) {
  check_sizes(d, y, 3);
  const std::set<double> levels(d.begin(), d.end());
  const std::size_t k = levels.size();
  if (mode == TestMode::linearity && k == 2) {
    throw ValidationError("dose takes 2 values: E[dy|d] is trivially linear, no room for testability");
  }
  if (k < 2 || (mode == TestMode::linearity && k < 3)) throw ValidationError("too few distinct dose values");
  if (k > 20) throw ValidationError("more than 20 distinct dose values; use a continuous-dose test");
  for (double level : levels) {
    if (std::count(d.begin(), d.end(), level) < 2) {
      throw ValidationError("each dose value needs at least 2 observations");
    }
  }

  const auto n = static_cast<Eigen::Index>(d.size());
  const double m = stats::mean(d);
  const double s = stats::sd(d);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(k));
  Eigen::VectorXd yy(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = (d[static_cast<std::size_t>(i)] - m) / s;
    x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < x.cols(); ++j) x(i, j) = x(i, j - 1) * z;
    yy(i) = y[static_cast<std::size_t>(i)];
  }
  const auto fit = stats::ols(x, yy);
  const Eigen::MatrixXd v = stats::hc2_covariance(x, fit);

  const Eigen::Index first = mode == TestMode::linearity ? 2 : 1;
  const Eigen::Index r = x.cols() - first;
  const Eigen::VectorXd gamma = fit.coef.segment(first, r);
  const Eigen::MatrixXd vr = v.block(first, first, r, r);

  TestReport rep;
  rep.method = "poly";
  rep.mode = mode;
  rep.G = d.size();
  rep.K = k;
  rep.df = static_cast<double>(r);
  const double scale = std::max(1.0, yy.cwiseAbs().maxCoeff());
  if (gamma.cwiseAbs().maxCoeff() <= 1e-12 * scale) {
    rep.statistic = 0.0;
    rep.p_value = 1.0;
    return rep;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(vr);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
    rep.statistic = std::numeric_limits<double>::infinity();
    rep.p_value = 0.0;
    return rep;
  }
  rep.statistic = gamma.dot(ldlt.solve(gamma));
  rep.p_value = stats::chi2_sf(rep.statistic, rep.df);
  return rep;
}

}  // namespace had
