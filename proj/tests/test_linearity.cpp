#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "had/error.hpp"
#include "had/linearity.hpp"
#include "had/sim.hpp"
#include "had/stats.hpp"
#include "support.hpp"

using had::TestMode;

namespace {

std::vector<double> ols_residuals(const std::vector<double>& d, const std::vector<double>& y, bool slope) {
  const auto n = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd x(n, slope ? 2 : 1);
  Eigen::VectorXd yy(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    if (slope) x(i, 1) = d[static_cast<std::size_t>(i)];
    yy(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd b = x.colPivHouseholderQr().solve(yy);
  const Eigen::VectorXd e = yy - x * b;
  return {e.data(), e.data() + e.size()};
}

// S = G^-2 sum_g (sum_h 1{d_h <= d_g} e_h)^2 by direct double loop (distinct doses).
double naive_stute(const std::vector<double>& d, const std::vector<double>& e) {
  const std::size_t n = d.size();
  double s = 0.0;
  for (std::size_t g = 0; g < n; ++g) {
    double c = 0.0;
    for (std::size_t h = 0; h < n; ++h)
      if (d[h] <= d[g]) c += e[h];
    s += c * c;
  }
  return s / (static_cast<double>(n) * static_cast<double>(n));
}

double naive_covariate(const std::vector<double>& d, const std::vector<double>& e, const std::vector<double>& x,
                       std::size_t k) {
  const std::size_t n = d.size();
  double s = 0.0;
  for (std::size_t g = 0; g < n; ++g) {
    double c = 0.0;
    for (std::size_t h = 0; h < n; ++h) {
      bool in = d[h] <= d[g];
      for (std::size_t j = 0; j < k; ++j) in = in && x[h * k + j] <= x[g * k + j];
      if (in) c += e[h];
    }
    s += c * c;
  }
  return s / (static_cast<double>(n) * static_cast<double>(n));
}

}  // namespace

TEST_CASE("two-point multiplier moments") {
  using T = had::stats::TwoPoint;
  const double p = T::kProbHigh;
  CHECK(std::abs(p * T::kHigh + (1 - p) * T::kLow) < 1e-15);
  CHECK(std::abs(p * T::kHigh * T::kHigh + (1 - p) * T::kLow * T::kLow - 1.0) < 1e-15);
  CHECK(std::abs(p * std::pow(T::kHigh, 3) + (1 - p) * std::pow(T::kLow, 3) - 1.0) < 1e-14);
}

TEST_CASE("Stute statistic by hand") {
  const std::vector<double> d{1, 2, 3}, y{0, 1, 0};
  const auto s = had::stute_statistic(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
                                      std::vector<double>{1, 3, 5, 7, 9, 11, 13, 15, 17, 19});
  CHECK(s.S < 1e-28);
  const auto h = had::stute_statistic(d, y);
  CHECK(h.S == doctest::Approx(2.0 / 81).epsilon(1e-14));
  CHECK(h.residuals[0] == doctest::Approx(-1.0 / 3));
  CHECK(h.residuals[1] == doctest::Approx(2.0 / 3));
  CHECK(naive_stute(d, ols_residuals(d, y, true)) == doctest::Approx(2.0 / 81).epsilon(1e-14));
  CHECK_THROWS_AS(had::stute_test(d, y), had::ValidationError);
  // Same residual pattern repeated at scale: the hand value survives embedding in a G = 12 sample.
  std::vector<double> dd, yy;
  for (int b = 0; b < 4; ++b)
    for (int i = 0; i < 3; ++i) {
      dd.push_back(3.0 * b + i + 1);
      yy.push_back(i == 1 ? 1.0 : 0.0);
    }
  const auto st = had::stute_statistic(dd, yy, TestMode::mean_independence);
  CHECK(std::abs(st.S - naive_stute(dd, ols_residuals(dd, yy, false))) < 1e-14);
}

TEST_CASE("vectorised statistic equals the loop oracle") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 100; ++rep) {
    const auto d = test::uniform(rng, 200);
    auto y = test::normal(rng, 200);
    for (std::size_t i = 0; i < d.size(); ++i) y[i] += std::sin(3 * d[i]);
    for (auto mode : {TestMode::linearity, TestMode::mean_independence}) {
      const auto s = had::stute_statistic(d, y, mode);
      const double o = naive_stute(d, ols_residuals(d, y, mode == TestMode::linearity));
      CHECK(std::abs(s.S - o) < 1e-12);
    }
  }
}

TEST_CASE("statistic invariant to adding a line in linearity mode") {
  std::mt19937_64 rng(3);
  const auto d = test::uniform(rng, 100);
  const auto y = test::normal(rng, 100);
  auto z = y;
  for (std::size_t i = 0; i < d.size(); ++i) z[i] += 4.0 - 7.0 * d[i];
  CHECK(std::abs(had::stute_statistic(d, y).S - had::stute_statistic(d, z).S) < 1e-12);
}

TEST_CASE("bootstrap is deterministic and invariant to row order") {
  std::mt19937_64 rng(5);
  const auto d = test::uniform(rng, 150);
  auto y = test::normal(rng, 150);
  for (std::size_t i = 0; i < d.size(); ++i) y[i] += d[i] * d[i];
  const auto a = had::stute_test(d, y, TestMode::linearity, 300, 99);
  const auto b = had::stute_test(d, y, TestMode::linearity, 300, 99);
  CHECK(a.p_value == b.p_value);
  CHECK(a.S == b.S);
  std::vector<std::size_t> perm(d.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> dp, yp;
  for (auto i : perm) {
    dp.push_back(d[i]);
    yp.push_back(y[i]);
  }
  const auto c = had::stute_test(dp, yp, TestMode::linearity, 300, 99);
  CHECK(c.p_value == a.p_value);
  CHECK(std::abs(c.S - a.S) < 1e-12);
  CHECK(a.p_value >= 0.0);
  CHECK(a.p_value <= 1.0);
  CHECK(a.B == 300);
  CHECK_THROWS_AS(had::stute_test(d, y, TestMode::linearity, 50), had::ValidationError);
}

TEST_CASE("degenerate and joint cases") {
  std::vector<double> d(20), y(20), z(20);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = 0.05 * static_cast<double>(i + 1);
    y[i] = 1.0 + 2.0 * d[i];
    z[i] = -3.0 * d[i];
  }
  const auto r = had::stute_test(d, y);
  CHECK(r.S == 0.0);
  CHECK(r.p_value == 1.0);
  CHECK(r.degenerate);
  const auto j = had::stute_joint(d, {y, z}, TestMode::linearity, 200, 1);
  CHECK(j.S == 0.0);
  CHECK(j.p_value == 1.0);

  std::mt19937_64 rng(6);
  const auto dd = test::uniform(rng, 80);
  const auto e = test::normal(rng, 80);
  const auto single = had::stute_test(dd, e, TestMode::linearity, 200, 4);
  const auto joint = had::stute_joint(dd, {e}, TestMode::linearity, 200, 4);
  CHECK(single.S == joint.S);
  CHECK(single.p_value == joint.p_value);
  const auto e2 = test::normal(rng, 80);
  const auto two = had::stute_joint(dd, {e, e2}, TestMode::linearity, 200, 4);
  CHECK(two.per_period_S.size() == 2);
  CHECK(two.S == doctest::Approx(two.per_period_S[0] + two.per_period_S[1]).epsilon(1e-14));
}

TEST_CASE("panel joint test with linear trends") {
  std::mt19937_64 rng(8);
  const std::size_t n = 60;
  const auto dose = test::uniform(rng, n, 0.1, 1.0);
  std::vector<std::vector<double>> y(n, std::vector<double>(5));
  for (std::size_t g = 0; g < n; ++g) {
    const double a = std::normal_distribution<double>()(rng), b = std::normal_distribution<double>()(rng);
    for (std::size_t t = 0; t < 5; ++t) y[g][t] = a + b * static_cast<double>(t) + (t >= 3 ? 0.5 * dose[g] : 0.0);
  }
  const auto p = test::panel_from_csv(test::grid_csv(y, dose, 3));
  const auto r = had::stute_joint(p, {4, 5}, TestMode::linearity, 200, 3, true);
  CHECK(r.S < 1e-20);
  CHECK(r.p_value == 1.0);
  CHECK(r.periods == std::vector<long>{4, 5});
}

TEST_CASE("covariate statistic equals the triple-loop oracle") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 5; ++rep) {
    const std::size_t n = 100, k = 3;
    const auto d = test::uniform(rng, n);
    const auto x1 = test::normal(rng, n);
    const auto x2 = test::uniform(rng, n);
    auto y = test::normal(rng, n);
    std::vector<double> x(n * k);
    for (std::size_t i = 0; i < n; ++i) {
      x[i * k] = 1.0;
      x[i * k + 1] = x1[i];
      x[i * k + 2] = x2[i];
      y[i] += d[i] * x1[i];
    }
    const auto r = had::stute_covariates(d, y, x, k, 199, 7);
    // Residuals from y on (x, d x) for the oracle.
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), 6);
    Eigen::VectorXd yy(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[i * k + j];
        z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + k)) = d[i] * x[i * k + j];
      }
      yy(static_cast<Eigen::Index>(i)) = y[i];
    }
    const Eigen::VectorXd e = yy - z * z.colPivHouseholderQr().solve(yy);
    const std::vector<double> ev(e.data(), e.data() + e.size());
    const double o = naive_covariate(d, ev, x, k);
    CHECK(std::abs(r.S - o) < 1e-12);
    CHECK(std::abs(had::stute_covariate_statistic(d, ev, x, k) - o) < 1e-12);
  }
}

TEST_CASE("covariate test with intercept only reduces to the plain statistic") {
  std::mt19937_64 rng(32);
  const auto d = test::uniform(rng, 90);
  const auto y = test::normal(rng, 90);
  const std::vector<double> one(90, 1.0);
  const auto c = had::stute_covariates(d, y, one, 1, 199, 1);
  CHECK(std::abs(c.S - had::stute_statistic(d, y).S) < 1e-12);
  std::vector<double> lin(90);
  for (std::size_t i = 0; i < 90; ++i) lin[i] = 2.0 - d[i];
  CHECK(had::stute_covariates(d, lin, one, 1, 199, 1).S == 0.0);
  std::vector<double> dup(180);
  for (std::size_t i = 0; i < 90; ++i) dup[2 * i] = dup[2 * i + 1] = 1.0;
  CHECK_THROWS_AS(had::stute_covariates(d, y, dup, 2, 199, 1), had::ValidationError);
}

TEST_CASE("Yatchew components by hand") {
  const auto r = had::yatchew_components(std::vector<double>{1, 2, 3}, std::vector<double>{0, 1, 0});
  CHECK(r.sig2_diff == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(r.sigW4_hat == doctest::Approx(4.0 / 81).epsilon(1e-14));
  CHECK(r.sig2_lin == doctest::Approx(2.0 / 9).epsilon(1e-14));
  CHECK(r.T_hr == doctest::Approx(std::sqrt(3.0) * (2.0 / 9 - 1.0 / 3) / std::sqrt(4.0 / 81)).epsilon(1e-12));
}

TEST_CASE("Yatchew invariance, degeneracy and preconditions") {
  std::mt19937_64 rng(40);
  const auto d = test::uniform(rng, 300);
  auto y = test::normal(rng, 300);
  for (std::size_t i = 0; i < d.size(); ++i) y[i] += d[i] * d[i];
  const auto a = had::yatchew_test(d, y);
  for (double s : {0.1, 7.0}) {
    auto z = y;
    for (auto& v : z) v = s * v + 3.0;
    CHECK(std::abs(had::yatchew_test(d, z).T_hr - a.T_hr) < 1e-10);
  }
  CHECK(a.p_value == doctest::Approx(1.0 - had::stats::normal_cdf(a.T_hr)).epsilon(1e-15));
  CHECK(a.reject == (a.T_hr >= had::stats::normal_quantile(0.95)));
  std::vector<double> lin(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) lin[i] = 1.0 + 2.0 * d[i];
  const auto g = had::yatchew_test(d, lin);
  CHECK(g.degenerate);
  CHECK(g.p_value == 1.0);
  CHECK_FALSE(g.reject);
  CHECK_THROWS_AS(had::yatchew_test(std::vector<double>(10, 1.0), std::vector<double>(10, 1.0)), had::ValidationError);
}

TEST_CASE("discrete polynomial test") {
  std::vector<double> d, y;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 10; ++i) {
      d.push_back(c);
      y.push_back(1.0 + 2.0 * c);
    }
  const auto r = had::poly_test_discrete(d, y);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
  CHECK(r.K == 3);
  CHECK(r.df == 1.0);

  std::vector<double> d2, y2;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 5; ++i) {
      d2.push_back(c);
      y2.push_back(i);
    }
  CHECK_THROWS_WITH_AS(had::poly_test_discrete(d2, y2), doctest::Contains("no room for testability"),
                       had::ValidationError);
  CHECK(had::poly_test_discrete(d2, y2, TestMode::mean_independence).df == 1.0);

  // Cell means (0, 0, 1) with many observations per cell: rejects.
  std::mt19937_64 rng(50);
  int rejections = 0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> dd, yy;
    for (int c = 0; c < 3; ++c) {
      const auto e = test::normal(rng, 200);
      for (double v : e) {
        dd.push_back(c);
        yy.push_back((c == 2 ? 1.0 : 0.0) + v);
      }
    }
    if (had::poly_test_discrete(dd, yy).p_value < 0.05) ++rejections;
  }
  CHECK(rejections == 50);
}

TEST_CASE("robust Yatchew statistic is standard normal under a homoskedastic null") {
  had::DgpSpec s;
  s.id = had::DgpId::custom;
  s.G = 1000;
  s.seed = 404;
  s.params = {{"mu0", 1.0}, {"c1", 2.0}};
  const std::size_t reps = 2000;
  std::vector<double> t;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto draw = had::draw_dgp(s, r);
    t.push_back(had::yatchew_test(draw.d, draw.dy).T_hr);
  }
  std::sort(t.begin(), t.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < reps; ++i) {
    const double f = 0.5 * std::erfc(-t[i] / std::sqrt(2.0));
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / reps), std::abs(f - static_cast<double>(i + 1) / reps)});
  }
  MESSAGE("KS distance " << ks);
  CHECK(ks < 1.628 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("polynomial Wald statistic matches a statsmodels HC2 fit on the discrete fixture") {
  const auto panel = had::load_panel_file(std::string(HAD_TEST_DATA) + "/discrete.csv");
  const auto s = had::difference(panel, 1, 2);
  const auto r = had::poly_test_discrete(s.d, s.dy);
  // statsmodels OLS(cov_type="HC2").wald_test on powers 2..4 of the standardized dose.
  CHECK(r.statistic == doctest::Approx(13.221795456294688).epsilon(1e-10));
  CHECK(r.p_value == doctest::Approx(0.004180704021081886).epsilon(1e-8));
  CHECK(r.df == 3.0);
  CHECK(r.K == 5);
}
