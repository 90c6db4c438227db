#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "had/error.hpp"
#include "had/sim.hpp"
#include "had/stats.hpp"

namespace {

struct ThreadEnv {
  explicit ThreadEnv(const char* n) { setenv("HAD_THREADS", n, 1); }
  ~ThreadEnv() { unsetenv("HAD_THREADS"); }
};

had::DgpSpec spec(had::DgpId id, std::size_t g, std::uint64_t seed) {
  had::DgpSpec s;
  s.id = id;
  s.G = g;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("draws depend only on seed and replication index") {
  const auto s = spec(had::DgpId::dgp1, 50, 11);
  const auto a = had::draw_dgp(s, 3), b = had::draw_dgp(s, 3), c = had::draw_dgp(s, 4);
  CHECK(a.d == b.d);
  CHECK(a.dy == b.dy);
  CHECK(a.d != c.d);
  auto other = s;
  other.seed = 12;
  CHECK(had::draw_dgp(other, 3).d != a.d);
}

TEST_CASE("study results do not depend on the thread count") {
  const auto s = spec(had::DgpId::dgp1, 100, 5);
  had::McResult one, four;
  {
    ThreadEnv env("1");
    one = had::run_coverage_study(s, 120);
  }
  {
    ThreadEnv env("4");
    CHECK(had::thread_count() == 4);
    four = had::run_coverage_study(s, 120);
  }
  CHECK(one.mean_estimate == four.mean_estimate);
  CHECK(one.coverage == four.coverage);
  CHECK(one.sd_estimate == four.sd_estimate);
}

TEST_CASE("split replications pool to the single-run counts") {
  auto s = spec(had::DgpId::dgp2, 100, 9);
  const auto whole = had::run_coverage_study(s, 400);
  const auto first = had::run_coverage_study(s, 200);
  s.first_replication = 200;
  const auto second = had::run_coverage_study(s, 200);
  const double hits_whole = whole.coverage * static_cast<double>(whole.replications);
  const double hits_split = first.coverage * 200.0 + second.coverage * 200.0;
  CHECK(std::abs(hits_whole - std::round(hits_whole)) < 1e-9);
  CHECK(std::round(hits_whole) == std::round(hits_split));
  CHECK(std::abs(whole.mean_estimate - 0.5 * (first.mean_estimate + second.mean_estimate)) < 1e-12);

  auto t = spec(had::DgpId::custom, 60, 4);
  const auto rw = had::run_rejection_study(had::SimTest::stute, t, 40, 0.05, {.B = 99});
  const auto r1 = had::run_rejection_study(had::SimTest::stute, t, 20, 0.05, {.B = 99});
  t.first_replication = 20;
  const auto r2 = had::run_rejection_study(had::SimTest::stute, t, 20, 0.05, {.B = 99});
  CHECK(std::round(rw.rejection_rate * 40) == std::round(r1.rejection_rate * 20 + r2.rejection_rate * 20));
}

TEST_CASE("mc_se matches the binomial formula") {
  const auto r = had::run_coverage_study(spec(had::DgpId::dgp1, 100, 2), 150);
  const double p = r.coverage;
  CHECK(r.mc_se == doctest::Approx(std::sqrt(p * (1 - p) / 150.0)).epsilon(1e-14));
  CHECK(r.failures == 0);
  CHECK(r.replications == 150);
}

TEST_CASE("coverage study precondition and pilot") {
  const auto s = spec(had::DgpId::dgp1, 100, 1);
  CHECK_THROWS_AS(had::run_coverage_study(s, 50), had::ValidationError);
  const auto p = had::run_coverage_pilot(s, 50);
  CHECK(p.replications == 50);
  CHECK(p.coverage >= 0.0);
  CHECK(p.coverage <= 1.0);
}

TEST_CASE("dose laws match their distribution functions") {
  const std::size_t n = 20000;
  auto s1 = spec(had::DgpId::dgp2, n, 3);
  auto s3 = spec(had::DgpId::dgp3_synthetic, n, 3);
  const auto d2 = had::draw_dgp(s1, 0).d;
  const auto d3 = had::draw_dgp(s3, 0).d;
  // Kolmogorov distance against the exact CDFs; 1.63 / sqrt(n) is the 1% critical value.
  auto ks = [&](std::vector<double> v, auto cdf) {
    std::sort(v.begin(), v.end());
    double dist = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double f = cdf(v[i]);
      dist = std::max({dist, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
    }
    return dist;
  };
  const double crit = 1.63 / std::sqrt(static_cast<double>(n));
  CHECK(ks(d2, [](double x) { return x * x * (3 - 2 * x); }) < crit);
  CHECK(ks(d3, [](double x) { return boost::math::ibeta(2.0, 5.0, x - 0.02); }) < crit);
  CHECK(*std::min_element(d3.begin(), d3.end()) > 0.02);
}

TEST_CASE("Beta(2,2) draws invert the distribution function") {
  // The dose of replication r equals the quantile of an open-interval uniform, so
  // F(d) lies in (0, 1) and the draws of dgp1 and dgp2 share ranks.
  const auto a = had::draw_dgp(spec(had::DgpId::dgp1, 200, 8), 0).d;
  const auto b = had::draw_dgp(spec(had::DgpId::dgp2, 200, 8), 0).d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i] * b[i] * (3 - 2 * b[i]) == doctest::Approx(a[i]).epsilon(1e-12));
  }
}

TEST_CASE("true WAS anchors and custom moments") {
  CHECK(had::true_was(spec(had::DgpId::dgp1, 100, 0)) == 5.0 / 3.0);
  CHECK(had::true_was(spec(had::DgpId::dgp2, 100, 0)) == 8.0 / 5.0);
  CHECK(had::true_was(spec(had::DgpId::dgp3_synthetic, 100, 0)) == 0.0);

  auto c = spec(had::DgpId::custom, 100, 0);
  c.params = {{"c1", 1.0}, {"c2", 1.0}};
  CHECK(had::true_was(c) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  c.params["dose"] = 1;
  CHECK(had::true_was(c) == doctest::Approx(8.0 / 5.0).epsilon(1e-15));
  // Beta(2,5): E[D] = 2/7, E[D^3] = 1/21.
  c.params = {{"dose", 2}, {"c1", 0.0}, {"c3", 1.0}};
  CHECK(had::true_was(c) == doctest::Approx(1.0 / 6).epsilon(1e-14));
  // Uniform + 1: E[D] = 3/2, E[D^2] = 7/3.
  c.params = {{"shift", 1.0}, {"c1", 0.0}, {"c2", 1.0}};
  CHECK(had::true_was(c) == doctest::Approx((7.0 / 3) / 1.5).epsilon(1e-14));
  // Four equiprobable levels {1/4, ..., 1}.
  c.params = {{"levels", 4}, {"c1", 0.0}, {"c2", 1.0}};
  CHECK(had::true_was(c) == doctest::Approx((30.0 / 64) / (10.0 / 16)).epsilon(1e-14));
  c.params = {{"bogus", 1}};
  CHECK_THROWS_AS(had::true_was(c), had::ValidationError);
}

TEST_CASE("custom DGP empirical moments approach the exact WAS") {
  auto c = spec(had::DgpId::custom, 200000, 13);
  c.params = {{"dose", 2}, {"c1", 0.5}, {"c2", 2.0}, {"sigma", 0.0}};
  const auto draw = had::draw_dgp(c, 0);
  const double est = had::stats::mean(draw.dy) / had::stats::mean(draw.d);
  CHECK(std::abs(est - had::true_was(c)) < 0.01);
}

TEST_CASE("file DGP resamples the empirical columns") {
  auto s = spec(had::DgpId::dgp3_file, 5, 1);
  s.file_d = {0.1, 0.2, 0.3, 0.4, 0.5};
  s.file_dy0 = {1, 2, 3, 4, 5};
  auto d = had::draw_dgp(s, 0).d;
  std::sort(d.begin(), d.end());
  CHECK(d == s.file_d);
  s.G = 12;
  const auto big = had::draw_dgp(s, 0);
  CHECK(big.d.size() == 12);
  for (double v : big.dy) CHECK((v >= 1 && v <= 5 && v == std::round(v)));
  s.file_d.clear();
  CHECK_THROWS_AS(had::draw_dgp(s, 0), had::ValidationError);
}

TEST_CASE("failed replications are counted, not fatal") {
  // Constant doses make every estimator fail validation.
  auto s = spec(had::DgpId::dgp3_file, 30, 1);
  s.file_d.assign(30, 0.5);
  s.file_dy0.assign(30, 1.0);
  const auto r = had::run_rejection_study(had::SimTest::yatchew, s, 10);
  CHECK(r.failures == 10);
  CHECK(r.replications == 0);
  CHECK(r.failure_messages.size() <= 5);
  CHECK_FALSE(r.failure_messages.empty());
}

TEST_CASE("parsers") {
  CHECK(had::parse_dgp("dgp1") == had::DgpId::dgp1);
  CHECK(had::to_string(had::parse_dgp("dgp3_synthetic")) == "dgp3_synthetic");
  CHECK_THROWS_AS(had::parse_dgp("dgp9"), had::ValidationError);
  CHECK(had::parse_sim_test("stute") == had::SimTest::stute);
  CHECK_THROWS_AS(had::parse_sim_test("nope"), had::ValidationError);
}
