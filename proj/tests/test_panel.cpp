#include <doctest.h>

#include <random>
#include <sstream>

#include "had/error.hpp"
#include "had/panel.hpp"
#include "support.hpp"

using had::ValidationError;

namespace {

const char* kMinimal =
    "unit,period,outcome,dose\n"
    "a,1,1,0\nb,1,0,0\nc,1,2,0\n"
    "a,2,3,1\nb,2,1,2\nc,2,2,3\n";

std::string error_of(const std::string& csv, const had::PanelSchema& schema = {}) {
  try {
    test::panel_from_csv(csv, schema);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal heterogeneous-adoption panel") {
  const auto p = test::panel_from_csv(kMinimal);
  CHECK(p.unit_count() == 3);
  CHECK(p.period_count() == 2);
  CHECK(p.treatment_period() == 2);
  CHECK(p.base_period() == 1);
  CHECK(p.unit_doses() == std::vector<double>{1, 2, 3});
  CHECK(p.pre_periods() == std::vector<long>{1});
  CHECK(p.post_periods() == std::vector<long>{2});
}

TEST_CASE("difference subtracts base from target") {
  const auto p = test::panel_from_csv(kMinimal);
  const auto s = had::difference(p, 1, 2);
  CHECK(s.dy == std::vector<double>{2, 1, 0});
  CHECK(s.d == std::vector<double>{1, 2, 3});
  CHECK(s.g_count() == 3);
  const auto r = had::difference(p, 2, 1);
  for (std::size_t g = 0; g < 3; ++g) CHECK(r.dy[g] == -s.dy[g]);
  CHECK_THROWS_AS(had::difference(p, 2, 2), ValidationError);
  CHECK_THROWS_AS(had::difference(p, 1, 7), ValidationError);
}

TEST_CASE("validation errors") {
  CHECK(error_of("unit,period,outcome,dose\na,1,1,0\nb,1,0,0\nc,1,2,0\na,2,3,1\nc,2,2,3\n").find("unbalanced") !=
        std::string::npos);
  CHECK(error_of("unit,period,outcome,dose\na,1,1,0\na,1,1,0\nb,1,0,0\nc,1,2,0\na,2,3,1\nb,2,1,2\nc,2,2,3\n")
            .find("duplicate") != std::string::npos);
  CHECK(error_of("unit,period,outcome,dose\na,1,x,0\nb,1,0,0\nc,1,2,0\na,2,3,1\nb,2,1,2\nc,2,2,3\n")
            .find("non-numeric") != std::string::npos);
  // Dose changes between post periods.
  CHECK(error_of("unit,period,outcome,dose\na,1,1,0\nb,1,0,0\nc,1,2,0\na,2,3,1\nb,2,1,2\nc,2,2,3\n"
                 "a,3,3,1\nb,3,1,5\nc,3,2,3\n")
            .find("dose varies") != std::string::npos);
  // Treated in the first period.
  CHECK(error_of("unit,period,outcome,dose\na,1,1,1\nb,1,0,0\nc,1,2,0\na,2,3,1\nb,2,1,2\nc,2,2,3\n").size() > 0);
  // Nonzero dose before an overridden (later) treatment period.
  had::PanelSchema late;
  late.treatment_period = 3;
  CHECK(error_of("unit,period,outcome,dose\na,1,1,0\nb,1,0,0\nc,1,2,0\na,2,3,1\nb,2,1,2\nc,2,2,3\n"
                 "a,3,3,1\nb,3,1,2\nc,3,2,3\n",
                 late)
            .find("nonzero dose before") != std::string::npos);
  CHECK(error_of("unit,period,outcome,dose\na,1,1,0\nb,1,0,0\na,2,3,1\nb,2,1,2\n").find("3 units") !=
        std::string::npos);
  CHECK(error_of("unit,period,outcome,dose\na,1,1,0\nb,1,0,0\nc,1,2,0\na,2,3,-1\nb,2,1,2\nc,2,2,3\n")
            .find("negative") != std::string::npos);
  had::PanelSchema cov;
  cov.covariates = {"x"};
  CHECK(error_of("unit,period,outcome,dose,x\na,1,1,0,1\nb,1,0,0,\nc,1,2,0,1\na,2,3,1,1\nb,2,1,2,1\nc,2,2,3,1\n",
                 cov)
            .find("missing covariate") != std::string::npos);
}

TEST_CASE("schema mapping, quoting and scientific notation") {
  had::PanelSchema s;
  s.unit = "id";
  s.period = "year";
  s.outcome = "y";
  s.dose = "treat";
  s.delimiter = ';';
  const auto p = test::panel_from_csv(
      "year;id;y;treat\n2000;\"x;1\";1e0;0\n2000;b;0;0\n2000;c;2;0\n2001;\"x;1\";3;1.5E-1\n2001;b;1;2\n2001;c;2;3\n",
      s);
  CHECK(p.units().front() == "x;1");
  CHECK(p.unit_doses()[0] == doctest::Approx(0.15));
  CHECK(p.outcome(0, 0) == 1.0);
}

TEST_CASE("treatment period is the earliest nonzero dose; override accepted when earlier") {
  const std::string csv =
      "unit,period,outcome,dose\n"
      "a,1,0,0\nb,1,0,0\nc,1,0,0\na,2,0,0\nb,2,0,0\nc,2,0,0\na,3,1,1\nb,3,1,2\nc,3,1,3\n";
  CHECK(test::panel_from_csv(csv).treatment_period() == 3);
  had::PanelSchema s;
  s.treatment_period = 2;
  const auto p = test::panel_from_csv(csv, s);
  CHECK(p.treatment_period() == 2);
  CHECK(p.base_period() == 1);
}

TEST_CASE("save and load round trip bit-identically") {
  std::mt19937_64 rng(3);
  std::vector<std::vector<double>> y(7, std::vector<double>(4));
  for (auto& row : y)
    for (auto& v : row) v = std::normal_distribution<double>(0.0, 1e3)(rng);
  const auto dose = test::uniform(rng, 7, 0.001, 5.0);
  const auto p = test::panel_from_csv(test::grid_csv(y, dose, 2));
  std::ostringstream out;
  had::save_panel(out, p);
  const auto q = test::panel_from_csv(out.str());
  REQUIRE(q.unit_count() == p.unit_count());
  REQUIRE(q.period_count() == p.period_count());
  for (std::size_t u = 0; u < p.unit_count(); ++u) {
    for (std::size_t t = 0; t < p.period_count(); ++t) {
      CHECK(q.outcome(u, t) == p.outcome(u, t));
      CHECK(q.dose(u, t) == p.dose(u, t));
    }
  }
  std::ostringstream again;
  had::save_panel(again, q);
  CHECK(again.str() == out.str());
}

TEST_CASE("post-period dose does not depend on the period pair") {
  std::mt19937_64 rng(5);
  std::vector<std::vector<double>> y(10, std::vector<double>(5));
  for (auto& row : y)
    for (auto& v : row) v = std::normal_distribution<double>()(rng);
  const auto dose = test::uniform(rng, 10, 0.1, 1.0);
  const auto p = test::panel_from_csv(test::grid_csv(y, dose, 3));
  const auto a = had::difference(p, 3, 4).d;
  CHECK(had::difference(p, 3, 5).d == a);
  CHECK(had::difference(p, 1, 4).d == a);
  CHECK(had::difference(p, 1, 2).d == a);  // pre-trend pair uses the future dose
}

TEST_CASE("constant outcomes give a zero pre-trend difference") {
  std::vector<std::vector<double>> y(4, std::vector<double>(3, 2.5));
  const auto p = test::panel_from_csv(test::grid_csv(y, {1, 2, 3, 4}, 2));
  for (double v : had::difference(p, 1, 2).dy) CHECK(v == 0.0);
}

TEST_CASE("drop_untreated") {
  auto s = had::make_sample({1, 2, 3}, {0, 1, 2});
  auto t = had::drop_untreated(s);
  CHECK(t.d == std::vector<double>{1, 2});
  CHECK(t.dy == std::vector<double>{2, 3});
  CHECK(t.removed_untreated == 1);
  auto u = had::drop_untreated(had::make_sample({1, 2, 3}, {1, 2, 3}));
  CHECK(u.d.size() == 3);
  CHECK(u.removed_untreated == 0);
  had::DifferencedSample z;
  z.d = {0, 0, 0};
  z.dy = {1, 2, 3};
  CHECK_THROWS_AS(had::drop_untreated(z), ValidationError);
}

TEST_CASE("make_sample invariants") {
  CHECK_THROWS_AS(had::make_sample({1, 2}, {1, 2}), ValidationError);
  CHECK_THROWS_AS(had::make_sample({1, 2, 3}, {2, 2, 2}), ValidationError);
  CHECK_THROWS_AS(had::make_sample({1, 2, 3}, {1, 2}), ValidationError);
}

TEST_CASE("detrended difference removes exact unit-specific trends") {
  std::mt19937_64 rng(11);
  const std::size_t n = 6;
  std::vector<std::vector<double>> y(n, std::vector<double>(6));
  for (std::size_t g = 0; g < n; ++g) {
    const double a = std::normal_distribution<double>()(rng);
    const double b = std::normal_distribution<double>()(rng);
    for (std::size_t t = 0; t < 6; ++t) y[g][t] = a + b * static_cast<double>(t + 1);
  }
  const auto p = test::panel_from_csv(test::grid_csv(y, test::uniform(rng, n, 0.1, 1.0), 4));
  for (long t : {1L, 2L, 5L, 6L}) {
    for (double v : had::detrended_difference(p, 4, 3, t)) CHECK(std::abs(v) < 1e-10);
  }
  CHECK_THROWS_AS(had::detrended_difference(p, 3, 4, 5), ValidationError);
}
