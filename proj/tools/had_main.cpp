#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "had/error.hpp"
#include "had/linearity.hpp"
#include "had/panel.hpp"
#include "had/qug.hpp"
#include "had/report_json.hpp"
#include "had/sim.hpp"
#include "had/twfe.hpp"
#include "had/was.hpp"

namespace {

using had::Json;

struct Common {
  std::string panel_path;
  std::string unit = "unit";
  std::string time = "period";
  std::string outcome = "outcome";
  std::string dose = "dose";
  std::vector<std::string> covariates;
  std::string delimiter = ",";
  std::optional<long> treatment_period;
  std::optional<long> base;
  std::optional<long> target;
  double alpha = 0.05;
  std::string out;
  std::string format = "json";
  std::string log_level = "warn";
};

struct EstimateArgs {
  std::string mode = "auto";
  std::string kernel = "epa";
  std::optional<double> bandwidth;
  bool rho1 = false;
  bool separate_b = false;
  double mass_tol = 0.0;
  bool recipe = false;
  std::string method = "stute";
  std::size_t B = 500;
  std::uint64_t seed = 0;
  std::optional<std::size_t> horizons;
  std::optional<std::size_t> pre;
};

struct LinearityArgs {
  std::string method = "stute";
  /// Defaults to linearity, or mean independence for the pre-trends test.
  std::optional<std::string> null;
  bool joint = false;
  bool pretrends = false;
  bool linear_trends = false;
  std::size_t B = 500;
  std::uint64_t seed = 0;
};

struct TwfeArgs {
  bool linear_trends = false;
  bool weights = false;
};

struct SimArgs {
  std::string dgp = "dgp1";
  std::size_t G = 100;
  std::size_t reps = 2000;
  std::uint64_t seed = 0;
  std::string test;
  std::vector<std::string> params;
  std::string kernel = "epa";
  bool separate_b = false;
  std::size_t B = 500;
  std::string null = "linearity";
};

had::PanelSchema schema_of(const Common& c) {
  had::PanelSchema s;
  s.unit = c.unit;
  s.period = c.time;
  s.outcome = c.outcome;
  s.dose = c.dose;
  s.covariates = c.covariates;
  if (c.delimiter == "\\t" || c.delimiter == "tab") s.delimiter = '\t';
  else if (c.delimiter.size() == 1) s.delimiter = c.delimiter[0];
  else throw had::ValidationError("delimiter must be a single character");
  s.treatment_period = c.treatment_period;
  return s;
}

had::Panel read_panel(const Common& c) {
  if (c.panel_path.empty()) throw had::ValidationError("--panel is required");
  auto panel = had::load_panel_file(c.panel_path, schema_of(c));
  spdlog::info("panel: {} units, {} periods, treatment period {}", panel.unit_count(), panel.period_count(),
               panel.treatment_period());
  return panel;
}

long base_of(const Common& c, const had::Panel& p) { return c.base.value_or(p.base_period()); }
long target_of(const Common& c, const had::Panel& p) { return c.target.value_or(p.treatment_period()); }

Json common_config(const Common& c) {
  Json j{{"panel", c.panel_path},
         {"unit", c.unit},
         {"time", c.time},
         {"outcome", c.outcome},
         {"dose", c.dose},
         {"covariates", c.covariates},
         {"delimiter", c.delimiter},
         {"alpha", c.alpha},
         {"format", c.format}};
  j["treatment_period"] = c.treatment_period ? Json(*c.treatment_period) : Json(nullptr);
  j["base"] = c.base ? Json(*c.base) : Json(nullptr);
  j["target"] = c.target ? Json(*c.target) : Json(nullptr);
  return j;
}

had::TestMode parse_null(const std::string& s) {
  if (s == "linearity") return had::TestMode::linearity;
  if (s == "mean-independence" || s == "mean_independence") return had::TestMode::mean_independence;
  throw had::ValidationError("unknown null '" + s + "'");
}

had::WasOptions was_options(const Common& c, const EstimateArgs& a) {
  had::WasOptions o;
  o.kernel = had::make_kernel(a.kernel);
  o.alpha = c.alpha;
  o.bandwidth = a.bandwidth;
  o.rho1 = !a.separate_b;
  o.mass_tol = a.mass_tol;
  return o;
}

std::size_t zero_count(const std::vector<double>& d) {
  return static_cast<std::size_t>(std::count(d.begin(), d.end(), 0.0));
}

// QUG test with zero doses handled: zeros make the null hold trivially.
Json qug_json(const std::vector<double>& d, double alpha, bool& reject) {
  const std::size_t zeros = zero_count(d);
  reject = false;
  if (zeros == 0) {
    const auto rep = had::test_qug(d, alpha);
    reject = rep.reject;
    Json j = had::to_json(rep);
    j["null_holds_trivially"] = false;
    j["zero_dose_units"] = 0;
    return j;
  }
  // Zero doses satisfy the null; the statistic is still reported for the positive doses.
  std::vector<double> positive;
  for (double v : d) {
    if (v > 0.0) positive.push_back(v);
  }
  const std::string note = "units at zero dose: the null holds; statistic computed on the positive doses";
  Json j;
  try {
    j = had::to_json(had::test_qug(positive, alpha));
    j["warnings"].push_back(note);
  } catch (const had::ValidationError&) {
    had::QugReport empty;
    empty.alpha = alpha;
    empty.critical_value = 1.0 / alpha - 1.0;
    empty.G = positive.size();
    j = had::to_json(empty);
    j["d1"] = nullptr;
    j["d2"] = nullptr;
    j["T"] = nullptr;
    j["warnings"] = Json::array({note, "fewer than two distinct positive doses"});
  }
  j["null_holds_trivially"] = true;
  j["zero_dose_units"] = zeros;
  return j;
}

// Mode chosen by the data: QUG present (zeros or QUG test not rejected),
// mass point at the lowest dose, or shifted support.
std::pair<had::WasMode, std::string> auto_mode(const std::vector<double>& d, double alpha, double mass_tol) {
  if (zero_count(d) > 0) return {had::WasMode::qug, "units at zero dose"};
  const std::size_t at_min = had::mass_point_count(d, mass_tol);
  if (at_min >= 2 && static_cast<double>(at_min) >= 0.01 * static_cast<double>(d.size())) {
    return {had::WasMode::mass_point, std::to_string(at_min) + " units share the lowest dose"};
  }
  const auto q = had::test_qug(d, alpha);
  if (!q.reject) return {had::WasMode::qug, "QUG test not rejected"};
  return {had::WasMode::shifted, "QUG test rejected"};
}

had::WasEstimate run_mode(had::WasMode mode, const had::DifferencedSample& s, const had::WasOptions& o) {
  switch (mode) {
    case had::WasMode::shifted: return had::estimate_shifted(s, o);
    case had::WasMode::mass_point: return had::estimate_mass_point(s, o);
    case had::WasMode::qug: break;
  }
  return had::estimate_was(s, o);
}

had::WasMode parse_mode(const std::string& s) {
  if (s == "qug") return had::WasMode::qug;
  if (s == "shifted") return had::WasMode::shifted;
  if (s == "mass" || s == "mass_point") return had::WasMode::mass_point;
  throw had::ValidationError("unknown mode '" + s + "'");
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

std::string estimate_csv_header() { return "period,mode,beta,se,ci_low,ci_high,h_used,b_used,n_eff,G\n"; }

std::string estimate_csv_row(long period, const had::WasEstimate& e) {
  return std::to_string(period) + "," + had::to_string(e.mode) + "," + csv_number(e.beta) + "," +
         csv_number(e.se) + "," + csv_number(e.ci_low) + "," + csv_number(e.ci_high) + "," +
         csv_number(e.h_used) + "," + csv_number(e.b_used) + "," + std::to_string(e.n_eff) + "," +
         std::to_string(e.G) + "\n";
}

Json linearity_test(const had::DifferencedSample& s, const std::string& method, had::TestMode mode,
                    double alpha, std::size_t B, std::uint64_t seed, double& p_value) {
  if (method == "stute") {
    const auto r = had::stute_test(s.d, s.dy, mode, B, seed);
    p_value = r.p_value;
    return had::to_json(r);
  }
  if (method == "yatchew") {
    const auto r = had::yatchew_test(s.d, s.dy, alpha, mode);
    p_value = r.p_value;
    return had::to_json(r);
  }
  if (method == "poly") {
    const auto r = had::poly_test_discrete(s.d, s.dy, mode);
    p_value = r.p_value;
    return had::to_json(r);
  }
  throw had::ValidationError("unknown method '" + method + "'");
}

std::vector<long> pretrend_periods(const had::Panel& p, long base) {
  std::vector<long> out;
  for (long t : p.pre_periods())
    if (t != base) out.push_back(t);
  return out;
}

Json cmd_estimate(const Common& c, const EstimateArgs& a, std::string& csv) {
  const auto panel = read_panel(c);
  const long base = base_of(c, panel);
  const long target = target_of(c, panel);
  const auto sample = had::difference(panel, base, target);
  const auto opts = was_options(c, a);
  Json out;

  if (a.recipe) {
    Json trail = Json::array();
    bool rejected_any = false;

    bool qug_reject = false;
    Json q = qug_json(sample.d, c.alpha, qug_reject);
    trail.push_back({{"step", "qug_test"}, {"reject", qug_reject}, {"report", q}});
    rejected_any |= qug_reject;

    const auto pre = pretrend_periods(panel, base);
    if (pre.empty()) {
      trail.push_back({{"step", "pretrend_test"}, {"skipped", "no pre-period before the base period"}});
    } else {
      const auto r = had::stute_joint(panel, pre, had::TestMode::mean_independence, a.B, a.seed);
      const bool rej = r.p_value < c.alpha;
      trail.push_back({{"step", "pretrend_test"}, {"reject", rej}, {"report", had::to_json(r)}});
      rejected_any |= rej;
    }

    double p = 1.0;
    Json lin = linearity_test(sample, a.method, had::TestMode::linearity, c.alpha, a.B, a.seed, p);
    const bool lin_rej = p < c.alpha;
    trail.push_back({{"step", "linearity_test"}, {"reject", lin_rej}, {"report", lin}});
    rejected_any |= lin_rej;

    if (!rejected_any) {
      const auto tw = had::twfe_fit(sample, c.alpha);
      out["decision"] = "twfe";
      out["reason"] = "no pre-test rejected";
      out["estimate"] = had::to_json(tw);
    } else {
      const auto [mode, why] = auto_mode(sample.d, c.alpha, a.mass_tol);
      const auto est = run_mode(mode, sample, opts);
      out["decision"] = "nonparametric";
      out["reason"] = "a pre-test rejected; mode " + had::to_string(mode) + " (" + why + ")";
      out["estimate"] = had::to_json(est);
      csv = estimate_csv_header() + estimate_csv_row(target, est);
    }
    out["trail"] = trail;
    out["base_period"] = base;
    out["target_period"] = target;
    return out;
  }

  had::WasMode mode = had::WasMode::qug;
  std::string why = "requested";
  if (a.mode == "auto") std::tie(mode, why) = auto_mode(sample.d, c.alpha, a.mass_tol);
  else mode = parse_mode(a.mode);
  const auto est = run_mode(mode, sample, opts);
  csv = estimate_csv_header() + estimate_csv_row(target, est);
  out = had::to_json(est);
  out["mode_reason"] = why;
  out["base_period"] = base;
  out["target_period"] = target;
  return out;
}

Json cmd_event_study(const Common& c, const EstimateArgs& a, std::string& csv) {
  const auto panel = read_panel(c);
  const auto opts = was_options(c, a);
  had::WasMode mode = had::WasMode::qug;
  if (a.mode == "auto") {
    mode = auto_mode(panel.unit_doses(), c.alpha, a.mass_tol).first;
  } else {
    mode = parse_mode(a.mode);
  }
  const auto points = had::event_study(panel, opts, a.horizons, a.pre, mode);
  Json arr = Json::array();
  csv = "period,is_pretrend," + estimate_csv_header().substr(7);
  for (const auto& pt : points) {
    Json j = had::to_json(pt.estimate);
    j["period"] = pt.period;
    j["is_pretrend"] = pt.is_pretrend;
    arr.push_back(j);
    const std::string row = estimate_csv_row(pt.period, pt.estimate);
    csv += std::to_string(pt.period) + "," + (pt.is_pretrend ? "true" : "false") + row.substr(row.find(','));
  }
  return Json{{"mode", had::to_string(mode)}, {"base_period", panel.base_period()}, {"points", arr}};
}

Json cmd_test_qug(const Common& c) {
  const auto panel = read_panel(c);
  const auto sample = had::difference(panel, base_of(c, panel), target_of(c, panel));
  bool reject = false;
  return qug_json(sample.d, c.alpha, reject);
}

std::vector<double> covariates_with_intercept(const had::DifferencedSample& s) {
  const std::size_t k = s.covariate_count;
  std::vector<double> x;
  x.reserve(s.g_count() * (k + 1));
  for (std::size_t g = 0; g < s.g_count(); ++g) {
    x.push_back(1.0);
    for (std::size_t j = 0; j < k; ++j) x.push_back(s.x[g * k + j]);
  }
  return x;
}

Json cmd_test_linearity(const Common& c, const LinearityArgs& a) {
  const auto panel = read_panel(c);
  const long base = base_of(c, panel);
  if (a.pretrends) {
    const auto pre = pretrend_periods(panel, base);
    if (pre.empty()) throw had::ValidationError("pre-trends test needs a pre-period before the base period");
    const auto mode = parse_null(a.null.value_or("mean-independence"));
    if (a.method != "stute") throw had::ValidationError("pre-trends test is implemented with --method stute");
    auto r = had::stute_joint(panel, pre, mode, a.B, a.seed, a.linear_trends);
    Json j = had::to_json(r);
    j["test"] = "pretrends";
    return j;
  }
  const auto mode = parse_null(a.null.value_or("linearity"));
  if (a.joint) {
    if (a.method != "stute") throw had::ValidationError("joint test is implemented with --method stute");
    auto r = had::stute_joint(panel, panel.post_periods(), mode, a.B, a.seed, a.linear_trends);
    Json j = had::to_json(r);
    j["test"] = "joint";
    return j;
  }
  auto sample = had::difference(panel, base, target_of(c, panel));
  if (a.linear_trends) {
    const auto pre = panel.pre_periods();
    if (pre.size() < 2) throw had::ValidationError("linear trends need at least 2 pre-periods");
    sample.dy = had::detrended_difference(panel, base, pre[pre.size() - 2], target_of(c, panel));
  }
  if (sample.covariate_count > 0) {
    if (a.method != "stute") throw had::ValidationError("covariate test is implemented with --method stute");
    const auto x = covariates_with_intercept(sample);
    auto r = had::stute_covariates(sample.d, sample.dy, x, sample.covariate_count + 1, a.B, a.seed);
    Json j = had::to_json(r);
    j["test"] = "covariates";
    return j;
  }
  double p = 1.0;
  Json j = linearity_test(sample, a.method, mode, c.alpha, a.B, a.seed, p);
  j["test"] = "single";
  j["base_period"] = base;
  j["target_period"] = target_of(c, panel);
  return j;
}

Json cmd_twfe(const Common& c, const TwfeArgs& a) {
  const auto panel = read_panel(c);
  const long base = base_of(c, panel);
  const long target = target_of(c, panel);
  Json out;
  if (a.linear_trends) {
    const auto pre = panel.pre_periods();
    if (pre.size() < 3) throw had::ValidationError("linear trends need at least 3 pre-treatment periods");
    const long prev = pre[pre.size() - 2];
    out["estimate"] = had::to_json(had::twfe_linear_trends(panel, base, prev, target, c.alpha));
    out["trend_periods"] = {prev, base};
  } else {
    out["estimate"] = had::to_json(had::twfe_fit(had::difference(panel, base, target), c.alpha));
  }
  const auto sample = had::difference(panel, base, target);
  if (sample.covariate_count > 0) out["covariates"] = had::to_json(had::twfe_covariates(sample, c.alpha));
  if (a.weights) out["weights"] = had::to_json(had::twfe_weights(sample.d));
  out["base_period"] = base;
  out["target_period"] = target;
  return out;
}

Json cmd_simulate(const Common& c, const SimArgs& a, std::string& csv) {
  had::DgpSpec spec;
  spec.id = had::parse_dgp(a.dgp);
  spec.G = a.G;
  spec.seed = a.seed;
  for (const auto& kv : a.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw had::ValidationError("--param expects key=value, got '" + kv + "'");
    try {
      spec.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw had::ValidationError("--param value is not a number: '" + kv + "'");
    }
  }
  if (spec.id == had::DgpId::dgp3_file) {
    const auto panel = read_panel(c);
    const auto s = had::difference(panel, base_of(c, panel), target_of(c, panel));
    spec.file_d = s.d;
    spec.file_dy0 = s.dy;
  }

  Json out{{"dgp", had::to_json(spec)}};
  had::McResult r;
  if (a.test.empty()) {
    had::WasOptions o;
    o.kernel = had::make_kernel(a.kernel);
    o.rho1 = !a.separate_b;
    if (a.reps < 100) {
      spdlog::warn("{} replications is below the 100 needed for a coverage study; running as a pilot", a.reps);
      r = had::run_coverage_pilot(spec, a.reps, c.alpha, o);
      out["study"] = "coverage_pilot";
    } else {
      r = had::run_coverage_study(spec, a.reps, c.alpha, o);
      out["study"] = "coverage";
    }
    out["true_was"] = had::number(had::true_was(spec));
  } else {
    had::SizePowerOptions o;
    o.B = a.B;
    o.linearity_mode = parse_null(a.null) == had::TestMode::linearity;
    r = had::run_rejection_study(had::parse_sim_test(a.test), spec, a.reps, c.alpha, o);
    out["study"] = "rejection";
    out["test"] = a.test;
  }
  out["result"] = had::to_json(r);
  csv = "dgp,G,reps,seed,mean_estimate,coverage,rejection_rate,mc_se,replications,failures\n" + a.dgp + "," +
        std::to_string(a.G) + "," + std::to_string(a.reps) + "," + std::to_string(a.seed) + "," +
        csv_number(r.mean_estimate) + "," + csv_number(r.coverage) + "," + csv_number(r.rejection_rate) + "," +
        csv_number(r.mc_se) + "," + std::to_string(r.replications) + "," + std::to_string(r.failures) + "\n";
  return out;
}

void add_common(CLI::App* sub, Common& c, bool needs_panel) {
  auto* p = sub->add_option("--panel,--input", c.panel_path, "Long-format panel CSV");
  if (needs_panel) p->required()->check(CLI::ExistingFile);
  sub->add_option("--unit", c.unit, "Unit id column")->capture_default_str();
  sub->add_option("--time", c.time, "Period column")->capture_default_str();
  sub->add_option("--outcome", c.outcome, "Outcome column")->capture_default_str();
  sub->add_option("--dose", c.dose, "Dose column")->capture_default_str();
  sub->add_option("--covariates", c.covariates, "Covariate columns")->delimiter(',');
  sub->add_option("--delimiter", c.delimiter, "Field delimiter")->capture_default_str();
  sub->add_option("--treatment-period", c.treatment_period, "First treated period (default inferred)");
  sub->add_option("--base", c.base, "Base period (default: last untreated)");
  sub->add_option("--target", c.target, "Target period (default: first treated)");
  sub->add_option("--alpha", c.alpha, "Significance level")->capture_default_str()->check(CLI::Range(1e-6, 0.999));
  sub->add_option("--out", c.out, "Output file (default stdout)");
  sub->add_option("--log-level", c.log_level, "trace|debug|info|warn|error|off")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Difference-in-differences for heterogeneous adoption designs", "had"};
  app.require_subcommand(1);

  Common common;
  EstimateArgs est;
  LinearityArgs lin;
  TwfeArgs tw;
  SimArgs sim;

  auto add_estimate_flags = [&](CLI::App* s) {
    s->add_option("--mode", est.mode, "auto|qug|shifted|mass")->capture_default_str();
    s->add_option("--kernel", est.kernel, "epa|tri|uni")->capture_default_str();
    s->add_option("--bandwidth", est.bandwidth, "Fixed bandwidth (skips selection)");
    s->add_flag("--rho1", est.rho1, "Bias fit uses b = h (the default)");
    s->add_flag("--separate-b", est.separate_b, "Bias fit uses the selected pilot bandwidth b");
    s->add_option("--mass-tol", est.mass_tol, "Relative tolerance for the mass point")->capture_default_str();
  };

  auto* e = app.add_subcommand("estimate", "Weighted average slope");
  add_common(e, common, true);
  add_estimate_flags(e);
  e->add_option("--format", common.format, "json|csv")->capture_default_str();
  e->add_flag("--recipe", est.recipe, "QUG test, pre-trends, linearity, then TWFE or nonparametric");
  e->add_option("--method", est.method, "Linearity test in the recipe: stute|yatchew|poly")->capture_default_str();
  e->add_option("--B", est.B, "Bootstrap draws")->capture_default_str();
  e->add_option("--seed", est.seed, "Bootstrap seed")->capture_default_str();

  auto* es = app.add_subcommand("event-study", "Estimates for every pre and post period");
  add_common(es, common, true);
  add_estimate_flags(es);
  es->add_option("--format", common.format, "json|csv")->capture_default_str();
  es->add_option("--horizons", est.horizons, "Number of post periods");
  es->add_option("--pre", est.pre, "Number of placebo periods");

  auto* q = app.add_subcommand("test-qug", "Test for a quasi-untreated group");
  add_common(q, common, true);

  auto* l = app.add_subcommand("test-linearity", "Specification tests of E[dy | d]");
  add_common(l, common, true);
  l->add_option("--method", lin.method, "stute|yatchew|poly")->capture_default_str();
  l->add_option("--null", lin.null, "linearity|mean-independence");
  l->add_flag("--joint", lin.joint, "Joint test over all post periods");
  l->add_flag("--pretrends", lin.pretrends, "Joint placebo test over pre periods");
  l->add_flag("--linear-trends", lin.linear_trends, "Remove unit-specific linear trends");
  l->add_option("--B", lin.B, "Bootstrap draws")->capture_default_str();
  l->add_option("--seed", lin.seed, "Bootstrap seed")->capture_default_str();

  auto* t = app.add_subcommand("twfe", "TWFE slope, weights and covariate-interacted average slope");
  add_common(t, common, true);
  t->add_flag("--linear-trends", tw.linear_trends, "Remove unit-specific linear trends");
  t->add_flag("--weights", tw.weights, "Report the weight decomposition");

  auto* s = app.add_subcommand("simulate", "Monte Carlo coverage or rejection study");
  add_common(s, common, false);
  s->add_option("--format", common.format, "json|csv")->capture_default_str();
  s->add_option("--dgp", sim.dgp, "dgp1|dgp2|dgp3_file|dgp3_synthetic|custom")->capture_default_str();
  s->add_option("--G", sim.G, "Units per sample")->capture_default_str();
  s->add_option("--reps", sim.reps, "Replications")->capture_default_str();
  s->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  s->add_option("--test", sim.test, "qug|stute|yatchew|poly (rejection study)");
  s->add_option("--param", sim.params, "Custom DGP parameter key=value");
  s->add_option("--kernel", sim.kernel, "epa|tri|uni")->capture_default_str();
  s->add_flag("--separate-b", sim.separate_b, "Bias fit uses the selected pilot bandwidth b");
  s->add_option("--B", sim.B, "Bootstrap draws")->capture_default_str();
  s->add_option("--null", sim.null, "linearity|mean-independence")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }

  auto logger = spdlog::stderr_color_mt("had");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(common.log_level));

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (common.format != "json" && common.format != "csv") throw had::ValidationError("--format must be json or csv");
    std::string csv;
    Json result;
    Json config = common_config(common);
    if (name == "estimate") {
      result = cmd_estimate(common, est, csv);
      config.update(Json{{"mode", est.mode}, {"kernel", est.kernel}, {"separate_b", est.separate_b},
                         {"mass_tol", est.mass_tol}, {"recipe", est.recipe}, {"method", est.method},
                         {"B", est.B}, {"seed", est.seed}});
      config["bandwidth"] = est.bandwidth ? Json(*est.bandwidth) : Json(nullptr);
    } else if (name == "event-study") {
      result = cmd_event_study(common, est, csv);
      config.update(Json{{"mode", est.mode}, {"kernel", est.kernel}, {"separate_b", est.separate_b}});
      config["bandwidth"] = est.bandwidth ? Json(*est.bandwidth) : Json(nullptr);
    } else if (name == "test-qug") {
      result = cmd_test_qug(common);
    } else if (name == "test-linearity") {
      result = cmd_test_linearity(common, lin);
      config.update(Json{{"method", lin.method},
                         {"null", lin.null.value_or(lin.pretrends ? "mean-independence" : "linearity")}, {"joint", lin.joint},
                         {"pretrends", lin.pretrends}, {"linear_trends", lin.linear_trends},
                         {"B", lin.B}, {"seed", lin.seed}});
    } else if (name == "twfe") {
      result = cmd_twfe(common, tw);
      config.update(Json{{"linear_trends", tw.linear_trends}, {"weights", tw.weights}});
    } else if (name == "simulate") {
      result = cmd_simulate(common, sim, csv);
      config.update(Json{{"dgp", sim.dgp}, {"G", sim.G}, {"reps", sim.reps}, {"seed", sim.seed},
                         {"test", sim.test}, {"params", sim.params}, {"kernel", sim.kernel},
                         {"separate_b", sim.separate_b}, {"B", sim.B}, {"null", sim.null}});
    }

    std::string text;
    if (common.format == "csv") {
      if (csv.empty()) throw had::ValidationError("CSV output is available for estimate, event-study and simulate");
      text = csv;
    } else {
      Json doc{{"command", name}, {"config", config}, {"result", result}};
      text = doc.dump(2) + "\n";
    }
    if (common.out.empty()) {
      std::cout << text;
    } else {
      std::ofstream f(common.out, std::ios::binary);
      if (!f) throw had::ValidationError("cannot open output file '" + common.out + "'");
      f << text;
    }
    return 0;
  } catch (const had::ValidationError& ex) {
    std::cerr << "had " << name << ": " << ex.what() << "\n";
    return 2;
  } catch (const had::NumericalError& ex) {
    std::cerr << "had " << name << ": " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "had " << name << ": internal error: " << ex.what() << "\n";
    return 1;
  }
}
