#include "had/report_json.hpp"

#include <cmath>

namespace had {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

namespace {

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

}  // namespace

Json to_json(const BandwidthSelection& v) {
  return Json{{"h_star", number(v.h_star)},         {"b_star", number(v.b_star)},
              {"m2_hat", number(v.m2_hat)},         {"f0_hat", number(v.f0_hat)},
              {"s2_hat", number(v.s2_hat)},         {"variance_const", number(v.variance_const)},
              {"bias_const", number(v.bias_const)}, {"G", v.G},
              {"flags", v.flags}};
}

Json to_json(const WasEstimate& v) {
  Json j{{"mode", to_string(v.mode)},   {"beta", number(v.beta)},       {"mu0_hat", number(v.mu0_hat)},
         {"bias_hat", number(v.bias_hat)}, {"var_hat", number(v.var_hat)}, {"se", number(v.se)},
         {"ci_low", number(v.ci_low)},  {"ci_high", number(v.ci_high)}, {"alpha", v.alpha},
         {"h_used", number(v.h_used)},  {"b_used", number(v.b_used)},   {"n_eff", v.n_eff},
         {"boundary", number(v.boundary)}, {"mean_d", number(v.mean_d)}, {"mean_dy", number(v.mean_dy)},
         {"G", v.G}};
  j["dose_ratio"] = v.dose_ratio ? number(*v.dose_ratio) : Json(nullptr);
  j["bandwidth"] = v.bandwidth ? to_json(*v.bandwidth) : Json(nullptr);
  j["warnings"] = v.warnings;
  return j;
}

Json to_json(const QugReport& v) {
  return Json{{"d1", number(v.d1)},
              {"d2", number(v.d2)},
              {"T", number(v.T)},
              {"p_value", number(v.p_value)},
              {"alpha", v.alpha},
              {"critical_value", number(v.critical_value)},
              {"reject", v.reject},
              {"ties_collapsed", v.ties_collapsed},
              {"G", v.G},
              {"warnings", v.warnings}};
}

Json to_json(const StuteReport& v) {
  return Json{{"method", "stute"},
              {"mode", to_string(v.mode)},
              {"S", number(v.S)},
              {"p_value", number(v.p_value)},
              {"B", v.B},
              {"seed", v.seed},
              {"periods", v.periods},
              {"per_period_S", numbers(v.per_period_S)},
              {"G", v.G},
              {"degenerate", v.degenerate}};
}

Json to_json(const YatchewReport& v) {
  return Json{{"method", "yatchew"},
              {"mode", to_string(v.mode)},
              {"sig2_lin", number(v.sig2_lin)},
              {"sig2_diff", number(v.sig2_diff)},
              {"sigW4_hat", number(v.sigW4_hat)},
              {"T_hr", number(v.T_hr)},
              {"p_value", number(v.p_value)},
              {"T_homoskedastic", number(v.T_homoskedastic)},
              {"p_value_homoskedastic", number(v.p_value_homoskedastic)},
              {"alpha", v.alpha},
              {"reject", v.reject},
              {"G", v.G},
              {"degenerate", v.degenerate}};
}

Json to_json(const TestReport& v) {
  return Json{{"method", v.method},         {"mode", to_string(v.mode)}, {"statistic", number(v.statistic)},
              {"p_value", number(v.p_value)}, {"df", number(v.df)},      {"G", v.G},
              {"K", v.K}};
}

Json to_json(const TwfeEstimate& v) {
  return Json{{"beta_fe", number(v.beta_fe)}, {"beta0", number(v.beta0)},    {"se", number(v.se)},
              {"ci_low", number(v.ci_low)},   {"ci_high", number(v.ci_high)}, {"dof", number(v.dof)},
              {"alpha", v.alpha},             {"G", v.G}};
}

Json to_json(const WeightReport& v) {
  return Json{{"weights", numbers(v.weights)},
              {"n_positive", v.n_positive},
              {"n_negative", v.n_negative},
              {"negative_sum", number(v.negative_sum)}};
}

Json to_json(const CovariateTwfe& v) {
  return Json{{"delta_hat", numbers(v.delta_hat)}, {"gamma_hat", numbers(v.gamma_hat)},
              {"as_hat", number(v.as_hat)},       {"se", number(v.se)},
              {"ci_low", number(v.ci_low)},       {"ci_high", number(v.ci_high)},
              {"alpha", v.alpha},                 {"G", v.G}};
}

Json to_json(const McResult& v) {
  return Json{{"mean_estimate", number(v.mean_estimate)},
              {"sd_estimate", number(v.sd_estimate)},
              {"coverage", number(v.coverage)},
              {"rejection_rate", number(v.rejection_rate)},
              {"replications", v.replications},
              {"mc_se", number(v.mc_se)},
              {"failures", v.failures},
              {"failure_messages", v.failure_messages}};
}

Json to_json(const DgpSpec& v) {
  Json params = Json::object();
  for (const auto& [k, x] : v.params) params[k] = number(x);
  return Json{{"id", to_string(v.id)}, {"G", v.G}, {"seed", v.seed}, {"params", params}};
}

}  // namespace had
