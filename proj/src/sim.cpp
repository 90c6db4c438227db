#include "had/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include <boost/math/special_functions/beta.hpp>

#include "had/error.hpp"
#include "had/linearity.hpp"
#include "had/qug.hpp"
#include "had/stats.hpp"

namespace had {

std::string to_string(DgpId id) {
  switch (id) {
    case DgpId::dgp1: return "dgp1";
    case DgpId::dgp2: return "dgp2";
    case DgpId::dgp3_file: return "dgp3_file";
    case DgpId::dgp3_synthetic: return "dgp3_synthetic";
    case DgpId::custom: return "custom";
  }
  return "unknown";
}

DgpId parse_dgp(const std::string& name) {
  if (name == "dgp1") return DgpId::dgp1;
  if (name == "dgp2") return DgpId::dgp2;
  if (name == "dgp3_file" || name == "dgp3") return DgpId::dgp3_file;
  if (name == "dgp3_synthetic") return DgpId::dgp3_synthetic;
  if (name == "custom") return DgpId::custom;
  throw ValidationError("unknown DGP '" + name + "'");
}

std::string to_string(SimTest test) {
  switch (test) {
    case SimTest::qug: return "qug";
    case SimTest::stute: return "stute";
    case SimTest::yatchew: return "yatchew";
    case SimTest::poly: return "poly";
  }
  return "unknown";
}

SimTest parse_sim_test(const std::string& name) {
  if (name == "qug") return SimTest::qug;
  if (name == "stute") return SimTest::stute;
  if (name == "yatchew") return SimTest::yatchew;
  if (name == "poly") return SimTest::poly;
  throw ValidationError("unknown test '" + name + "'");
}

namespace {

struct Custom {
  int dose = 0;
  double shift = 0.0;
  int levels = 0;
  double mu0 = 0.0, c1 = 1.0, c2 = 0.0, c3 = 0.0;
  double sigma = 1.0;
  bool hetero = false;
};

Custom custom_params(const DgpSpec& spec) {
  Custom c;
  auto get = [&](const char* key, double fallback) {
    const auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : it->second;
  };
  for (const auto& [key, value] : spec.params) {
    static const char* known[] = {"dose", "shift", "levels", "mu0", "c1", "c2", "c3", "local", "sigma", "hetero"};
    if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return key == k; })) {
      throw ValidationError("unknown custom DGP parameter '" + key + "'");
    }
  }
  c.dose = static_cast<int>(get("dose", 0));
  if (c.dose < 0 || c.dose > 2) throw ValidationError("custom dose must be 0, 1 or 2");
  c.shift = get("shift", 0.0);
  c.levels = static_cast<int>(get("levels", 0));
  c.mu0 = get("mu0", 0.0);
  c.c1 = get("c1", 1.0);
  c.c2 = get("c2", 0.0);
  c.c3 = get("c3", 0.0);
  if (get("local", 0.0) != 0.0) {
    const double scale = std::pow(static_cast<double>(spec.G), -0.25);
    c.c2 *= scale;
    c.c3 *= scale;
  }
  c.sigma = get("sigma", 1.0);
  c.hetero = get("hetero", 0.0) != 0.0;
  if (!(c.sigma >= 0.0)) throw ValidationError("sigma must be nonnegative");
  return c;
}

// Beta(2,2) quantile: root of 3x^2 - 2x^3 = u in [0, 1].
double beta22_quantile(double u) {
  return 0.5 + std::cos((std::acos(1.0 - 2.0 * u) + 4.0 * std::numbers::pi) / 3.0);
}

double dose_quantile(int dose, double u) {
  switch (dose) {
    case 1: return beta22_quantile(u);
    case 2: return boost::math::ibeta_inv(2.0, 5.0, u);
    default: return u;
  }
}

double dose_cdf(int dose, double x) {
  x = std::clamp(x, 0.0, 1.0);
  switch (dose) {
    case 1: return x * x * (3.0 - 2.0 * x);
    case 2: return boost::math::ibeta(2.0, 5.0, x);
    default: return x;
  }
}

// Raw moment E[D^k] of the base dose law.
double base_moment(int dose, int k) {
  if (dose == 0) return 1.0 / (k + 1.0);
  const double a = 2.0, b = dose == 1 ? 2.0 : 5.0;
  double m = 1.0;
  for (int r = 0; r < k; ++r) m *= (a + r) / (a + b + r);
  return m;
}

// E[(D + shift)^k] with optional rounding up to the level grid.
double custom_moment(const Custom& c, int k) {
  if (c.levels > 0) {
    double m = 0.0;
    for (int j = 1; j <= c.levels; ++j) {
      const double p = dose_cdf(c.dose, static_cast<double>(j) / c.levels) -
                       dose_cdf(c.dose, static_cast<double>(j - 1) / c.levels);
      m += p * std::pow(static_cast<double>(j) / c.levels + c.shift, k);
    }
    return m;
  }
  double m = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= k; ++j) {
    m += binom * base_moment(c.dose, j) * std::pow(c.shift, k - j);
    binom = binom * (k - j) / (j + 1.0);
  }
  return m;
}

double uniform01(std::mt19937_64& rng) {
  // Open interval keeps the quantile functions finite.
  double u = 0.0;
  do {
    u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  } while (u <= 0.0);
  return u;
}

std::vector<double> sample_column(const std::vector<double>& column, std::size_t g, std::mt19937_64& rng) {
  std::vector<double> out(g);
  if (g <= column.size()) {
    std::vector<std::size_t> idx(column.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < g; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      out[i] = column[idx[i]];
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, column.size() - 1);
    for (auto& v : out) v = column[pick(rng)];
  }
  return out;
}

}  // namespace

SimDraw draw_dgp(const DgpSpec& spec, std::uint64_t rep) {
  if (spec.G < 3) throw ValidationError("simulated G must be at least 3");
  auto rng = stats::stream(spec.seed, rep);
  std::normal_distribution<double> normal(0.0, 1.0);
  SimDraw s;
  s.d.resize(spec.G);
  s.dy.resize(spec.G);

  switch (spec.id) {
    case DgpId::dgp1:
    case DgpId::dgp2: {
      for (auto& v : s.d) v = dose_quantile(spec.id == DgpId::dgp2 ? 1 : 0, uniform01(rng));
      for (std::size_t g = 0; g < spec.G; ++g) s.dy[g] = s.d[g] + s.d[g] * s.d[g] + normal(rng);
      break;
    }
    case DgpId::dgp3_synthetic: {
      for (auto& v : s.d) v = 0.02 + dose_quantile(2, uniform01(rng));
      for (auto& v : s.dy) v = normal(rng);
      break;
    }
    case DgpId::dgp3_file: {
      if (spec.file_d.size() < 3 || spec.file_dy0.size() < 3) {
        throw ValidationError("dgp3_file needs empirical dose and outcome columns");
      }
      s.d = sample_column(spec.file_d, spec.G, rng);
      s.dy = sample_column(spec.file_dy0, spec.G, rng);
      break;
    }
    case DgpId::custom: {
      const Custom c = custom_params(spec);
      for (auto& v : s.d) {
        double x = dose_quantile(c.dose, uniform01(rng));
        if (c.levels > 0) x = std::max(1.0, std::ceil(x * c.levels)) / c.levels;
        v = x + c.shift;
      }
      for (std::size_t g = 0; g < spec.G; ++g) {
        const double x = s.d[g];
        const double sd = c.hetero ? c.sigma * x : c.sigma;
        s.dy[g] = c.mu0 + x * (c.c1 + x * (c.c2 + x * c.c3)) + sd * normal(rng);
      }
      break;
    }
  }
  return s;
}

double true_was(const DgpSpec& spec) {
  switch (spec.id) {
    case DgpId::dgp1: return 5.0 / 3.0;
    case DgpId::dgp2: return 8.0 / 5.0;
    case DgpId::dgp3_file:
    case DgpId::dgp3_synthetic: return 0.0;
    case DgpId::custom: {
      const Custom c = custom_params(spec);
      const double m1 = custom_moment(c, 1);
      return (c.c1 * m1 + c.c2 * custom_moment(c, 2) + c.c3 * custom_moment(c, 3)) / m1;
    }
  }
  return 0.0;
}

std::size_t thread_count() {
  const char* env = std::getenv("HAD_THREADS");
  if (env == nullptr) return 1;
  const long n = std::strtol(env, nullptr, 10);
  return n > 0 ? static_cast<std::size_t>(n) : 1;
}

namespace {

struct RepOutcome {
  bool ok = false;
  double estimate = 0.0;
  bool hit = false;
  std::string error;
};

// Runs body(rep) for every replication; results are stored by index so the
// aggregate does not depend on scheduling.
template <class Body>
std::vector<RepOutcome> run_reps(std::size_t replications, Body body) {
  std::vector<RepOutcome> out(replications);
  const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(replications, 1));
  auto task = [&](std::size_t w) {
    for (std::size_t r = w; r < replications; r += workers) {
      try {
        out[r] = body(r);
        out[r].ok = true;
      } catch (const std::exception& e) {
        out[r].ok = false;
        out[r].error = e.what();
      }
    }
  };
  if (workers <= 1) {
    task(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(task, w);
    for (auto& t : pool) t.join();
  }
  return out;
}

McResult aggregate(const std::vector<RepOutcome>& reps, bool coverage) {
  McResult r;
  std::vector<double> est;
  std::size_t hits = 0;
  for (const auto& o : reps) {
    if (!o.ok) {
      ++r.failures;
      if (r.failure_messages.size() < 5) r.failure_messages.push_back(o.error);
      continue;
    }
    est.push_back(o.estimate);
    if (o.hit) ++hits;
  }
  r.replications = est.size();
  if (est.empty()) return r;
  const double n = static_cast<double>(est.size());
  const double p = static_cast<double>(hits) / n;
  r.mean_estimate = stats::mean(est);
  r.sd_estimate = est.size() > 1 ? stats::sd(est) : 0.0;
  if (coverage) r.coverage = p;
  else r.rejection_rate = p;
  r.mc_se = std::sqrt(p * (1.0 - p) / n);
  return r;
}

}  // namespace

McResult run_coverage_pilot(const DgpSpec& dgp, std::size_t replications, double alpha,
                            const WasOptions& options) {
  if (replications == 0) throw ValidationError("replications must be positive");
  const double target = true_was(dgp);
  WasOptions opts = options;
  opts.alpha = alpha;
  const auto reps = run_reps(replications, [&](std::size_t r) {
    const auto draw = draw_dgp(dgp, dgp.first_replication + r);
    DifferencedSample sample;
    sample.d = draw.d;
    sample.dy = draw.dy;
    const auto est = estimate_was(sample, opts);
    RepOutcome o;
    o.estimate = est.beta;
    o.hit = est.ci_low <= target && target <= est.ci_high;
    return o;
  });
  return aggregate(reps, true);
}

McResult run_coverage_study(const DgpSpec& dgp, std::size_t replications, double alpha,
                            const WasOptions& options) {
  if (replications < 100) throw ValidationError("coverage study needs at least 100 replications");
  return run_coverage_pilot(dgp, replications, alpha, options);
}

McResult run_rejection_study(SimTest test, const DgpSpec& dgp, std::size_t replications, double alpha,
                             const SizePowerOptions& options) {
  if (replications == 0) throw ValidationError("replications must be positive");
  const TestMode mode = options.linearity_mode ? TestMode::linearity : TestMode::mean_independence;
  const auto reps = run_reps(replications, [&](std::size_t r) {
    const auto draw = draw_dgp(dgp, dgp.first_replication + r);
    RepOutcome o;
    switch (test) {
      case SimTest::qug: {
        const auto rep = test_qug(draw.d, alpha);
        o.estimate = rep.T;
        o.hit = rep.reject;
        break;
      }
      case SimTest::stute: {
        // Bootstrap seed distinct from the data stream of the same replication.
        const std::uint64_t boot_seed = dgp.seed ^ 0x9e3779b97f4a7c15ULL ^ (dgp.first_replication + r);
        const auto rep = stute_test(draw.d, draw.dy, mode, options.B, boot_seed);
        o.estimate = rep.S;
        o.hit = rep.p_value < alpha;
        break;
      }
      case SimTest::yatchew: {
        const auto rep = yatchew_test(draw.d, draw.dy, alpha, mode);
        o.estimate = rep.T_hr;
        o.hit = rep.reject;
        break;
      }
      case SimTest::poly: {
        const auto rep = poly_test_discrete(draw.d, draw.dy, mode);
        o.estimate = rep.statistic;
        o.hit = rep.p_value < alpha;
        break;
      }
    }
    return o;
  });
  return aggregate(reps, false);
}

std::pair<McResult, McResult> run_size_power(SimTest test, const DgpSpec& dgp_null, const DgpSpec& dgp_alt,
                                             std::size_t replications, double alpha,
                                             const SizePowerOptions& options) {
  return {run_rejection_study(test, dgp_null, replications, alpha, options),
          run_rejection_study(test, dgp_alt, replications, alpha, options)};
}

}  // namespace had
