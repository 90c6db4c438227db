#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "had/was.hpp"

namespace had {

enum class DgpId { dgp1, dgp2, dgp3_file, dgp3_synthetic, custom };
std::string to_string(DgpId id);
DgpId parse_dgp(const std::string& name);

/// Data-generating process for one simulated first-differenced sample.
///
/// custom reads these params (defaults in brackets):
///   dose [0]: 0 Uniform(0,1), 1 Beta(2,2), 2 Beta(2,5)
///   shift [0]: added to every dose
///   levels [0]: if > 0, dose is rounded up to the grid {1/levels, ..., 1} before shifting
///   mu0 [0], c1 [1], c2 [0], c3 [0]: dy = mu0 + c1 d + c2 d^2 + c3 d^3 + noise
///   local [0]: if 1, c2 and c3 are scaled by G^(-1/4)
///   sigma [1]: noise sd; hetero [0]: if 1 the sd is sigma * d
struct DgpSpec {
  DgpId id = DgpId::dgp1;
  std::size_t G = 100;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
  /// Studies use replications first_replication, first_replication + 1, ...
  std::uint64_t first_replication = 0;
  /// Empirical columns for dgp3_file (dose and untreated outcome change).
  std::vector<double> file_d;
  std::vector<double> file_dy0;
};

struct SimDraw {
  std::vector<double> d;
  std::vector<double> dy;
};

/// Replication `rep` of the DGP; depends only on (spec, rep).
SimDraw draw_dgp(const DgpSpec& spec, std::uint64_t rep);

/// Population WAS (dose-weighted average slope) of the DGP.
double true_was(const DgpSpec& spec);

struct McResult {
  double mean_estimate = 0.0;
  double sd_estimate = 0.0;
  double coverage = 0.0;
  double rejection_rate = 0.0;
  /// Replications that completed; proportions are over these.
  std::size_t replications = 0;
  /// MC standard error of the study's headline proportion.
  double mc_se = 0.0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
};

/// Worker count from HAD_THREADS (default 1).
std::size_t thread_count();

/// Coverage of the bias-corrected interval for the true WAS.
McResult run_coverage_study(const DgpSpec& dgp, std::size_t replications, double alpha = 0.05,
                            const WasOptions& options = {});

/// Same study without the replication floor, for smoke runs.
McResult run_coverage_pilot(const DgpSpec& dgp, std::size_t replications, double alpha = 0.05,
                            const WasOptions& options = {});

enum class SimTest { qug, stute, yatchew, poly };
std::string to_string(SimTest test);
SimTest parse_sim_test(const std::string& name);

struct SizePowerOptions {
  /// Bootstrap draws for the Stute test.
  std::size_t B = 500;
  /// Null of the Stute, Yatchew and polynomial tests.
  bool linearity_mode = true;
};

/// Rejection rates under the null and the alternative DGP.
std::pair<McResult, McResult> run_size_power(SimTest test, const DgpSpec& dgp_null,
                                             const DgpSpec& dgp_alt, std::size_t replications,
                                             double alpha = 0.05, const SizePowerOptions& options = {});

/// Rejection rate for one DGP.
McResult run_rejection_study(SimTest test, const DgpSpec& dgp, std::size_t replications,
                             double alpha = 0.05, const SizePowerOptions& options = {});

}  // namespace had
