#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace had {

/// Test of H0: the dose support starts at zero (a quasi-untreated group exists).
struct QugReport {
  /// Smallest dose.
  double d1 = 0.0;
  /// Smallest dose strictly above d1.
  double d2 = 0.0;
  /// d1 / (d2 - d1).
  double T = 0.0;
  /// Limit survival function of E1/E2 for independent unit exponentials: 1 / (1 + T).
  double p_value = 1.0;
  double alpha = 0.05;
  double critical_value = 19.0;
  bool reject = false;
  /// Observations beyond the first at d1 and at d2.
  std::size_t ties_collapsed = 0;
  std::size_t G = 0;
  std::vector<std::string> warnings;
};

/// T = D(1) / (D(2) - D(1)); reject when T > 1/alpha - 1.
/// All doses must be strictly positive.
QugReport test_qug(std::span<const double> d, double alpha = 0.05);

}  // namespace had
