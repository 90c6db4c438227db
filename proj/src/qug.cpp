#include "had/qug.hpp"

#include <algorithm>
#include <cmath>

#include "had/error.hpp"

namespace had {

QugReport test_qug(std::span<const double> d, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  for (double v : d) {
    if (!std::isfinite(v)) throw ValidationError("non-finite dose");
    if (!(v > 0.0)) {
      throw ValidationError(
          "nonpositive dose present: untreated units exist, so the null of a quasi-untreated group "
          "holds trivially; drop them to test the remaining doses");
    }
  }
  const double d1 = d.empty() ? 0.0 : *std::min_element(d.begin(), d.end());
  double d2 = std::numeric_limits<double>::infinity();
  std::size_t at_d1 = 0;
  for (double v : d) {
    if (v == d1) ++at_d1;
    else d2 = std::min(d2, v);
  }
  if (!std::isfinite(d2)) throw ValidationError("fewer than two distinct dose values");
  const auto at_d2 = static_cast<std::size_t>(std::count(d.begin(), d.end(), d2));

  QugReport r;
  r.G = d.size();
  r.d1 = d1;
  r.d2 = d2;
  r.T = d1 / (d2 - d1);
  r.p_value = 1.0 / (1.0 + r.T);
  r.alpha = alpha;
  r.critical_value = 1.0 / alpha - 1.0;
  r.reject = r.T > r.critical_value;
  r.ties_collapsed = (at_d1 - 1) + (at_d2 - 1);
  if (static_cast<double>(r.ties_collapsed) > 0.1 * static_cast<double>(r.G)) {
    r.warnings.emplace_back("more than 10% of doses tied at the two smallest values; "
                            "the test assumes a continuous dose distribution near its minimum");
  }
  return r;
}

}  // namespace had
