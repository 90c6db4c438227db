#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace had {

/// One (unit, period) observation in long format.
struct PanelRecord {
  std::string unit;
  long period = 0;
  double outcome = 0.0;
  double dose = 0.0;
  std::vector<double> covariates;
};

/// Column mapping for delimited input.
struct PanelSchema {
  std::string unit = "unit";
  std::string period = "period";
  std::string outcome = "outcome";
  std::string dose = "dose";
  std::vector<std::string> covariates;
  char delimiter = ',';
  /// Overrides the inferred first treated period.
  std::optional<long> treatment_period;
};

/// Balanced heterogeneous-adoption panel.
///
/// Units are stored in order of first appearance and periods in increasing
/// order; `outcome(u, t)` addresses the dense unit x period grid.
class Panel {
public:
  Panel(std::vector<std::string> units, std::vector<long> periods,
        std::vector<double> outcomes, std::vector<double> doses,
        std::vector<std::string> covariate_names,
        std::vector<double> covariates, std::optional<long> treatment_period = {});

  [[nodiscard]] std::size_t unit_count() const { return units_.size(); }
  [[nodiscard]] std::size_t period_count() const { return periods_.size(); }
  [[nodiscard]] const std::vector<std::string>& units() const { return units_; }
  [[nodiscard]] const std::vector<long>& periods() const { return periods_; }
  [[nodiscard]] long treatment_period() const { return treatment_period_; }
  [[nodiscard]] const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  [[nodiscard]] double outcome(std::size_t unit, std::size_t period_index) const;
  [[nodiscard]] double dose(std::size_t unit, std::size_t period_index) const;
  [[nodiscard]] double covariate(std::size_t unit, std::size_t period_index, std::size_t k) const;

  /// Post-treatment dose of each unit.
  [[nodiscard]] const std::vector<double>& unit_doses() const { return unit_dose_; }

  /// Index of `period` in periods(); throws ValidationError if absent.
  [[nodiscard]] std::size_t period_index(long period) const;
  [[nodiscard]] bool has_period(long period) const;

  /// Periods strictly before the treatment period, ascending.
  [[nodiscard]] std::vector<long> pre_periods() const;
  /// Periods at or after the treatment period, ascending.
  [[nodiscard]] std::vector<long> post_periods() const;
  /// Last untreated period (F-1 in period order).
  [[nodiscard]] long base_period() const;

private:
  std::vector<std::string> units_;
  std::vector<long> periods_;
  std::vector<double> outcomes_;  // unit-major
  std::vector<double> doses_;
  std::vector<std::string> covariate_names_;
  std::vector<double> covariates_;  // (unit, period, k)
  std::vector<double> unit_dose_;
  long treatment_period_ = 0;
};

/// Estimation-ready cross-section: outcome change and post-period dose per unit.
struct DifferencedSample {
  std::vector<double> dy;
  std::vector<double> d;
  /// Row-major covariate rows (g_count x covariate_count), taken at the base period.
  std::vector<double> x;
  std::size_t covariate_count = 0;
  long base_period = 0;
  long target_period = 0;
  std::size_t removed_untreated = 0;

  [[nodiscard]] std::size_t g_count() const { return dy.size(); }
};

/// Parses delimited text with a header row into a validated Panel.
Panel load_panel(std::istream& source, const PanelSchema& schema = {});
Panel load_panel_file(const std::string& path, const PanelSchema& schema = {});

/// Writes a panel in the long format read by load_panel.
void save_panel(std::ostream& out, const Panel& panel, const PanelSchema& schema = {});

/// dy_g = Y_{g,target} - Y_{g,base} paired with each unit's post-treatment dose.
DifferencedSample difference(const Panel& panel, long base, long target);

/// Deviation of the target-period outcome from each unit's linear trend
/// through (prev, base): Y_t - Y_base - (t - base) / (base - prev) * (Y_base - Y_prev).
std::vector<double> detrended_difference(const Panel& panel, long base, long prev, long target);

/// Removes units with zero dose.
DifferencedSample drop_untreated(const DifferencedSample& sample);

/// Builds a sample directly from vectors, enforcing the sample invariants.
DifferencedSample make_sample(std::vector<double> dy, std::vector<double> d);

}  // namespace had
