#include "had/panel.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "had/error.hpp"

namespace had {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Splits one delimited line; double quotes may wrap a field, "" escapes a quote.
std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.emplace_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.emplace_back(trim(field));
  return out;
}

double parse_real(std::string_view text, std::size_t line_no, const std::string& column) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ValidationError("non-numeric field in column '" + column + "' at line " +
                          std::to_string(line_no) + ": '" + std::string(text) + "'");
  }
  return value;
}

long parse_period(std::string_view text, std::size_t line_no, const std::string& column) {
  text = trim(text);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError("non-integer period in column '" + column + "' at line " +
                          std::to_string(line_no) + ": '" + std::string(text) + "'");
  }
  return value;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::string format_real(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

double variance(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / n;
}

}  // namespace

Panel::Panel(std::vector<std::string> units, std::vector<long> periods,
             std::vector<double> outcomes, std::vector<double> doses,
             std::vector<std::string> covariate_names, std::vector<double> covariates,
             std::optional<long> treatment_period)
    : units_(std::move(units)),
      periods_(std::move(periods)),
      outcomes_(std::move(outcomes)),
      doses_(std::move(doses)),
      covariate_names_(std::move(covariate_names)),
      covariates_(std::move(covariates)) {
  const std::size_t n = units_.size();
  const std::size_t t = periods_.size();
  if (t < 2) throw ValidationError("panel needs at least 2 periods");
  if (n < 3) throw ValidationError("panel needs at least 3 units");
  if (!std::is_sorted(periods_.begin(), periods_.end()) ||
      std::adjacent_find(periods_.begin(), periods_.end()) != periods_.end()) {
    throw ValidationError("periods must be distinct and ascending");
  }
  if (outcomes_.size() != n * t || doses_.size() != n * t ||
      covariates_.size() != n * t * covariate_names_.size()) {
    throw ValidationError("unbalanced panel: grid size mismatch");
  }

  // Earliest period with any nonzero dose.
  std::optional<std::size_t> inferred;
  for (std::size_t j = 0; j < t && !inferred; ++j) {
    for (std::size_t u = 0; u < n; ++u) {
      if (dose(u, j) != 0.0) {
        inferred = j;
        break;
      }
    }
  }
  if (!inferred) throw ValidationError("no unit is ever treated (all doses zero)");
  if (*inferred == 0) {
    throw ValidationError("nonzero dose in the first period: no untreated baseline");
  }

  std::size_t first = *inferred;
  if (treatment_period) {
    const auto it = std::find(periods_.begin(), periods_.end(), *treatment_period);
    if (it == periods_.end()) throw ValidationError("treatment period override not in panel");
    const auto j = static_cast<std::size_t>(it - periods_.begin());
    if (j == 0) throw ValidationError("treatment period override leaves no pre-period");
    if (j > *inferred) {
      throw ValidationError("nonzero dose before overridden treatment period " +
                            std::to_string(*treatment_period));
    }
    first = j;
  }
  treatment_period_ = periods_[first];

  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t j = 0; j < t; ++j) {
      if (doses_[u * t + j] < 0.0) {
        throw ValidationError("negative dose for unit '" + units_[u] + "'");
      }
    }
  }

  // Dose is a unit-level exposure from the inferred first treated period on.
  unit_dose_.resize(n);
  for (std::size_t u = 0; u < n; ++u) {
    const double d = dose(u, *inferred);
    for (std::size_t j = *inferred + 1; j < t; ++j) {
      if (dose(u, j) != d) {
        throw ValidationError("dose varies within unit '" + units_[u] + "' after period " +
                              std::to_string(periods_[*inferred]));
      }
    }
    unit_dose_[u] = d;
  }
}

double Panel::outcome(std::size_t unit, std::size_t period_index) const {
  return outcomes_[unit * periods_.size() + period_index];
}

double Panel::dose(std::size_t unit, std::size_t period_index) const {
  return doses_[unit * periods_.size() + period_index];
}

double Panel::covariate(std::size_t unit, std::size_t period_index, std::size_t k) const {
  return covariates_[(unit * periods_.size() + period_index) * covariate_names_.size() + k];
}

std::size_t Panel::period_index(long period) const {
  const auto it = std::lower_bound(periods_.begin(), periods_.end(), period);
  if (it == periods_.end() || *it != period) {
    throw ValidationError("period " + std::to_string(period) + " not in panel");
  }
  return static_cast<std::size_t>(it - periods_.begin());
}

bool Panel::has_period(long period) const {
  return std::binary_search(periods_.begin(), periods_.end(), period);
}

std::vector<long> Panel::pre_periods() const {
  std::vector<long> out;
  for (long p : periods_)
    if (p < treatment_period_) out.push_back(p);
  return out;
}

std::vector<long> Panel::post_periods() const {
  std::vector<long> out;
  for (long p : periods_)
    if (p >= treatment_period_) out.push_back(p);
  return out;
}

long Panel::base_period() const { return pre_periods().back(); }

Panel load_panel(std::istream& source, const PanelSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ValidationError("empty input: header row required");
  const auto header = split_fields(line, schema.delimiter);

  const std::size_t c_unit = column_index(header, schema.unit);
  const std::size_t c_period = column_index(header, schema.period);
  const std::size_t c_outcome = column_index(header, schema.outcome);
  const std::size_t c_dose = column_index(header, schema.dose);
  std::vector<std::size_t> c_cov;
  for (const auto& name : schema.covariates) c_cov.push_back(column_index(header, name));

  std::vector<PanelRecord> records;
  while (std::getline(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, schema.delimiter);
    if (fields.size() != header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(header.size()));
    }
    PanelRecord r;
    r.unit = fields[c_unit];
    if (r.unit.empty()) throw ValidationError("empty unit id at line " + std::to_string(line_no));
    r.period = parse_period(fields[c_period], line_no, schema.period);
    r.outcome = parse_real(fields[c_outcome], line_no, schema.outcome);
    r.dose = parse_real(fields[c_dose], line_no, schema.dose);
    for (std::size_t k = 0; k < c_cov.size(); ++k) {
      if (trim(fields[c_cov[k]]).empty()) {
        throw ValidationError("missing covariate '" + schema.covariates[k] + "' at line " +
                              std::to_string(line_no));
      }
      r.covariates.push_back(parse_real(fields[c_cov[k]], line_no, schema.covariates[k]));
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ValidationError("no data rows");

  std::vector<std::string> units;
  std::unordered_map<std::string, std::size_t> unit_pos;
  std::vector<long> periods;
  for (const auto& r : records) {
    if (unit_pos.emplace(r.unit, units.size()).second) units.push_back(r.unit);
    periods.push_back(r.period);
  }
  std::sort(periods.begin(), periods.end());
  periods.erase(std::unique(periods.begin(), periods.end()), periods.end());

  const std::size_t n = units.size();
  const std::size_t t = periods.size();
  const std::size_t k = schema.covariates.size();
  std::vector<double> outcomes(n * t), doses(n * t), cov(n * t * k);
  std::vector<char> seen(n * t, 0);
  for (const auto& r : records) {
    const std::size_t u = unit_pos.at(r.unit);
    const auto j = static_cast<std::size_t>(
        std::lower_bound(periods.begin(), periods.end(), r.period) - periods.begin());
    const std::size_t cell = u * t + j;
    if (seen[cell]) {
      throw ValidationError("duplicate (unit, period) = ('" + r.unit + "', " +
                            std::to_string(r.period) + ")");
    }
    seen[cell] = 1;
    outcomes[cell] = r.outcome;
    doses[cell] = r.dose;
    std::copy(r.covariates.begin(), r.covariates.end(), cov.begin() + static_cast<std::ptrdiff_t>(cell * k));
  }
  for (std::size_t cell = 0; cell < n * t; ++cell) {
    if (!seen[cell]) {
      throw ValidationError("unbalanced panel: unit '" + units[cell / t] + "' missing period " +
                            std::to_string(periods[cell % t]));
    }
  }
  return Panel(std::move(units), std::move(periods), std::move(outcomes), std::move(doses),
               schema.covariates, std::move(cov), schema.treatment_period);
}

Panel load_panel_file(const std::string& path, const PanelSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open panel file '" + path + "'");
  return load_panel(in, schema);
}

void save_panel(std::ostream& out, const Panel& panel, const PanelSchema& schema) {
  const char d = schema.delimiter;
  out << schema.unit << d << schema.period << d << schema.outcome << d << schema.dose;
  for (const auto& c : panel.covariate_names()) out << d << c;
  out << '\n';
  for (std::size_t u = 0; u < panel.unit_count(); ++u) {
    for (std::size_t j = 0; j < panel.period_count(); ++j) {
      out << panel.units()[u] << d << panel.periods()[j] << d << format_real(panel.outcome(u, j))
          << d << format_real(panel.dose(u, j));
      for (std::size_t k = 0; k < panel.covariate_names().size(); ++k) {
        out << d << format_real(panel.covariate(u, j, k));
      }
      out << '\n';
    }
  }
}

DifferencedSample make_sample(std::vector<double> dy, std::vector<double> d) {
  if (dy.size() != d.size()) throw ValidationError("dy and d differ in length");
  if (dy.size() < 3) throw ValidationError("sample needs at least 3 units");
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i]) || !std::isfinite(dy[i])) throw ValidationError("non-finite sample value");
  }
  if (!(variance(d) > 0.0)) throw ValidationError("dose has zero variance (V(D2) > 0 required)");
  DifferencedSample s;
  s.dy = std::move(dy);
  s.d = std::move(d);
  return s;
}

DifferencedSample difference(const Panel& panel, long base, long target) {
  if (base == target) throw ValidationError("base and target periods are identical");
  const std::size_t jb = panel.period_index(base);
  const std::size_t jt = panel.period_index(target);
  const std::size_t n = panel.unit_count();
  std::vector<double> dy(n);
  for (std::size_t u = 0; u < n; ++u) dy[u] = panel.outcome(u, jt) - panel.outcome(u, jb);
  DifferencedSample s = make_sample(std::move(dy), panel.unit_doses());
  s.base_period = base;
  s.target_period = target;
  s.covariate_count = panel.covariate_names().size();
  s.x.reserve(n * s.covariate_count);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t k = 0; k < s.covariate_count; ++k) s.x.push_back(panel.covariate(u, jb, k));
  }
  return s;
}

std::vector<double> detrended_difference(const Panel& panel, long base, long prev, long target) {
  if (prev >= base) throw ValidationError("trend anchor period must precede the base period");
  const std::size_t jb = panel.period_index(base);
  const std::size_t jp = panel.period_index(prev);
  const std::size_t jt = panel.period_index(target);
  const double slope_scale = static_cast<double>(target - base) / static_cast<double>(base - prev);
  std::vector<double> out(panel.unit_count());
  for (std::size_t u = 0; u < out.size(); ++u) {
    const double yb = panel.outcome(u, jb);
    out[u] = panel.outcome(u, jt) - yb - slope_scale * (yb - panel.outcome(u, jp));
  }
  return out;
}

DifferencedSample drop_untreated(const DifferencedSample& sample) {
  DifferencedSample out;
  out.covariate_count = sample.covariate_count;
  out.base_period = sample.base_period;
  out.target_period = sample.target_period;
  for (std::size_t g = 0; g < sample.g_count(); ++g) {
    if (sample.d[g] == 0.0) {
      ++out.removed_untreated;
      continue;
    }
    out.dy.push_back(sample.dy[g]);
    out.d.push_back(sample.d[g]);
    for (std::size_t k = 0; k < sample.covariate_count; ++k) {
      out.x.push_back(sample.x[g * sample.covariate_count + k]);
    }
  }
  out.removed_untreated += sample.removed_untreated;
  if (out.dy.empty()) throw ValidationError("all units are untreated");
  return out;
}

}  // namespace had
