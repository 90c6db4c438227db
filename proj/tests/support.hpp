#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "had/panel.hpp"

namespace test {

inline std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline std::vector<double> normal(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  return v;
}

inline had::Panel panel_from_csv(const std::string& text, const had::PanelSchema& schema = {}) {
  std::istringstream in(text);
  return had::load_panel(in, schema);
}

/// Long-format CSV from a unit x period outcome grid; doses switch on at period index `f`.
inline std::string grid_csv(const std::vector<std::vector<double>>& y, const std::vector<double>& dose,
                            std::size_t f, long first_period = 1) {
  std::ostringstream o;
  o.precision(17);
  o << "unit,period,outcome,dose\n";
  for (std::size_t g = 0; g < y.size(); ++g) {
    for (std::size_t t = 0; t < y[g].size(); ++t) {
      o << "u" << g << "," << first_period + static_cast<long>(t) << "," << y[g][t] << ","
        << (t >= f ? dose[g] : 0.0) << "\n";
    }
  }
  return o.str();
}

}  // namespace test
