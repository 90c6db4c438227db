#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace had {

enum class KernelName { epanechnikov, triangular, uniform };

/// One-sided kernel on [0, 1] with its boundary constants.
///
/// The kernel is a polynomial on its support, so every moment below is an
/// exact polynomial integral.
struct KernelSpec {
  KernelName name = KernelName::epanechnikov;
  /// Polynomial coefficients of k(t) on [0, 1], lowest degree first.
  std::vector<double> poly;
  /// kappa_j = int_0^1 t^j k(t) dt for j = 0..3.
  std::array<double, 4> kappa{};
  /// (kappa_2^2 - kappa_1 kappa_3) / (kappa_0 kappa_2 - kappa_1^2): leading bias constant
  /// of the local-linear boundary intercept.
  double c_const = 0.0;
  /// int_0^1 k*(u)^2 du where k*(t) = (kappa_2 - kappa_1 t) k(t) / (kappa_0 kappa_2 - kappa_1^2).
  double kstar_sq_int = 0.0;

  /// k(t); zero outside [0, 1].
  [[nodiscard]] double operator()(double t) const;
  /// Equivalent kernel k*(t).
  [[nodiscard]] double equivalent(double t) const;
  /// int_0^1 t^j k(t)^power dt for power in {1, 2}.
  [[nodiscard]] double moment(int j, int power = 1) const;
};

KernelSpec make_kernel(KernelName name);
/// Accepts "epanechnikov"/"epa", "triangular"/"tri", "uniform"/"uni".
KernelSpec make_kernel(std::string_view name);
std::string to_string(KernelName name);

}  // namespace had
