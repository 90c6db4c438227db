#include "had/kernel.hpp"

#include "had/error.hpp"

namespace had {

namespace {

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

// int_0^1 t^j p(t) dt
double integrate_unit(const std::vector<double>& p, int j) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] / static_cast<double>(static_cast<int>(i) + j + 1);
  return s;
}

}  // namespace

double KernelSpec::operator()(double t) const {
  if (t < 0.0 || t > 1.0) return 0.0;
  double v = 0.0;
  for (auto it = poly.rbegin(); it != poly.rend(); ++it) v = v * t + *it;
  return v;
}

double KernelSpec::equivalent(double t) const {
  const double det = kappa[0] * kappa[2] - kappa[1] * kappa[1];
  return (kappa[2] - kappa[1] * t) / det * (*this)(t);
}

double KernelSpec::moment(int j, int power) const {
  if (power == 1) return integrate_unit(poly, j);
  if (power == 2) return integrate_unit(poly_mul(poly, poly), j);
  throw ValidationError("kernel moment power must be 1 or 2");
}

KernelSpec make_kernel(KernelName name) {
  KernelSpec k;
  k.name = name;
  switch (name) {
    case KernelName::epanechnikov: k.poly = {0.75, 0.0, -0.75}; break;
    case KernelName::triangular: k.poly = {1.0, -1.0}; break;
    case KernelName::uniform: k.poly = {1.0}; break;
  }
  for (int j = 0; j < 4; ++j) k.kappa[static_cast<std::size_t>(j)] = k.moment(j);
  const auto& kp = k.kappa;
  const double det = kp[0] * kp[2] - kp[1] * kp[1];
  if (!(det > 0.0)) throw NumericalError("kernel moment matrix is singular");
  k.c_const = (kp[2] * kp[2] - kp[1] * kp[3]) / det;
  // int (kappa_2 - kappa_1 t)^2 k(t)^2 dt / det^2
  const std::vector<double> lin = {kp[2], -kp[1]};
  k.kstar_sq_int = integrate_unit(poly_mul(poly_mul(lin, lin), poly_mul(k.poly, k.poly)), 0) / (det * det);
  return k;
}

KernelSpec make_kernel(std::string_view name) {
  if (name == "epanechnikov" || name == "epa") return make_kernel(KernelName::epanechnikov);
  if (name == "triangular" || name == "tri") return make_kernel(KernelName::triangular);
  if (name == "uniform" || name == "uni") return make_kernel(KernelName::uniform);
  throw ValidationError("unknown kernel '" + std::string(name) + "'");
}

std::string to_string(KernelName name) {
  switch (name) {
    case KernelName::epanechnikov: return "epanechnikov";
    case KernelName::triangular: return "triangular";
    case KernelName::uniform: return "uniform";
  }
  return "unknown";
}

}  // namespace had
