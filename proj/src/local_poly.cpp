#include "had/local_poly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "had/error.hpp"

namespace had {

namespace detail {

ScaledFit scaled_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                     int order, double scale, bool strict) {
  const Eigen::Index n = x.size();
  const Eigen::Index k = order + 1;
  ScaledFit fit;
  fit.design.resize(n, k);
  const Eigen::VectorXd u = x / scale;
  fit.design.col(0).setOnes();
  for (Eigen::Index j = 1; j < k; ++j) fit.design.col(j) = fit.design.col(j - 1).cwiseProduct(u);
  fit.weights = w;

  const Eigen::MatrixXd sw = fit.design.array().colwise() * w.array().sqrt();
  if (strict) {
    if (n < k) throw NumericalError("fewer observations than polynomial coefficients");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sw);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || sv(0) / smin > kMaxCondition) {
      throw NumericalError("local polynomial design is singular or near-singular (condition > 1e10)");
    }
  }
  const Eigen::MatrixXd gram = sw.transpose() * sw;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() == Eigen::Success) {
    fit.gram_inv = llt.solve(Eigen::MatrixXd::Identity(k, k));
  } else if (strict) {
    throw NumericalError("local polynomial Gram matrix is not positive definite");
  } else {
    fit.gram_inv = gram.completeOrthogonalDecomposition().pseudoInverse();
  }
  fit.coef = fit.gram_inv * (fit.design.transpose() * w.cwiseProduct(y));
  return fit;
}

}  // namespace detail

LocalFit local_fit(std::span<const double> d, std::span<const double> y, const KernelSpec& kernel,
                   double h, int p, double boundary) {
  if (d.size() != y.size()) throw ValidationError("d and y differ in length");
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("bandwidth must be positive and finite");
  if (p < 1 || p > 3) throw ValidationError("polynomial order must be 1, 2 or 3");

  LocalFit out;
  out.h = h;
  out.p = p;
  out.weights.resize(d.size());
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double t = (d[i] - boundary) / h;
    out.weights[i] = kernel(t) / h;
    if (out.weights[i] > 0.0) idx.push_back(static_cast<Eigen::Index>(i));
  }
  out.n_eff = idx.size();
  if (out.n_eff < static_cast<std::size_t>(p) + 2) {
    throw NumericalError("insufficient effective observations: " + std::to_string(out.n_eff) +
                         " in window, need " + std::to_string(p + 2));
  }
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::VectorXd x(n), yy(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto g = static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
    x(i) = d[g] - boundary;
    yy(i) = y[g];
    w(i) = out.weights[g];
  }
  const auto fit = detail::scaled_fit(x, yy, w, p, h, true);
  out.coefs.resize(static_cast<std::size_t>(p) + 1);
  for (int j = 0; j <= p; ++j) out.coefs[static_cast<std::size_t>(j)] = fit.coef(j) / std::pow(h, j);
  out.point = out.coefs[0];
  out.residuals.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double xi = d[i] - boundary;
    double v = 0.0;
    for (int j = p; j >= 0; --j) v = v * xi + out.coefs[static_cast<std::size_t>(j)];
    out.residuals[i] = y[i] - v;
  }
  return out;
}

std::vector<double> nn_residuals(std::span<const double> x, std::span<const double> y, int matches) {
  const auto n = static_cast<long>(x.size());
  std::vector<double> res(x.size(), 0.0);
  if (n < 2) return res;
  // dups[i]: size of the tie group containing i; dupsid[i]: 1-based rank inside it.
  std::vector<long> dups(x.size()), dupsid(x.size());
  for (long i = 0; i < n;) {
    long j = i;
    while (j < n && x[static_cast<std::size_t>(j)] == x[static_cast<std::size_t>(i)]) ++j;
    for (long k = i; k < j; ++k) {
      dups[static_cast<std::size_t>(k)] = j - i;
      dupsid[static_cast<std::size_t>(k)] = k - i + 1;
    }
    i = j;
  }
  const long target = std::min<long>(matches, n - 1);
  auto at = [&](long i) { return x[static_cast<std::size_t>(i)]; };
  auto dup = [&](long i) { return dups[static_cast<std::size_t>(i)]; };
  for (long pos = 0; pos < n; ++pos) {
    long rpos = dup(pos) - dupsid[static_cast<std::size_t>(pos)];
    long lpos = dupsid[static_cast<std::size_t>(pos)] - 1;
    while (lpos + rpos < target) {
      const bool no_left = pos - lpos - 1 < 0;
      const bool no_right = pos + rpos + 1 >= n;
      if (no_left) {
        rpos += dup(pos + rpos + 1);
      } else if (no_right) {
        lpos += dup(pos - lpos - 1);
      } else {
        const double left_gap = at(pos) - at(pos - lpos - 1);
        const double right_gap = at(pos + rpos + 1) - at(pos);
        if (left_gap > right_gap) {
          rpos += dup(pos + rpos + 1);
        } else if (left_gap < right_gap) {
          lpos += dup(pos - lpos - 1);
        } else {
          rpos += dup(pos + rpos + 1);
          lpos += dup(pos - lpos - 1);
        }
      }
    }
    const long lo = std::max(0L, pos - lpos);
    const long hi = std::min(n, pos + rpos + 1);
    double sum = 0.0;
    for (long k = lo; k < hi; ++k) sum += y[static_cast<std::size_t>(k)];
    sum -= y[static_cast<std::size_t>(pos)];
    const double ji = static_cast<double>(hi - lo - 1);
    res[static_cast<std::size_t>(pos)] =
        std::sqrt(ji / (ji + 1.0)) * (y[static_cast<std::size_t>(pos)] - sum / ji);
  }
  return res;
}

BoundaryFit boundary_fit(std::span<const double> d, std::span<const double> y,
                         const KernelSpec& kernel, double h, double b, double boundary, int p,
                         int matches) {
  if (d.size() != y.size()) throw ValidationError("d and y differ in length");
  if (!(h > 0.0) || !(b > 0.0) || !std::isfinite(h) || !std::isfinite(b)) {
    throw ValidationError("bandwidths must be positive and finite");
  }
  const int q = p + 1;
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return d[a] < d[c]; });

  const double wide = std::max(h, b);
  std::vector<double> xs, ys, wh, wb;
  std::size_t n_h = 0;
  for (std::size_t g : order) {
    const double x = d[g] - boundary;
    const double k_wide = kernel(x / wide);
    if (!(k_wide > 0.0)) continue;
    xs.push_back(x);
    ys.push_back(y[g]);
    wh.push_back(kernel(x / h) / h);
    wb.push_back(kernel(x / b) / b);
    if (wh.back() > 0.0) ++n_h;
  }
  if (n_h < static_cast<std::size_t>(p) + 2) {
    throw NumericalError("insufficient effective observations at the main bandwidth: " +
                         std::to_string(n_h));
  }
  const auto n = static_cast<Eigen::Index>(xs.size());
  if (n < q + 2) throw NumericalError("insufficient effective observations at the bias bandwidth");

  const Eigen::Map<const Eigen::VectorXd> x(xs.data(), n), yv(ys.data(), n);
  const Eigen::Map<const Eigen::VectorXd> w_h(wh.data(), n), w_b(wb.data(), n);

  const auto fit_p = detail::scaled_fit(x, yv, w_h, p, h, true);
  const auto fit_q = detail::scaled_fit(x, yv, w_b, q, b, true);

  // L = sum_i w_h,i r_p(u_i) u_i^(p+1), u = x / h
  const Eigen::VectorXd u_next = (x / h).array().pow(p + 1);
  const Eigen::VectorXd big_l = fit_p.design.transpose() * w_h.cwiseProduct(u_next);
  const double ratio = std::pow(h / b, p + 1);

  // Row i of the bias-corrected score: r_p,i w_h,i - (h/b)^(p+1) L [Gq^-1 r_q,i w_b,i]_(p+1)
  const Eigen::RowVectorXd gq_row = fit_q.gram_inv.row(q);
  const Eigen::VectorXd proj = (fit_q.design * gq_row.transpose()).cwiseProduct(w_b);
  Eigen::MatrixXd score_cl = fit_p.design.array().colwise() * w_h.array();
  Eigen::MatrixXd score_bc = score_cl - ratio * proj * big_l.transpose();

  const Eigen::VectorXd beta_bc = fit_p.gram_inv * (score_bc.transpose() * yv);

  const auto res = nn_residuals(xs, ys, matches);
  const Eigen::Map<const Eigen::VectorXd> e(res.data(), n);
  auto sandwich00 = [&](const Eigen::MatrixXd& score) {
    const Eigen::MatrixXd se = score.array().colwise() * e.array();
    const Eigen::MatrixXd meat = se.transpose() * se;
    return (fit_p.gram_inv * meat * fit_p.gram_inv)(0, 0);
  };

  BoundaryFit out;
  out.h = h;
  out.b = b;
  out.n_eff = static_cast<std::size_t>(n);
  out.n_h = n_h;
  out.tau_cl = fit_p.coef(0);
  out.tau_bc = beta_bc(0);
  out.se_cl = std::sqrt(std::max(0.0, sandwich00(score_cl)));
  out.se_rb = std::sqrt(std::max(0.0, sandwich00(score_bc)));
  out.curvature = 2.0 * fit_q.coef(2) / (b * b);
  return out;
}

}  // namespace had
