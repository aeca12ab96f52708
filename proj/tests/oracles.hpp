#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's contraction or fitting code; everything is brute force.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "mmtensor/tensor.hpp"

namespace oracle {

using mmt::DenseTensor;
using mmt::Shape;
using mmt::UnitRankTensor;

inline bool close_rel(double a, double b, double rel, double abs_floor = 1e-12) {
  return std::abs(a - b) <= std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

/// Visits every multi-index of `shape` in row-major order.
template <typename F>
void for_each_index(const Shape& shape, F&& f) {
  std::vector<std::size_t> idx(shape.size(), 0);
  const std::size_t total = mmt::element_count(shape);
  for (std::size_t n = 0; n < total; ++n) {
    f(idx, n);
    for (std::size_t j = shape.size(); j-- > 0;) {
      if (++idx[j] < shape[j]) break;
      idx[j] = 0;
    }
  }
}

inline std::vector<double> outer(const std::vector<std::vector<double>>& factors) {
  Shape shape;
  for (const auto& f : factors) shape.push_back(f.size());
  std::vector<double> out(mmt::element_count(shape));
  for_each_index(shape, [&](const std::vector<std::size_t>& idx, std::size_t n) {
    double p = 1.0;
    for (std::size_t j = 0; j < factors.size(); ++j) p *= factors[j][idx[j]];
    out[n] = p;
  });
  return out;
}

inline double elementwise_l1(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

/// <x, w> by materializing w entry by entry.
inline double brute_inner(const DenseTensor& x, const UnitRankTensor& w) {
  const auto m = outer(w.factors());
  double s = 0.0;
  for (std::size_t n = 0; n < m.size(); ++n) s += m[n] * x.values()[n];
  return s;
}

/// z[i] = sum over multi-indices with index i in `mode` of x * prod_{k != mode} w_k.
inline std::vector<double> brute_contract(const DenseTensor& x, const UnitRankTensor& w,
                                          std::size_t mode) {
  std::vector<double> z(x.extent(mode), 0.0);
  for_each_index(x.shape(), [&](const std::vector<std::size_t>& idx, std::size_t n) {
    double p = x.values()[n];
    for (std::size_t j = 0; j < idx.size(); ++j)
      if (j != mode) p *= w.factor(j)[idx[j]];
    z[idx[mode]] += p;
  });
  return z;
}

inline std::vector<double> normal_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline DenseTensor random_dense(std::mt19937_64& rng, const Shape& shape) {
  return DenseTensor(shape, normal_vector(rng, mmt::element_count(shape)));
}

inline UnitRankTensor random_unit_rank(std::mt19937_64& rng, const Shape& shape) {
  std::vector<std::vector<double>> f;
  for (auto n : shape) f.push_back(normal_vector(rng, n));
  return UnitRankTensor(std::move(f));
}

inline std::vector<DenseTensor> centered(const std::vector<DenseTensor>& xs) {
  const auto& shape = xs.front().shape();
  std::vector<double> mean(mmt::element_count(shape), 0.0);
  for (const auto& x : xs)
    for (std::size_t e = 0; e < mean.size(); ++e) mean[e] += x.values()[e] / static_cast<double>(xs.size());
  std::vector<DenseTensor> out;
  for (const auto& x : xs) {
    std::vector<double> v(mean.size());
    for (std::size_t e = 0; e < v.size(); ++e) v[e] = x.values()[e] - mean[e];
    out.emplace_back(shape, std::move(v));
  }
  return out;
}

inline Shape random_shape(std::mt19937_64& rng, std::size_t min_order, std::size_t max_order,
                          std::size_t max_dim) {
  std::uniform_int_distribution<std::size_t> order(min_order, max_order), dim(1, max_dim);
  Shape s(order(rng));
  for (auto& e : s) e = dim(rng);
  return s;
}

/// Least squares with an unpenalized intercept through the normal equations.
struct Ols {
  Eigen::VectorXd w;
  double b = 0.0;
};

inline Ols normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows(), p = X.cols();
  Eigen::MatrixXd A(n, p + 1);
  A.col(0).setOnes();
  A.rightCols(p) = X;
  const Eigen::MatrixXd AtA = A.transpose() * A;
  const Eigen::VectorXd beta = AtA.ldlt().solve(A.transpose() * y);
  return {beta.tail(p), beta(0)};
}

/// Ridge with intercept: min (1/N)||y - Xw - b||^2 + lambda ||w||^2.
inline Ols ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
  const Eigen::RowVectorXd mu = X.colwise().mean();
  const Eigen::MatrixXd Xc = X.rowwise() - mu;
  const double ym = y.mean();
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd A = Xc.transpose() * Xc;
  A.diagonal().array() += static_cast<double>(n) * lambda;
  const Eigen::VectorXd w = A.ldlt().solve(Xc.transpose() * (y.array() - ym).matrix());
  return {w, ym - mu.dot(w)};
}

/// Largest violation of the mode-`mode` Lasso optimality conditions for
/// (1/N) sum (<w, x_i> - y_i)^2 + lambda prod_k ||w_k||_1 with the other
/// factors fixed.
inline double mode_kkt_violation(std::span<const DenseTensor> xs, std::span<const double> y,
                                 const UnitRankTensor& w, double lambda, std::size_t mode) {
  const std::size_t n = xs.size();
  const std::size_t len = w.factor(mode).size();
  double others = 1.0;
  for (std::size_t k = 0; k < w.order(); ++k)
    if (k != mode) others *= elementwise_l1(w.factor(k));
  const double lam = lambda * others;
  std::vector<double> grad(len, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = brute_contract(xs[i], w, mode);
    double pred = 0.0;
    for (std::size_t a = 0; a < len; ++a) pred += z[a] * w.factor(mode)[a];
    for (std::size_t a = 0; a < len; ++a) grad[a] += 2.0 * (pred - y[i]) * z[a] / static_cast<double>(n);
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < len; ++a) {
    const double v = w.factor(mode)[a];
    const double viol = v != 0.0 ? std::abs(grad[a] + lam * (v > 0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::abs(grad[a]) - lam);
    worst = std::max(worst, viol);
  }
  return worst;
}

/// Support F1 between two coefficient vectors at tolerance `tol`.
inline double support_f1(std::span<const double> fitted, std::span<const double> truth, double tol) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    const bool a = std::abs(fitted[i]) > tol, b = truth[i] != 0.0;
    tp += a && b;
    fp += a && !b;
    fn += !a && b;
  }
  if (tp == 0) return fp + fn == 0 ? 1.0 : 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

inline double naive_rmse(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i] - b[i]) * (a[i] - b[i]);
  return static_cast<double>(std::sqrt(s / static_cast<long double>(a.size())));
}

}  // namespace oracle
