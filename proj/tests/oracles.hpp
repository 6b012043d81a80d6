#pragma once

// Slow reference implementations used only by the tests. None of them call
// into the library code under test.

#include "ngmca/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using ngmca::Index;
using ngmca::Matrix;
using ngmca::Vector;

/// Minimizer of a convex scalar function on [lo, hi]: dense grid scan, then
/// golden-section refinement around the best grid point.
inline double argmin_scalar(const std::function<double(double)>& f, double lo, double hi, int grid = 2001) {
  double best = lo, best_val = f(lo);
  const double step = (hi - lo) / (grid - 1);
  for (int i = 1; i < grid; ++i) {
    const double t = lo + step * i;
    const double v = f(t);
    if (v < best_val) {
      best_val = v;
      best = t;
    }
  }
  double a = std::max(lo, best - step), b = std::min(hi, best + step);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Dykstra's alternating projections onto the intersection of two convex sets.
inline Vector dykstra(const Vector& x, const std::function<Vector(const Vector&)>& proj_a,
                      const std::function<Vector(const Vector&)>& proj_b, int iters = 20000) {
  Vector y = x, p = Vector::Zero(x.size()), q = Vector::Zero(x.size());
  for (int it = 0; it < iters; ++it) {
    const Vector z = proj_a(y + p);
    p = y + p - z;
    const Vector next = proj_b(z + q);
    q = z + q - next;
    if ((next - y).norm() < 1e-15 && it > 10) {
      y = next;
      break;
    }
    y = next;
  }
  return y;
}

/// Projected gradient on min_{x >= 0} 1/2 ||M x - b||^2 (fixed step, long run).
inline Vector nnls_projected_gradient(const Eigen::MatrixXd& m, const Vector& b, int iters = 200000) {
  const Eigen::MatrixXd g = m.transpose() * m;
  const Vector mb = m.transpose() * b;
  const double step = 1.0 / Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().maxCoeff();
  Vector x = Vector::Zero(m.cols());
  for (int it = 0; it < iters; ++it) x = (x - step * (g * x - mb)).cwiseMax(0.0);
  return x;
}

/// Exact non-negative least squares by enumerating every active set: the
/// feasible unconstrained solution on some support with the lowest residual.
inline Vector nnls_enumerate(const Eigen::MatrixXd& m, const Vector& b) {
  const Index k = m.cols();
  Vector best = Vector::Zero(k);
  double best_val = 0.5 * b.squaredNorm();
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<Index> cols;
    for (Index j = 0; j < k; ++j)
      if (mask & (1u << j)) cols.push_back(j);
    Eigen::MatrixXd sub(m.rows(), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Index>(c)) = m.col(cols[c]);
    const Vector z = sub.colPivHouseholderQr().solve(b);
    if (z.minCoeff() < 0.0) continue;
    Vector x = Vector::Zero(k);
    for (std::size_t c = 0; c < cols.size(); ++c) x(cols[c]) = z(static_cast<Index>(c));
    const double val = 0.5 * (m * x - b).squaredNorm();
    if (val < best_val) {
      best_val = val;
      best = x;
    }
  }
  return best;
}

/// Cyclic coordinate descent for min 1/2 ||M x - b||^2 + lambda ||x||_1.
inline Vector lasso_coordinate_descent(const Eigen::MatrixXd& m, const Vector& b, double lambda, int sweeps = 20000) {
  Vector x = Vector::Zero(m.cols());
  Vector residual = b;
  for (int s = 0; s < sweeps; ++s) {
    for (Index j = 0; j < m.cols(); ++j) {
      const double norm_sq = m.col(j).squaredNorm();
      if (norm_sq == 0.0) continue;
      const double rho = m.col(j).dot(residual) + norm_sq * x(j);
      const double next = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / norm_sq;
      residual -= m.col(j) * (next - x(j));
      x(j) = next;
    }
  }
  return x;
}

/// Largest singular value from a dense SVD.
inline double spectral_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

/// Circular convolution by the definition, out[i] = sum_t k(t) x[i - t].
inline Vector circular_convolution(const Vector& x, const std::function<double(Index)>& kernel, Index support) {
  const Index n = x.size();
  Vector out = Vector::Zero(n);
  for (Index i = 0; i < n; ++i)
    for (Index t = -support; t <= support; ++t) out(i) += kernel(t) * x(((i - t) % n + n) % n);
  return out;
}

/// Dense matrix of a linear map given by its action on the canonical basis.
inline Eigen::MatrixXd dense_matrix(Index in_size, const std::function<Vector(const Vector&)>& apply) {
  Vector e = Vector::Zero(in_size);
  e(0) = 1.0;
  const Vector first = apply(e);
  Eigen::MatrixXd m(first.size(), in_size);
  m.col(0) = first;
  for (Index j = 1; j < in_size; ++j) {
    e.setZero();
    e(j) = 1.0;
    m.col(j) = apply(e);
  }
  return m;
}

/// Orthonormal basis of span(columns) by modified Gram-Schmidt (tolerant to
/// dependent columns).
inline Eigen::MatrixXd gram_schmidt(const Eigen::MatrixXd& cols) {
  std::vector<Vector> basis;
  for (Index j = 0; j < cols.cols(); ++j) {
    Vector v = cols.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : basis) v -= q * q.dot(v);
    if (v.norm() > 1e-10 * std::max(1.0, cols.col(j).norm())) basis.push_back(v.normalized());
  }
  Eigen::MatrixXd q(cols.rows(), static_cast<Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) q.col(static_cast<Index>(k)) = basis[k];
  return q;
}

/// Best permutation by enumeration: perm[i] = estimate row matched to reference i,
/// maximizing the sum of squared normalized correlations.
inline std::vector<Index> best_permutation(const Matrix& estimate, const Matrix& reference) {
  const Index r = reference.rows();
  std::vector<Index> perm(static_cast<std::size_t>(r));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::vector<Index> best = perm;
  double best_score = -1.0;
  do {
    double score = 0.0;
    for (Index i = 0; i < r; ++i) {
      const auto e = estimate.row(perm[static_cast<std::size_t>(i)]);
      const auto s = reference.row(i);
      const double c = e.dot(s) / (e.norm() * s.norm());
      score += c * c;
    }
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline Vector random_vector(Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace oracle
