#pragma once

// Proximal operators used by the splitting solvers.
//
// Matrix arguments are treated elementwise unless stated otherwise; weights
// (thresholds) must have the shape of the operand or be a scalar. Row-wise
// variants treat every row of a matrix as one signal.

#include "ngmca/core.hpp"
#include "ngmca/transforms.hpp"

#include <cmath>
#include <optional>

namespace ngmca {

namespace detail {

template <class Derived>
void check_nonnegative_weights(const Eigen::MatrixBase<Derived>& lambda) {
  if (lambda.size() > 0 && !(lambda.minCoeff() >= 0.0))
    throw InvalidInput("thresholds must be non-negative");
}

template <class X, class L>
void check_same_shape(const Eigen::MatrixBase<X>& x, const Eigen::MatrixBase<L>& lambda) {
  if (x.rows() != lambda.rows() || x.cols() != lambda.cols())
    throw InvalidInput("threshold shape does not match the operand");
}

}  // namespace detail

/// [x]_+ : projection on the non-negative orthant.
template <class Derived>
auto prox_nonneg(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(0.0).eval();
}

/// Soft_lambda(x) = sign(x) [|x| - lambda]_+
template <class X, class L>
auto soft_threshold(const Eigen::MatrixBase<X>& x, const Eigen::MatrixBase<L>& lambda) {
  detail::check_same_shape(x, lambda);
  detail::check_nonnegative_weights(lambda);
  return (x.array().sign() * (x.array().abs() - lambda.array()).max(0.0)).matrix().eval();
}

template <class X>
auto soft_threshold(const Eigen::MatrixBase<X>& x, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidInput("thresholds must be non-negative");
  return (x.array().sign() * (x.array().abs() - lambda).max(0.0)).matrix().eval();
}

/// [Soft_lambda(x)]_+, the non-negative soft threshold.
template <class X, class L>
auto prox_nonneg_soft(const Eigen::MatrixBase<X>& x, const Eigen::MatrixBase<L>& lambda) {
  detail::check_same_shape(x, lambda);
  detail::check_nonnegative_weights(lambda);
  return (x.array() - lambda.array()).max(0.0).matrix().eval();
}

template <class X>
auto prox_nonneg_soft(const Eigen::MatrixBase<X>& x, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidInput("thresholds must be non-negative");
  return (x.array() - lambda).max(0.0).matrix().eval();
}

/// P_lambda^inf: clip each entry to [-lambda_i, lambda_i].
template <class X, class L>
auto project_linf(const Eigen::MatrixBase<X>& u, const Eigen::MatrixBase<L>& lambda) {
  detail::check_same_shape(u, lambda);
  detail::check_nonnegative_weights(lambda);
  return u.cwiseMax(-lambda).cwiseMin(lambda).eval();
}

/// Projection on {y >= 0, ||y||_2 <= 1}: [x]_+ / max(||[x]_+||_2, 1).
inline Vector prox_nonneg_unit_ball(const Vector& x) {
  Vector y = x.cwiseMax(0.0);
  const double norm = y.norm();
  if (norm > 1.0) y /= norm;
  return y;
}

/// Column-wise prox_nonneg_unit_ball.
inline Matrix prox_nonneg_unit_ball_columns(const Matrix& x) {
  Matrix y = x.cwiseMax(0.0);
  for (Index j = 0; j < y.cols(); ++j) {
    const double norm = y.col(j).norm();
    if (norm > 1.0) y.col(j) /= norm;
  }
  return y;
}

/// Projection on {x_w : W^T x_w >= 0} for a tight frame W, applied to every
/// coefficient row: x_w + W[-W^T x_w]_+. The result z satisfies W^T z = [W^T x_w]_+.
inline Matrix prox_synthesis_nonneg(const Matrix& coeffs, const LinearTransform& w) {
  if (!w.tight_frame()) throw InvalidInput("synthesis non-negativity prox requires a tight frame");
  const Matrix negative_part = (-w.synthesize_rows(coeffs)).cwiseMax(0.0);
  return coeffs + w.analyze_rows(negative_part);
}

inline Vector prox_synthesis_nonneg(const Vector& coeffs, const LinearTransform& w) {
  Matrix row = coeffs.transpose();
  return prox_synthesis_nonneg(row, w).row(0).transpose();
}

struct AnalysisProxOptions {
  int max_iters = 200;
  /// Stop when ||u_new - u|| <= tol ||u_new|| for the dual variable.
  double tol = 1e-6;
};

struct AnalysisProxResult {
  Matrix value;
  /// Final dual variable; feed it back as warm start for the next call.
  Matrix dual;
  int iterations = 0;
  bool converged = false;
};

/// prox of x -> ||lambda (.) (x W^T)||_1, row-wise.
///
/// Solves the box-constrained dual min_{|u| <= lambda} 1/2 ||u W - x||^2 with
/// forward-backward steps of size 1/||W||^2 and returns x - u W. `warm_dual`,
/// when given with matching shape, seeds the dual iterate.
inline AnalysisProxResult prox_analysis_l1(const Matrix& x, const Matrix& lambda, const LinearTransform& w,
                                           const AnalysisProxOptions& opts = {},
                                           const Matrix* warm_dual = nullptr) {
  require(x.cols() == w.signal_size(), "prox_analysis_l1: signal length does not match the transform");
  require(lambda.rows() == x.rows() && lambda.cols() == w.coeff_size(),
          "prox_analysis_l1: thresholds must be rows x coefficient length");
  detail::check_nonnegative_weights(lambda);

  double norm_sq = 1.0;
  if (!w.tight_frame()) {
    const double nrm = operator_norm(w).value;
    norm_sq = nrm * nrm;
  }
  const double step = 1.0 / norm_sq;

  AnalysisProxResult res;
  Matrix u = (warm_dual && warm_dual->rows() == lambda.rows() && warm_dual->cols() == lambda.cols())
                 ? project_linf(*warm_dual, lambda)
                 : Matrix::Zero(lambda.rows(), lambda.cols());
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Matrix residual = w.synthesize_rows(u) - x;
    Matrix next = project_linf(u - step * w.analyze_rows(residual), lambda);
    const double change = (next - u).norm();
    const double scale = next.norm();
    u.swap(next);
    res.iterations = it;
    if (change <= opts.tol * scale || scale == 0.0) {
      res.converged = true;
      break;
    }
  }
  res.value = x - w.synthesize_rows(u);
  res.dual = std::move(u);
  return res;
}

inline Vector prox_analysis_l1(const Vector& x, const Vector& lambda, const LinearTransform& w,
                               const AnalysisProxOptions& opts = {}) {
  const Matrix xr = x.transpose();
  const Matrix lr = lambda.transpose();
  return prox_analysis_l1(xr, lr, w, opts).value.row(0).transpose();
}

}  // namespace ngmca
