#pragma once

// Splitting solvers for the two alternating subproblems of non-negative
// sparse matrix factorization:
//
//   forward-backward          direct and convolutive S-updates, A-update
//   generalized FB            synthesis S-update  (S = S_w W, S_w W >= 0)
//   Chambolle-Pock            analysis S-update   (S >= 0, ||Lambda (.) S W^T||_1)

#include "ngmca/core.hpp"
#include "ngmca/proximal.hpp"
#include "ngmca/transforms.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace ngmca {

struct SolverParams {
  /// FB / GFB step. Zero selects 1 / L.
  double gamma = 0.0;
  /// GFB relaxation.
  double mu = 1.0;
  double omega_u = 0.5;
  double omega_v = 0.5;
  /// Chambolle-Pock primal and dual steps. Zero selects 0.9 / L.
  double tau = 0.0;
  double sigma = 0.0;
  int max_iters = 80;
  /// Relative iterate change below which iterations stop.
  double tol = 1e-6;
  bool record_objective = false;
};

/// Iterates of one solver invocation. Passing a previous state back in warm
/// starts both the primal and the auxiliary (dual) variables.
struct SolverState {
  Matrix primal;    // S, S_w or A
  Matrix aux_u;     // GFB U_w / Chambolle-Pock dual U_w
  Matrix aux_v;     // GFB V_w / Chambolle-Pock dual V
  Matrix relaxed;   // Chambolle-Pock extrapolation S-bar
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// Result of an S-update. `S` is always in the direct domain; the optimization
/// variable (S or S_w) lives in `state.primal`.
struct SUpdate {
  Matrix S;
  SolverState state;
  double initial_objective = std::numeric_limits<double>::infinity();
  double objective = std::numeric_limits<double>::infinity();
  /// The solver output was worse than the initial point, which was returned instead.
  bool kept_initial = false;
};

struct AUpdate {
  Matrix A;
  /// Columns matching an all-zero row of S; left at their initial value.
  std::vector<bool> frozen_columns;
  int iterations = 0;
  bool converged = false;
  double initial_objective = 0.0;
  double objective = 0.0;
};

namespace detail {

inline constexpr double kFeasibilityTol = 1e-8;

inline bool nonnegative_within_tol(const Matrix& m) {
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return m.minCoeff() >= -kFeasibilityTol * scale;
}

/// Largest eigenvalue of a small symmetric positive semi-definite matrix.
inline double gram_norm(const Matrix& gram) {
  if (gram.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(gram), Eigen::EigenvaluesOnly);
  return std::max(eig.eigenvalues().maxCoeff(), 0.0);
}

/// Upper bound on ||W||^2: exact for tight frames, Young's bound for convolutions.
inline double transform_norm_sq(const LinearTransform& w) {
  if (w.tight_frame()) return 1.0;
  double sum = 0.0;
  for (double t : w.kernel().taps()) sum += std::abs(t);
  return sum * sum;
}

inline double relative_change(const Matrix& next, const Matrix& prev) {
  const double scale = next.norm();
  const double diff = (next - prev).norm();
  return scale > 0.0 ? diff / scale : diff;
}

inline void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string("non-finite values in ") + what);
}

inline Matrix matching_or(const Matrix& candidate, Index rows, Index cols, const Matrix& fallback) {
  return (candidate.rows() == rows && candidate.cols() == cols) ? candidate : fallback;
}

}  // namespace detail

/// Checks the generalized forward-backward convergence conditions
/// gamma < 2/L and mu in (0, min(3/2, (1 + 2/(L gamma))/2)).
inline void validate_gfb(const SolverParams& p, double lipschitz) {
  const double gamma = p.gamma;
  if (!(gamma > 0.0) || !(gamma * lipschitz < 2.0))
    throw InvalidParams("GFB step gamma must satisfy 0 < gamma < 2/L");
  const double mu_max = std::min(1.5, (1.0 + 2.0 / (lipschitz * gamma)) / 2.0);
  if (!(p.mu > 0.0) || !(p.mu < mu_max)) throw InvalidParams("GFB relaxation mu outside (0, min(3/2, (1+2/(L gamma))/2))");
  if (!(p.omega_u > 0.0 && p.omega_u < 1.0 && p.omega_v > 0.0 && p.omega_v < 1.0) ||
      std::abs(p.omega_u + p.omega_v - 1.0) > 1e-12)
    throw InvalidParams("GFB weights must lie in (0,1) and sum to 1");
}

/// Checks tau sigma L^2 < 1 for Chambolle-Pock.
inline void validate_cp(const SolverParams& p, double lipschitz) {
  if (!(p.tau > 0.0) || !(p.sigma > 0.0) || !(p.tau * p.sigma * lipschitz * lipschitz < 1.0))
    throw InvalidParams("Chambolle-Pock steps must satisfy tau, sigma > 0 and tau sigma L^2 < 1");
}

struct NoObjective {
  double operator()(const Matrix&) const { return 0.0; }
};

/// Forward-backward splitting: x <- prox_{gamma g}(x - gamma grad f(x)).
///
/// `grad(x)` returns the gradient of the smooth term; `prox(v, gamma)` the
/// proximal map of gamma g. Stops when the relative iterate change drops
/// below params.tol or after params.max_iters iterations.
template <class Grad, class Prox, class Objective = NoObjective>
SolverState fb_solve(Grad&& grad, double lipschitz, Prox&& prox, Matrix init, const SolverParams& params,
                     Objective&& objective = {}) {
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) throw InvalidInput("fb_solve: Lipschitz constant must be positive");
  const double gamma = params.gamma > 0.0 ? params.gamma : 1.0 / lipschitz;
  if (!(gamma * lipschitz < 2.0)) throw InvalidParams("fb_solve: step must be below 2/L");

  SolverState state;
  state.primal = std::move(init);
  if (params.record_objective) state.objective_trace.push_back(objective(state.primal));
  for (int it = 1; it <= params.max_iters; ++it) {
    const Matrix g = grad(state.primal);
    if (!g.allFinite()) throw NumericalError("fb_solve: gradient is not finite at iteration " + std::to_string(it));
    Matrix next = prox(Matrix(state.primal - gamma * g), gamma);
    const double change = detail::relative_change(next, state.primal);
    state.primal.swap(next);
    state.iterations = it;
    if (params.record_objective) state.objective_trace.push_back(objective(state.primal));
    if (change < params.tol) {
      state.converged = true;
      break;
    }
  }
  return state;
}

// Subproblem objectives, +inf outside the feasible set.

inline double objective_direct(const Matrix& y, const Matrix& a, const Matrix& lambda, const Matrix& s) {
  if (!detail::nonnegative_within_tol(s)) return std::numeric_limits<double>::infinity();
  return 0.5 * (y - a * s).squaredNorm() + lambda.cwiseProduct(s).cwiseAbs().sum();
}

inline double objective_synthesis(const Matrix& y, const Matrix& a, const Matrix& lambda, const LinearTransform& w,
                                  const Matrix& coeffs) {
  const Matrix s = w.synthesize_rows(coeffs);
  if (!detail::nonnegative_within_tol(s)) return std::numeric_limits<double>::infinity();
  return 0.5 * (y - a * s).squaredNorm() + lambda.cwiseProduct(coeffs).cwiseAbs().sum();
}

inline double objective_analysis(const Matrix& y, const Matrix& a, const Matrix& lambda, const LinearTransform& w,
                                 const Matrix& s) {
  if (!detail::nonnegative_within_tol(s)) return std::numeric_limits<double>::infinity();
  return 0.5 * (y - a * s).squaredNorm() + lambda.cwiseProduct(w.analyze_rows(s)).cwiseAbs().sum();
}

inline double objective_convolutive(const Matrix& y, const Matrix& a, const Matrix& lambda,
                                    const LinearTransform& w, const Matrix& coeffs) {
  if (!detail::nonnegative_within_tol(coeffs)) return std::numeric_limits<double>::infinity();
  return 0.5 * (y - a * w.synthesize_rows(coeffs)).squaredNorm() + lambda.cwiseProduct(coeffs).cwiseAbs().sum();
}

/// min_{A >= 0} 1/2 ||Y - A S||^2, optionally with ||A_j||_2 <= 1 for every column.
inline AUpdate update_A(const Matrix& y, const Matrix& s, const Matrix& init_a, const SolverParams& params,
                        bool constrained) {
  require(y.rows() == init_a.rows() && s.rows() == init_a.cols() && y.cols() == s.cols(),
          "update_A: inconsistent shapes");
  if (!detail::nonnegative_within_tol(s)) throw InvalidInput("update_A: S must be non-negative");

  AUpdate out;
  const Matrix sst = s * s.transpose();
  const Matrix yst = y * s.transpose();
  out.frozen_columns.assign(static_cast<std::size_t>(s.rows()), false);
  bool any_active = false;
  for (Index j = 0; j < s.rows(); ++j) {
    out.frozen_columns[static_cast<std::size_t>(j)] = sst(j, j) == 0.0;
    any_active = any_active || sst(j, j) > 0.0;
  }
  auto objective = [&](const Matrix& a) { return 0.5 * (y - a * s).squaredNorm(); };
  out.initial_objective = objective(init_a);
  if (!any_active) {
    out.A = init_a;
    out.objective = out.initial_objective;
    out.converged = true;
    return out;
  }

  const double lipschitz = detail::gram_norm(sst);
  auto grad = [&](const Matrix& a) -> Matrix { return a * sst - yst; };
  auto prox = [&](const Matrix& v, double) -> Matrix {
    return constrained ? prox_nonneg_unit_ball_columns(v) : prox_nonneg(v);
  };
  SolverState st = fb_solve(grad, lipschitz, prox, init_a, params);
  for (Index j = 0; j < s.rows(); ++j)
    if (out.frozen_columns[static_cast<std::size_t>(j)]) st.primal.col(j) = init_a.col(j);
  out.A = std::move(st.primal);
  out.iterations = st.iterations;
  out.converged = st.converged;
  out.objective = objective(out.A);
  return out;
}

namespace detail {

// Returns the initial point when the solver output did not improve on it.
inline void keep_better(SUpdate& up, const Matrix& init_primal, const Matrix& init_s, double init_objective) {
  up.initial_objective = init_objective;
  if (std::isfinite(init_objective) && !(up.objective <= init_objective)) {
    up.state.primal = init_primal;
    up.S = init_s;
    up.objective = init_objective;
    up.kept_initial = true;
  }
}

}  // namespace detail

/// argmin_{S >= 0} 1/2 ||Y - A S||^2 + ||Lambda (.) S||_1 by forward-backward
/// with the non-negative soft threshold.
inline SUpdate update_S_direct(const Matrix& y, const Matrix& a, const Matrix& lambda, const Matrix& init_s,
                               const SolverParams& params) {
  require(y.rows() == a.rows() && lambda.rows() == a.cols() && lambda.cols() == y.cols() &&
              init_s.rows() == lambda.rows() && init_s.cols() == lambda.cols(),
          "update_S_direct: inconsistent shapes");
  detail::check_nonnegative_weights(lambda);
  const Matrix ata = a.transpose() * a;
  const Matrix aty = a.transpose() * y;
  const double lipschitz = std::max(detail::gram_norm(ata), std::numeric_limits<double>::min());

  auto grad = [&](const Matrix& s) -> Matrix { return ata * s - aty; };
  auto prox = [&](const Matrix& v, double gamma) -> Matrix { return (v - gamma * lambda).cwiseMax(0.0); };
  auto objective = [&](const Matrix& s) { return objective_direct(y, a, lambda, s); };

  SUpdate up;
  up.state = fb_solve(grad, lipschitz, prox, init_s, params, objective);
  up.S = up.state.primal;
  up.objective = objective(up.S);
  detail::keep_better(up, init_s, init_s, objective(init_s));
  return up;
}

/// Synthesis update: argmin_{S_w W >= 0} 1/2 ||Y - A S_w W||^2 + ||Lambda (.) S_w||_1
/// with the generalized forward-backward algorithm (two auxiliaries, one per
/// non-smooth term). `warm` supplies S_w and, when shapes match, U_w and V_w.
inline SUpdate update_S_synthesis(const Matrix& y, const Matrix& a, const Matrix& lambda, const LinearTransform& w,
                                  const SolverState& warm, SolverParams params) {
  if (!w.tight_frame()) throw InvalidInput("update_S_synthesis: transform must be a tight frame");
  const Index r = a.cols();
  const Index p = w.coeff_size();
  require(y.rows() == a.rows() && y.cols() == w.signal_size() && lambda.rows() == r && lambda.cols() == p &&
              warm.primal.rows() == r && warm.primal.cols() == p,
          "update_S_synthesis: inconsistent shapes");
  detail::check_nonnegative_weights(lambda);

  const Matrix ata = a.transpose() * a;
  const Matrix aty = a.transpose() * y;
  const double lipschitz = std::max(detail::gram_norm(ata), std::numeric_limits<double>::min());
  if (params.gamma == 0.0) params.gamma = 1.0 / lipschitz;
  validate_gfb(params, lipschitz);
  const double gamma = params.gamma;
  const double mu = params.mu;
  const Matrix soft_lambda = (gamma / params.omega_u) * lambda;
  auto objective = [&](const Matrix& sw) { return objective_synthesis(y, a, lambda, w, sw); };

  SUpdate up;
  SolverState& st = up.state;
  st.primal = warm.primal;
  st.aux_u = detail::matching_or(warm.aux_u, r, p, st.primal);
  st.aux_v = detail::matching_or(warm.aux_v, r, p, st.primal);
  if (params.record_objective) st.objective_trace.push_back(objective(st.primal));

  for (int it = 1; it <= params.max_iters; ++it) {
    const Matrix& sw = st.primal;
    const Matrix g = w.analyze_rows(ata * w.synthesize_rows(sw) - aty);
    detail::check_finite(g, "synthesis gradient");
    const Matrix base = 2.0 * sw - gamma * g;
    st.aux_u += mu * (soft_threshold(Matrix(base - st.aux_u), soft_lambda) - sw);
    st.aux_v += mu * (prox_synthesis_nonneg(Matrix(base - st.aux_v), w) - sw);
    Matrix next = params.omega_u * st.aux_u + params.omega_v * st.aux_v;
    const double change = detail::relative_change(next, sw);
    st.primal.swap(next);
    st.iterations = it;
    if (params.record_objective) st.objective_trace.push_back(objective(st.primal));
    if (change < params.tol) {
      st.converged = true;
      break;
    }
  }
  // The average of the auxiliaries is only asymptotically feasible.
  st.primal = prox_synthesis_nonneg(st.primal, w);
  up.S = w.synthesize_rows(st.primal).cwiseMax(0.0);
  up.objective = objective(st.primal);
  detail::keep_better(up, warm.primal, w.synthesize_rows(warm.primal), objective(warm.primal));
  return up;
}

/// Analysis update: argmin_{S >= 0} 1/2 ||Y - A S||^2 + ||Lambda (.) (S W^T)||_1
/// with Chambolle-Pock on the saddle-point form (duals U_w in the l_inf box,
/// V <= 0). (I + tau A^T A)^{-1} is factored once per call.
inline SUpdate update_S_analysis(const Matrix& y, const Matrix& a, const Matrix& lambda, const LinearTransform& w,
                                 const SolverState& warm, SolverParams params) {
  const Index r = a.cols();
  const Index n = w.signal_size();
  const Index p = w.coeff_size();
  require(y.rows() == a.rows() && y.cols() == n && lambda.rows() == r && lambda.cols() == p &&
              warm.primal.rows() == r && warm.primal.cols() == n,
          "update_S_analysis: inconsistent shapes");
  detail::check_nonnegative_weights(lambda);

  const double lipschitz = std::sqrt(1.0 + detail::transform_norm_sq(w));
  if (params.tau == 0.0) params.tau = 0.9 / lipschitz;
  if (params.sigma == 0.0) params.sigma = 0.9 / lipschitz;
  validate_cp(params, lipschitz);
  const double tau = params.tau;
  const double sigma = params.sigma;

  const Matrix ata = a.transpose() * a;
  const Matrix aty = a.transpose() * y;
  const Eigen::LLT<Eigen::MatrixXd> factor(Eigen::MatrixXd::Identity(r, r) + tau * Eigen::MatrixXd(ata));
  if (factor.info() != Eigen::Success) throw NumericalError("update_S_analysis: Cholesky factorization failed");
  auto objective = [&](const Matrix& s) { return objective_analysis(y, a, lambda, w, s); };

  SUpdate up;
  SolverState& st = up.state;
  st.primal = warm.primal;
  st.aux_u = detail::matching_or(warm.aux_u, r, p, Matrix::Zero(r, p));
  st.aux_v = detail::matching_or(warm.aux_v, r, n, Matrix::Zero(r, n));
  st.relaxed = st.primal;
  if (params.record_objective) st.objective_trace.push_back(objective(st.primal));

  for (int it = 1; it <= params.max_iters; ++it) {
    st.aux_u = project_linf(Matrix(st.aux_u + sigma * w.analyze_rows(st.relaxed)), lambda);
    st.aux_v = (st.aux_v + sigma * st.relaxed).cwiseMin(0.0);
    const Matrix rhs = st.primal - tau * (w.synthesize_rows(st.aux_u) + st.aux_v - aty);
    Matrix next = factor.solve(Eigen::MatrixXd(rhs));
    detail::check_finite(next, "analysis primal iterate");
    const double change = detail::relative_change(next, st.primal);
    st.relaxed = 2.0 * next - st.primal;
    st.primal.swap(next);
    st.iterations = it;
    if (params.record_objective) st.objective_trace.push_back(objective(st.primal));
    if (change < params.tol) {
      st.converged = true;
      break;
    }
  }
  // Non-negativity is enforced through the dual V only in the limit.
  st.primal = st.primal.cwiseMax(0.0);
  up.S = st.primal;
  up.objective = objective(up.S);
  detail::keep_better(up, warm.primal, warm.primal, objective(warm.primal));
  return up;
}

/// Convolutive update: argmin_{S_w >= 0} 1/2 ||Y - A S_w W||^2 + ||Lambda (.) S_w||_1
/// where S_w W convolves every row with the kernel of W.
inline SUpdate update_S_convolutive(const Matrix& y, const Matrix& a, const Matrix& lambda, const LinearTransform& w,
                                    const Matrix& init_sw, const SolverParams& params) {
  const Index r = a.cols();
  require(y.rows() == a.rows() && y.cols() == w.signal_size() && lambda.rows() == r &&
              lambda.cols() == w.coeff_size() && init_sw.rows() == r && init_sw.cols() == w.coeff_size(),
          "update_S_convolutive: inconsistent shapes");
  detail::check_nonnegative_weights(lambda);
  const Matrix ata = a.transpose() * a;
  const Matrix aty_w = w.analyze_rows(a.transpose() * y);
  const double lipschitz =
      std::max(detail::gram_norm(ata) * detail::transform_norm_sq(w), std::numeric_limits<double>::min());

  auto grad = [&](const Matrix& sw) -> Matrix { return w.analyze_rows(ata * w.synthesize_rows(sw)) - aty_w; };
  auto prox = [&](const Matrix& v, double gamma) -> Matrix { return (v - gamma * lambda).cwiseMax(0.0); };
  auto objective = [&](const Matrix& sw) { return objective_convolutive(y, a, lambda, w, sw); };

  SUpdate up;
  up.state = fb_solve(grad, lipschitz, prox, init_sw, params, objective);
  up.S = w.synthesize_rows(up.state.primal);
  up.objective = objective(up.state.primal);
  detail::keep_better(up, init_sw, w.synthesize_rows(init_sw), objective(init_sw));
  return up;
}

}  // namespace ngmca
