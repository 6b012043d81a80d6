#pragma once

// Outer alternating loop of non-negative GMCA and its transformed-domain
// variants, the decreasing threshold schedule, reweighted-l1 weights and a
// sparse HALS baseline.

#include "ngmca/core.hpp"
#include "ngmca/proximal.hpp"
#include "ngmca/solvers.hpp"
#include "ngmca/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ngmca {

enum class Variant { direct, ortho, synthesis, analysis, convolutive };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::direct: return "direct";
    case Variant::ortho: return "ortho";
    case Variant::synthesis: return "synthesis";
    case Variant::analysis: return "analysis";
    case Variant::convolutive: return "convolutive";
  }
  return "?";
}

/// Y = A S + Z with r sources to recover.
struct Problem {
  Matrix Y;
  Index r = 1;
};

struct NgmcaConfig {
  Variant variant = Variant::direct;
  /// Wavelet transform (ortho: orthonormal, synthesis/analysis: tight frame) or
  /// convolution operator (convolutive). Ignored for the direct variant.
  std::optional<LinearTransform> transform;
  /// Outer iterations K.
  int iterations = 300;
  /// Trailing outer iterations run with fixed thresholds and the norm-constrained A-update.
  int refinement_iters = 50;
  /// Final threshold = tau_sigma_inf * sigma_grad. Unset: 1 for direct/ortho, 2 otherwise.
  std::optional<double> tau_sigma_inf;
  bool reweighted = false;
  int reweight_passes = 1;
  /// Coefficients that are never penalized (length = coefficient length).
  std::vector<bool> coarse_scale_mask;
  std::uint64_t seed = 0;
  int inner_iters = 80;
  int refinement_inner_iters = 250;
  double inner_tol = 1e-6;

  double final_threshold_factor() const {
    if (tau_sigma_inf) return *tau_sigma_inf;
    return (variant == Variant::direct || variant == Variant::ortho) ? 1.0 : 2.0;
  }

  /// Standard setup: Symmlet-4 with 3 levels for wavelet variants, width-4
  /// Laplacian kernel for the convolutive one.
  static NgmcaConfig defaults(Variant variant, Index n, std::uint64_t seed = 0) {
    NgmcaConfig cfg;
    cfg.variant = variant;
    cfg.seed = seed;
    switch (variant) {
      case Variant::direct: break;
      case Variant::ortho: cfg.transform = LinearTransform::orthonormal_wavelet(n, WaveletFilter::symmlet4(), 3); break;
      case Variant::synthesis:
      case Variant::analysis:
        cfg.transform = LinearTransform::undecimated_wavelet(n, WaveletFilter::symmlet4(), 3);
        break;
      case Variant::convolutive:
        cfg.transform = LinearTransform::convolution(n, ConvolutionKernel::laplacian(4.0));
        break;
    }
    return cfg;
  }
};

struct ThresholdState {
  /// r x q thresholds actually applied.
  Matrix lambda;
  /// Per-source current schedule value (before masking / reweighting).
  Vector level;
  Vector sigma_grad;
  /// tau_sigma_inf * sigma_grad.
  Vector target;
  int position = 0;
};

struct IterationRecord {
  int iteration = 0;
  bool refinement = false;
  /// 1/2 ||Y - AS||^2 + penalty, +inf when a constraint is violated.
  double cost = 0.0;
  double lambda_mean = 0.0;
  double sigma_grad_mean = 0.0;
};

struct SeparationResult {
  Matrix A;
  Matrix S;
  /// Optimization variable: S_w for synthesis/ortho/convolutive, S otherwise.
  Matrix coefficients;
  Matrix lambda;
  std::vector<IterationRecord> history;
  int iterations = 0;
  /// Mixing columns re-drawn because their source vanished.
  int redrawn_columns = 0;
  /// Number of subproblems stopped by their iteration budget.
  int inner_budget_hits = 0;
  bool ridge_used = false;
};

// ---------------------------------------------------------------------------
// Noise estimation

/// 1.4826 * median(|x - median(x)|). Zero for a constant input.
inline double mad_sigma(std::span<const double> x) {
  require(x.size() >= 2, "mad_sigma needs at least two samples");
  std::vector<double> v(x.begin(), x.end());
  auto median_of = [](std::vector<double>& w) {
    const std::size_t mid = w.size() / 2;
    std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(mid), w.end());
    double med = w[mid];
    if (w.size() % 2 == 0) {
      const double lower = *std::max_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(mid));
      med = 0.5 * (med + lower);
    }
    return med;
  };
  const double med = median_of(v);
  for (auto& e : v) e = std::abs(e - med);
  return 1.4826 * median_of(v);
}

/// Per-row MAD; entries flagged in `exclude` (one flag per column) are skipped.
inline Vector mad_sigma_rows(const Matrix& m, const std::vector<bool>& exclude = {}) {
  Vector out(m.rows());
  if (exclude.empty()) {
    for (Index i = 0; i < m.rows(); ++i)
      out(i) = mad_sigma(std::span<const double>(m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())));
    return out;
  }
  require(static_cast<Index>(exclude.size()) == m.cols(), "mad_sigma_rows: mask length does not match the columns");
  std::vector<double> kept;
  for (Index i = 0; i < m.rows(); ++i) {
    kept.clear();
    for (Index j = 0; j < m.cols(); ++j)
      if (!exclude[static_cast<std::size_t>(j)]) kept.push_back(m(i, j));
    out(i) = mad_sigma(kept);
  }
  return out;
}

/// Where the noise level of a penalized-domain gradient row is measured.
///
/// Smooth non-negative sources leave most of their (and the thresholding
/// bias's) energy in the coarse bands of a wavelet row, so the row-wide MAD
/// overestimates the noise. The finest detail band is nearly signal free: its
/// MAD, rescaled by `scale`, gives the MAD white noise would have over the
/// whole (unmasked) row. length = 0 means the whole row with scale 1.
struct NoiseReference {
  Index offset = 0;
  Index length = 0;
  double scale = 1.0;
};

namespace detail {

// m such that the mean of erf(m / (sqrt2 gain)) over `gains` is 1/2, i.e. the
// median of |x| for x a mixture of N(0, gain^2).
inline double mixture_median_abs(const std::vector<double>& gains) {
  double lo = 0.0, hi = 10.0 * *std::max_element(gains.begin(), gains.end());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double mass = 0.0;
    for (const double g : gains) mass += std::erf(mid / (std::numbers::sqrt2 * g));
    (mass / static_cast<double>(gains.size()) < 0.5 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline NoiseReference noise_reference(const LinearTransform& w, const std::vector<bool>& mask = {}) {
  const Index n = w.signal_size();
  const Index p = w.coeff_size();
  require(mask.empty() || static_cast<Index>(mask.size()) == p, "noise_reference: mask length does not match");
  NoiseReference ref;
  if (w.kind() == TransformKind::orthonormal_wavelet) {
    // White noise stays white: the band MAD is the row MAD.
    ref.offset = n - n / 2;
    ref.length = n / 2;
    return ref;
  }
  if (w.kind() != TransformKind::undecimated_wavelet) return ref;
  // Every band is a circulant filter: its row norms equal the norm of its
  // response to a unit impulse.
  Vector delta = Vector::Zero(n);
  delta(0) = 1.0;
  const Vector response = w.forward(delta);
  const Index bands = p / n;
  std::vector<double> band_gain(static_cast<std::size_t>(bands));
  for (Index b = 0; b < bands; ++b) band_gain[static_cast<std::size_t>(b)] = response.segment(b * n, n).norm();
  std::vector<double> gains;
  gains.reserve(static_cast<std::size_t>(p));
  for (Index k = 0; k < p; ++k)
    if (mask.empty() || !mask[static_cast<std::size_t>(k)]) gains.push_back(band_gain[static_cast<std::size_t>(k / n)]);
  require(!gains.empty(), "noise_reference: every coefficient is masked");
  const double row_mad = detail::mixture_median_abs(gains) / detail::mixture_median_abs({1.0});
  ref.offset = p - n;
  ref.length = n;
  ref.scale = row_mad / band_gain.back();
  return ref;
}

// ---------------------------------------------------------------------------
// Thresholds

namespace detail {

inline Matrix broadcast_rows(const Vector& level, Index cols, const std::vector<bool>& mask) {
  Matrix out = level.replicate(1, cols);
  if (!mask.empty()) {
    require(static_cast<Index>(mask.size()) == cols, "coarse-scale mask length does not match the coefficients");
    for (Index j = 0; j < cols; ++j)
      if (mask[static_cast<std::size_t>(j)]) out.col(j).setZero();
  }
  return out;
}

}  // namespace detail

/// Moves the per-source thresholds one step along the linear path towards
/// tau_sigma_inf * sigma_grad, where sigma_grad is re-estimated from the
/// current gradient rows (see NoiseReference). `k` is the outer iteration just completed (1-based)
/// and `descent_iters` the length of the decreasing phase; afterwards the
/// thresholds are left untouched.
inline ThresholdState update_thresholds(ThresholdState state, const Matrix& gradient_residual, int k,
                                        int descent_iters, double tau_sigma_inf,
                                        const std::vector<bool>& mask = {}, const NoiseReference& ref = {}) {
  require(gradient_residual.rows() == state.level.size(), "update_thresholds: row count mismatch");
  if (k > descent_iters) return state;
  if (ref.length == 0) {
    state.sigma_grad = mad_sigma_rows(gradient_residual, mask);
  } else {
    require(ref.offset + ref.length <= gradient_residual.cols(), "update_thresholds: noise reference out of range");
    state.sigma_grad = ref.scale * mad_sigma_rows(gradient_residual.middleCols(ref.offset, ref.length));
  }
  state.target = tau_sigma_inf * state.sigma_grad;
  const double remaining = static_cast<double>(descent_iters - k + 1);
  state.level = (state.level - (state.level - state.target) / remaining).cwiseMax(0.0);
  state.lambda = detail::broadcast_rows(state.level, gradient_residual.cols(), mask);
  state.position = k;
  return state;
}

/// Lambda / (1 + (S_w_inv / Sigma)^2), elementwise.
inline Matrix reweight_lambda(const Matrix& lambda, const Matrix& ls_coeffs, const Matrix& sigma) {
  require(lambda.rows() == ls_coeffs.rows() && lambda.cols() == ls_coeffs.cols() && sigma.rows() == lambda.rows() &&
              sigma.cols() == lambda.cols(),
          "reweight_lambda: shape mismatch");
  if (sigma.size() > 0 && !(sigma.minCoeff() > 0.0)) throw InvalidInput("reweight_lambda: Sigma must be positive");
  const auto ratio = ls_coeffs.array() / sigma.array();
  return (lambda.array() / (1.0 + ratio.square())).matrix();
}

struct LeastSquaresCoefficients {
  Matrix coeffs;
  bool ridge_used = false;
};

/// (A^T A)^{-1} A^T Y W^T. A ridge of 1e-10 trace(A^T A) is added when A^T A
/// is numerically singular.
inline LeastSquaresCoefficients ls_coefficients(const Matrix& y, const Matrix& a, const LinearTransform& w) {
  require(y.rows() == a.rows() && y.cols() == w.signal_size(), "ls_coefficients: inconsistent shapes");
  Eigen::MatrixXd ata = a.transpose() * a;
  LeastSquaresCoefficients out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ata, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(top, 1e-300))) {
    ata.diagonal().array() += 1e-10 * std::max(ata.trace(), 1e-300);
    out.ridge_used = true;
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
  const Matrix s_inv = ldlt.solve(Eigen::MatrixXd(a.transpose() * y));
  out.coeffs = w.analyze_rows(s_inv);
  return out;
}

// ---------------------------------------------------------------------------
// Initialization

struct Initialization {
  Matrix A;
  /// S (direct / analysis) or S_w (ortho / synthesis / convolutive), all zero.
  Matrix coefficients;
  ThresholdState thresholds;
};

namespace detail {

inline LinearTransform effective_transform(const NgmcaConfig& cfg, Index n) {
  if (cfg.variant == Variant::direct) return LinearTransform::identity(n);
  require(cfg.transform.has_value(), std::string("variant '") + std::string(to_string(cfg.variant)) +
                                         "' needs a transform");
  const LinearTransform& t = *cfg.transform;
  require(t.signal_size() == n, "transform length does not match the number of samples");
  switch (cfg.variant) {
    case Variant::ortho:
      require(t.orthonormal(), "ortho variant needs an orthonormal transform");
      break;
    case Variant::synthesis:
      require(t.tight_frame(), "synthesis variant needs a tight frame");
      break;
    case Variant::convolutive:
      require(t.kind() == TransformKind::convolution, "convolutive variant needs a convolution operator");
      break;
    default: break;
  }
  return t;
}

inline void normalize_column(Matrix& a, Index j) {
  const double norm = a.col(j).norm();
  if (norm > 0.0) a.col(j) /= norm;
}

inline Matrix abs_gaussian_columns(Index rows, Index cols, Rng& rng) {
  Matrix a = gaussian_matrix(rows, cols, rng).cwiseAbs();
  for (Index j = 0; j < cols; ++j) normalize_column(a, j);
  return a;
}

}  // namespace detail

/// A^0 = |G| with unit columns, zero sources, and starting thresholds equal to
/// the largest gradient magnitude of each row (no coefficient is active yet).
inline Initialization initialize(const Problem& problem, const NgmcaConfig& config, Rng& rng) {
  const Index m = problem.Y.rows();
  const Index n = problem.Y.cols();
  const LinearTransform w = detail::effective_transform(config, n);
  Initialization init;
  init.A = detail::abs_gaussian_columns(m, problem.r, rng);
  const Index q = w.coeff_size();
  const bool signal_domain = config.variant == Variant::direct || config.variant == Variant::analysis;
  init.coefficients = Matrix::Zero(problem.r, signal_domain ? n : q);
  const Matrix grad = w.analyze_rows(init.A.transpose() * problem.Y);
  ThresholdState& th = init.thresholds;
  th.level = grad.cwiseAbs().rowwise().maxCoeff();
  th.sigma_grad = Vector::Zero(problem.r);
  th.target = Vector::Zero(problem.r);
  th.lambda = detail::broadcast_rows(th.level, q, config.coarse_scale_mask);
  return init;
}

inline Initialization initialize(const Problem& problem, const NgmcaConfig& config) {
  Rng rng(config.seed);
  return initialize(problem, config, rng);
}

// ---------------------------------------------------------------------------
// nGMCA

namespace detail {

inline void validate(const Problem& problem, const NgmcaConfig& cfg) {
  require(problem.Y.rows() >= 1 && problem.Y.cols() >= 1, "data matrix is empty");
  require(problem.r >= 1, "need at least one source");
  require(problem.r <= problem.Y.rows(), "more sources than measurements (r > m)");
  require(problem.r <= problem.Y.cols(), "more sources than samples (r > n)");
  require(problem.Y.allFinite(), "data matrix contains non-finite values");
  require(cfg.iterations > cfg.refinement_iters && cfg.refinement_iters >= 0,
          "need iterations > refinement_iters >= 0");
  require(cfg.final_threshold_factor() > 0.0, "tau_sigma_inf must be positive");
  require(cfg.reweight_passes >= 1, "reweight_passes must be at least 1");
  require(cfg.inner_iters >= 1 && cfg.refinement_inner_iters >= 1, "inner iteration budgets must be positive");
}

// Penalized-domain gradient of 1/2 ||Y - AS||^2 with respect to the coefficients.
inline Matrix penalized_gradient(const Matrix& y, const Matrix& a, const Matrix& s, const LinearTransform& w) {
  return w.analyze_rows(a.transpose() * (a * s - y));
}

}  // namespace detail

/// Cost of the full problem: 1/2 ||Y - AS||^2 + ||Lambda (.) coefficients||_1
/// (the analysis variant penalizes S W^T), +inf when A < 0, S < 0 or, with
/// `unit_columns`, a column of A has norm above 1.
inline double ngmca_cost(const Matrix& y, const Matrix& a, const Matrix& s, const Matrix& coefficients,
                         const Matrix& lambda, Variant variant, const LinearTransform& w, bool unit_columns) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (a.size() > 0 && a.minCoeff() < 0.0) return inf;
  if (unit_columns)
    for (Index j = 0; j < a.cols(); ++j)
      if (a.col(j).norm() > 1.0 + 1e-9) return inf;
  if (!detail::nonnegative_within_tol(s)) return inf;
  const double data = 0.5 * (y - a * s).squaredNorm();
  const Matrix penalized = variant == Variant::analysis ? w.analyze_rows(s) : coefficients;
  return data + lambda.cwiseProduct(penalized).cwiseAbs().sum();
}

/// Runs the alternating scheme: per outer iteration, normalize the columns of
/// A, update S for the configured variant, update A (norm-constrained during
/// refinement) and lower the thresholds.
inline SeparationResult run_ngmca(const Problem& problem, const NgmcaConfig& config) {
  detail::validate(problem, config);
  const Matrix& y = problem.Y;
  const Index n = y.cols();
  const LinearTransform w = detail::effective_transform(config, n);
  const Variant variant = config.variant;
  const int descent_iters = config.iterations - config.refinement_iters;
  const double tau_inf = config.final_threshold_factor();

  const NoiseReference noise_ref = noise_reference(w, config.coarse_scale_mask);

  Rng rng(config.seed);
  Initialization init = initialize(problem, config, rng);
  Matrix a = std::move(init.A);
  ThresholdState th = std::move(init.thresholds);
  // Warm-start carrier: primal is the optimization variable of the S-update.
  SolverState warm;
  warm.primal = std::move(init.coefficients);

  auto to_signal = [&](const Matrix& coeffs) -> Matrix {
    switch (variant) {
      case Variant::direct:
      case Variant::analysis: return coeffs;
      default: return w.synthesize_rows(coeffs);
    }
  };
  Matrix s = to_signal(warm.primal);

  SeparationResult result;
  SolverParams inner;
  inner.tol = config.inner_tol;
  SolverParams a_params = inner;

  // Reweighting points inside the refinement phase.
  std::vector<int> reweight_at;
  if (config.reweighted) {
    const int passes = config.reweight_passes;
    for (int pass = 0; pass < passes; ++pass)
      reweight_at.push_back(descent_iters + (pass * config.refinement_iters) / passes);
  }
  Matrix base_lambda;
  std::vector<bool> was_active(static_cast<std::size_t>(problem.r), false);

  for (int k = 1; k <= config.iterations; ++k) {
    const bool refining = k > descent_iters;
    inner.max_iters = refining ? config.refinement_inner_iters : config.inner_iters;
    a_params.max_iters = inner.max_iters;

    // Unit columns for A; the source row absorbs the scale so that AS is kept.
    // Rows start at zero and switch on as the thresholds decrease; a row that
    // dies after having been active, or is still off when the refinement
    // starts, gets a fresh mixing column.
    for (Index j = 0; j < problem.r; ++j) {
      const double norm = a.col(j).norm();
      const bool row_zero = warm.primal.row(j).cwiseAbs().maxCoeff() == 0.0;
      if (!row_zero) was_active[static_cast<std::size_t>(j)] = true;
      const bool degenerate =
          row_zero && (was_active[static_cast<std::size_t>(j)] || k == descent_iters + 1);
      if (norm == 0.0 || degenerate) {
        was_active[static_cast<std::size_t>(j)] = false;
        a.col(j) = detail::abs_gaussian_columns(y.rows(), 1, rng).col(0);
        warm.primal.row(j).setZero();
        if (warm.aux_u.rows() == problem.r) warm.aux_u.row(j).setZero();
        if (warm.aux_v.rows() == problem.r) warm.aux_v.row(j).setZero();
        ++result.redrawn_columns;
        continue;
      }
      a.col(j) /= norm;
      warm.primal.row(j) *= norm;
      if (variant == Variant::synthesis || variant == Variant::ortho) {
        if (warm.aux_u.rows() == problem.r) warm.aux_u.row(j) *= norm;
        if (warm.aux_v.rows() == problem.r) warm.aux_v.row(j) *= norm;
      }
    }

    SUpdate up;
    switch (variant) {
      case Variant::direct: up = update_S_direct(y, a, th.lambda, warm.primal, inner); break;
      case Variant::ortho:
      case Variant::synthesis: up = update_S_synthesis(y, a, th.lambda, w, warm, inner); break;
      case Variant::analysis: up = update_S_analysis(y, a, th.lambda, w, warm, inner); break;
      case Variant::convolutive: up = update_S_convolutive(y, a, th.lambda, w, warm.primal, inner); break;
    }
    if (!up.state.converged && !up.kept_initial) ++result.inner_budget_hits;
    warm = std::move(up.state);
    s = std::move(up.S);

    AUpdate au = update_A(y, s, a, a_params, refining);
    a = std::move(au.A);

    if (k <= descent_iters) {
      // Expressed for unit columns of A, the scaling used by the next S-update.
      Matrix grad = detail::penalized_gradient(y, a, s, w);
      for (Index j = 0; j < problem.r; ++j) {
        const double norm = a.col(j).norm();
        if (norm > 0.0) grad.row(j) /= norm;
      }
      th = update_thresholds(std::move(th), grad, k, descent_iters, tau_inf, config.coarse_scale_mask, noise_ref);
      base_lambda = th.lambda;
    }
    if (std::find(reweight_at.begin(), reweight_at.end(), k) != reweight_at.end()) {
      const LeastSquaresCoefficients ls = ls_coefficients(y, a, w);
      result.ridge_used = result.ridge_used || ls.ridge_used;
      Vector sigma = mad_sigma_rows(ls.coeffs);
      for (Index i = 0; i < sigma.size(); ++i)
        if (!(sigma(i) > 0.0)) sigma(i) = std::max(1e-12 * ls.coeffs.row(i).cwiseAbs().maxCoeff(), 1e-300);
      th.lambda = reweight_lambda(base_lambda, ls.coeffs, sigma.replicate(1, ls.coeffs.cols()));
      if (!config.coarse_scale_mask.empty())
        th.lambda = th.lambda.cwiseProduct(detail::broadcast_rows(Vector::Ones(problem.r), th.lambda.cols(),
                                                                  config.coarse_scale_mask));
    }

    IterationRecord rec;
    rec.iteration = k;
    rec.refinement = refining;
    rec.cost = ngmca_cost(y, a, s, warm.primal, th.lambda, variant, w, refining);
    rec.lambda_mean = th.lambda.size() ? th.lambda.mean() : 0.0;
    rec.sigma_grad_mean = th.sigma_grad.size() ? th.sigma_grad.mean() : 0.0;
    result.history.push_back(rec);
  }

  result.A = std::move(a);
  result.S = std::move(s);
  result.coefficients = std::move(warm.primal);
  result.lambda = std::move(th.lambda);
  result.iterations = config.iterations;
  return result;
}

// ---------------------------------------------------------------------------
// Sparse HALS baseline

/// Cyclic rank-one HALS with an l1 penalty on S:
///   S_j <- [A_j^T R_j - lambda]_+ / ||A_j||^2,  A_j <- [R_j S_j^T]_+ / ||S_j||^2,
/// followed by column normalization of A. Components with zero energy are skipped.
inline SeparationResult sparse_hals_baseline(const Matrix& y, Index r, double lambda, int iters, std::uint64_t seed) {
  require(lambda >= 0.0, "sparse_hals_baseline: lambda must be non-negative");
  require(r >= 1 && r <= y.rows() && r <= y.cols(), "sparse_hals_baseline: invalid source count");
  require(iters >= 1, "sparse_hals_baseline: need at least one iteration");
  Rng rng(seed);
  Matrix a = detail::abs_gaussian_columns(y.rows(), r, rng);
  Matrix s = Matrix::Zero(r, y.cols());

  SeparationResult res;
  for (int it = 1; it <= iters; ++it) {
    const Matrix aty = a.transpose() * y;
    const Matrix ata = a.transpose() * a;
    for (Index j = 0; j < r; ++j) {
      const double diag = ata(j, j);
      if (diag <= 0.0) continue;
      const Matrix resid_corr = aty.row(j) - ata.row(j) * s + diag * s.row(j);
      s.row(j) = ((resid_corr.array() - lambda) / diag).max(0.0).matrix();
    }
    const Matrix yst = y * s.transpose();
    const Matrix sst = s * s.transpose();
    for (Index j = 0; j < r; ++j) {
      const double diag = sst(j, j);
      if (diag <= 0.0) continue;
      const Eigen::VectorXd col = (yst.col(j) - a * sst.col(j) + diag * a.col(j)) / diag;
      a.col(j) = col.cwiseMax(0.0);
      const double norm = a.col(j).norm();
      if (norm > 0.0) {
        a.col(j) /= norm;
        s.row(j) *= norm;
      } else {
        a.col(j) = detail::abs_gaussian_columns(y.rows(), 1, rng).col(0);
        s.row(j).setZero();
        ++res.redrawn_columns;
      }
    }
    IterationRecord rec;
    rec.iteration = it;
    rec.cost = 0.5 * (y - a * s).squaredNorm() + lambda * s.sum();
    res.history.push_back(rec);
  }
  res.A = std::move(a);
  res.coefficients = s;
  res.S = std::move(s);
  res.lambda = Matrix::Constant(r, y.cols(), lambda);
  res.iterations = iters;
  return res;
}

}  // namespace ngmca
