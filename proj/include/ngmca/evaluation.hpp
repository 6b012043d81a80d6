#pragma once

// Separation quality: projection-based decomposition of an estimated source
// into target / interference / noise / artifact parts, the SDR, SIR, SNR and
// SAR energy ratios, Hoyer sparseness, and matching of estimates to the
// reference sources (permutation and scale).

#include "ngmca/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace ngmca {

inline constexpr double kDbCap = 200.0;

struct SourceParts {
  Vector target;
  Vector interf;
  Vector noise;
  Vector artifacts;
};

struct Ratios {
  double sdr = 0.0;
  double sir = 0.0;
  double snr = 0.0;
  double sar = 0.0;
  /// The estimate has no energy along its reference source.
  bool zero_target = false;
};

namespace detail {

// Orthonormal basis (columns) of the span of the rows of `rows`.
inline Eigen::MatrixXd row_space_basis(const Matrix& rows, Index& rank, double& conditioning) {
  const Eigen::MatrixXd cols = rows.transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(cols);
  qr.setThreshold(1e-10);
  rank = qr.rank();
  const auto diag = qr.matrixR().diagonal().cwiseAbs();
  conditioning = diag.size() > 0 && diag(diag.size() - 1) > 0.0 ? diag(0) / diag(diag.size() - 1)
                                                                 : std::numeric_limits<double>::infinity();
  Eigen::MatrixXd q = qr.householderQ();
  return q.leftCols(rank);
}

inline double to_db(double num, double den) {
  if (den <= 0.0) return num > 0.0 ? kDbCap : -kDbCap;
  if (num <= 0.0) return -kDbCap;
  return std::clamp(10.0 * std::log10(num / den), -kDbCap, kDbCap);
}

}  // namespace detail

/// Projection chain for a fixed set of reference sources (rows of `sources`)
/// and, optionally, noise signals (rows of `noise`). Building it factors both
/// subspaces once; `decompose` is then cheap for every estimate.
class BssDecomposer {
 public:
  BssDecomposer(const Matrix& sources, const Matrix& noise = Matrix()) : sources_(sources) {
    require(sources.rows() >= 1, "need at least one reference source");
    Index rank = 0;
    double cond = 0.0;
    source_basis_ = detail::row_space_basis(sources, rank, cond);
    if (rank < sources.rows()) {
      std::ostringstream msg;
      msg << "reference sources are linearly dependent (rank " << rank << " < " << sources.rows()
          << ", |R| diagonal ratio " << cond << ")";
      throw InvalidInput(msg.str());
    }
    if (noise.size() > 0) {
      require(noise.cols() == sources.cols(), "noise rows must have the source length");
      Matrix stacked(sources.rows() + noise.rows(), sources.cols());
      stacked << sources, noise;
      Index joint_rank = 0;
      full_basis_ = detail::row_space_basis(stacked, joint_rank, cond);
    } else {
      full_basis_ = source_basis_;
    }
  }

  Index size() const { return sources_.rows(); }

  /// Splits `estimate` with respect to reference source `index`. The four parts
  /// sum to the estimate.
  SourceParts decompose(const Vector& estimate, Index index) const {
    require(estimate.size() == sources_.cols(), "estimate length does not match the sources");
    require(index >= 0 && index < sources_.rows(), "reference index out of range");
    const Vector ref = sources_.row(index).transpose();
    const double ref_energy = ref.squaredNorm();
    SourceParts parts;
    parts.target = ref_energy > 0.0 ? Vector(ref * (ref.dot(estimate) / ref_energy)) : Vector::Zero(ref.size());
    const Vector on_sources = source_basis_ * (source_basis_.transpose() * estimate);
    const Vector on_all = full_basis_ * (full_basis_.transpose() * estimate);
    parts.interf = on_sources - parts.target;
    parts.noise = on_all - on_sources;
    parts.artifacts = estimate - on_all;
    return parts;
  }

 private:
  Matrix sources_;
  Eigen::MatrixXd source_basis_;
  Eigen::MatrixXd full_basis_;
};

inline SourceParts decompose(const Vector& estimate, const Matrix& sources, Index index,
                             const Matrix& noise = Matrix()) {
  return BssDecomposer(sources, noise).decompose(estimate, index);
}

/// SDR = |t|^2 / |i + n + a|^2, SIR = |t|^2 / |i|^2, SNR = |t + i|^2 / |n|^2,
/// SAR = |t + i + n|^2 / |a|^2, all in dB and capped at +-200.
inline Ratios ratios(const SourceParts& p) {
  Ratios r;
  const double target = p.target.squaredNorm();
  r.zero_target = !(target > 0.0);
  r.sdr = detail::to_db(target, (p.interf + p.noise + p.artifacts).squaredNorm());
  r.sir = detail::to_db(target, p.interf.squaredNorm());
  r.snr = detail::to_db((p.target + p.interf).squaredNorm(), p.noise.squaredNorm());
  r.sar = detail::to_db((p.target + p.interf + p.noise).squaredNorm(), p.artifacts.squaredNorm());
  if (r.zero_target) r.sdr = r.sir = -kDbCap;
  return r;
}

inline double sdr(const SourceParts& p) { return ratios(p).sdr; }
inline double sir(const SourceParts& p) { return ratios(p).sir; }
inline double snr(const SourceParts& p) { return ratios(p).snr; }
inline double sar(const SourceParts& p) { return ratios(p).sar; }

/// (sqrt(n) - |x|_1 / |x|_2) / (sqrt(n) - 1): 1 for a single active entry, 0 for a flat vector.
template <class Derived>
double hoyer_sparseness(const Eigen::MatrixBase<Derived>& x) {
  const auto n = static_cast<double>(x.size());
  require(x.size() >= 2, "sparseness needs at least two entries");
  const double l2 = x.norm();
  if (!(l2 > 0.0)) throw InvalidInput("sparseness of a zero vector is undefined");
  const double root = std::sqrt(n);
  const double value = (root - x.cwiseAbs().sum() / l2) / (root - 1.0);
  return std::clamp(value, 0.0, 1.0);
}

/// Minimum-cost perfect assignment (Hungarian algorithm, O(r^3)).
/// Returns assignment[row] = column.
inline std::vector<Index> min_cost_assignment(const Eigen::MatrixXd& cost) {
  const Index n = cost.rows();
  require(cost.cols() == n, "assignment needs a square cost matrix");
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials, e-maxx formulation.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> assignment(static_cast<std::size_t>(n), 0);
  for (Index j = 1; j <= n; ++j) assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return assignment;
}

struct SourceMatching {
  /// permutation[i]: row of the estimate matched to reference source i.
  std::vector<Index> permutation;
  /// Least-squares scale with estimate_row ~ scale * reference_row.
  Vector scales;
  /// Squared normalized correlation of each matched pair.
  Vector correlation;
  /// More than 20 sources: assignment is still exact but slow to evaluate repeatedly.
  bool large_problem = false;
};

/// Squared normalized correlations between estimated rows (rows of the result)
/// and reference rows (columns of the result).
inline Eigen::MatrixXd squared_correlations(const Matrix& estimate, const Matrix& reference) {
  const Eigen::MatrixXd gram = estimate * reference.transpose();
  const Vector est_norm = estimate.rowwise().norm();
  const Vector ref_norm = reference.rowwise().norm();
  Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(gram.rows(), gram.cols());
  for (Index i = 0; i < gram.rows(); ++i)
    for (Index j = 0; j < gram.cols(); ++j) {
      const double den = est_norm(i) * ref_norm(j);
      if (den > 0.0) corr(i, j) = (gram(i, j) / den) * (gram(i, j) / den);
    }
  return corr;
}

/// Permutation maximizing the total squared normalized correlation.
inline SourceMatching match_sources(const Matrix& estimate, const Matrix& reference) {
  require(estimate.rows() == reference.rows() && estimate.cols() == reference.cols(),
          "match_sources: estimate and reference must have the same shape");
  const Index r = reference.rows();
  const Eigen::MatrixXd corr = squared_correlations(estimate, reference);
  // Rows of the cost are reference sources, columns are estimates.
  const std::vector<Index> assign = min_cost_assignment(-corr.transpose());
  SourceMatching m;
  m.permutation = assign;
  m.scales.resize(r);
  m.correlation.resize(r);
  m.large_problem = r > 20;
  for (Index i = 0; i < r; ++i) {
    const Index e = assign[static_cast<std::size_t>(i)];
    const double ref_energy = reference.row(i).squaredNorm();
    m.scales(i) = ref_energy > 0.0 ? estimate.row(e).dot(reference.row(i)) / ref_energy : 0.0;
    m.correlation(i) = corr(e, i);
  }
  return m;
}

struct EvalScores {
  Vector sdr, sir, snr, sar;
  std::vector<Index> permutation;
  double sdr_mean = 0.0, sdr_median = 0.0;
  double sir_median = 0.0, snr_median = 0.0, sar_median = 0.0;
  double sir_mean = 0.0, snr_mean = 0.0, sar_mean = 0.0;
};

inline double median(Vector v) {
  require(v.size() > 0, "median of an empty set");
  std::sort(v.data(), v.data() + v.size());
  const Index mid = v.size() / 2;
  return v.size() % 2 ? v(mid) : 0.5 * (v(mid - 1) + v(mid));
}

/// Matches estimated rows to the reference sources, then scores each pair.
/// `noise` holds the noise realizations spanning the noise subspace (may be empty).
inline EvalScores evaluate(const Matrix& estimate, const Matrix& reference, const Matrix& noise = Matrix()) {
  const SourceMatching match = match_sources(estimate, reference);
  const BssDecomposer dec(reference, noise);
  const Index r = reference.rows();
  EvalScores out;
  out.permutation = match.permutation;
  out.sdr.resize(r);
  out.sir.resize(r);
  out.snr.resize(r);
  out.sar.resize(r);
  for (Index i = 0; i < r; ++i) {
    const Vector est = estimate.row(match.permutation[static_cast<std::size_t>(i)]).transpose();
    const Ratios q = ratios(dec.decompose(est, i));
    out.sdr(i) = q.sdr;
    out.sir(i) = q.sir;
    out.snr(i) = q.snr;
    out.sar(i) = q.sar;
  }
  out.sdr_mean = out.sdr.mean();
  out.sir_mean = out.sir.mean();
  out.snr_mean = out.snr.mean();
  out.sar_mean = out.sar.mean();
  out.sdr_median = median(out.sdr);
  out.sir_median = median(out.sir);
  out.snr_median = median(out.snr);
  out.sar_median = median(out.sar);
  return out;
}

}  // namespace ngmca
