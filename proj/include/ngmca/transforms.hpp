#pragma once

// Linear operators used to express sparsity outside the direct domain:
// periodized orthonormal wavelets, the undecimated (a trous) wavelet tight
// frame, and circular convolution by a symmetric kernel.
//
// Row convention: a source is a row vector s, its coefficients are
// s_w = s W^T (analyze) and a coefficient row maps back with s = s_w W
// (synthesize). For a column vector this is forward(x) = W x and
// adjoint(c) = W^T c.

#include "ngmca/core.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ngmca {

/// Orthonormal quadrature-mirror lowpass filter. The highpass filter is derived
/// as g[k] = (-1)^k h[L-1-k].
struct WaveletFilter {
  std::string name;
  std::vector<double> lowpass;

  std::vector<double> highpass() const {
    const std::size_t len = lowpass.size();
    std::vector<double> g(len);
    for (std::size_t k = 0; k < len; ++k) {
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      g[k] = sign * lowpass[len - 1 - k];
    }
    return g;
  }

  static WaveletFilter haar() {
    const double c = std::numbers::sqrt2 / 2.0;
    return {"haar", {c, c}};
  }

  /// Four-tap Daubechies filter (two vanishing moments).
  static WaveletFilter daubechies4() {
    const double s3 = std::sqrt(3.0);
    const double d = 4.0 * std::numbers::sqrt2;
    return {"daubechies4", {(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d}};
  }

  /// Eight-tap least-asymmetric Daubechies filter (four vanishing moments).
  static WaveletFilter symmlet4() {
    return {"symmlet4",
            {0.032223100604051468, -0.012603967262031304, -0.099219543576633533,
             0.29785779560530605, 0.80373875180513208, 0.49761866763277499,
             -0.029635527646002492, -0.075765714789502213}};
  }

  static WaveletFilter by_name(std::string_view name) {
    if (name == "haar") return haar();
    if (name == "daubechies4" || name == "db4" || name == "daubechies-4") return daubechies4();
    if (name == "symmlet4" || name == "sym4" || name == "symmlet-4") return symmlet4();
    throw InvalidInput("unknown wavelet filter '" + std::string(name) +
                       "' (expected haar, daubechies4 or symmlet4)");
  }
};

enum class KernelShape { delta, laplacian };

/// Symmetric non-negative kernel with unit peak, stored on [-support, support].
class ConvolutionKernel {
 public:
  static ConvolutionKernel delta() { return ConvolutionKernel(KernelShape::delta, 0.0, 0, {1.0}); }

  /// k(t) = exp(-|t| 2 ln2 / fwhm): half maximum is reached at |t| = fwhm / 2.
  /// Truncated at 8 fwhm samples.
  static ConvolutionKernel laplacian(double fwhm) {
    require(fwhm > 0.0 && std::isfinite(fwhm), "laplacian kernel needs fwhm > 0");
    const auto support = static_cast<Index>(std::ceil(8.0 * fwhm));
    std::vector<double> taps(static_cast<std::size_t>(2 * support + 1));
    const double rate = 2.0 * std::numbers::ln2 / fwhm;
    for (Index t = -support; t <= support; ++t)
      taps[static_cast<std::size_t>(t + support)] = std::exp(-rate * static_cast<double>(std::abs(t)));
    return ConvolutionKernel(KernelShape::laplacian, fwhm, support, std::move(taps));
  }

  KernelShape shape() const { return shape_; }
  double fwhm() const { return fwhm_; }
  Index support() const { return support_; }
  /// Kernel value at integer offset t (zero outside the support).
  double at(Index t) const {
    if (t < -support_ || t > support_) return 0.0;
    return taps_[static_cast<std::size_t>(t + support_)];
  }
  std::span<const double> taps() const { return taps_; }

 private:
  ConvolutionKernel(KernelShape shape, double fwhm, Index support, std::vector<double> taps)
      : shape_(shape), fwhm_(fwhm), support_(support), taps_(std::move(taps)) {}

  KernelShape shape_;
  double fwhm_;
  Index support_;
  std::vector<double> taps_;
};

enum class TransformKind { identity, orthonormal_wavelet, undecimated_wavelet, convolution };

namespace detail {

// Copies x into buf followed by its first `tail` samples repeated
// periodically, so that buf[i] = x[i mod n] for i < n + tail.
inline const double* periodic_extension(std::span<const double> x, Index tail, std::vector<double>& buf) {
  const auto n = static_cast<Index>(x.size());
  buf.resize(static_cast<std::size_t>(n + tail));
  std::copy(x.begin(), x.end(), buf.begin());
  for (Index i = n; i < n + tail; ++i) buf[static_cast<std::size_t>(i)] = buf[static_cast<std::size_t>(i - n)];
  return buf.data();
}

// Adds the overflow part buf[n..) back onto buf[0..n) periodically.
inline void fold_periodic(std::vector<double>& buf, Index n) {
  for (Index i = n; i < static_cast<Index>(buf.size()); ++i)
    buf[static_cast<std::size_t>(i % n)] += buf[static_cast<std::size_t>(i)];
  buf.resize(static_cast<std::size_t>(n));
}

// One level of the periodized decimated transform on x[0..len).
inline void odwt_step(std::span<const double> x, std::span<const double> h, std::span<const double> g,
                      std::span<double> approx, std::span<double> detail) {
  const auto len = static_cast<Index>(x.size());
  const Index half = len / 2;
  const auto taps = static_cast<Index>(h.size());
  thread_local std::vector<double> buf;
  const double* ext = periodic_extension(x, taps, buf);
  for (Index i = 0; i < half; ++i) {
    const double* v = ext + 2 * i;
    double a = 0.0, d = 0.0;
    for (Index k = 0; k < taps; ++k) {
      a += h[static_cast<std::size_t>(k)] * v[k];
      d += g[static_cast<std::size_t>(k)] * v[k];
    }
    approx[static_cast<std::size_t>(i)] = a;
    detail[static_cast<std::size_t>(i)] = d;
  }
}

inline void odwt_step_inverse(std::span<const double> approx, std::span<const double> detail,
                              std::span<const double> h, std::span<const double> g, std::span<double> x) {
  const auto len = static_cast<Index>(x.size());
  const Index half = len / 2;
  const auto taps = static_cast<Index>(h.size());
  thread_local std::vector<double> buf;
  buf.assign(static_cast<std::size_t>(len + taps), 0.0);
  for (Index i = 0; i < half; ++i) {
    const double a = approx[static_cast<std::size_t>(i)];
    const double d = detail[static_cast<std::size_t>(i)];
    double* out = buf.data() + 2 * i;
    for (Index k = 0; k < taps; ++k) out[k] += h[static_cast<std::size_t>(k)] * a + g[static_cast<std::size_t>(k)] * d;
  }
  fold_periodic(buf, len);
  std::copy(buf.begin(), buf.end(), x.begin());
}

}  // namespace detail

/// Value-type linear operator W : R^n -> R^p.
///
/// All member functions are const and allocation happens only in the
/// convenience overloads, so one instance may be shared between threads.
class LinearTransform {
 public:
  static LinearTransform identity(Index n) {
    require(n >= 1, "transform length must be positive");
    return LinearTransform(TransformKind::identity, n, n);
  }

  static LinearTransform orthonormal_wavelet(Index n, WaveletFilter filter, int levels) {
    check_dyadic(n, levels);
    LinearTransform t(TransformKind::orthonormal_wavelet, n, n);
    t.set_filter(std::move(filter), levels);
    return t;
  }

  static LinearTransform undecimated_wavelet(Index n, WaveletFilter filter, int levels) {
    check_dyadic(n, levels);
    LinearTransform t(TransformKind::undecimated_wavelet, n, n * (levels + 1));
    t.set_filter(std::move(filter), levels);
    return t;
  }

  static LinearTransform convolution(Index n, ConvolutionKernel kernel) {
    require(n >= 1, "transform length must be positive");
    require(kernel.support() < n, "convolution kernel support must be smaller than the signal length");
    LinearTransform t(TransformKind::convolution, n, n);
    // Spectrum of the kernel wrapped onto the circle of length n.
    std::vector<double> circular(static_cast<std::size_t>(n), 0.0);
    for (Index u = -kernel.support(); u <= kernel.support(); ++u)
      circular[static_cast<std::size_t>(((u % n) + n) % n)] += kernel.at(u);
    auto spectrum = std::make_shared<std::vector<std::complex<double>>>();
    Eigen::FFT<double> fft;
    fft.fwd(*spectrum, circular);
    t.spectrum_ = std::move(spectrum);
    t.kernel_.emplace_back(std::move(kernel));
    return t;
  }

  TransformKind kind() const { return kind_; }
  Index signal_size() const { return n_; }
  Index coeff_size() const { return p_; }
  int levels() const { return levels_; }
  const WaveletFilter& filter() const { return filter_; }
  const ConvolutionKernel& kernel() const {
    require(kind_ == TransformKind::convolution, "transform has no kernel");
    return kernel_.front();
  }

  /// W^T W = I (up to rounding).
  bool tight_frame() const { return kind_ != TransformKind::convolution; }
  /// W^T W = W W^T = I.
  bool orthonormal() const {
    return kind_ == TransformKind::identity || kind_ == TransformKind::orthonormal_wavelet;
  }

  void forward(std::span<const double> x, std::span<double> out) const {
    require(static_cast<Index>(x.size()) == n_, "forward: input length does not match the transform");
    require(static_cast<Index>(out.size()) == p_, "forward: output length does not match the transform");
    switch (kind_) {
      case TransformKind::identity: std::copy(x.begin(), x.end(), out.begin()); break;
      case TransformKind::orthonormal_wavelet: odwt_forward(x, out); break;
      case TransformKind::undecimated_wavelet: udwt_forward(x, out); break;
      case TransformKind::convolution: convolve(x, out, +1); break;
    }
  }

  void adjoint(std::span<const double> c, std::span<double> out) const {
    require(static_cast<Index>(c.size()) == p_, "adjoint: input length does not match the transform");
    require(static_cast<Index>(out.size()) == n_, "adjoint: output length does not match the transform");
    switch (kind_) {
      case TransformKind::identity: std::copy(c.begin(), c.end(), out.begin()); break;
      case TransformKind::orthonormal_wavelet: odwt_inverse(c, out); break;
      case TransformKind::undecimated_wavelet: udwt_adjoint(c, out); break;
      case TransformKind::convolution: convolve(c, out, -1); break;
    }
  }

  Vector forward(const Vector& x) const {
    Vector out(p_);
    forward(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
            std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
  }

  Vector adjoint(const Vector& c) const {
    Vector out(n_);
    adjoint(std::span<const double>(c.data(), static_cast<std::size_t>(c.size())),
            std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
  }

  /// S W^T: transforms every row of S (r x n) into coefficients (r x p).
  Matrix analyze_rows(const Matrix& s) const {
    require(s.cols() == n_, "analyze_rows: column count does not match the transform");
    if (kind_ == TransformKind::identity) return s;
    Matrix out(s.rows(), p_);
    for (Index i = 0; i < s.rows(); ++i)
      forward(row_span(s, i), row_span(out, i));
    return out;
  }

  /// S_w W: maps every coefficient row (r x p) back to the signal domain (r x n).
  Matrix synthesize_rows(const Matrix& coeffs) const {
    require(coeffs.cols() == p_, "synthesize_rows: column count does not match the transform");
    if (kind_ == TransformKind::identity) return coeffs;
    Matrix out(coeffs.rows(), n_);
    for (Index i = 0; i < coeffs.rows(); ++i)
      adjoint(row_span(coeffs, i), row_span(out, i));
    return out;
  }

  /// true for coefficients of the coarsest approximation band.
  std::vector<bool> coarse_scale_mask() const {
    std::vector<bool> mask(static_cast<std::size_t>(p_), false);
    if (kind_ == TransformKind::orthonormal_wavelet || kind_ == TransformKind::undecimated_wavelet) {
      const Index coarse = kind_ == TransformKind::orthonormal_wavelet ? (n_ >> levels_) : n_;
      for (Index i = 0; i < coarse; ++i) mask[static_cast<std::size_t>(i)] = true;
    }
    return mask;
  }

 private:
  LinearTransform(TransformKind kind, Index n, Index p) : kind_(kind), n_(n), p_(p) {}

  static void check_dyadic(Index n, int levels) {
    require(levels >= 1 && levels < 30, "wavelet levels must be in [1, 30)");
    require(n >= 2 && n % (Index{1} << levels) == 0,
            "signal length " + std::to_string(n) + " is not divisible by 2^" + std::to_string(levels));
  }

  void set_filter(WaveletFilter filter, int levels) {
    filter_ = std::move(filter);
    highpass_ = filter_.highpass();
    levels_ = levels;
  }

  static std::span<const double> row_span(const Matrix& m, Index i) {
    return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
  }
  static std::span<double> row_span(Matrix& m, Index i) {
    return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
  }

  // Layout [a_J | d_J | ... | d_1], band sizes n/2^J, n/2^J, ..., n/2.
  void odwt_forward(std::span<const double> x, std::span<double> out) const {
    std::vector<double> approx(x.begin(), x.end());
    std::vector<double> next(approx.size() / 2);
    Index len = n_;
    for (int j = 0; j < levels_; ++j) {
      const Index half = len / 2;
      next.resize(static_cast<std::size_t>(half));
      detail::odwt_step(std::span<const double>(approx.data(), static_cast<std::size_t>(len)),
                        filter_.lowpass, highpass_, next,
                        out.subspan(static_cast<std::size_t>(half), static_cast<std::size_t>(half)));
      std::copy(next.begin(), next.end(), approx.begin());
      len = half;
    }
    std::copy(approx.begin(), approx.begin() + len, out.begin());
  }

  void odwt_inverse(std::span<const double> c, std::span<double> out) const {
    Index len = n_ >> levels_;
    std::vector<double> approx(c.begin(), c.begin() + len);
    std::vector<double> next;
    for (int j = 0; j < levels_; ++j) {
      next.assign(static_cast<std::size_t>(2 * len), 0.0);
      detail::odwt_step_inverse(approx, c.subspan(static_cast<std::size_t>(len), static_cast<std::size_t>(len)),
                                filter_.lowpass, highpass_, next);
      approx.swap(next);
      len *= 2;
    }
    std::copy(approx.begin(), approx.end(), out.begin());
  }

  // A trous scheme, filters dilated by 2^(j-1) at level j and scaled by 1/sqrt2
  // so that the frame is tight. Layout [a_J | d_J | ... | d_1], each band n long.
  void udwt_forward(std::span<const double> x, std::span<double> out) const {
    const double scale = 1.0 / std::numbers::sqrt2;
    const auto taps = static_cast<Index>(filter_.lowpass.size());
    const double* h = filter_.lowpass.data();
    const double* g = highpass_.data();
    std::vector<double> approx(x.begin(), x.end());
    std::vector<double> buf;
    Index step = 1;
    for (int j = 1; j <= levels_; ++j) {
      double* d = out.data() + static_cast<std::ptrdiff_t>((levels_ - j + 1) * n_);
      const double* ext = detail::periodic_extension(approx, step * (taps - 1), buf);
      for (Index i = 0; i < n_; ++i) {
        double a = 0.0, dd = 0.0;
        for (Index k = 0; k < taps; ++k) {
          const double v = ext[i + step * k];
          a += h[k] * v;
          dd += g[k] * v;
        }
        approx[static_cast<std::size_t>(i)] = scale * a;
        d[i] = scale * dd;
      }
      step *= 2;
    }
    std::copy(approx.begin(), approx.end(), out.begin());
  }

  void udwt_adjoint(std::span<const double> c, std::span<double> out) const {
    const double scale = 1.0 / std::numbers::sqrt2;
    const auto taps = static_cast<Index>(filter_.lowpass.size());
    const double* h = filter_.lowpass.data();
    const double* g = highpass_.data();
    std::vector<double> approx(c.begin(), c.begin() + n_);
    std::vector<double> buf;
    Index step = Index{1} << (levels_ - 1);
    for (int j = levels_; j >= 1; --j) {
      const double* d = c.data() + static_cast<std::ptrdiff_t>((levels_ - j + 1) * n_);
      buf.assign(static_cast<std::size_t>(n_ + step * (taps - 1)), 0.0);
      for (Index i = 0; i < n_; ++i) {
        const double a = scale * approx[static_cast<std::size_t>(i)];
        const double dd = scale * d[i];
        double* o = buf.data() + i;
        for (Index k = 0; k < taps; ++k) o[step * k] += h[k] * a + g[k] * dd;
      }
      detail::fold_periodic(buf, n_);
      approx.swap(buf);
      step /= 2;
    }
    std::copy(approx.begin(), approx.end(), out.begin());
  }

  // Circular convolution in the Fourier domain; direction +1 applies the
  // kernel, -1 its adjoint (correlation).
  void convolve(std::span<const double> x, std::span<double> out, int direction) const {
    thread_local Eigen::FFT<double> fft;
    thread_local std::vector<double> in;
    thread_local std::vector<double> res;
    thread_local std::vector<std::complex<double>> freq;
    in.assign(x.begin(), x.end());
    fft.fwd(freq, in);
    const auto& k = *spectrum_;
    for (std::size_t f = 0; f < freq.size(); ++f) freq[f] *= direction > 0 ? k[f] : std::conj(k[f]);
    fft.inv(res, freq);
    std::copy(res.begin(), res.end(), out.begin());
  }

  TransformKind kind_;
  Index n_;
  Index p_;
  int levels_ = 0;
  WaveletFilter filter_;
  std::vector<double> highpass_;
  std::vector<ConvolutionKernel> kernel_;  // holds at most one kernel
  // Kernel spectrum; shared between copies, immutable after construction.
  std::shared_ptr<const std::vector<std::complex<double>>> spectrum_;
};

/// Spectral norm estimate from power iteration on W^T W.
struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct PowerIterationOptions {
  int max_iters = 100;
  double tol = 1e-8;
  std::uint64_t seed = 12345;
};

/// Power iteration on op^T op, with op given as apply / apply_adjoint callables
/// acting on vectors of length `domain_size`.
template <class Apply, class ApplyAdjoint>
NormEstimate power_iteration_norm(Index domain_size, Apply&& apply, ApplyAdjoint&& apply_adjoint,
                                  const PowerIterationOptions& opts = {}) {
  Rng rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(domain_size);
  for (Index i = 0; i < domain_size; ++i) v(i) = std::abs(normal(rng)) + 0.1;
  v.normalize();

  NormEstimate est;
  double previous = 0.0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    Vector w = apply_adjoint(apply(v));
    const double rayleigh = v.dot(w);
    const double wn = w.norm();
    est.iterations = it;
    if (wn == 0.0) {
      est.value = 0.0;
      est.converged = true;
      return est;
    }
    est.value = std::sqrt(std::max(rayleigh, 0.0));
    v = w / wn;
    if (it > 1 && std::abs(est.value - previous) <= opts.tol * std::max(est.value, 1e-300)) {
      est.converged = true;
      break;
    }
    previous = est.value;
  }
  return est;
}

inline NormEstimate operator_norm(const LinearTransform& t, const PowerIterationOptions& opts = {}) {
  return power_iteration_norm(
      t.signal_size(), [&](const Vector& x) { return t.forward(x); },
      [&](const Vector& c) { return t.adjoint(c); }, opts);
}

template <class Derived>
NormEstimate operator_norm(const Eigen::MatrixBase<Derived>& m, const PowerIterationOptions& opts = {}) {
  const Eigen::MatrixXd dense = m;
  if (dense.size() == 0) return {0.0, 0, true};
  return power_iteration_norm(
      dense.cols(), [&](const Vector& x) -> Vector { return dense * x; },
      [&](const Vector& y) -> Vector { return dense.transpose() * y; }, opts);
}

}  // namespace ngmca
