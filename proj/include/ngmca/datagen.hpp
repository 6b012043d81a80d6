#pragma once

// Synthetic NMR-like experiment material: non-negative spike trains convolved
// with a Laplacian line shape, |Gaussian| mixing matrices and white Gaussian
// noise scaled to an exact SNR.

#include "ngmca/core.hpp"
#include "ngmca/transforms.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace ngmca {

struct NmrSourceSpec {
  Index n = 1024;
  Index r = 12;
  int min_spikes = 8;
  int max_spikes = 30;
  /// Amplitudes are |N(0,1)| + amplitude_offset.
  double amplitude_offset = 0.1;
  ConvolutionKernel kernel = ConvolutionKernel::laplacian(4.0);
  std::uint64_t seed = 0;
};

struct NmrSources {
  /// r x n, every row = spike train (*) kernel.
  Matrix S;
  /// r x n non-negative spike trains.
  Matrix spikes;
};

inline NmrSources gen_nmr_sources(const NmrSourceSpec& spec) {
  require(spec.n >= 1 && spec.r >= 1, "source spec needs n, r >= 1");
  require(spec.min_spikes >= 0 && spec.max_spikes >= spec.min_spikes, "invalid spike count range");
  require(spec.amplitude_offset >= 0.0, "amplitude offset must be non-negative");
  Rng rng(spec.seed);
  std::uniform_int_distribution<int> count(spec.min_spikes, spec.max_spikes);
  std::uniform_int_distribution<Index> position(0, spec.n - 1);
  std::normal_distribution<double> normal(0.0, 1.0);

  NmrSources out;
  out.spikes = Matrix::Zero(spec.r, spec.n);
  for (Index i = 0; i < spec.r; ++i) {
    const int spikes = count(rng);
    for (int k = 0; k < spikes; ++k) {
      const Index pos = position(rng);
      out.spikes(i, pos) += std::abs(normal(rng)) + spec.amplitude_offset;
    }
  }
  const LinearTransform conv = LinearTransform::convolution(spec.n, spec.kernel);
  // FFT round-off can leave -1e-17 entries.
  out.S = conv.analyze_rows(out.spikes).cwiseMax(0.0);
  return out;
}

/// A = |G| with G i.i.d. standard Gaussian; unit columns when `normalize_columns`.
inline Matrix gen_mixing(Index m, Index r, std::uint64_t seed, bool normalize_columns = false) {
  require(m >= 1 && r >= 1, "mixing matrix needs m, r >= 1");
  Rng rng(seed);
  Matrix a = gaussian_matrix(m, r, rng).cwiseAbs();
  if (normalize_columns)
    for (Index j = 0; j < r; ++j) a.col(j) /= a.col(j).norm();
  return a;
}

struct NoisyData {
  Matrix Y;
  Matrix Z;
};

/// Y = X + Z with Z white Gaussian rescaled so that 10 log10(|X|^2 / |Z|^2)
/// equals snr_db for the realized noise. snr_db = +inf gives Z = 0.
inline NoisyData add_noise(const Matrix& x, double snr_db, std::uint64_t seed) {
  const double signal = x.squaredNorm();
  require(signal > 0.0, "add_noise: signal is zero");
  require(!std::isnan(snr_db) && snr_db != -std::numeric_limits<double>::infinity(), "add_noise: invalid SNR");
  NoisyData out;
  if (snr_db == std::numeric_limits<double>::infinity()) {
    out.Z = Matrix::Zero(x.rows(), x.cols());
    out.Y = x;
    return out;
  }
  Rng rng(seed);
  Matrix z = gaussian_matrix(x.rows(), x.cols(), rng);
  const double target = signal / std::pow(10.0, snr_db / 10.0);
  z *= std::sqrt(target / z.squaredNorm());
  out.Y = x + z;
  out.Z = std::move(z);
  return out;
}

inline double realized_snr_db(const Matrix& x, const Matrix& z) {
  return 10.0 * std::log10(x.squaredNorm() / z.squaredNorm());
}

struct MixtureSpec {
  Index m = 32;
  Index r = 12;
  double snr_db = 20.0;
  std::uint64_t seed = 0;
};

struct Dataset {
  Matrix S;
  Matrix spikes;
  Matrix A;
  Matrix Z;
  Matrix Y;
};

/// Full instance; S, A and Z use independent streams derived from mixture.seed
/// (sources.seed and sources.r are overridden).
inline Dataset gen_dataset(NmrSourceSpec sources, const MixtureSpec& mixture) {
  require(mixture.m >= mixture.r, "need at least as many measurements as sources");
  sources.r = mixture.r;
  sources.seed = derive_seed(mixture.seed, 1);
  NmrSources src = gen_nmr_sources(sources);
  Dataset d;
  d.A = gen_mixing(mixture.m, mixture.r, derive_seed(mixture.seed, 2));
  NoisyData noisy = add_noise(d.A * src.S, mixture.snr_db, derive_seed(mixture.seed, 3));
  d.S = std::move(src.S);
  d.spikes = std::move(src.spikes);
  d.Z = std::move(noisy.Z);
  d.Y = std::move(noisy.Y);
  return d;
}

}  // namespace ngmca
