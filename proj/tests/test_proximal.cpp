#include "ngmca/proximal.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace ngmca;

namespace {

Vector row_vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (const double e : v) out(i++) = e;
  return out;
}

// argmin_y 1/2 ||y - x||^2 s.t. adjoint(y) >= 0, by projected gradient on the
// dual variable mu >= 0 (y = x + W mu), with W the dense analysis matrix.
Vector synthesis_prox_oracle(const Vector& x, const Eigen::MatrixXd& w) {
  const double step = 0.5 / std::pow(oracle::spectral_norm(w), 2);
  Vector mu = Vector::Zero(w.cols());
  for (int it = 0; it < 5000; ++it) mu = (mu - step * (w.transpose() * (x + w * mu))).cwiseMax(0.0);
  return x + w * mu;
}

// Analysis prox by coordinate descent on the box-constrained dual
// min_{|u| <= lambda} 1/2 ||B u - x||^2 with B = W^T dense; returns x - B u.
Vector analysis_prox_oracle(const Vector& x, const Vector& lambda, const Eigen::MatrixXd& b) {
  Vector u = Vector::Zero(b.cols());
  Vector residual = -x;
  for (int sweep = 0; sweep < 20000; ++sweep) {
    for (Index j = 0; j < b.cols(); ++j) {
      const double nsq = b.col(j).squaredNorm();
      if (nsq == 0.0) continue;
      const double next = std::clamp(u(j) - b.col(j).dot(residual) / nsq, -lambda(j), lambda(j));
      residual += b.col(j) * (next - u(j));
      u(j) = next;
    }
  }
  return x - b * u;
}

double analysis_objective(const Vector& y, const Vector& x, const Vector& lambda, const LinearTransform& w) {
  return 0.5 * (y - x).squaredNorm() + lambda.cwiseProduct(w.forward(y)).cwiseAbs().sum();
}

}  // namespace

TEST(ProxNonneg, Examples) {
  EXPECT_EQ(prox_nonneg(row_vec({-1, 0, 2})), row_vec({0, 0, 2}));
  EXPECT_EQ(prox_nonneg(Matrix::Constant(3, 4, -2.0)), Matrix::Zero(3, 4));
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(4, 7, rng);
  EXPECT_EQ(prox_nonneg(prox_nonneg(x)), prox_nonneg(x));
}

TEST(ProxNonneg, ScalarOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = oracle::random_vector(6, rng, 2.0);
    const Vector p = prox_nonneg(x);
    for (Index i = 0; i < x.size(); ++i) {
      const double ref = oracle::argmin_scalar([&](double y) { return 0.5 * (y - x(i)) * (y - x(i)); }, 0.0, 10.0);
      EXPECT_NEAR(p(i), ref, 1e-6);
    }
  }
}

TEST(SoftThreshold, Examples) {
  EXPECT_TRUE(soft_threshold(row_vec({3, -2, 0.5}), 1.0).isApprox(row_vec({2, -1, 0})));
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random_matrix(3, 5, rng);
  EXPECT_EQ(soft_threshold(x, 0.0), x);
  EXPECT_THROW(soft_threshold(x, -0.1), InvalidInput);
  EXPECT_THROW(soft_threshold(x, Matrix::Constant(3, 5, -1.0)), InvalidInput);
  EXPECT_THROW(soft_threshold(x, Matrix::Constant(2, 5, 1.0)), InvalidInput);
}

TEST(SoftThreshold, GridSearchOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = oracle::random_vector(8, rng, 2.0);
    Vector lambda(8);
    for (Index i = 0; i < 8; ++i) lambda(i) = unif(rng);
    const Vector got = soft_threshold(x, lambda);
    for (Index i = 0; i < 8; ++i) {
      const double ref = oracle::argmin_scalar(
          [&](double y) { return 0.5 * (y - x(i)) * (y - x(i)) + lambda(i) * std::abs(y); }, -10.0, 10.0);
      EXPECT_NEAR(got(i), ref, 1e-6);
    }
  }
}

TEST(ProxNonnegSoft, Examples) {
  EXPECT_TRUE(prox_nonneg_soft(row_vec({3, -2, 0.5}), 1.0).isApprox(row_vec({2, 0, 0})));
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = oracle::random_matrix(3, 6, rng, 2.0);
    const Matrix lambda = oracle::random_matrix(3, 6, rng).cwiseAbs();
    EXPECT_LT(oracle::max_abs_diff(prox_nonneg_soft(x, lambda), prox_nonneg(soft_threshold(x, lambda))), 1e-15);
  }
}

TEST(ProxNonnegSoft, ScalarOracle) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unif(0.0, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = oracle::random_vector(8, rng, 2.0);
    const double lambda = unif(rng);
    const Vector got = prox_nonneg_soft(x, lambda);
    for (Index i = 0; i < 8; ++i) {
      const double ref =
          oracle::argmin_scalar([&](double y) { return 0.5 * (y - x(i)) * (y - x(i)) + lambda * y; }, 0.0, 10.0);
      EXPECT_NEAR(got(i), ref, 1e-6);
    }
  }
}

TEST(UnitBall, Examples) {
  EXPECT_TRUE(prox_nonneg_unit_ball(row_vec({3, 4})).isApprox(row_vec({0.6, 0.8})));
  EXPECT_TRUE(prox_nonneg_unit_ball(row_vec({-1, 0.5})).isApprox(row_vec({0, 0.5})));
  const Matrix cols = (Matrix(2, 2) << 3, -1, 4, 0.5).finished();
  const Matrix p = prox_nonneg_unit_ball_columns(cols);
  EXPECT_TRUE(p.col(0).isApprox(row_vec({0.6, 0.8})));
  EXPECT_TRUE(p.col(1).isApprox(row_vec({0, 0.5})));
}

TEST(UnitBall, DykstraOracle) {
  std::mt19937_64 rng(7);
  const auto to_orthant = [](const Vector& v) -> Vector { return v.cwiseMax(0.0); };
  const auto to_ball = [](const Vector& v) -> Vector { return v / std::max(1.0, v.norm()); };
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = oracle::random_vector(5, rng, 1.0);
    const Vector ref = oracle::dykstra(x, to_orthant, to_ball);
    const Vector got = prox_nonneg_unit_ball(x);
    EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((prox_nonneg_unit_ball(got) - got).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(SynthesisProx, IdentityAndOrthonormal) {
  std::mt19937_64 rng(8);
  const Vector x = oracle::random_vector(32, rng);
  const auto id = LinearTransform::identity(32);
  EXPECT_LT((prox_synthesis_nonneg(x, id) - prox_nonneg(x)).cwiseAbs().maxCoeff(), 1e-15);
  const auto r = LinearTransform::orthonormal_wavelet(32, WaveletFilter::daubechies4(), 2);
  const Vector expected = r.forward(Vector(r.adjoint(x).cwiseMax(0.0)));
  EXPECT_LT((prox_synthesis_nonneg(x, r) - expected).cwiseAbs().maxCoeff(), 1e-12);
  const auto conv = LinearTransform::convolution(32, ConvolutionKernel::laplacian(2.0));
  EXPECT_THROW(prox_synthesis_nonneg(x, conv), InvalidInput);
}

TEST(SynthesisProx, DualProjectedGradientOracle) {
  std::mt19937_64 rng(9);
  const auto w = LinearTransform::undecimated_wavelet(32, WaveletFilter::symmlet4(), 3);
  const Eigen::MatrixXd dense = oracle::dense_matrix(32, [&](const Vector& v) { return w.forward(v); });
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = oracle::random_vector(w.coeff_size(), rng);
    const Vector z = prox_synthesis_nonneg(x, w);
    EXPECT_GE(w.adjoint(z).minCoeff(), -1e-12);
    EXPECT_LT((w.adjoint(z) - w.adjoint(x).cwiseMax(0.0)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((z - synthesis_prox_oracle(x, dense)).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_LT((prox_synthesis_nonneg(z, w) - z).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(AnalysisProx, IdentityIsSoftThreshold) {
  std::mt19937_64 rng(10);
  const Vector x = oracle::random_vector(20, rng);
  const Vector lambda = Vector::Constant(20, 0.4);
  const Vector got = prox_analysis_l1(x, lambda, LinearTransform::identity(20));
  EXPECT_LT((got - soft_threshold(x, lambda)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(AnalysisProx, ZeroThresholdIsIdentity) {
  std::mt19937_64 rng(11);
  const auto w = LinearTransform::undecimated_wavelet(16, WaveletFilter::haar(), 2);
  const Vector x = oracle::random_vector(16, rng);
  EXPECT_LT((prox_analysis_l1(x, Vector::Zero(w.coeff_size()), w) - x).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AnalysisProx, OrthonormalEqualsTransformedSoft) {
  std::mt19937_64 rng(12);
  const auto w = LinearTransform::orthonormal_wavelet(64, WaveletFilter::symmlet4(), 3);
  const Vector x = oracle::random_vector(64, rng);
  const Vector lambda = Vector::Constant(64, 0.3);
  AnalysisProxOptions opts;
  opts.tol = 1e-10;
  const Vector expected = w.adjoint(soft_threshold(w.forward(x), lambda));
  EXPECT_LT((prox_analysis_l1(x, lambda, w, opts) - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(AnalysisProx, LongRunOracles) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(0.0, 0.5);
  const auto w = LinearTransform::undecimated_wavelet(16, WaveletFilter::symmlet4(), 3);
  const Eigen::MatrixXd adjoint_dense = oracle::dense_matrix(w.coeff_size(), [&](const Vector& c) { return w.adjoint(c); });
  AnalysisProxOptions precise;
  precise.max_iters = 20000;
  precise.tol = 1e-14;
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = oracle::random_vector(16, rng);
    Vector lambda(w.coeff_size());
    for (Index i = 0; i < lambda.size(); ++i) lambda(i) = unif(rng);
    const Vector got = prox_analysis_l1(x, lambda, w, precise);
    EXPECT_LT((got - analysis_prox_oracle(x, lambda, adjoint_dense)).cwiseAbs().maxCoeff(), 1e-5);

    // Subgradient descent with a diminishing step, 10x the iterations used above.
    Vector y = x, best = x;
    double best_val = analysis_objective(x, x, lambda, w);
    for (int k = 1; k <= 200000; ++k) {
      const Vector g = (y - x) + w.adjoint(Vector(lambda.cwiseProduct(w.forward(y).cwiseSign())));
      y -= (0.5 / std::sqrt(static_cast<double>(k))) * g;
      const double v = analysis_objective(y, x, lambda, w);
      if (v < best_val) {
        best_val = v;
        best = y;
      }
    }
    EXPECT_LE(analysis_objective(got, x, lambda, w), best_val + 1e-5);
  }
}

TEST(AnalysisProx, WarmStartReturnsDual) {
  std::mt19937_64 rng(14);
  const auto w = LinearTransform::undecimated_wavelet(32, WaveletFilter::haar(), 2);
  const Matrix x = oracle::random_matrix(2, 32, rng);
  const Matrix lambda = Matrix::Constant(2, w.coeff_size(), 0.2);
  const AnalysisProxResult cold = prox_analysis_l1(x, lambda, w);
  EXPECT_TRUE(cold.converged);
  EXPECT_LE(cold.dual.cwiseAbs().maxCoeff(), 0.2 + 1e-15);
  const AnalysisProxResult warm = prox_analysis_l1(x, lambda, w, {}, &cold.dual);
  EXPECT_LE(warm.iterations, 2);
  EXPECT_LT(oracle::max_abs_diff(warm.value, cold.value), 1e-5);
}

TEST(ProjectLinf, Examples) {
  const Vector lambda = Vector::Ones(3);
  EXPECT_TRUE(project_linf(row_vec({3, -2, 0.5}), lambda).isApprox(row_vec({1, -1, 0.5})));
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector u = oracle::random_vector(10, rng, 2.0);
    const Vector l = oracle::random_vector(10, rng).cwiseAbs();
    const Vector p = project_linf(u, l);
    EXPECT_LT((u - p - soft_threshold(u, l)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((project_linf(p, l) - p).cwiseAbs().maxCoeff(), 1e-10);
    const Vector inside = u.cwiseMin(l).cwiseMax(-l) * 0.99;
    EXPECT_EQ(project_linf(inside, l), inside);
    for (Index i = 0; i < 10; ++i) {
      const double ref =
          oracle::argmin_scalar([&](double y) { return 0.5 * (y - u(i)) * (y - u(i)); }, -l(i), l(i));
      EXPECT_NEAR(p(i), ref, 1e-6);
    }
  }
}

TEST(AllProx, NonExpansive) {
  std::mt19937_64 rng(16);
  const auto udwt = LinearTransform::undecimated_wavelet(32, WaveletFilter::symmlet4(), 2);
  const Vector lambda = Vector::Constant(udwt.coeff_size(), 0.3);
  AnalysisProxOptions precise;
  precise.max_iters = 5000;
  precise.tol = 1e-13;
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = oracle::random_vector(32, rng), y = oracle::random_vector(32, rng);
    const Vector xc = oracle::random_vector(udwt.coeff_size(), rng), yc = oracle::random_vector(udwt.coeff_size(), rng);
    const double d = (x - y).norm(), dc = (xc - yc).norm();
    const double slack = 1e-12;
    EXPECT_LE((prox_nonneg(x) - prox_nonneg(y)).norm(), d + slack);
    EXPECT_LE((soft_threshold(x, 0.5) - soft_threshold(y, 0.5)).norm(), d + slack);
    EXPECT_LE((prox_nonneg_soft(x, 0.5) - prox_nonneg_soft(y, 0.5)).norm(), d + slack);
    EXPECT_LE((prox_nonneg_unit_ball(x) - prox_nonneg_unit_ball(y)).norm(), d + slack);
    EXPECT_LE((project_linf(x, Vector::Constant(32, 0.5)) - project_linf(y, Vector::Constant(32, 0.5))).norm(), d + slack);
    EXPECT_LE((prox_synthesis_nonneg(xc, udwt) - prox_synthesis_nonneg(yc, udwt)).norm(), dc + slack);
    EXPECT_LE((prox_analysis_l1(x, lambda, udwt, precise) - prox_analysis_l1(y, lambda, udwt, precise)).norm(), d + 1e-8);
  }
}
