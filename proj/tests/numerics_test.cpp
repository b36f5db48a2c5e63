#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "cfcast/numerics.hpp"

using namespace cfcast;

TEST(CholeskyPsd, IdentityNeedsNoJitter) {
  auto res = cholesky_psd(Matrix::identity(3));
  EXPECT_EQ(res.jitter, 0.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_NEAR(res.lower(i, j), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(CholeskyPsd, RankOnePsdFactorsExactly) {
  Matrix cov(2, 2, {1.0, 1.0, 1.0, 1.0});
  auto res = cholesky_psd(cov);
  EXPECT_EQ(res.jitter, 0.0);
  EXPECT_NEAR(res.lower(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(res.lower(1, 0), 1.0, 1e-9);
  EXPECT_NEAR(res.lower(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(res.lower(1, 1), 0.0, 1e-6);
}

// The polynomially decaying covariance on t=1..4 is indefinite; the repaired
// factor must reproduce the eigenvalue-clipped matrix computed independently.
TEST(CholeskyPsd, PolynomialDecayCovarianceMatchesClippingOracle) {
  Matrix cov(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      cov(i, j) = i == j ? 1.0 : 1.0 / std::abs(i - j);
  EXPECT_DOUBLE_EQ(cov(0, 2), 0.5);
  EXPECT_DOUBLE_EQ(cov(0, 3), 1.0 / 3.0);

  Eigen::MatrixXd e(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) e(i, j) = cov(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(e);
  ASSERT_TRUE(eig.eigenvalues().minCoeff() < 0.0);  // genuinely indefinite
  Eigen::MatrixXd clipped = eig.eigenvectors() *
                            eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
                            eig.eigenvectors().transpose();

  auto res = cholesky_psd(cov);
  EXPECT_LT(res.jitter, 1e-8);
  Eigen::MatrixXd l(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) l(i, j) = res.lower(i, j);
  Eigen::MatrixXd reconstructed = l * l.transpose();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      EXPECT_NEAR(reconstructed(i, j), clipped(i, j), 1e-8);
}

TEST(CholeskyPsd, RejectsBadInput) {
  EXPECT_THROW(cholesky_psd(Matrix(2, 3)), Error);
  Matrix asym(2, 2);
  asym(0, 1) = 0.5;
  asym(1, 0) = 0.2;
  asym(0, 0) = asym(1, 1) = 1.0;
  try {
    cholesky_psd(asym);
    FAIL() << "expected NotSymmetric";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::not_symmetric);
  }
}

TEST(ProjectSimplex, KnownProjections) {
  auto w1 = project_simplex(std::vector<double>{0.6, 0.6});
  EXPECT_NEAR(w1[0], 0.5, 1e-12);
  EXPECT_NEAR(w1[1], 0.5, 1e-12);

  auto w2 = project_simplex(std::vector<double>{2.0, 0.0});
  EXPECT_NEAR(w2[0], 1.0, 1e-12);
  EXPECT_NEAR(w2[1], 0.0, 1e-12);

  auto w3 = project_simplex(std::vector<double>{0.3, 0.3, 0.3});
  for (double v : w3) EXPECT_NEAR(v, 1.0 / 3.0, 1e-12);
}

// Brute-force oracle: no point on a fine simplex grid is closer to v than the
// returned projection.
TEST(ProjectSimplex, BeatsGridSearchOracle) {
  const std::vector<double> v{0.9, -0.2, 0.45};
  auto w = project_simplex(v);
  auto dist2 = [&](double a, double b, double c) {
    return (a - v[0]) * (a - v[0]) + (b - v[1]) * (b - v[1]) +
           (c - v[2]) * (c - v[2]);
  };
  const double ours = dist2(w[0], w[1], w[2]);
  const int steps = 400;
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; i + j <= steps; ++j) {
      const double a = static_cast<double>(i) / steps;
      const double b = static_cast<double>(j) / steps;
      EXPECT_GE(dist2(a, b, 1.0 - a - b) + 1e-12, ours);
    }
  }
}

TEST(ProjectSimplex, SumsToOneAndSatisfiesKkt) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(8);
    for (double& x : v) x = u(rng);
    auto w = project_simplex(v);
    double sum = 0.0;
    for (double x : w) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    auto dist2 = [&](const std::vector<double>& p) {
      double d = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i)
        d += (p[i] - v[i]) * (p[i] - v[i]);
      return d;
    };
    const double base = dist2(w);
    const double eps = 1e-6;
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (std::size_t j = 0; j < w.size(); ++j) {
        if (i == j || w[i] < eps) continue;
        auto moved = w;
        moved[i] -= eps;
        moved[j] += eps;
        EXPECT_GE(dist2(moved) + 1e-15, base);
      }
    }
  }
}

TEST(RidgeSolve, IdentityClosedForm) {
  auto beta = ridge_solve(Matrix::identity(2), std::vector<double>{2.0, 4.0},
                          1.0);
  EXPECT_NEAR(beta[0], 1.0, 1e-12);
  EXPECT_NEAR(beta[1], 2.0, 1e-12);
}

TEST(RidgeSolve, LambdaZeroMatchesQrOracle) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = 20, p = 5;
  Matrix x(n, p);
  Eigen::MatrixXd xe(n, p);
  Eigen::VectorXd ye(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      x(i, j) = g(rng);
      xe(i, j) = x(i, j);
    }
    y[i] = g(rng);
    ye[i] = y[i];
  }
  Eigen::VectorXd oracle = xe.colPivHouseholderQr().solve(ye);
  auto beta = ridge_solve(x, y, 0.0);
  for (std::size_t j = 0; j < p; ++j) EXPECT_NEAR(beta[j], oracle(j), 1e-10);
}

TEST(RidgeSolve, HugeLambdaShrinksToZero) {
  Matrix x(3, 2, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  std::vector<double> y{1.0, 2.0, 3.0};
  auto beta = ridge_solve(x, y, 1e12);
  const double norm = std::hypot(beta[0], beta[1]);
  EXPECT_LT(norm, 1e-9 * std::sqrt(14.0));
}

TEST(RidgeSolve, SingularWithoutRegularization) {
  Matrix x(2, 2, {1.0, 1.0, 1.0, 1.0});
  try {
    ridge_solve(x, std::vector<double>{1.0, 2.0}, 0.0);
    FAIL() << "expected Singular";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::singular);
  }
}

// Wide problems take the dual route; it must agree with the primal normal
// equations computed directly.
TEST(RidgeSolve, DualPathMatchesPrimalWhenWide) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = 4, p = 9;
  Matrix x(n, p);
  Eigen::MatrixXd xe(n, p);
  Eigen::VectorXd ye(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      x(i, j) = g(rng);
      xe(i, j) = x(i, j);
    }
    y[i] = g(rng);
    ye[i] = y[i];
  }
  const double lambda = 0.37;
  Eigen::MatrixXd gram = xe.transpose() * xe;
  gram.diagonal().array() += lambda;
  Eigen::VectorXd primal = gram.ldlt().solve(xe.transpose() * ye);
  auto beta = ridge_solve(x, y, lambda);
  for (std::size_t j = 0; j < p; ++j) EXPECT_NEAR(beta[j], primal(j), 1e-10);
}

TEST(RidgeSolve, ResidualGradientVanishes) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = 15, p = 6;
  Matrix x(n, p);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = g(rng);
    y[i] = g(rng);
  }
  const double lambda = 0.5;
  auto beta = ridge_solve(x, y, lambda);
  // grad = X^T (X b - y) + lambda b must be ~0
  std::vector<double> resid(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < p; ++j) dot += x(i, j) * beta[j];
    resid[i] = dot - y[i];
  }
  double scale = 0.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  for (std::size_t j = 0; j < p; ++j) {
    double gj = lambda * beta[j];
    for (std::size_t i = 0; i < n; ++i) gj += x(i, j) * resid[i];
    EXPECT_LT(std::abs(gj), 1e-8 * std::max(1.0, scale));
  }
}

TEST(Minimize, QuadraticConverges) {
  Objective f = [](std::span<const double> p, std::span<double> g) {
    g[0] = 2.0 * (p[0] - 3.0);
    return (p[0] - 3.0) * (p[0] - 3.0);
  };
  OptimizerConfig cfg;
  cfg.step_size = 0.1;
  cfg.max_iters = 2000;
  cfg.tolerance = 1e-14;
  auto sol = minimize(f, {0.0}, cfg);
  EXPECT_LT(std::abs(sol[0] - 3.0), 1e-4);
}

TEST(Minimize, RosenbrockReachesLowValue) {
  Objective f = [](std::span<const double> p, std::span<double> g) {
    const double x = p[0], y = p[1];
    g[0] = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
    g[1] = 200.0 * (y - x * x);
    return (1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x);
  };
  OptimizerConfig cfg;
  cfg.step_size = 0.02;
  cfg.max_iters = 10000;
  cfg.tolerance = 1e-16;
  std::vector<double> grad(2);
  auto sol = minimize(f, {0.0, 0.0}, cfg);
  EXPECT_LT(f(sol, grad), 1e-2);
}

TEST(Minimize, BestObjectiveNeverWorseThanInit) {
  Objective f = [](std::span<const double> p, std::span<double> g) {
    g[0] = std::cos(p[0]) + 0.2 * p[0];
    return std::sin(p[0]) + 0.1 * p[0] * p[0];
  };
  OptimizerConfig cfg;
  cfg.step_size = 0.3;
  cfg.max_iters = 200;
  std::vector<double> grad(1);
  const double at_init = f(std::vector<double>{2.0}, grad);
  auto sol = minimize(f, {2.0}, cfg);
  EXPECT_LE(f(sol, grad), at_init);
}

TEST(Minimize, NonFiniteObjectiveThrows) {
  Objective f = [](std::span<const double>, std::span<double> g) {
    g[0] = 0.0;
    return std::numeric_limits<double>::quiet_NaN();
  };
  OptimizerConfig cfg;
  try {
    minimize(f, {0.0}, cfg);
    FAIL() << "expected NonFiniteObjective";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::non_finite_objective);
  }
}

TEST(PinballLoss, KnownValues) {
  EXPECT_EQ(pinball_loss(1.0, 1.0, 0.5), 0.0);
  EXPECT_NEAR(pinball_loss(1.0, 0.0, 0.9), 0.9, 1e-15);
  EXPECT_NEAR(pinball_loss(0.0, 1.0, 0.9), 0.1, 1e-15);
  EXPECT_THROW(pinball_loss(0.0, 0.0, 1.0), Error);
  EXPECT_THROW(pinball_loss(0.0, 0.0, 0.0), Error);
}

TEST(PinballLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> ut(0.05, 0.95);
  for (int rep = 0; rep < 200; ++rep) {
    const double y = u(rng), q = u(rng), tau = ut(rng);
    const double h = 1e-5;
    const double fd =
        (pinball_loss(y, q + h, tau) - pinball_loss(y, q - h, tau)) / (2 * h);
    const double an = pinball_grad_q(y, q, tau);
    EXPECT_NEAR(an, fd, 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST(CrpsFromQuantiles, KnownValuesAndErrors) {
  std::vector<double> taus{0.1, 0.5, 0.9};
  std::vector<double> q{2.0, 2.0, 2.0};
  EXPECT_EQ(crps_from_quantiles(2.0, q, taus), 0.0);

  std::vector<double> tau1{0.5};
  std::vector<double> q1{0.0};
  EXPECT_NEAR(crps_from_quantiles(1.0, q1, tau1), 1.0, 1e-15);

  // degenerate forecast vs shifted truth: linear growth in the shift
  const double c1 = crps_from_quantiles(3.0, q, taus);
  const double c2 = crps_from_quantiles(5.0, q, taus);
  const double c3 = crps_from_quantiles(7.0, q, taus);
  EXPECT_NEAR(c3 - c2, c2 - c1, 1e-12);
  EXPECT_GT(c2, c1);

  EXPECT_THROW(crps_from_quantiles(0.0, q1, taus), Error);
  std::vector<double> bad_taus{0.5, 0.4};
  std::vector<double> q2{0.0, 0.0};
  try {
    crps_from_quantiles(0.0, q2, bad_taus);
    FAIL() << "expected UnsortedTaus";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::unsorted_taus);
  }
}
