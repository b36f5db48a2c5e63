#pragma once

// Dense numerical kernels shared by the estimators: PSD-repaired Cholesky,
// Euclidean simplex projection, ridge regression, a seeded adaptive-gradient
// minimizer, and the pinball/CRPS losses. Problem sizes here are small
// (matrices up to a few hundred rows), so everything is dense; Eigen does the
// factorizations behind the public surface.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfcast/error.hpp"

namespace cfcast {

/// Row-major dense matrix of doubles. Construction validates finiteness when
/// data is supplied; operations that need more structure check it themselves.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      fail(errc::length_mismatch, "matrix storage does not match rows*cols");
    for (double v : data_)
      if (!std::isfinite(v))
        throw std::invalid_argument("matrix entries must be finite");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  using EigenMap =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>;
  EigenMap as_eigen() const {
    return EigenMap(data_.data(), static_cast<Eigen::Index>(rows_),
                    static_cast<Eigen::Index>(cols_));
  }

  static Matrix from_eigen(const Eigen::MatrixXd& m) {
    Matrix out(static_cast<std::size_t>(m.rows()),
               static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
            m(i, j);
    return out;
  }

  static Matrix identity(std::size_t n) {
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct OptimizerConfig {
  double step_size = 0.01;
  int max_iters = 1000;
  double tolerance = 1e-9;  // relative objective change
  std::uint64_t seed = 0;

  void validate() const {
    if (!(step_size > 0)) throw std::invalid_argument("step_size must be > 0");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(tolerance > 0)) throw std::invalid_argument("tolerance must be > 0");
  }
};

struct CholeskyResult {
  Matrix lower;
  double jitter = 0.0;  // diagonal shift that made the factorization succeed
};

namespace detail {

// Lower Cholesky that tolerates exact semidefiniteness: zero pivots are
// accepted when the remaining column is (numerically) zero as well.
inline bool psd_cholesky(const Eigen::MatrixXd& a, Eigen::MatrixXd& lower) {
  const Eigen::Index n = a.rows();
  const double scale = std::max(1.0, a.diagonal().maxCoeff());
  const double pivot_tol = 1e-12 * scale;
  const double column_tol = 1e-8 * scale;
  lower = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= lower(j, k) * lower(j, k);
    if (d < -pivot_tol) return false;
    const double ljj = d > 0 ? std::sqrt(d) : 0.0;
    lower(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      if (ljj > 0) {
        lower(i, j) = s / ljj;
      } else if (std::abs(s) > column_tol) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace detail

/// Factor a covariance that may be indefinite: negative eigenvalues are
/// clipped to zero, then the smallest diagonal jitter from
/// {0, jitter_start*10^k, k=0..7} that lets the factorization succeed is
/// applied. Returns the lower factor and the jitter used.
inline CholeskyResult cholesky_psd(const Matrix& cov,
                                   double jitter_start = 1e-10) {
  if (cov.rows() != cov.cols())
    fail(errc::not_square, "covariance is " + std::to_string(cov.rows()) +
                               "x" + std::to_string(cov.cols()));
  const auto a = cov.as_eigen();
  const std::size_t n = cov.rows();
  double max_abs = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      max_abs = std::max(max_abs, std::abs(cov(i, j)));
  const double sym_tol = 1e-10 * max_abs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(cov(i, j) - cov(j, i)) > sym_tol)
        fail(errc::not_symmetric,
             "entry (" + std::to_string(i) + "," + std::to_string(j) + ")");

  Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success)
    fail(errc::factorization_failed, "eigendecomposition did not converge");
  Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd repaired =
      eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();

  Eigen::MatrixXd lower;
  if (detail::psd_cholesky(repaired, lower))
    return {Matrix::from_eigen(lower), 0.0};
  for (int k = 0; k < 8; ++k) {
    const double jitter = jitter_start * std::pow(10.0, k);
    Eigen::MatrixXd shifted = repaired;
    shifted.diagonal().array() += jitter;
    if (detail::psd_cholesky(shifted, lower))
      return {Matrix::from_eigen(lower), jitter};
  }
  fail(errc::factorization_failed,
       "no jitter in 8 escalations made the matrix factorizable");
}

/// Euclidean projection onto the probability simplex, by sort-and-threshold.
inline std::vector<double> project_simplex(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("cannot project empty vector");
  for (double x : v)
    if (!std::isfinite(x))
      throw std::invalid_argument("simplex projection needs finite input");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  std::size_t rho = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0) {
      rho = j + 1;
      theta = t;
    }
  }
  std::vector<double> w(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    w[i] = std::max(v[i] - theta, 0.0);
    sum += w[i];
  }
  for (double& x : w) x /= sum;  // absorb rounding so the sum is exactly 1
  (void)rho;
  return w;
}

/// argmin ||y - X b||^2 + lambda ||b||^2 via the normal equations. For
/// lambda > 0 and p > n the algebraically identical dual form
/// X^T (X X^T + lambda I)^{-1} y is used instead, which is both smaller and
/// better conditioned; the solution is the same.
inline std::vector<double> ridge_solve(const Matrix& x,
                                       std::span<const double> y,
                                       double lambda) {
  const std::size_t n = x.rows(), p = x.cols();
  if (n == 0 || p == 0) throw std::invalid_argument("empty design matrix");
  if (y.size() != n) fail(errc::length_mismatch, "y length != rows of X");
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  const auto xe = x.as_eigen();
  Eigen::Map<const Eigen::VectorXd> ye(y.data(),
                                       static_cast<Eigen::Index>(n));
  Eigen::VectorXd beta;
  if (lambda > 0 && p > n) {
    Eigen::MatrixXd gram = xe * xe.transpose();
    gram.diagonal().array() += lambda;
    beta = xe.transpose() * gram.llt().solve(ye);
  } else {
    Eigen::MatrixXd gram = xe.transpose() * xe;
    gram.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
      fail(errc::singular, "X^T X is rank-deficient and lambda is 0");
    if (lambda == 0) {
      // LLT accepts exactly singular matrices with a ~sqrt(eps) pivot from
      // rounding; a tiny relative pivot therefore means rank deficiency.
      const Eigen::MatrixXd l = llt.matrixL();
      const double dmax = l.diagonal().maxCoeff();
      if (l.diagonal().minCoeff() <= 1e-7 * std::max(dmax, 1e-300))
        fail(errc::singular, "X^T X is rank-deficient and lambda is 0");
    }
    beta = llt.solve(xe.transpose() * ye);
  }
  return std::vector<double>(beta.data(), beta.data() + beta.size());
}

/// Objective contract for minimize(): fill `grad` (same length as `params`)
/// and return the objective value.
using Objective =
    std::function<double(std::span<const double>, std::span<double>)>;

/// Called once per iteration with the current iterate; lets callers implement
/// epoch-level bookkeeping such as held-out early stopping.
using IterationObserver =
    std::function<void(int, std::span<const double>, double)>;

/// Seeded adaptive-gradient minimizer (per-coordinate step scaling with bias
/// correction). Tracks the best iterate seen and returns it, so the reported
/// objective is never worse than at init. Non-finite objectives at init throw;
/// mid-run they trigger a step-size backoff restart from the best iterate.
inline std::vector<double> minimize(const Objective& objective,
                                    std::vector<double> init,
                                    const OptimizerConfig& cfg,
                                    const IterationObserver& observer = {}) {
  cfg.validate();
  const std::size_t dim = init.size();
  std::vector<double> grad(dim, 0.0);
  double value = objective(init, grad);
  if (!std::isfinite(value))
    fail(errc::non_finite_objective, "objective not finite at init");

  std::vector<double> params = init;
  std::vector<double> best_params = init;
  double best_value = value;

  std::vector<double> m(dim, 0.0), v(dim, 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double step_scale = 1.0;
  int backoffs = 0;
  double prev_value = value;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const double lr = cfg.step_size * step_scale;
    const double bc1 = 1.0 - std::pow(beta1, iter);
    const double bc2 = 1.0 - std::pow(beta2, iter);
    for (std::size_t i = 0; i < dim; ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
    value = objective(params, grad);
    if (!std::isfinite(value)) {
      if (++backoffs > 8)
        fail(errc::non_finite_objective,
             "objective stayed non-finite after 8 step reductions");
      step_scale *= 0.5;
      params = best_params;
      std::fill(m.begin(), m.end(), 0.0);
      std::fill(v.begin(), v.end(), 0.0);
      value = objective(params, grad);
      continue;
    }
    if (value < best_value) {
      best_value = value;
      best_params = params;
    }
    if (observer) observer(iter, params, value);
    const double rel_change =
        std::abs(prev_value - value) / std::max(1.0, std::abs(prev_value));
    if (rel_change < cfg.tolerance) break;
    prev_value = value;
  }
  return best_params;
}

/// Quantile (pinball) loss; nonnegative, zero iff y == q_pred.
inline double pinball_loss(double y, double q_pred, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    fail(errc::bad_tau, "tau must be in (0,1), got " + std::to_string(tau));
  return y >= q_pred ? tau * (y - q_pred) : (1.0 - tau) * (q_pred - y);
}

/// d/dq of pinball_loss, with the subgradient 0 at the kink.
inline double pinball_grad_q(double y, double q_pred, double tau) {
  if (y > q_pred) return -tau;
  if (y < q_pred) return 1.0 - tau;
  return 0.0;
}

/// Quantile-averaged CRPS approximation: 2 * mean_k pinball(y, q_k, tau_k).
inline double crps_from_quantiles(double y,
                                  std::span<const double> quantile_preds,
                                  std::span<const double> taus) {
  if (quantile_preds.size() != taus.size())
    fail(errc::length_mismatch, "quantile/tau lengths differ");
  if (taus.empty()) fail(errc::length_mismatch, "no quantile levels");
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (!(taus[k] > 0.0 && taus[k] < 1.0))
      fail(errc::bad_tau, "tau must be in (0,1)");
    if (k > 0 && !(taus[k] > taus[k - 1]))
      fail(errc::unsorted_taus, "taus must be strictly increasing");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < taus.size(); ++k)
    sum += pinball_loss(y, quantile_preds[k], taus[k]);
  return 2.0 * sum / static_cast<double>(taus.size());
}

}  // namespace cfcast
