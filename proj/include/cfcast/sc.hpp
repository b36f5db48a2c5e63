#pragma once

// Per-treated-unit estimators in the synthetic-control family. fit_sc finds
// simplex donor weights by accelerated projected gradient; fit_ascm adds a
// ridge bias correction estimated from how well control post-period outcomes
// are predicted by control pre-period trajectories. The correction is stored
// as an equivalent weight vector over donors (these weights may be negative),
// which is algebraically identical to applying the per-step ridge regression
// described by the augmented estimator.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfcast/error.hpp"
#include "cfcast/numerics.hpp"

namespace cfcast {

struct ScWeights {
  std::vector<std::string> donor_ids;
  std::vector<double> gamma;       // simplex weights
  double intercept = 0.0;          // level offset; zero for the plain fit
  std::vector<double> residuals;   // pre-period fit residuals, length t0
};

struct AugmentedModel {
  ScWeights base;
  std::vector<double> ridge_coeffs;    // correction weights over donors
  double lambda = 0.0;
  std::vector<double> bias_estimate;   // correction per post step
};

namespace detail {

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

}  // namespace detail

/// Simplex-constrained least squares: gamma = argmin ||y - C gamma||^2 over
/// the probability simplex, by projected gradient with momentum and restart
/// from the uniform start.
inline ScWeights fit_sc(std::span<const double> treated_pre,
                        const Matrix& controls_pre,
                        std::vector<std::string> donor_ids = {}) {
  const std::size_t t0 = controls_pre.rows(), j = controls_pre.cols();
  if (j < 2) fail(errc::too_few_donors, "need at least 2 donors, have " +
                                            std::to_string(j));
  if (treated_pre.size() != t0)
    fail(errc::length_mismatch, "treated pre length != control rows");
  if (!donor_ids.empty() && donor_ids.size() != j)
    fail(errc::length_mismatch, "donor id count != donor columns");

  const Eigen::MatrixXd c = detail::to_eigen(controls_pre);
  Eigen::Map<const Eigen::VectorXd> y(treated_pre.data(),
                                      static_cast<Eigen::Index>(t0));
  const Eigen::MatrixXd gram = c.transpose() * c;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double lipschitz = std::max(2.0 * eig.eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / lipschitz;

  Eigen::VectorXd gamma =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(j), 1.0 / j);
  Eigen::VectorXd prev = gamma;
  auto objective = [&](const Eigen::VectorXd& g) {
    return (y - c * g).squaredNorm();
  };
  double f = objective(gamma);
  double momentum = 0.0;
  const int max_iters = 20000;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd z = gamma + momentum * (gamma - prev);
    Eigen::VectorXd grad = 2.0 * (c.transpose() * (c * z) - c.transpose() * y);
    Eigen::VectorXd cand = z - step * grad;
    auto projected =
        project_simplex(std::span<const double>(cand.data(), j));
    prev = gamma;
    for (std::size_t i = 0; i < j; ++i) gamma(static_cast<Eigen::Index>(i)) =
        projected[i];
    const double f_new = objective(gamma);
    if (f_new > f) {
      momentum = 0.0;  // restart acceleration when the objective rises
    } else {
      momentum = std::min(0.95, momentum + 0.05);
      if (f - f_new < 1e-10 * std::max(1.0, f)) {
        f = f_new;
        break;
      }
    }
    f = f_new;
  }

  ScWeights out;
  out.donor_ids = std::move(donor_ids);
  out.gamma.assign(gamma.data(), gamma.data() + j);
  Eigen::VectorXd resid = y - c * gamma;
  out.residuals.assign(resid.data(), resid.data() + t0);
  return out;
}

/// Prediction is a convex combination of donor values (plus the intercept,
/// zero for fitted models), so it lies inside the donor envelope at each step.
inline std::vector<double> predict_sc(const ScWeights& w,
                                      const Matrix& controls) {
  if (controls.cols() != w.gamma.size())
    fail(errc::length_mismatch, "donor columns != weight count");
  std::vector<double> out(controls.rows(), 0.0);
  for (std::size_t t = 0; t < controls.rows(); ++t) {
    double s = w.intercept;
    for (std::size_t j = 0; j < w.gamma.size(); ++j)
      s += w.gamma[j] * controls(t, j);
    out[t] = s;
  }
  return out;
}

inline std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int k = -6; k <= 6; ++k) grid.push_back(std::pow(10.0, 0.5 * k));
  return grid;  // 13 log-spaced points, 1e-3 .. 1e3
}

/// Augmented synthetic control: the ridge penalty is chosen from the grid by
/// leave-one-control-out squared error of the post-on-pre ridge regression;
/// the resulting correction weights debias the plain SC prediction when the
/// pre-period fit is imperfect and vanish when it is exact.
inline AugmentedModel fit_ascm(std::span<const double> treated_pre,
                               const Matrix& controls_pre,
                               const Matrix& controls_post,
                               std::span<const double> lambda_grid,
                               std::vector<std::string> donor_ids = {}) {
  if (controls_post.cols() != controls_pre.cols())
    fail(errc::length_mismatch, "pre/post donor counts differ");
  if (controls_post.rows() < 1)
    throw std::invalid_argument("need at least one post step");
  if (lambda_grid.empty())
    throw std::invalid_argument("lambda grid is empty");

  AugmentedModel model;
  model.base = fit_sc(treated_pre, controls_pre, std::move(donor_ids));

  const std::size_t t0 = controls_pre.rows();
  const std::size_t j = controls_pre.cols();
  const std::size_t h = controls_post.rows();

  // donors as rows
  Eigen::MatrixXd d(j, t0);
  for (std::size_t a = 0; a < j; ++a)
    for (std::size_t t = 0; t < t0; ++t) d(a, t) = controls_pre(t, a);
  Eigen::MatrixXd ypost(j, h);
  for (std::size_t a = 0; a < j; ++a)
    for (std::size_t t = 0; t < h; ++t) ypost(a, t) = controls_post(t, a);
  const Eigen::MatrixXd gram = d * d.transpose();

  double best_lambda = lambda_grid[0];
  double best_score = std::numeric_limits<double>::infinity();
  for (double lambda : lambda_grid) {
    Eigen::MatrixXd reg = gram;
    reg.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(reg);
    if (llt.info() != Eigen::Success) {
      if (lambda == 0.0)
        fail(errc::singular, "donor gram matrix is singular at lambda 0");
      continue;
    }
    const Eigen::MatrixXd hat = gram * llt.solve(
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(j),
                                  static_cast<Eigen::Index>(j)));
    const Eigen::MatrixXd resid = ypost - hat * ypost;
    double score = 0.0;
    for (std::size_t a = 0; a < j; ++a) {
      const double denom = std::max(1.0 - hat(a, a), 1e-8);
      for (std::size_t t = 0; t < h; ++t) {
        const double e = resid(a, t) / denom;
        score += e * e;
      }
    }
    if (score < best_score) {
      best_score = score;
      best_lambda = lambda;
    }
  }
  model.lambda = best_lambda;

  // Correction weights w = (D D^T + lambda I)^{-1} D imbalance; identical to
  // imbalance^T ridge_solve(D, y_t, lambda) applied at every post step.
  Eigen::Map<const Eigen::VectorXd> imb(model.base.residuals.data(),
                                        static_cast<Eigen::Index>(t0));
  Eigen::MatrixXd reg = gram;
  reg.diagonal().array() += best_lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(reg);
  if (llt.info() != Eigen::Success)
    fail(errc::singular, "donor gram matrix is singular");
  Eigen::VectorXd w = llt.solve(d * imb);
  model.ridge_coeffs.assign(w.data(), w.data() + j);

  model.bias_estimate.assign(h, 0.0);
  for (std::size_t t = 0; t < h; ++t) {
    double s = 0.0;
    for (std::size_t a = 0; a < j; ++a)
      s += model.ridge_coeffs[a] * controls_post(t, a);
    model.bias_estimate[t] = s;
  }
  return model;
}

inline std::vector<double> predict_ascm(const AugmentedModel& model,
                                        const Matrix& controls_post) {
  auto pred = predict_sc(model.base, controls_post);
  for (std::size_t t = 0; t < pred.size(); ++t) {
    double s = 0.0;
    for (std::size_t a = 0; a < model.ridge_coeffs.size(); ++a)
      s += model.ridge_coeffs[a] * controls_post(t, a);
    pred[t] += s;
  }
  return pred;
}

}  // namespace cfcast
