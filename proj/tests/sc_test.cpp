#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cfcast/sc.hpp"

using namespace cfcast;

namespace {

Matrix donors_from_columns(const std::vector<std::vector<double>>& cols) {
  Matrix m(cols.front().size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t t = 0; t < cols[j].size(); ++t) m(t, j) = cols[j][t];
  return m;
}

double sc_objective(std::span<const double> y, const Matrix& c,
                    std::span<const double> gamma) {
  double f = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    double pred = 0.0;
    for (std::size_t j = 0; j < gamma.size(); ++j) pred += gamma[j] * c(t, j);
    f += (y[t] - pred) * (y[t] - pred);
  }
  return f;
}

}  // namespace

TEST(FitSc, ExactMatchDonorGetsAllWeight) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(100.0, 5.0);
  std::vector<std::vector<double>> cols(4, std::vector<double>(30));
  for (auto& col : cols)
    for (double& v : col) v = g(rng);
  std::vector<double> treated = cols[2];
  auto w = fit_sc(treated, donors_from_columns(cols));
  EXPECT_GT(w.gamma[2], 0.99);
}

TEST(FitSc, AverageOfTwoDonors) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> cols(2, std::vector<double>(40));
  for (auto& col : cols)
    for (double& v : col) v = g(rng);
  std::vector<double> treated(40);
  for (int t = 0; t < 40; ++t) treated[t] = 0.5 * (cols[0][t] + cols[1][t]);
  auto w = fit_sc(treated, donors_from_columns(cols));
  EXPECT_NEAR(w.gamma[0], 0.5, 1e-4);
  EXPECT_NEAR(w.gamma[1], 0.5, 1e-4);
}

// brute-force grid oracle over the 5-donor simplex
TEST(FitSc, BeatsCoarseGridSearch) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  const int t0 = 20;
  std::vector<std::vector<double>> cols(5, std::vector<double>(t0));
  for (auto& col : cols)
    for (double& v : col) v = g(rng);
  std::vector<double> treated(t0);
  for (double& v : treated) v = g(rng);
  auto c = donors_from_columns(cols);
  auto w = fit_sc(treated, c);
  const double ours = sc_objective(treated, c, w.gamma);

  const int steps = 50;  // grid step 0.02
  double best_grid = std::numeric_limits<double>::infinity();
  std::vector<double> gamma(5);
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; a + b <= steps; ++b)
      for (int d = 0; a + b + d <= steps; ++d)
        for (int e = 0; a + b + d + e <= steps; ++e) {
          gamma[0] = static_cast<double>(a) / steps;
          gamma[1] = static_cast<double>(b) / steps;
          gamma[2] = static_cast<double>(d) / steps;
          gamma[3] = static_cast<double>(e) / steps;
          gamma[4] = 1.0 - gamma[0] - gamma[1] - gamma[2] - gamma[3];
          best_grid = std::min(best_grid, sc_objective(treated, c, gamma));
        }
  EXPECT_LE(ours, best_grid + 1e-6);
}

TEST(FitSc, PredictionsStayInsideDonorEnvelope) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(50.0, 10.0);
  std::vector<std::vector<double>> cols(6, std::vector<double>(25));
  for (auto& col : cols)
    for (double& v : col) v = g(rng);
  std::vector<double> treated(25);
  for (double& v : treated) v = g(rng);
  auto c = donors_from_columns(cols);
  auto w = fit_sc(treated, c);
  auto pred = predict_sc(w, c);
  for (std::size_t t = 0; t < pred.size(); ++t) {
    double lo = c(t, 0), hi = c(t, 0);
    for (std::size_t j = 1; j < 6; ++j) {
      lo = std::min(lo, c(t, j));
      hi = std::max(hi, c(t, j));
    }
    EXPECT_GE(pred[t], lo - 1e-9);
    EXPECT_LE(pred[t], hi + 1e-9);
  }
}

TEST(FitSc, TooFewDonors) {
  Matrix single(10, 1, 1.0);
  std::vector<double> treated(10, 1.0);
  try {
    fit_sc(treated, single);
    FAIL() << "expected TooFewDonors";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::too_few_donors);
  }
}

TEST(FitAscm, PerfectPreFitReducesToPlainSc) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(10.0, 2.0);
  std::vector<std::vector<double>> pre(3, std::vector<double>(30));
  std::vector<std::vector<double>> post(3, std::vector<double>(8));
  for (auto& col : pre)
    for (double& v : col) v = g(rng);
  for (auto& col : post)
    for (double& v : col) v = g(rng);
  std::vector<double> treated(30);
  for (int t = 0; t < 30; ++t)
    treated[t] = 0.2 * pre[0][t] + 0.5 * pre[1][t] + 0.3 * pre[2][t];
  auto cpre = donors_from_columns(pre);
  auto cpost = donors_from_columns(post);
  auto grid = default_lambda_grid();
  auto model = fit_ascm(treated, cpre, cpost, grid);
  auto augmented = predict_ascm(model, cpost);
  auto plain = predict_sc(model.base, cpost);
  for (std::size_t t = 0; t < augmented.size(); ++t)
    EXPECT_NEAR(augmented[t], plain[t], 1e-5);
  for (double b : model.bias_estimate) EXPECT_NEAR(b, 0.0, 1e-5);
}

TEST(FitAscm, HugeLambdaShrinksCorrectionAway) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> pre(4, std::vector<double>(25));
  std::vector<std::vector<double>> post(4, std::vector<double>(6));
  for (auto& col : pre)
    for (double& v : col) v = g(rng);
  for (auto& col : post)
    for (double& v : col) v = g(rng);
  std::vector<double> treated(25);
  for (double& v : treated) v = g(rng) + 3.0;  // deliberately bad fit
  std::vector<double> grid{1e12};
  auto model = fit_ascm(treated, donors_from_columns(pre),
                        donors_from_columns(post), grid);
  auto augmented = predict_ascm(model, donors_from_columns(post));
  auto plain = predict_sc(model.base, donors_from_columns(post));
  for (std::size_t t = 0; t < augmented.size(); ++t)
    EXPECT_NEAR(augmented[t], plain[t], 1e-6);
}

// Holdout comparison oracle: with a level shift that the simplex cannot
// express, the ridge correction must reduce held-out pre-period error.
TEST(FitAscm, BiasCorrectionImprovesHoldout) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> noise(0.0, 0.3);
  const int len = 60, fit_len = 40;
  std::vector<std::vector<double>> donors(5, std::vector<double>(len));
  for (std::size_t j = 0; j < donors.size(); ++j) {
    double level = 10.0 + 2.0 * static_cast<double>(j);
    for (int t = 0; t < len; ++t)
      donors[j][t] = level + std::sin(0.3 * t + j) + noise(rng);
  }
  std::vector<double> treated(len);
  for (int t = 0; t < len; ++t)
    treated[t] = 0.6 * donors[1][t] + 0.4 * donors[3][t] + 5.0 + noise(rng);

  std::vector<std::vector<double>> pre(5), hold(5);
  for (std::size_t j = 0; j < 5; ++j) {
    pre[j].assign(donors[j].begin(), donors[j].begin() + fit_len);
    hold[j].assign(donors[j].begin() + fit_len, donors[j].end());
  }
  std::vector<double> treated_pre(treated.begin(), treated.begin() + fit_len);
  std::vector<double> treated_hold(treated.begin() + fit_len, treated.end());

  auto cpre = donors_from_columns(pre);
  auto chold = donors_from_columns(hold);
  auto grid = default_lambda_grid();
  auto model = fit_ascm(treated_pre, cpre, chold, grid);
  auto plain = predict_sc(model.base, chold);
  auto augmented = predict_ascm(model, chold);
  double err_plain = 0.0, err_aug = 0.0;
  for (std::size_t t = 0; t < treated_hold.size(); ++t) {
    err_plain += std::abs(plain[t] - treated_hold[t]);
    err_aug += std::abs(augmented[t] - treated_hold[t]);
  }
  EXPECT_LT(err_aug, err_plain);
}

// The stored per-step bias must equal the literal route: a ridge regression
// of control post outcomes on control pre vectors, dotted with the
// imbalance, one post step at a time.
TEST(FitAscm, MatchesPerStepRidgeRoute) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0.0, 1.0);
  const int t0 = 18, h = 5;
  std::vector<std::vector<double>> pre(6, std::vector<double>(t0));
  std::vector<std::vector<double>> post(6, std::vector<double>(h));
  for (auto& col : pre)
    for (double& v : col) v = g(rng);
  for (auto& col : post)
    for (double& v : col) v = g(rng);
  std::vector<double> treated(t0);
  for (double& v : treated) v = g(rng);

  auto cpre = donors_from_columns(pre);
  auto cpost = donors_from_columns(post);
  std::vector<double> grid{0.7};
  auto model = fit_ascm(treated, cpre, cpost, grid);
  EXPECT_EQ(model.lambda, 0.7);

  // oracle: per post step, eta_t = ridge_solve(donors-as-rows, y_t, lambda)
  Matrix design(6, t0);
  for (std::size_t a = 0; a < 6; ++a)
    for (int t = 0; t < t0; ++t) design(a, t) = pre[a][t];
  for (int t = 0; t < h; ++t) {
    std::vector<double> y_t(6);
    for (std::size_t a = 0; a < 6; ++a) y_t[a] = post[a][t];
    auto eta = ridge_solve(design, y_t, 0.7);
    double bias = 0.0;
    for (int s = 0; s < t0; ++s) bias += model.base.residuals[s] * eta[s];
    EXPECT_NEAR(model.bias_estimate[t], bias, 1e-8);
  }
}
