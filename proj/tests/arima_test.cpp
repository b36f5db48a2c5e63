#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cfcast/arima.hpp"
#include "cfcast/rng.hpp"

using namespace cfcast;

TEST(Difference, RoundTripIsExact) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 4.0);
  std::vector<double> y(50);
  for (double& v : y) v = g(rng);
  for (int d = 0; d <= 2; ++d) {
    auto w = difference(y, d);
    EXPECT_EQ(w.size(), y.size() - d);
    auto init = initial_conditions(y, d);
    auto back = integrate(w, d, init);
    ASSERT_EQ(back.size(), y.size());
    for (std::size_t t = 0; t < y.size(); ++t)
      EXPECT_NEAR(back[t], y[t], 1e-12 * std::max(1.0, std::abs(y[t])));
  }
}

TEST(FitCarima, WhiteNoiseSelectsEmptyOrder) {
  auto engine = make_engine(29);
  std::normal_distribution<double> g(5.0, 1.0);
  std::vector<double> y(600);
  for (double& v : y) v = g(engine);
  auto model = fit_carima(y);
  EXPECT_EQ(model.order.p, 0);
  EXPECT_EQ(model.order.d, 0);
  EXPECT_EQ(model.order.q, 0);
  // forecast equals the sample mean
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= y.size();
  auto fc = forecast_arima(model, y, 3);
  for (double f : fc) EXPECT_NEAR(f, mean, 1e-6);
}

TEST(FitCarima, RecoversAr1Coefficient) {
  auto engine = make_engine(31);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> y;
  double prev = 0.0;
  for (int t = 0; t < 500; ++t) {
    prev = 0.8 * prev + g(engine);
    if (t >= 100) y.push_back(prev);  // burn-in
  }
  ArimaModel model;
  ASSERT_TRUE(fit_arima_order(y, {1, 0, 0}, model));
  EXPECT_GT(model.ar[0], 0.7);
  EXPECT_LT(model.ar[0], 0.9);
}

TEST(FitCarima, LinearRampSelectsFirstDifference) {
  std::vector<double> y(80);
  for (int t = 0; t < 80; ++t) y[t] = 3.0 + 0.5 * t;
  auto model = fit_carima(y);
  EXPECT_EQ(model.order.d, 1);
}

TEST(FitCarima, CssIsLocallyOptimal) {
  auto engine = make_engine(37);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> y;
  double prev = 0.0, e_prev = 0.0;
  for (int t = 0; t < 400; ++t) {
    const double e = g(engine);
    prev = 0.6 * prev + e + 0.3 * e_prev;
    e_prev = e;
    if (t >= 100) y.push_back(prev);
  }
  ArimaModel model;
  ASSERT_TRUE(fit_arima_order(y, {1, 0, 1}, model));

  auto css_at = [&](double c, double phi, double theta) {
    std::vector<double> params{c, phi, theta};
    std::vector<double> grad(3);
    return detail::css_objective(y, 1, 1, params, grad);
  };
  const double fitted = css_at(model.intercept, model.ar[0], model.ma[0]);
  std::normal_distribution<double> perturb(0.0, 0.05);
  for (int rep = 0; rep < 20; ++rep) {
    const double f = css_at(model.intercept + perturb(engine),
                            model.ar[0] + perturb(engine),
                            model.ma[0] + perturb(engine));
    EXPECT_LE(fitted, f + 1e-9);
  }
}

TEST(ForecastArima, HandComputedPaths) {
  // AR(1) with phi = 0.5, zero intercept, last value 4 -> geometric decay
  ArimaModel ar1;
  ar1.order = {1, 0, 0};
  ar1.ar = {0.5};
  std::vector<double> hist{1.0, 2.0, 4.0};
  auto fc = forecast_arima(ar1, hist, 3);
  ASSERT_EQ(fc.size(), 3u);
  EXPECT_DOUBLE_EQ(fc[0], 2.0);
  EXPECT_DOUBLE_EQ(fc[1], 1.0);
  EXPECT_DOUBLE_EQ(fc[2], 0.5);

  // random walk: constant forecast at the last level
  ArimaModel rw;
  rw.order = {0, 1, 0};
  std::vector<double> hist2{3.0, 5.0, 7.0};
  auto fc2 = forecast_arima(rw, hist2, 4);
  for (double f : fc2) EXPECT_DOUBLE_EQ(f, 7.0);

  // pure intercept model: every forecast is the mean
  ArimaModel mean_only;
  mean_only.order = {0, 0, 0};
  mean_only.intercept = 11.25;
  auto fc3 = forecast_arima(mean_only, hist2, 2);
  for (double f : fc3) EXPECT_DOUBLE_EQ(f, 11.25);
}

TEST(FitCarima, Validation) {
  std::vector<double> tiny(10, 1.0);
  try {
    fit_carima(tiny);
    FAIL() << "expected TooShort";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::too_short);
  }

  // explosive series with an AR-only grid: every candidate is non-stationary
  std::vector<double> explosive;
  double v = 1.0;
  for (int t = 0; t < 30; ++t) {
    explosive.push_back(v);
    v *= 1.5;
  }
  std::vector<ArimaOrder> ar_only{{1, 0, 0}};
  try {
    fit_carima(explosive, ar_only);
    FAIL() << "expected NoValidModel";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::no_valid_model);
  }
}
