#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "cfcast/metrics.hpp"

using namespace cfcast;

TEST(Smape, KnownValues) {
  std::vector<double> a{3.0, 4.0, 5.0};
  EXPECT_EQ(smape(a, a), 0.0);

  std::vector<double> actual{100.0, 100.0};
  std::vector<double> predicted{110.0, 90.0};
  EXPECT_NEAR(smape(actual, predicted), 0.10025062656641604, 1e-9);
}

TEST(Smape, SymmetricAndScaleInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1.0, 50.0);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> y(6), yh(6), cy(6), cyh(6);
    const double c = u(rng);
    for (int t = 0; t < 6; ++t) {
      y[t] = u(rng);
      yh[t] = u(rng);
      cy[t] = c * y[t];
      cyh[t] = c * yh[t];
    }
    EXPECT_DOUBLE_EQ(smape(y, yh), smape(yh, y));
    EXPECT_NEAR(smape(cy, cyh), smape(y, yh), 1e-12);
  }
}

TEST(Smape, ZeroDenominator) {
  std::vector<double> a{0.0, 1.0};
  std::vector<double> p{0.0, 1.0};
  try {
    smape(a, p);
    FAIL() << "expected ZeroDenominator";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::zero_denominator);
  }
  std::vector<double> b{1.0};
  EXPECT_THROW(smape(a, b), Error);  // LengthMismatch
}

TEST(Mase, HandComputedExample) {
  std::vector<double> insample{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<double> actual{10.0, 10.0};
  std::vector<double> predicted{12.0, 8.0};
  // naive denominator at S=1 is 1; mean absolute error is 2
  EXPECT_DOUBLE_EQ(mase(actual, predicted, insample, 1), 2.0);
}

TEST(Mase, ScaleInvariant) {
  std::vector<double> insample{1.0, 3.0, 2.0, 5.0, 4.0, 7.0};
  std::vector<double> actual{6.0, 8.0};
  std::vector<double> predicted{7.0, 6.5};
  const double base = mase(actual, predicted, insample, 1);
  const double c = 13.7;
  std::vector<double> si, sa, sp;
  for (double v : insample) si.push_back(c * v);
  for (double v : actual) sa.push_back(c * v);
  for (double v : predicted) sp.push_back(c * v);
  EXPECT_NEAR(mase(sa, sp, si, 1), base, 1e-12);
}

TEST(Mase, DegenerateInputs) {
  // strictly periodic in-sample series: seasonal-naive error is exactly zero
  std::vector<double> periodic{1.0, 2.0, 1.0, 2.0, 1.0, 2.0};
  std::vector<double> actual{1.0, 2.0};
  std::vector<double> predicted{1.0, 2.0};
  try {
    mase(actual, predicted, periodic, 2);
    FAIL() << "expected ZeroDenominator";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::zero_denominator);
  }
  std::vector<double> tiny{1.0, 2.0};
  try {
    mase(actual, predicted, tiny, 2);
    FAIL() << "expected TooShortInsample";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::too_short_insample);
  }
}
