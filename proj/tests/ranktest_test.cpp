#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "cfcast/ranktest.hpp"

using namespace cfcast;

TEST(RankSum, FullySeparatedSmallGroupsExact) {
  std::vector<double> control{1.0, 2.0, 3.0};
  std::vector<double> treated{4.0, 5.0, 6.0};
  auto r = rank_sum_test(control, treated);
  EXPECT_EQ(r.method, WilcoxonResult::Method::exact);
  EXPECT_DOUBLE_EQ(r.u_statistic, 9.0);  // maximal U = n1*n2
  EXPECT_DOUBLE_EQ(r.p_value, 0.05);     // 1 / C(6,3)
  EXPECT_EQ(r.n_control, 3);
  EXPECT_EQ(r.n_treated, 3);
}

TEST(RankSum, IdenticalGroupsDoNotReject) {
  std::vector<double> vals{1.0, 2.0, 3.0};
  auto r = rank_sum_test(vals, vals);
  EXPECT_GE(r.p_value, 0.05);
  EXPECT_GT(r.p_value, 0.3);
  EXPECT_LT(r.p_value, 0.9);
}

TEST(RankSum, EmptyGroupRejected) {
  std::vector<double> some{1.0};
  std::vector<double> none;
  try {
    rank_sum_test(none, some);
    FAIL() << "expected EmptyGroup";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::empty_group);
  }
  EXPECT_THROW(rank_sum_test(some, none), Error);
}

TEST(RankSum, NormalApproximationUsedForLargeSamples) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> control(30), treated(30);
  for (double& v : control) v = g(rng);
  for (double& v : treated) v = g(rng) + 2.0;
  auto r = rank_sum_test(control, treated);
  EXPECT_EQ(r.method, WilcoxonResult::Method::normal_approximation);
  EXPECT_LT(r.p_value, 0.001);
}

// The two code paths must agree closely on balanced groups of size >= 8.
TEST(RankSum, ExactAndNormalAgree) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> control(9), treated(9);
    for (double& v : control) v = g(rng);
    for (double& v : treated) v = g(rng) + 0.4;
    auto exact = rank_sum_test(control, treated, RankSumMethod::exact);
    auto approx = rank_sum_test(control, treated, RankSumMethod::normal);
    EXPECT_NEAR(exact.p_value, approx.p_value, 0.02);
  }
}

TEST(RankSum, TiesUseMidranks) {
  // pooled sample has heavy ties; p must stay in [0,1] and favour the
  // shifted group
  std::vector<double> control{1.0, 1.0, 2.0, 2.0, 3.0};
  std::vector<double> treated{2.0, 3.0, 3.0, 4.0, 4.0};
  auto r = rank_sum_test(control, treated);
  EXPECT_GT(r.p_value, 0.0);
  EXPECT_LT(r.p_value, 0.2);
}
