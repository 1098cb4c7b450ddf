#include <cmath>
#include <cstdint>
#include <set>

#include <gtest/gtest.h>

#include "afmtj/stats.hpp"

using namespace afmtj;

namespace {

double zero_failure_bound(double n, double confidence) { return -std::expm1(std::log1p(-confidence) / n); }

}  // namespace

TEST(ClopperPearson, ZeroFailureBoundMatchesClosedForm) {
  for (std::uint64_t n : {10ull, 100ull, 1000ull, 30000ull, 3150000ull}) {
    EXPECT_NEAR(cp_upper_bound(n, 0) / zero_failure_bound(static_cast<double>(n), 0.95), 1.0, 1e-9) << n;
  }
}

TEST(ClopperPearson, ThreeMillionTrialsCertifyOnePerMillion) {
  EXPECT_NEAR(cp_upper_bound(2995732, 0) / 1e-6, 1.0, 1e-3);
  EXPECT_LT(cp_upper_bound(3150000, 0), 1e-6);
}

TEST(ClopperPearson, HundredTrialsWithoutFailure) { EXPECT_NEAR(cp_upper_bound(100, 0), 0.02951, 1e-5); }

TEST(ClopperPearson, AllFailuresGiveUnitBound) {
  EXPECT_EQ(cp_upper_bound(10, 10), 1.0);
  EXPECT_EQ(cp_lower_bound(10, 0), 0.0);
}

TEST(ClopperPearson, IntervalBracketsThePointEstimate) {
  for (std::uint64_t f : {0ull, 1ull, 5ull, 50ull, 99ull, 100ull}) {
    const RateEstimate r = make_estimate(100, f);
    EXPECT_LE(r.cp_lower_95, r.point);
    EXPECT_GE(r.cp_upper_95, r.point);
  }
}

TEST(ClopperPearson, SingleFailureMatchesBetaRelation) {
  // For one failure, the lower bound solves 1 - (1 - p)^n = 1 - conf.
  const double lo = cp_lower_bound(50, 1, 0.95);
  EXPECT_NEAR(1.0 - std::pow(1.0 - lo, 50.0), 0.05, 1e-9);
}

TEST(ClopperPearson, CoverageOverSyntheticExperiments) {
  const double p = 0.02;
  const int n = 400;
  int covered = 0;
  for (int e = 0; e < 1000; ++e) {
    CounterRng rng(99, 7, static_cast<std::uint64_t>(e), 0);
    std::uint64_t f = 0;
    for (int i = 0; i < n; ++i) f += rng.uniform01() < p;
    const auto [lo, hi] = cp_interval(n, f, 0.95);
    covered += lo <= p && p <= hi;
  }
  EXPECT_GE(covered, 930);
}

TEST(NormalTail, MatchesComplementaryErrorFunction) {
  for (double z : {1.0, 3.09, 4.753, 6.0}) {
    EXPECT_NEAR(normal_tail(z) / (0.5 * std::erfc(z / std::sqrt(2.0))), 1.0, 1e-10);
  }
  EXPECT_NEAR(normal_tail(4.753) / 1e-6, 1.0, 3e-3);
  EXPECT_NEAR(normal_tail_quantile(1e-3), 3.0902, 1e-4);
}

TEST(CounterRng, SameKeyGivesSameStream) {
  CounterRng a(1, 2, 3, 4), b(1, 2, 3, 4);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(CounterRng, DifferentKeysDiverge) {
  std::set<std::uint64_t> first;
  for (std::uint64_t k = 0; k < 1000; ++k) first.insert(CounterRng(1, 1, k, 0)());
  for (std::uint64_t k = 0; k < 1000; ++k) first.insert(CounterRng(1, 2, k, 0)());
  EXPECT_EQ(first.size(), 2000u);
}

TEST(CounterRng, UniformDrawsStayInsideTheOpenInterval) {
  CounterRng r(5, 5, 5, 5);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform01();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / 100000.0));
}
