#include "coinfer/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "coinfer/offline_solvers.hpp"
#include "helpers.hpp"

using namespace coinfer;

namespace {

double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-30});
}

TEST(OracleStructured, TwoStageFrozen) {
  const Scenario sc = testutil::two_stage();
  const StructuredOracle o = oracle_structured(sc, 0.1, 1);
  ASSERT_TRUE(o.feasible);
  EXPECT_FALSE(o.fallback);
  EXPECT_EQ(o.split, std::vector<std::size_t>{1});
  EXPECT_NEAR(o.energy, 3.0 / 49.0 + 0.02, 1e-12);
}

TEST(OracleStructured, FallbackMatchesForcedLocal) {
  Scenario sc = testutil::two_stage();
  sc.profile.latency = {std::vector<double>(8, 0.05), std::vector<double>(8, 0.05)};
  sc.deadline = {0.03};
  const StructuredOracle o = oracle_structured(sc, 0.03, 1);
  ASSERT_TRUE(o.feasible);
  EXPECT_TRUE(o.fallback);
  const SolveResult r = fixed_batch_schedule(sc, 0.03, 1);
  EXPECT_DOUBLE_EQ(o.energy, r.energy);
}

// The production single-pass solve must match exhaustive enumeration of all
// (N+1)^M split vectors on randomized instances.
TEST(OracleStructured, MatchesFixedBatchOnRandomInstances) {
  std::mt19937_64 rng(testutil::mix_seed(101, 0));
  std::uniform_int_distribution<std::size_t> users_d(1, 4);
  std::uniform_int_distribution<std::size_t> tasks_d(2, 4);
  for (int i = 0; i < 60; ++i) {
    const std::size_t M = users_d(rng);
    const std::size_t N = tasks_d(rng);
    const Scenario sc = testutil::random_scenario(rng, M, N, 0.5, true);
    std::uniform_int_distribution<std::size_t> b_d(1, M);
    const std::size_t b = b_d(rng);
    const SolveResult r = fixed_batch_schedule(sc, sc.deadline[0], b);
    const StructuredOracle o = oracle_structured(sc, sc.deadline[0], b);
    ASSERT_TRUE(o.feasible) << "instance " << i;
    EXPECT_EQ(o.fallback, !r.pipeline_feasible) << "instance " << i;
    EXPECT_LT(rel_gap(r.energy, o.energy), 1e-9)
        << "instance " << i << ": solver " << r.energy << " oracle " << o.energy;
  }
}

TEST(OracleStructured, GuardsAgainstHugeEnumeration) {
  const Scenario sc = testutil::two_stage(64, 64);
  EXPECT_THROW(oracle_structured(sc, 0.1, 4), std::invalid_argument);
}

TEST(OracleGrouping, EqualDeadlinesForceOneGroup) {
  std::mt19937_64 rng(testutil::mix_seed(102, 0));
  const Scenario sc = testutil::random_scenario(rng, 4, 3, 0.4, true);
  const GroupingOracle o = oracle_grouping(sc);
  ASSERT_TRUE(o.feasible);
  ASSERT_EQ(o.groups.size(), 1u);
  EXPECT_DOUBLE_EQ(o.energy, ip_ssa(sc, sc.deadline[0]).energy);
}

// The grouping DP must be exact against brute force over every cut pattern
// of the deadline-sorted user order, on general batch latency tables.
TEST(OracleGrouping, ContiguousBruteForceMatchesDp) {
  std::mt19937_64 rng(testutil::mix_seed(103, 0));
  std::uniform_int_distribution<std::size_t> users_d(2, 6);
  for (int i = 0; i < 20; ++i) {
    const std::size_t M = users_d(rng);
    const Scenario sc = testutil::random_scenario(rng, M, 2 + i % 3, 0.5, false);
    const GroupingPlan plan = og(sc);
    const GroupingOracle o = oracle_grouping_contiguous(sc);
    if (!o.feasible) {
      // No cut pattern admits everyone; the DP must have bailed out too.
      EXPECT_TRUE(plan.fallback) << "instance " << i;
      continue;
    }
    EXPECT_FALSE(plan.fallback) << "instance " << i;
    EXPECT_DOUBLE_EQ(plan.energy, o.energy) << "instance " << i;
    EXPECT_EQ(plan.groups.size(), o.groups.size()) << "instance " << i;
  }
}

// With batch latency constant in b, restricting the search to consecutive
// runs of the sorted order loses nothing: the full set-partition optimum is
// achieved by a contiguous grouping.
TEST(OracleGrouping, ContiguousIsOptimalForConstantLatency) {
  std::mt19937_64 rng(testutil::mix_seed(104, 0));
  std::uniform_int_distribution<std::size_t> users_d(2, 6);
  for (int i = 0; i < 12; ++i) {
    const std::size_t M = users_d(rng);
    const Scenario sc = testutil::random_scenario(rng, M, 2 + i % 3, 0.0, false);
    const GroupingOracle full = oracle_grouping(sc);
    const GroupingPlan plan = og(sc);
    if (!full.feasible) {
      EXPECT_TRUE(plan.fallback) << "instance " << i;
      continue;
    }
    EXPECT_FALSE(plan.fallback) << "instance " << i;
    EXPECT_LT(rel_gap(plan.energy, full.energy), 1e-9)
        << "instance " << i << ": dp " << plan.energy << " oracle " << full.energy;
  }
}

TEST(OracleGrouping, GuardsAgainstHugeEnumeration) {
  const Scenario big = testutil::two_stage(10, 12);
  EXPECT_THROW(oracle_grouping(big), std::invalid_argument);
  const Scenario bigger = testutil::two_stage(17, 18);
  EXPECT_THROW(oracle_grouping_contiguous(bigger), std::invalid_argument);
}

}  // namespace
