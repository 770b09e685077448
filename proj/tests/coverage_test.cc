// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpcluster/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "gtest/gtest.h"
#include "testing.hpp"

namespace dpcluster {
namespace {

using Sets = std::vector<std::vector<std::size_t>>;

std::vector<std::size_t> Iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// {1,2}, {3}, {4}, {1,2,3} with elements renumbered from 0.
CoverageInstance SmallInstance() { return CoverageInstance(4, {{0, 1}, {2}, {3}, {0, 1, 2}}); }

// z random sets that partition a random target, plus `noise` random sets.
struct CoverSystem {
  CoverageInstance inst;
  std::vector<std::size_t> target;
  std::size_t z;
};

CoverSystem RandomCoverSystem(RandomSource& rng, std::size_t universe, std::size_t z, std::size_t noise) {
  Sets family(z);
  std::vector<std::size_t> target;
  for (std::size_t e = 0; e < universe; ++e) {
    if (rng.uniform_open() < 0.8) {
      target.push_back(e);
      family[rng.uniform_index(z)].push_back(e);
    }
  }
  for (std::size_t s = 0; s < noise; ++s) {
    std::vector<std::size_t> set;
    const double density = 0.3 * rng.uniform_open();
    for (std::size_t e = 0; e < universe; ++e)
      if (rng.uniform_open() < density) set.push_back(e);
    family.push_back(set);
  }
  std::shuffle(family.begin(), family.end(), rng);
  return {CoverageInstance(universe, family), target, z};
}

// Independent recomputation of the selection's bookkeeping.
void ExpectConsistent(const CoverageInstance& inst, const std::vector<std::size_t>& target,
                      const CoverageSelection& sel) {
  std::set<std::size_t> residual(target.begin(), target.end());
  const std::set<std::size_t> initial = residual;
  std::set<std::size_t> covered;
  std::set<std::size_t> distinct(sel.chosen.begin(), sel.chosen.end());
  EXPECT_EQ(distinct.size(), sel.chosen.size());
  ASSERT_EQ(sel.marginal_trace.size(), sel.chosen.size());
  for (std::size_t i = 0; i < sel.chosen.size(); ++i) {
    std::size_t fresh = 0;
    for (std::size_t e : inst.family()[sel.chosen[i]]) {
      if (residual.erase(e)) {
        ++fresh;
        covered.insert(e);
      }
    }
    EXPECT_EQ(sel.marginal_trace[i], fresh);
  }
  EXPECT_EQ(sel.covered, std::vector<std::size_t>(covered.begin(), covered.end()));
  EXPECT_EQ(std::accumulate(sel.marginal_trace.begin(), sel.marginal_trace.end(), std::size_t{0}),
            sel.covered.size());
  for (std::size_t e : sel.covered) EXPECT_TRUE(initial.count(e));
}

TEST(CoverageInstanceTest, RejectsElementsOutsideUniverse) {
  EXPECT_THROW(CoverageInstance(3, {{0, 3}}), InputError);
  EXPECT_NO_THROW(CoverageInstance(3, {{}, {2, 2, 1}}));
  EXPECT_EQ(CoverageInstance(3, {{2, 2, 1}}).family()[0], (std::vector<std::size_t>{1, 2}));
}

TEST(CoverageEpsilonTest, Formula) {
  EXPECT_DOUBLE_EQ(coverage_epsilon_prime(2.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(coverage_epsilon_prime(1.0, std::exp(-1.0)), 0.25);
  EXPECT_NEAR(coverage_epsilon_prime(0.5, 1e-6), 0.5 / (2.0 * std::log(std::exp(1.0) / 1e-6)), 1e-15);
  EXPECT_THROW(coverage_epsilon_prime(1.0, 0.0), InputError);
  EXPECT_THROW(coverage_epsilon_prime(1.0, 1.5), InputError);
  EXPECT_THROW(coverage_epsilon_prime(0.0, 0.5), InputError);
}

TEST(PrivateCoverageTest, HugeEpsilonBehavesGreedily) {
  RandomSource rng(1);
  const auto sel = private_max_coverage(SmallInstance(), Iota(4), 1e6, 0.5, 2, rng);
  EXPECT_EQ(sel.chosen, (std::vector<std::size_t>{3, 2}));
  EXPECT_EQ(sel.covered, Iota(4));
  EXPECT_EQ(sel.marginal_trace, (std::vector<std::size_t>{3, 1}));
}

TEST(PrivateCoverageTest, Errors) {
  RandomSource rng(0);
  EXPECT_THROW(private_max_coverage(SmallInstance(), Iota(4), 1.0, 0.5, 5, rng), InputError);
  EXPECT_THROW(private_max_coverage(SmallInstance(), Iota(4), 1.0, 0.0, 1, rng), InputError);
  EXPECT_THROW(private_max_coverage(SmallInstance(), Iota(4), 1.0, 2.0, 1, rng), InputError);
  EXPECT_THROW(private_max_coverage(SmallInstance(), std::vector<std::size_t>{7}, 1.0, 0.5, 1, rng), InputError);
  EXPECT_THROW(greedy_max_coverage(SmallInstance(), Iota(4), 5), InputError);
}

TEST(PrivateCoverageTest, ZeroEpsilonIsUniformEachStep) {
  RandomSource rng(2);
  const int runs = 200000;
  std::vector<std::size_t> first(4, 0), second_after_3(4, 0);
  for (int i = 0; i < runs; ++i) {
    const auto sel = private_max_coverage_with_eps_prime(SmallInstance(), Iota(4), 0.0, 2, rng);
    ++first[sel.chosen[0]];
    if (sel.chosen[0] == 3) ++second_after_3[sel.chosen[1]];
  }
  EXPECT_GT(testing::chi_square_pvalue(first, std::vector<double>(4, 0.25)), 1e-3);
  EXPECT_EQ(second_after_3[3], 0u);
  EXPECT_GT(testing::chi_square_pvalue(second_after_3, std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0}), 1e-3);
}

TEST(PrivateCoverageTest, FirstPickFrequenciesFollowMarginals) {
  // Marginals 2, 1, 0 at step one; eps' = 1 from eps_s = 2, delta_s = 1.
  const CoverageInstance inst(3, {{0, 1}, {2}, {}});
  const double e = std::exp(1.0), z = e * e + e + 1.0;
  const std::vector<double> oracle = {e * e / z, e / z, 1.0 / z};
  RandomSource rng(3);
  const int runs = 1000000;
  std::vector<std::size_t> counts(3, 0);
  for (int i = 0; i < runs; ++i) ++counts[private_max_coverage(inst, Iota(3), 2.0, 1.0, 1, rng).chosen[0]];
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(static_cast<double>(counts[i]) / runs, oracle[i], 0.01);
  EXPECT_GT(testing::chi_square_pvalue(counts, oracle), 1e-3);
}

TEST(PrivateCoverageTest, SecondPickFollowsResidualMarginals) {
  // After {0,1,2} is taken the residual is {3,4}; marginals become 0, 1, 2, 0.
  const CoverageInstance inst(5, {{0, 1}, {2, 3}, {3, 4}, {0, 1, 2}, {0}});
  const double eps = 0.8;
  RandomSource rng(4);
  std::vector<std::size_t> counts(5, 0);
  for (int i = 0; i < 400000; ++i) {
    const auto sel = private_max_coverage_with_eps_prime(inst, Iota(5), eps, 2, rng);
    if (sel.chosen[0] == 3) ++counts[sel.chosen[1]];
  }
  std::vector<double> w = {1.0, std::exp(eps), std::exp(2 * eps), 0.0, 1.0};
  const double total = w[0] + w[1] + w[2] + w[4];
  for (double& x : w) x /= total;
  EXPECT_GT(testing::chi_square_pvalue(counts, w), 1e-3);
}

TEST(PrivateCoverageTest, ZeroMarginalSetsStaySelectable) {
  const CoverageInstance inst(2, {{0, 1}, {}});
  RandomSource rng(5);
  int empty_picks = 0;
  for (int i = 0; i < 20000; ++i)
    empty_picks += private_max_coverage_with_eps_prime(inst, Iota(2), 0.5, 1, rng).chosen[0] == 1;
  // exp(0) / (exp(1) + exp(0)) = 0.269
  EXPECT_NEAR(empty_picks / 20000.0, 1.0 / (1.0 + std::exp(1.0)), 0.015);
}

TEST(PrivateCoverageTest, DuplicateSetsAreDistinctCandidates) {
  const CoverageInstance inst(2, {{0, 1}, {0, 1}});
  RandomSource rng(6);
  const auto sel = private_max_coverage(inst, Iota(2), 1e6, 0.5, 2, rng);
  EXPECT_EQ(std::set<std::size_t>(sel.chosen.begin(), sel.chosen.end()), (std::set<std::size_t>{0, 1}));
  EXPECT_EQ(sel.marginal_trace, (std::vector<std::size_t>{2, 0}));
}

TEST(PrivateCoverageTest, BookkeepingOnRandomSystems) {
  RandomSource rng(7);
  for (int t = 0; t < 100; ++t) {
    auto sys = RandomCoverSystem(rng, 20 + rng.uniform_index(100), 1 + rng.uniform_index(6), rng.uniform_index(10));
    const std::size_t m = rng.uniform_index(sys.inst.family().size() + 1);
    const double eps = rng.uniform_open() * 3.0;
    ExpectConsistent(sys.inst, sys.target, private_max_coverage_with_eps_prime(sys.inst, sys.target, eps, m, rng));
    ExpectConsistent(sys.inst, sys.target, greedy_max_coverage(sys.inst, sys.target, m));
  }
}

TEST(PrivateCoverageTest, MatchesGreedyWhenMaximaAreUnique) {
  RandomSource rng(8);
  int compared = 0;
  for (int t = 0; t < 300; ++t) {
    auto sys = RandomCoverSystem(rng, 30 + rng.uniform_index(60), 2 + rng.uniform_index(4), 3 + rng.uniform_index(6));
    const std::size_t m = std::min<std::size_t>(sys.inst.family().size(), 4);
    const auto greedy = greedy_max_coverage(sys.inst, sys.target, m);
    // Check that every greedy step had a unique best marginal.
    bool unique = true;
    std::set<std::size_t> residual(sys.target.begin(), sys.target.end());
    std::set<std::size_t> used;
    for (std::size_t step = 0; step < m && unique; ++step) {
      std::vector<std::size_t> marg;
      for (std::size_t s = 0; s < sys.inst.family().size(); ++s) {
        if (used.count(s)) continue;
        std::size_t c = 0;
        for (std::size_t e : sys.inst.family()[s]) c += residual.count(e);
        marg.push_back(c);
      }
      std::sort(marg.rbegin(), marg.rend());
      unique = marg.size() < 2 || marg[0] > marg[1];
      used.insert(greedy.chosen[step]);
      for (std::size_t e : sys.inst.family()[greedy.chosen[step]]) residual.erase(e);
    }
    if (!unique) continue;
    ++compared;
    EXPECT_EQ(private_max_coverage_with_eps_prime(sys.inst, sys.target, 1e6, m, rng).chosen, greedy.chosen);
  }
  EXPECT_GT(compared, 20);
}

TEST(GreedyCoverageTest, SmallInstanceIsOptimal) {
  const auto inst = SmallInstance();
  const auto sel = greedy_max_coverage(inst, Iota(4), 2);
  EXPECT_EQ(sel.chosen, (std::vector<std::size_t>{3, 2}));
  EXPECT_EQ(sel.covered.size(), 4u);
  // Every 2-subset covers at most 4.
  std::size_t best = 0;
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) {
      std::set<std::size_t> u(inst.family()[a].begin(), inst.family()[a].end());
      u.insert(inst.family()[b].begin(), inst.family()[b].end());
      best = std::max(best, u.size());
    }
  EXPECT_EQ(best, sel.covered.size());
}

TEST(GreedyCoverageTest, TiesGoToLowestId) {
  const CoverageInstance inst(4, {{0}, {1, 2}, {2, 3}, {3}});
  EXPECT_EQ(greedy_max_coverage(inst, Iota(4), 1).chosen, (std::vector<std::size_t>{1}));
}

TEST(GreedyCoverageTest, ExhaustionCoversUnionWithinTarget) {
  const CoverageInstance inst(6, {{0, 1}, {4}, {1, 5}});
  const std::vector<std::size_t> target = {1, 2, 4};
  const auto sel = greedy_max_coverage(inst, target, 3);
  EXPECT_EQ(sel.covered, (std::vector<std::size_t>{1, 4}));
  EXPECT_EQ(coverage_deficit(sel, target), 1u);
}

TEST(GreedyCoverageTest, DisjointSingletons) {
  Sets family;
  for (std::size_t e = 0; e < 10; ++e) family.push_back({e});
  const CoverageInstance inst(10, family);
  for (std::size_t z = 0; z <= 10; ++z) EXPECT_EQ(greedy_max_coverage(inst, Iota(10), z).covered.size(), z);
}

TEST(CoverageDeficitTest, Examples) {
  const auto inst = SmallInstance();
  EXPECT_EQ(coverage_deficit(greedy_max_coverage(inst, Iota(4), 2), Iota(4)), 0u);
  EXPECT_EQ(coverage_deficit(greedy_max_coverage(inst, Iota(4), 0), Iota(4)), 4u);
  EXPECT_EQ(coverage_deficit(CoverageSelection{}, std::vector<std::size_t>{1, 1, 2}), 2u);
}

TEST(GreedyCoverageTest, LeavesAtMostEpsilonUncoveredAfterEnoughPicks) {
  RandomSource rng(9);
  for (double eps : {0.5, 0.1, 0.01}) {
    for (int t = 0; t < 30; ++t) {
      const std::size_t z = 1 + rng.uniform_index(10);
      const std::size_t m = static_cast<std::size_t>(std::ceil(2.0 * z * std::log(1.0 / eps)));
      auto sys = RandomCoverSystem(rng, 50 + rng.uniform_index(451), z, m);
      const auto sel = greedy_max_coverage(sys.inst, sys.target, m);
      EXPECT_LE(static_cast<double>(coverage_deficit(sel, sys.target)), eps * sys.target.size());
    }
  }
}

}  // namespace
}  // namespace dpcluster
