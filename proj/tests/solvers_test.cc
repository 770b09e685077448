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

#include "dpcluster/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gtest/gtest.h"
#include "testing.hpp"

namespace dpcluster {
namespace {

// Random weighted instance over n Euclidean points; every point is a
// facility and carries weight in [0, 3).
WeightedInstance RandomWeighted(RandomSource& rng, std::size_t n, std::size_t k, double power) {
  auto metric = testing::random_euclidean(rng, n, 2, 1, power);
  WeightedInstance w{metric, metric.facilities(), {}, k, power};
  for (std::size_t v = 0; v < n; ++v) w.demand.push_back({v, 3.0 * rng.uniform_open()});
  return w;
}

// Every k-subset's cost, by direct recursion.
std::vector<std::pair<std::vector<std::size_t>, double>> AllSubsets(const WeightedInstance& w) {
  std::vector<std::pair<std::vector<std::size_t>, double>> out;
  std::vector<std::size_t> fac = w.facilities;
  std::sort(fac.begin(), fac.end());
  std::vector<std::size_t> pick;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (pick.size() == w.k) {
      double cost = 0.0;
      for (const auto& d : w.demand) {
        double m = INFINITY;
        for (std::size_t c : pick) m = std::min(m, std::pow(w.metric.distance(d.point, c), w.power));
        cost += d.weight * m;
      }
      out.emplace_back(pick, cost);
      return;
    }
    for (std::size_t i = start; i < fac.size(); ++i) {
      pick.push_back(fac[i]);
      rec(i + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return out;
}

std::vector<std::size_t> Sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

WeightedInstance LineInstance(std::vector<double> xs, std::vector<WeightedDemand> demand,
                              std::vector<std::size_t> facilities, std::size_t k, double power = 1.0) {
  auto metric = MetricInstance::euclidean(std::move(xs), 1, {}, 1, power);
  return {metric, std::move(facilities), std::move(demand), k, power};
}

TEST(WeightedInstanceTest, Validation) {
  auto ok = LineInstance({0, 5, 10}, {{0, 1.0}}, {0, 1, 2}, 1);
  EXPECT_NO_THROW(ok.validate());
  auto infeasible = ok;
  infeasible.k = 4;
  EXPECT_THROW(infeasible.validate(), InputError);
  EXPECT_THROW(brute_force_solver(infeasible), InputError);
  EXPECT_THROW(local_search_solver(infeasible), InputError);
  auto negative = ok;
  negative.demand[0].weight = -1.0;
  EXPECT_THROW(negative.validate(), InputError);
  auto nan = ok;
  nan.demand[0].weight = NAN;
  EXPECT_THROW(nan.validate(), InputError);
  auto bad_point = ok;
  bad_point.demand[0].point = 3;
  EXPECT_THROW(bad_point.validate(), InputError);
}

TEST(BruteForceTest, ThreeCases) {
  // Every single center costs 10 here, so the tie rule picks point 0.
  const auto w = LineInstance({0, 5, 10}, {{0, 1.0}, {2, 1.0}}, {0, 1, 2}, 1);
  const auto sol = brute_force_solver(w);
  EXPECT_DOUBLE_EQ(sol.cost, 10.0);
  EXPECT_EQ(sol.centers, (std::vector<std::size_t>{0}));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(weighted_cost(w, std::vector<std::size_t>{c}).cost, 10.0);
  // With the end points restricted away the midpoint is the only choice.
  auto mid = LineInstance({0, 5, 10}, {{0, 1.0}, {2, 1.0}}, {1}, 1);
  EXPECT_EQ(brute_force_solver(mid).centers, (std::vector<std::size_t>{1}));
  auto squared = LineInstance({0, 5, 10}, {{0, 1.0}, {2, 1.0}}, {0, 1, 2}, 1, 2.0);
  EXPECT_EQ(brute_force_solver(squared).centers, (std::vector<std::size_t>{1}));
  EXPECT_DOUBLE_EQ(brute_force_solver(squared).cost, 50.0);
}

TEST(BruteForceTest, ZeroWeightsPickFirstFacilities) {
  const auto w = LineInstance({0, 5, 10, 20}, {{0, 0.0}, {3, 0.0}}, {3, 2, 1}, 2);
  const auto sol = brute_force_solver(w);
  EXPECT_EQ(sol.cost, 0.0);
  EXPECT_EQ(sol.centers, (std::vector<std::size_t>{1, 2}));
}

TEST(BruteForceTest, BeatsEveryOtherSubset) {
  RandomSource rng(1);
  for (int t = 0; t < 30; ++t) {
    const auto w = RandomWeighted(rng, 12, 3, t % 2 ? 2.0 : 1.0);
    const auto sol = brute_force_solver(w);
    const auto all = AllSubsets(w);
    double best = INFINITY;
    for (const auto& [s, c] : all) {
      EXPECT_LE(sol.cost, c * (1 + 1e-12));
      best = std::min(best, c);
    }
    // Lexicographically first optimum.
    for (const auto& [s, c] : all) {
      if (c <= best * (1 + 1e-12)) {
        EXPECT_EQ(Sorted(sol.centers), s);
        break;
      }
    }
  }
}

TEST(BruteForceTest, GuardRefuses) {
  RandomSource rng(2);
  auto metric = testing::random_euclidean(rng, 60, 2, 1);
  WeightedInstance w{metric, metric.facilities(), {{0, 1.0}}, 5, 1.0};  // C(60,5) = 5.4e6
  EXPECT_THROW(brute_force_solver(w), RefusalError);
  w.k = 3;  // 34220
  EXPECT_NO_THROW(brute_force_solver(w));
}

TEST(LocalSearchTest, WithinFiveOfOptimum) {
  RandomSource rng(3);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 4 + rng.uniform_index(9);
    const std::size_t k = 1 + rng.uniform_index(3);
    const auto w = RandomWeighted(rng, n, k, 1.0);
    const double opt = brute_force_solver(w).cost;
    const double ls = local_search_solver(w).cost;
    EXPECT_GE(ls, opt * (1 - 1e-12));
    EXPECT_LE(ls, 5.0 * opt + 1e-12);
  }
}

TEST(LocalSearchTest, OptimalStartUnchanged) {
  RandomSource rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto w = RandomWeighted(rng, 10, 2, 1.0);
    const auto opt = brute_force_solver(w);
    const auto ls = local_search_solver(w, {1000, opt.centers});
    EXPECT_EQ(Sorted(ls.centers), Sorted(opt.centers));
    EXPECT_DOUBLE_EQ(ls.cost, opt.cost);
  }
}

TEST(LocalSearchTest, AllFacilitiesOpen) {
  const auto w = LineInstance({0, 1, 2}, {{0, 1.0}, {1, 2.0}, {2, 1.0}}, {0, 1, 2}, 3);
  const auto sol = local_search_solver(w);
  EXPECT_EQ(Sorted(sol.centers), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(sol.cost, 0.0);
}

TEST(LocalSearchTest, NoImprovingSwapRemains) {
  RandomSource rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto w = RandomWeighted(rng, 15, 3, 1.0);
    const auto sol = local_search_solver(w);
    for (std::size_t slot = 0; slot < sol.centers.size(); ++slot) {
      for (std::size_t f : w.facilities) {
        if (std::find(sol.centers.begin(), sol.centers.end(), f) != sol.centers.end()) continue;
        auto swapped = sol.centers;
        swapped[slot] = f;
        EXPECT_GE(weighted_cost(w, swapped).cost, sol.cost * (1 - 1e-9) - 1e-12);
      }
    }
  }
}

TEST(LocalSearchTest, Errors) {
  const auto w = LineInstance({0, 1, 2}, {{0, 1.0}}, {0, 1, 2}, 1);
  EXPECT_THROW(local_search_solver(w, {0, {}}), InputError);
  EXPECT_THROW(local_search_solver(w, {10, {0, 1}}), InputError);
  LocalSearchSolver ls;
  RandomSource rng(0);
  auto squared = w;
  squared.power = 2.0;
  EXPECT_THROW(ls.solve(squared, rng), InputError);
}

TEST(LloydTest, SeparatedBlobsSplit) {
  RandomSource rng(6);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> coords;
    for (int i = 0; i < 12; ++i) {
      const double cx = i < 6 ? 0.0 : 20.0;
      coords.push_back(cx + rng.uniform_open());
      coords.push_back(rng.uniform_open());
    }
    auto metric = MetricInstance::euclidean(coords, 2, {}, 1, 2.0);
    WeightedInstance w{metric, metric.facilities(), {}, 2, 2.0};
    for (std::size_t v = 0; v < 12; ++v) w.demand.push_back({v, 0.5 + rng.uniform_open()});
    RandomSource solver_rng(100 + t);
    const auto sol = lloyd_weighted_solver(w, 10, 100, solver_rng);
    ASSERT_EQ(sol.centers.size(), 2u);
    EXPECT_NE(sol.centers[0] < 6, sol.centers[1] < 6);
    EXPECT_LE(sol.cost, 1.2 * brute_force_solver(w).cost);
  }
}

TEST(LloydTest, SingleDemandPoint) {
  auto w = LineInstance({0, 3, 7}, {{1, 2.0}}, {0, 1, 2}, 1, 2.0);
  RandomSource rng(7);
  const auto sol = lloyd_weighted_solver(w, 3, 50, rng);
  EXPECT_EQ(sol.centers, (std::vector<std::size_t>{1}));
  EXPECT_EQ(sol.cost, 0.0);
}

TEST(LloydTest, CostTraceNonIncreasing) {
  RandomSource rng(8);
  for (int t = 0; t < 50; ++t) {
    const auto w = RandomWeighted(rng, 20 + rng.uniform_index(20), 1 + rng.uniform_index(4), 2.0);
    std::vector<std::size_t> init;
    while (init.size() < w.k) {
      const std::size_t f = rng.uniform_index(w.facilities.size());
      if (std::find(init.begin(), init.end(), f) == init.end()) init.push_back(f);
    }
    const auto trace = lloyd_weighted_run(w, init, 100);
    ASSERT_FALSE(trace.cost_trace.empty());
    for (std::size_t i = 1; i < trace.cost_trace.size(); ++i) {
      EXPECT_LE(trace.cost_trace[i], trace.cost_trace[i - 1] * (1 + 1e-12));
    }
    EXPECT_NEAR(trace.solution.cost, trace.cost_trace.back(), 1e-9 * (1 + trace.solution.cost));
  }
}

TEST(LloydTest, OptimumIsAFixedPoint) {
  RandomSource rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto w = RandomWeighted(rng, 10, 2, 2.0);
    const auto opt = brute_force_solver(w);
    const auto trace = lloyd_weighted_run(w, opt.centers, 100);
    EXPECT_LE(trace.solution.cost, opt.cost * (1 + 1e-12));
  }
}

TEST(LloydTest, EmptyClusterIsReseeded) {
  // Both initial centers sit at the far end; one of them serves nobody.
  auto w = LineInstance({0, 1, 100, 101}, {{0, 1.0}, {1, 1.0}}, {0, 1, 2, 3}, 2, 2.0);
  const auto trace = lloyd_weighted_run(w, {2, 3}, 20);
  EXPECT_EQ(Sorted(trace.solution.centers), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(trace.solution.cost, 0.0);
}

TEST(LloydTest, Errors) {
  RandomSource rng(0);
  auto w = LineInstance({0, 1, 2}, {{0, 1.0}}, {0, 1, 2}, 1, 1.0);
  EXPECT_THROW(lloyd_weighted_solver(w, 1, 10, rng), InputError);
  auto m = MetricInstance::from_matrix(2, {0, 1, 1, 0}, {}, 1, 2.0);
  WeightedInstance mw{m, {0, 1}, {{0, 1.0}}, 1, 2.0};
  EXPECT_THROW(lloyd_weighted_solver(mw, 1, 10, rng), InputError);
  auto sq = LineInstance({0, 1, 2}, {{0, 1.0}}, {0, 1, 2}, 2, 2.0);
  EXPECT_THROW(lloyd_weighted_run(sq, {0}, 10), InputError);
}

TEST(SolverTest, ReportedCostMatchesReevaluation) {
  RandomSource rng(10);
  for (int t = 0; t < 20; ++t) {
    for (double p : {1.0, 2.0}) {
      const auto w = RandomWeighted(rng, 11, 2, p);
      std::vector<std::unique_ptr<BlackBoxSolver>> solvers;
      solvers.push_back(make_solver("brute-force"));
      if (p == 1.0) solvers.push_back(make_solver("local-search"));
      if (p == 2.0) solvers.push_back(make_solver("lloyd", {50, 4}));
      for (const auto& s : solvers) {
        RandomSource srng(t);
        const auto sol = s->solve(w, srng);
        EXPECT_EQ(sol.centers.size(), w.k);
        EXPECT_NEAR(sol.cost, weighted_cost(w, sol.centers).cost, 1e-9 * (1 + sol.cost)) << s->descriptor().name;
        for (std::size_t c : sol.centers) {
          EXPECT_NE(std::find(w.facilities.begin(), w.facilities.end(), c), w.facilities.end());
        }
      }
    }
  }
}

TEST(SolverTest, ScalingWeightsKeepsCenters) {
  RandomSource rng(11);
  for (int t = 0; t < 20; ++t) {
    for (double p : {1.0, 2.0}) {
      const auto w = RandomWeighted(rng, 10, 2, p);
      for (double scale : {0.5, 4.0, 3.7}) {
        auto scaled = w;
        for (auto& d : scaled.demand) d.weight *= scale;
        EXPECT_EQ(Sorted(brute_force_solver(scaled).centers), Sorted(brute_force_solver(w).centers));
        if (scale == 3.7) continue;
        if (p == 1.0) {
          EXPECT_EQ(Sorted(local_search_solver(scaled).centers), Sorted(local_search_solver(w).centers));
        } else {
          RandomSource a(t), b(t);
          EXPECT_EQ(Sorted(lloyd_weighted_solver(scaled, 4, 50, a).centers),
                    Sorted(lloyd_weighted_solver(w, 4, 50, b).centers));
        }
      }
    }
  }
}

TEST(SolverTest, Descriptors) {
  EXPECT_EQ(make_solver("brute-force")->descriptor().guarantee, "exact");
  EXPECT_EQ(make_solver("local-search")->descriptor().approx_factor, 5.0);
  EXPECT_TRUE(std::isnan(make_solver("lloyd")->descriptor().approx_factor));
  EXPECT_EQ(make_solver("lloyd")->descriptor().powers, (std::vector<double>{2.0}));
  EXPECT_THROW(make_solver("kmeans++"), InputError);
}

}  // namespace
}  // namespace dpcluster
