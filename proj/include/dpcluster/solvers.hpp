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

// Non-private weighted clustering solvers.
//
// Every solver picks exactly k centers from a facility set to minimize
// sum_j w_j * d(x_j, F)^p over weighted demand points. Weights are real and
// nonnegative. Three implementations:
//
//   brute-force   exact enumeration of all k-subsets (guarded)
//   local-search  single-swap local search for p = 1 (factor 5)
//   lloyd         weighted Lloyd iterations on Euclidean data for p = 2,
//                 centroids snapped to the nearest facility (heuristic)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpcluster/error.hpp"
#include "dpcluster/metric.hpp"
#include "dpcluster/random.hpp"

namespace dpcluster {

/// Maximum number of k-subsets the brute-force solver will enumerate.
inline constexpr double kBruteForceGuard = 1e6;

struct WeightedDemand {
  std::size_t point = 0;
  double weight = 0.0;
};

struct WeightedInstance {
  /// Distance oracle. Its own demand, k and power are not consulted.
  MetricInstance metric;
  std::vector<std::size_t> facilities;
  std::vector<WeightedDemand> demand;
  std::size_t k = 1;
  double power = 1.0;

  void validate() const {
    detail::require(k >= 1, "k must be positive");
    detail::require(k <= facilities.size(), "infeasible: k = " + std::to_string(k) + " exceeds " +
                                                std::to_string(facilities.size()) + " facilities");
    detail::require(std::isfinite(power) && power >= 1.0, "power must be >= 1");
    for (std::size_t f : facilities) metric.distance(f, f);
    for (const auto& d : demand) {
      metric.distance(d.point, d.point);
      detail::require(std::isfinite(d.weight) && d.weight >= 0.0, "demand weights must be nonnegative");
    }
  }

  double raise(double d) const {
    if (power == 1.0) return d;
    if (power == 2.0) return d * d;
    return std::pow(d, power);
  }
};

/// Unit-weight view of a metric instance over its own facilities.
inline WeightedInstance unit_weighted(const MetricInstance& inst) {
  WeightedInstance w{inst, inst.facilities(), {}, inst.k(), inst.power()};
  w.demand.reserve(inst.demand().size());
  for (std::size_t v : inst.demand()) w.demand.push_back({v, 1.0});
  return w;
}

/// Weighted powered cost of `centers`, with the assignment of each demand
/// entry (nearest center, lowest point index on ties).
inline ClusteringSolution weighted_cost(const WeightedInstance& inst,
                                        std::span<const std::size_t> centers) {
  detail::require(!centers.empty(), "center set is empty");
  ClusteringSolution sol;
  sol.centers.assign(centers.begin(), centers.end());
  sol.assignment.reserve(inst.demand.size());
  for (const auto& d : inst.demand) {
    const std::size_t c = centers[nearest_center(inst.metric, d.point, centers)];
    sol.assignment.push_back(c);
    sol.cost += d.weight * inst.raise(inst.metric.distance_unchecked(d.point, c));
  }
  return sol;
}

struct SolverDescriptor {
  std::string name;
  /// "exact", "factor 5 (single-swap local search)" or "heuristic (no guarantee)".
  std::string guarantee;
  /// Multiplicative factor M, 1 for exact, NaN when there is none.
  double approx_factor = std::numeric_limits<double>::quiet_NaN();
  /// Objective powers the guarantee (or the implementation) supports; empty
  /// means any p >= 1.
  std::vector<double> powers;
};

class BlackBoxSolver {
 public:
  virtual ~BlackBoxSolver() = default;
  virtual SolverDescriptor descriptor() const = 0;
  /// Exactly k facility indices (sorted) and their weighted powered cost.
  virtual ClusteringSolution solve(const WeightedInstance& inst, RandomSource& rng) const = 0;
};

namespace detail {

// cost_table[f * demand + j] = w_j * d(x_j, facility f)^p
inline std::vector<double> cost_table(const WeightedInstance& inst,
                                      std::span<const std::size_t> facilities) {
  const std::size_t nd = inst.demand.size();
  std::vector<double> table(facilities.size() * nd);
  for (std::size_t f = 0; f < facilities.size(); ++f) {
    for (std::size_t j = 0; j < nd; ++j) {
      const auto& d = inst.demand[j];
      table[f * nd + j] =
          d.weight == 0.0 ? 0.0 : d.weight * inst.raise(inst.metric.distance_unchecked(d.point, facilities[f]));
    }
  }
  return table;
}

inline double binomial(std::size_t n, std::size_t k) {
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

inline bool strictly_better(double candidate, double incumbent) {
  return candidate < incumbent - 1e-12 * std::max(1.0, std::abs(incumbent));
}

}  // namespace detail

/// Exhaustive search over all k-subsets of the facilities. Among optimal
/// subsets the lexicographically smallest (in sorted point indices) wins.
inline ClusteringSolution brute_force_solver(const WeightedInstance& inst) {
  inst.validate();
  std::vector<std::size_t> fac = inst.facilities;
  std::sort(fac.begin(), fac.end());
  fac.erase(std::unique(fac.begin(), fac.end()), fac.end());
  detail::require(inst.k <= fac.size(), "infeasible: k exceeds the number of distinct facilities");
  const double combos = detail::binomial(fac.size(), inst.k);
  if (combos > kBruteForceGuard) {
    throw RefusalError("brute force refused: C(" + std::to_string(fac.size()) + ", " +
                       std::to_string(inst.k) + ") exceeds the enumeration guard");
  }

  const std::size_t nd = inst.demand.size();
  const std::size_t k = inst.k;
  const std::vector<double> table = detail::cost_table(inst, fac);

  // mins[level] holds per-demand minimum cost using the first `level` picks.
  std::vector<std::vector<double>> mins(k + 1, std::vector<double>(nd, std::numeric_limits<double>::infinity()));
  std::vector<std::size_t> pick(k);
  std::vector<std::size_t> best_pick;
  double best = std::numeric_limits<double>::infinity();

  auto recurse = [&](auto&& self, std::size_t level, std::size_t start) -> void {
    if (level == k) {
      double cost = 0.0;
      for (double c : mins[k]) cost += c;
      if (best_pick.empty() || detail::strictly_better(cost, best)) {
        best = cost;
        best_pick = pick;
      }
      return;
    }
    for (std::size_t f = start; f + (k - level) <= fac.size(); ++f) {
      pick[level] = f;
      const double* row = table.data() + f * nd;
      for (std::size_t j = 0; j < nd; ++j) mins[level + 1][j] = std::min(mins[level][j], row[j]);
      self(self, level + 1, f + 1);
    }
  };
  recurse(recurse, 0, 0);

  std::vector<std::size_t> centers;
  for (std::size_t f : best_pick) centers.push_back(fac[f]);
  return weighted_cost(inst, centers);
}

struct LocalSearchOptions {
  std::size_t max_iters = 1000;
  /// Starting centers; greedy addition when empty.
  std::vector<std::size_t> initial;
};

/// Single-swap local search. Each iteration applies the best swap of one
/// open facility for one closed facility, provided it lowers the cost by more
/// than a relative 1e-9. Stops at a local optimum or after max_iters swaps.
inline ClusteringSolution local_search_solver(const WeightedInstance& inst,
                                              const LocalSearchOptions& options = {}) {
  inst.validate();
  detail::require(options.max_iters >= 1, "max_iters must be at least 1");
  std::vector<std::size_t> fac = inst.facilities;
  std::sort(fac.begin(), fac.end());
  fac.erase(std::unique(fac.begin(), fac.end()), fac.end());
  detail::require(inst.k <= fac.size(), "infeasible: k exceeds the number of distinct facilities");
  const std::size_t nd = inst.demand.size();
  const std::size_t nf = fac.size();
  const std::vector<double> table = detail::cost_table(inst, fac);

  std::vector<char> open(nf, 0);
  std::vector<std::size_t> current;  // positions into fac
  if (!options.initial.empty()) {
    detail::require(options.initial.size() == inst.k, "initial solution must have exactly k centers");
    for (std::size_t c : options.initial) {
      auto it = std::lower_bound(fac.begin(), fac.end(), c);
      detail::require(it != fac.end() && *it == c, "initial center is not a facility");
      const auto pos = static_cast<std::size_t>(it - fac.begin());
      detail::require(!open[pos], "initial solution repeats a center");
      open[pos] = 1;
      current.push_back(pos);
    }
  } else {
    std::vector<double> mins(nd, std::numeric_limits<double>::infinity());
    for (std::size_t step = 0; step < inst.k; ++step) {
      std::size_t best_f = nf;
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t f = 0; f < nf; ++f) {
        if (open[f]) continue;
        double cost = 0.0;
        for (std::size_t j = 0; j < nd; ++j) cost += std::min(mins[j], table[f * nd + j]);
        if (best_f == nf || cost < best_cost) {
          best_f = f;
          best_cost = cost;
        }
      }
      open[best_f] = 1;
      current.push_back(best_f);
      for (std::size_t j = 0; j < nd; ++j) mins[j] = std::min(mins[j], table[best_f * nd + j]);
    }
  }

  auto cost_of = [&](const std::vector<std::size_t>& centers) {
    double cost = 0.0;
    for (std::size_t j = 0; j < nd; ++j) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t f : centers) m = std::min(m, table[f * nd + j]);
      cost += m;
    }
    return cost;
  };

  double cost = cost_of(current);
  std::vector<std::size_t> trial;
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    std::size_t best_slot = 0, best_in = nf;
    double best_cost = cost;
    for (std::size_t slot = 0; slot < current.size(); ++slot) {
      for (std::size_t f = 0; f < nf; ++f) {
        if (open[f]) continue;
        trial = current;
        trial[slot] = f;
        const double c = cost_of(trial);
        if (c < best_cost) {
          best_cost = c;
          best_slot = slot;
          best_in = f;
        }
      }
    }
    if (best_in == nf || !(best_cost < cost * (1.0 - 1e-9))) break;
    open[current[best_slot]] = 0;
    open[best_in] = 1;
    current[best_slot] = best_in;
    cost = best_cost;
  }

  std::vector<std::size_t> centers;
  for (std::size_t f : current) centers.push_back(fac[f]);
  std::sort(centers.begin(), centers.end());
  return weighted_cost(inst, centers);
}

struct LloydTrace {
  ClusteringSolution solution;
  /// Cost after initialization and after every iteration.
  std::vector<double> cost_trace;
};

namespace detail {

inline std::size_t nearest_facility(const MetricInstance& metric, std::span<const double> x,
                                    std::span<const std::size_t> facilities,
                                    const std::vector<char>* taken = nullptr) {
  std::size_t best = facilities.size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < facilities.size(); ++f) {
    if (taken && (*taken)[f]) continue;
    const auto y = metric.coords(facilities[f]);
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) acc += (x[j] - y[j]) * (x[j] - y[j]);
    if (acc < best_d) {
      best_d = acc;
      best = f;
    }
  }
  return best;
}

inline void require_lloyd(const WeightedInstance& inst) {
  inst.validate();
  detail::require(inst.metric.is_euclidean(), "Lloyd solver needs Euclidean coordinates");
  detail::require(inst.power == 2.0, "Lloyd solver supports p = 2 only");
}

}  // namespace detail

/// Lloyd iterations from `initial` (k distinct facility point indices).
/// Each step reassigns demand, then moves every center to the facility
/// nearest to its cluster's weighted centroid when that lowers the cluster's
/// cost and the facility is free. Clusters with no weight are re-seeded at
/// the free facility nearest to the demand point with the largest weighted
/// cost. The cost sequence is non-increasing.
inline LloydTrace lloyd_weighted_run(const WeightedInstance& inst, std::vector<std::size_t> initial,
                                     std::size_t max_iters) {
  detail::require_lloyd(inst);
  std::vector<std::size_t> fac = inst.facilities;
  std::sort(fac.begin(), fac.end());
  fac.erase(std::unique(fac.begin(), fac.end()), fac.end());
  detail::require(initial.size() == inst.k, "initial solution must have exactly k centers");

  const std::size_t dim = inst.metric.dim();
  std::vector<char> taken(fac.size(), 0);
  std::vector<std::size_t> slot_of(inst.k);  // positions into fac
  for (std::size_t s = 0; s < inst.k; ++s) {
    auto it = std::lower_bound(fac.begin(), fac.end(), initial[s]);
    detail::require(it != fac.end() && *it == initial[s], "initial center is not a facility");
    slot_of[s] = static_cast<std::size_t>(it - fac.begin());
    detail::require(!taken[slot_of[s]], "initial solution repeats a center");
    taken[slot_of[s]] = 1;
  }

  auto centers = [&] {
    std::vector<std::size_t> c;
    for (std::size_t p : slot_of) c.push_back(fac[p]);
    return c;
  };

  LloydTrace out;
  ClusteringSolution sol = weighted_cost(inst, centers());
  out.cost_trace.push_back(sol.cost);

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    const std::vector<std::size_t> current = centers();
    std::vector<std::size_t> members_of(inst.demand.size());
    std::vector<double> weight(inst.k, 0.0);
    std::vector<double> centroid(inst.k * dim, 0.0);
    for (std::size_t j = 0; j < inst.demand.size(); ++j) {
      const auto& d = inst.demand[j];
      const std::size_t s = nearest_center(inst.metric, d.point, current);
      members_of[j] = s;
      weight[s] += d.weight;
      const auto x = inst.metric.coords(d.point);
      for (std::size_t a = 0; a < dim; ++a) centroid[s * dim + a] += d.weight * x[a];
    }

    bool moved = false;
    for (std::size_t s = 0; s < inst.k; ++s) {
      if (weight[s] > 0.0) {
        for (std::size_t a = 0; a < dim; ++a) centroid[s * dim + a] /= weight[s];
        const std::size_t f = detail::nearest_facility(
            inst.metric, std::span<const double>(centroid.data() + s * dim, dim), fac);
        if (f == slot_of[s] || taken[f]) continue;
        double old_cost = 0.0, new_cost = 0.0;
        for (std::size_t j = 0; j < inst.demand.size(); ++j) {
          if (members_of[j] != s) continue;
          const auto& d = inst.demand[j];
          old_cost += d.weight * inst.raise(inst.metric.distance_unchecked(d.point, fac[slot_of[s]]));
          new_cost += d.weight * inst.raise(inst.metric.distance_unchecked(d.point, fac[f]));
        }
        if (new_cost < old_cost) {
          taken[slot_of[s]] = 0;
          taken[f] = 1;
          slot_of[s] = f;
          moved = true;
        }
      } else {
        // Empty cluster: re-seed near the worst-served demand point.
        std::size_t worst = inst.demand.size();
        double worst_cost = 0.0;
        for (std::size_t j = 0; j < inst.demand.size(); ++j) {
          const auto& d = inst.demand[j];
          const double c = d.weight * inst.raise(inst.metric.distance_unchecked(d.point, current[members_of[j]]));
          if (c > worst_cost) {
            worst_cost = c;
            worst = j;
          }
        }
        if (worst == inst.demand.size()) continue;
        const std::size_t f =
            detail::nearest_facility(inst.metric, inst.metric.coords(inst.demand[worst].point), fac, &taken);
        if (f == fac.size()) continue;
        taken[slot_of[s]] = 0;
        taken[f] = 1;
        slot_of[s] = f;
        moved = true;
      }
    }
    if (!moved) break;
    sol = weighted_cost(inst, centers());
    out.cost_trace.push_back(sol.cost);
  }

  std::vector<std::size_t> c = centers();
  std::sort(c.begin(), c.end());
  out.solution = weighted_cost(inst, c);
  return out;
}

/// Best of `restarts` seeded Lloyd runs, each started by weighted D^2
/// sampling over demand points snapped to free facilities.
inline ClusteringSolution lloyd_weighted_solver(const WeightedInstance& inst, std::size_t restarts,
                                                std::size_t max_iters, RandomSource& rng) {
  detail::require_lloyd(inst);
  detail::require(restarts >= 1, "restarts must be at least 1");
  std::vector<std::size_t> fac = inst.facilities;
  std::sort(fac.begin(), fac.end());
  fac.erase(std::unique(fac.begin(), fac.end()), fac.end());
  detail::require(inst.k <= fac.size(), "infeasible: k exceeds the number of distinct facilities");

  std::optional<ClusteringSolution> best;
  for (std::size_t r = 0; r < restarts; ++r) {
    RandomSource sub = rng.substream(r);
    std::vector<char> taken(fac.size(), 0);
    std::vector<std::size_t> init;
    std::vector<double> score(inst.demand.size());
    while (init.size() < inst.k) {
      double total = 0.0;
      for (std::size_t j = 0; j < inst.demand.size(); ++j) {
        const auto& d = inst.demand[j];
        double s = d.weight;
        if (!init.empty()) {
          double m = std::numeric_limits<double>::infinity();
          for (std::size_t c : init) m = std::min(m, inst.raise(inst.metric.distance_unchecked(d.point, c)));
          s *= m;
        }
        score[j] = s;
        total += s;
      }
      std::size_t f = fac.size();
      if (total > 0.0) {
        double u = sub.uniform_open() * total;
        std::size_t j = 0;
        while (j + 1 < score.size() && u >= score[j]) u -= score[j++];
        f = detail::nearest_facility(inst.metric, inst.metric.coords(inst.demand[j].point), fac, &taken);
      }
      if (f == fac.size()) {
        f = static_cast<std::size_t>(std::find(taken.begin(), taken.end(), 0) - taken.begin());
      }
      taken[f] = 1;
      init.push_back(fac[f]);
    }
    ClusteringSolution sol = lloyd_weighted_run(inst, init, max_iters).solution;
    if (!best || detail::strictly_better(sol.cost, best->cost)) best = std::move(sol);
  }
  return *best;
}

class BruteForceSolver final : public BlackBoxSolver {
 public:
  SolverDescriptor descriptor() const override { return {"brute-force", "exact", 1.0, {}}; }
  ClusteringSolution solve(const WeightedInstance& inst, RandomSource&) const override {
    return brute_force_solver(inst);
  }
};

class LocalSearchSolver final : public BlackBoxSolver {
 public:
  explicit LocalSearchSolver(std::size_t max_iters = 1000) : max_iters_(max_iters) {}
  SolverDescriptor descriptor() const override {
    return {"local-search", "factor 5 (single-swap local search)", 5.0, {1.0}};
  }
  ClusteringSolution solve(const WeightedInstance& inst, RandomSource&) const override {
    detail::require(inst.power == 1.0, "local search is a k-medians solver (p = 1)");
    return local_search_solver(inst, {max_iters_, {}});
  }

 private:
  std::size_t max_iters_;
};

class LloydSolver final : public BlackBoxSolver {
 public:
  LloydSolver(std::size_t restarts = 10, std::size_t max_iters = 100)
      : restarts_(restarts), max_iters_(max_iters) {}
  SolverDescriptor descriptor() const override {
    return {"lloyd", "heuristic (no guarantee)", std::numeric_limits<double>::quiet_NaN(), {2.0}};
  }
  ClusteringSolution solve(const WeightedInstance& inst, RandomSource& rng) const override {
    return lloyd_weighted_solver(inst, restarts_, max_iters_, rng);
  }

 private:
  std::size_t restarts_;
  std::size_t max_iters_;
};

struct SolverParams {
  std::size_t max_iters = 1000;
  std::size_t restarts = 10;
};

/// Solver by name: "brute-force", "local-search" or "lloyd".
inline std::unique_ptr<BlackBoxSolver> make_solver(const std::string& name, const SolverParams& params = {}) {
  if (name == "brute-force") return std::make_unique<BruteForceSolver>();
  if (name == "local-search") return std::make_unique<LocalSearchSolver>(params.max_iters);
  if (name == "lloyd") return std::make_unique<LloydSolver>(params.restarts, params.max_iters);
  throw InputError("unknown solver '" + name + "' (expected brute-force, local-search or lloyd)");
}

}  // namespace dpcluster
