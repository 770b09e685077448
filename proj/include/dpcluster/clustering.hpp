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

// Differentially private k-medians / k-means by threshold sweep.
//
// dp_cluster runs over geometric radii t_1 < ... < t_r. At each radius it
// privately selects m = ceil(2k ln(1/eps)) candidate centers whose balls
// cover as much still-uncovered demand as possible, then drops the covered
// demand. All demand is then snapped to the nearest selected candidate, the
// per-candidate counts are released with Laplace noise, and a non-private
// black-box solver picks the final k centers on that noisy weighted
// instance.
//
// Budget: the coverage loop spends (eps_p / 2, delta_p) and the count vector
// (sensitivity 1) spends eps_p / 2 through Lap(2 / eps_p) noise.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dpcluster/coverage.hpp"
#include "dpcluster/error.hpp"
#include "dpcluster/mechanisms.hpp"
#include "dpcluster/metric.hpp"
#include "dpcluster/random.hpp"
#include "dpcluster/solvers.hpp"

namespace dpcluster {

/// Utility parameters must satisfy 0 < eps < kMaxUtilityEpsilon so that
/// 1 - eps - eps^2 stays positive.
inline constexpr double kMaxUtilityEpsilon = 0.6;

struct ThresholdSchedule {
  double epsilon = 0.0;
  double diameter = 0.0;
  /// t_1 .. t_r; t_1 = diameter / n, t_{i+1} = (1 + eps) t_i, t_r >= diameter.
  std::vector<double> radii;

  std::size_t r() const { return radii.size(); }
};

/// r = ceil(1 + log_{1+eps} n) radii starting at diameter / n. A zero
/// diameter gives the single radius 0.
inline ThresholdSchedule build_thresholds(double diameter, std::size_t n, double epsilon) {
  detail::require(n >= 1, "threshold schedule needs n >= 1");
  detail::require(std::isfinite(epsilon) && epsilon > 0.0, "utility epsilon must be positive");
  detail::require(std::isfinite(diameter) && diameter >= 0.0, "diameter must be nonnegative");
  ThresholdSchedule s{epsilon, diameter, {}};
  if (diameter == 0.0) {
    s.radii = {0.0};
    return s;
  }
  const double nd = static_cast<double>(n);
  const double growth = 1.0 + epsilon;
  // Smallest j with (1+eps)^j >= n; the log estimate is corrected by direct
  // comparison so exact powers do not gain a spurious extra radius.
  auto j = static_cast<std::size_t>(std::max(0.0, std::ceil(std::log(nd) / std::log(growth))));
  while (j > 0 && std::pow(growth, static_cast<double>(j - 1)) >= nd) --j;
  while (std::pow(growth, static_cast<double>(j)) < nd) ++j;
  const double t1 = diameter / nd;
  for (std::size_t i = 0; i <= j; ++i) s.radii.push_back(t1 * std::pow(growth, static_cast<double>(i)));
  s.radii.back() = std::max(s.radii.back(), diameter);
  return s;
}

/// Per-candidate demand counts: each demand entry goes to its nearest entry
/// of `centers` (un-powered distance, lowest point index on ties). Aligned
/// with `centers`.
inline std::vector<std::size_t> snap_and_count(const MetricInstance& inst,
                                               std::span<const std::size_t> centers) {
  detail::require(!centers.empty(), "snapping needs at least one center");
  for (std::size_t c : centers) inst.distance(c, c);
  std::vector<std::size_t> counts(centers.size(), 0);
  for (std::size_t v : inst.demand()) ++counts[nearest_center(inst, v, centers)];
  return counts;
}

/// Released counts n'_c = n_c + Lap(2 / eps_p), i.e. sensitivity 1 at
/// budget eps_p / 2.
inline std::vector<double> noisy_weights(std::span<const std::size_t> counts, double eps_p,
                                         RandomSource& rng) {
  std::vector<double> out;
  out.reserve(counts.size());
  for (std::size_t c : counts) out.push_back(noisy_count(static_cast<double>(c), 1.0, eps_p / 2.0, rng));
  return out;
}

/// Demand counts per distance band [t_{i-1}, t_i), t_0 = 0, measured from
/// the nearest of `centers`. Distances at or beyond t_r land in the last band.
inline std::vector<std::size_t> band_counts(const MetricInstance& inst,
                                            std::span<const std::size_t> centers,
                                            const ThresholdSchedule& schedule) {
  detail::require(!centers.empty(), "band counts need at least one center");
  detail::require(schedule.r() >= 1, "empty threshold schedule");
  std::vector<std::size_t> bands(schedule.r(), 0);
  for (std::size_t v : inst.demand()) {
    const double d = inst.distance_unchecked(v, centers[nearest_center(inst, v, centers)]);
    const auto it = std::upper_bound(schedule.radii.begin(), schedule.radii.end(), d);
    std::size_t band = static_cast<std::size_t>(it - schedule.radii.begin());
    ++bands[std::min(band, schedule.r() - 1)];
  }
  return bands;
}

/// sum_i bands[i] * t_i^p
inline double discretized_cost(std::span<const std::size_t> bands, const ThresholdSchedule& schedule,
                               double power) {
  double total = 0.0;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    total += static_cast<double>(bands[i]) * std::pow(schedule.radii[i], power);
  }
  return total;
}

struct DiagnosticProfile {
  std::vector<std::size_t> o;  // bands w.r.t. the reference centers
  std::vector<std::size_t> a;  // bands w.r.t. the snapped candidate set
  double reference_cost = 0.0;
  double snap_cost = 0.0;                   // sum_v d(v, C)^p
  double discretized_cost = 0.0;            // sum_i o_i t_i^p
  double snapped_discretized_cost = 0.0;    // sum_i a_i t_i^p
};

/// Band profile of the demand around `reference_centers`.
inline DiagnosticProfile threshold_profile(const MetricInstance& inst,
                                           std::span<const std::size_t> reference_centers,
                                           const ThresholdSchedule& schedule) {
  DiagnosticProfile p;
  p.o = band_counts(inst, reference_centers, schedule);
  p.reference_cost = clustering_cost(inst, reference_centers).cost;
  p.discretized_cost = discretized_cost(p.o, schedule, inst.power());
  return p;
}

/// threshold_profile plus the band profile and snapping cost of `snapped`.
inline DiagnosticProfile diagnostic_profile(const MetricInstance& inst,
                                            std::span<const std::size_t> reference_centers,
                                            std::span<const std::size_t> snapped,
                                            const ThresholdSchedule& schedule) {
  DiagnosticProfile p = threshold_profile(inst, reference_centers, schedule);
  p.a = band_counts(inst, snapped, schedule);
  p.snap_cost = clustering_cost(inst, snapped).cost;
  p.snapped_discretized_cost = discretized_cost(p.a, schedule, inst.power());
  return p;
}

struct NoisyWeightedInstance {
  std::vector<std::size_t> centers;    // C, in first-selection order
  std::vector<double> weights;         // n'_c, may be negative
  std::vector<double> clamped_weights; // max(0, n'_c), fed to the solver
  std::size_t k = 0;
  double power = 1.0;
};

struct CoverageRound {
  double radius = 0.0;
  double epsilon_prime = 0.0;
  std::size_t m = 0;
  std::vector<std::size_t> chosen;  // point indices, pick order
  // Evaluation only: depend on the raw demand.
  std::vector<std::size_t> residual_before;  // demand positions still uncovered
  std::size_t newly_covered = 0;
  std::vector<std::size_t> residual_after;
};

struct BudgetEntry {
  std::string stage;
  double epsilon = 0.0;
  double delta = 0.0;
};

struct DpClusterRun {
  /// Released: `solution.centers`, `noisy`, `noisy_cost`, schedule, chosen
  /// ids per round. Evaluation only: `solution.cost`, `solution.assignment`,
  /// `true_counts`, the residual fields of each round.
  ClusteringSolution solution;
  double noisy_cost = 0.0;
  NoisyWeightedInstance noisy;
  std::vector<std::size_t> true_counts;
  ThresholdSchedule schedule;
  std::vector<CoverageRound> rounds;
  std::vector<BudgetEntry> ledger;
  SolverDescriptor solver;
  bool diameter_exact = true;
  std::size_t m = 0;

  double epsilon_spent() const {
    double e = 0.0;
    for (const auto& b : ledger) e += b.epsilon;
    return e;
  }
  double delta_spent() const {
    double d = 0.0;
    for (const auto& b : ledger) d += b.delta;
    return d;
  }
};

/// m = ceil(2k ln(1/eps)).
inline std::size_t coverage_rounds_per_threshold(std::size_t k, double epsilon) {
  return static_cast<std::size_t>(std::ceil(2.0 * static_cast<double>(k) * std::log(1.0 / epsilon)));
}

/// One threshold of the sweep: private coverage of the residual demand
/// positions by the balls B_radius(v) over facilities v, m picks.
inline CoverageRound coverage_round(const MetricInstance& inst, double radius,
                                    const std::vector<std::size_t>& residual, double eps_prime,
                                    std::size_t m, RandomSource& rng) {
  const auto& facilities = inst.facilities();
  std::vector<std::vector<std::size_t>> family;
  family.reserve(facilities.size());
  for (std::size_t v : facilities) family.push_back(ball(inst, v, radius, residual));
  const CoverageInstance cov(inst.demand().size(), std::move(family));
  const CoverageSelection sel = private_max_coverage_with_eps_prime(cov, residual, eps_prime, m, rng);

  CoverageRound round{radius, eps_prime, m, {}, residual, sel.covered.size(), {}};
  for (std::size_t id : sel.chosen) round.chosen.push_back(facilities[id]);
  std::vector<std::size_t> sorted_residual = residual;
  std::sort(sorted_residual.begin(), sorted_residual.end());
  std::set_difference(sorted_residual.begin(), sorted_residual.end(), sel.covered.begin(), sel.covered.end(),
                      std::back_inserter(round.residual_after));
  return round;
}

struct DpClusterOptions {
  double epsilon = 0.1;
  PrivacyBudget budget;
  DiameterMode diameter_mode = DiameterMode::kExact;
};

/// The full private pipeline on `inst` (demand, k and power taken from the
/// instance, centers from its facility set).
inline DpClusterRun dp_cluster(const MetricInstance& inst, const DpClusterOptions& options,
                               const BlackBoxSolver& solver, RandomSource& rng) {
  const double eps = options.epsilon;
  detail::require(std::isfinite(eps) && eps > 0.0 && eps < kMaxUtilityEpsilon,
                  "utility epsilon must lie in (0, 0.6)");
  options.budget.validate();
  detail::require(options.budget.delta < 1.0, "delta_p must lie in (0, 1)");
  const double eps_p = options.budget.epsilon;
  const double delta_p = options.budget.delta;

  DpClusterRun run;
  run.solver = solver.descriptor();
  if (!run.solver.powers.empty()) {
    detail::require(std::find(run.solver.powers.begin(), run.solver.powers.end(), inst.power()) !=
                        run.solver.powers.end(),
                    "solver '" + run.solver.name + "' does not support power " + std::to_string(inst.power()));
  }

  const auto& facilities = inst.facilities();
  const std::size_t nd = inst.demand().size();
  const DiameterEstimate diam = diameter_estimate(inst, options.diameter_mode);
  run.diameter_exact = diam.exact;
  run.schedule = build_thresholds(diam.value, inst.size(), eps);
  run.noisy.k = inst.k();
  run.noisy.power = inst.power();

  std::vector<std::size_t> candidates;
  if (diam.value == 0.0) {
    // All points coincide: any k centers are optimal.
    candidates.push_back(facilities.front());
  } else {
    run.ledger.push_back({"coverage_loop", eps_p / 2.0, delta_p});
    // The family has one ball per facility, so at most |F| distinct picks.
    run.m = std::min(coverage_rounds_per_threshold(inst.k(), eps), facilities.size());
    const double eps_prime = coverage_epsilon_prime(eps_p / 2.0, delta_p);

    std::vector<std::size_t> residual(nd);
    for (std::size_t j = 0; j < nd; ++j) residual[j] = j;
    std::vector<char> in_c(inst.size(), 0);

    for (double t : run.schedule.radii) {
      CoverageRound round = coverage_round(inst, t, residual, eps_prime, run.m, rng);
      for (std::size_t point : round.chosen) {
        if (!in_c[point]) {
          in_c[point] = 1;
          candidates.push_back(point);
        }
      }
      residual = round.residual_after;
      run.rounds.push_back(std::move(round));
    }
  }

  run.ledger.push_back({"laplace_counts", eps_p / 2.0, 0.0});
  run.noisy.centers = candidates;
  run.true_counts = snap_and_count(inst, candidates);
  run.noisy.weights = noisy_weights(run.true_counts, eps_p, rng);
  run.noisy.clamped_weights.reserve(run.noisy.weights.size());
  for (double w : run.noisy.weights) run.noisy.clamped_weights.push_back(std::max(0.0, w));

  std::vector<std::size_t> final_centers;
  if (diam.value == 0.0) {
    final_centers.assign(facilities.begin(), facilities.begin() + static_cast<std::ptrdiff_t>(inst.k()));
    std::sort(final_centers.begin(), final_centers.end());
    run.noisy_cost = 0.0;
  } else {
    WeightedInstance weighted{inst, facilities, {}, inst.k(), inst.power()};
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      weighted.demand.push_back({candidates[c], run.noisy.clamped_weights[c]});
    }
    const ClusteringSolution solved = solver.solve(weighted, rng);
    final_centers = solved.centers;
    run.noisy_cost = solved.cost;
  }
  run.solution = clustering_cost(inst, final_centers);
  return run;
}

}  // namespace dpcluster
