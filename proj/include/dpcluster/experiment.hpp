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

// Experiment orchestration and JSON reports.
//
// A report has three parts: the config echo, one entry per trial, and
// aggregate order statistics. Every trial entry is split into
//
//   "releasable"  outputs of the private pipeline only (final center ids,
//                 noisy weighted instance, noisy cost, schedule, per-round
//                 picks) and public parameters
//   "evaluation"  anything computed from the raw demand (true cost, OPT,
//                 band profile, true counts, budget ledger)
//
// Reports are a pure function of the config: trials run on derived
// substreams and are assembled in trial order whatever --jobs is.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "dpcluster/candidates.hpp"
#include "dpcluster/clustering.hpp"
#include "dpcluster/error.hpp"
#include "dpcluster/io.hpp"
#include "dpcluster/metric.hpp"
#include "dpcluster/solvers.hpp"

namespace dpcluster {

using Json = nlohmann::ordered_json;

struct ExperimentConfig {
  std::string input;                 // path; empty when a generator is used
  std::string format = "csv";        // csv | matrix-json
  std::string generator;             // e.g. planted(3,30,10,0.5,2,7)
  std::string candidates = "identity";  // identity | grid(h); Euclidean only
  std::size_t k = 3;
  double power = 1.0;
  double epsilon = 0.1;
  double epsilon_p = 1.0;
  double delta_p = 1e-6;
  std::string solver = "local-search";
  SolverParams solver_params;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  std::size_t jobs = 1;
  std::string out;
  bool approximate_diameter = false;

  void validate() const {
    detail::require(input.empty() != generator.empty(), "exactly one of input and generator must be given");
    detail::require(trials >= 1, "trials must be at least 1");
    detail::require(jobs >= 1, "jobs must be at least 1");
    detail::require(k >= 1, "k must be positive");
    PrivacyBudget{epsilon_p, delta_p}.validate();
    detail::require(delta_p < 1.0, "delta_p must lie in (0, 1)");
    detail::require(epsilon > 0.0 && epsilon < kMaxUtilityEpsilon, "epsilon must lie in (0, 0.6)");
    make_solver(solver, solver_params);
  }
};

inline Json config_json(const ExperimentConfig& c) {
  Json j;
  if (!c.input.empty()) {
    j["input"] = c.input;
    j["format"] = c.format;
  } else {
    j["generator"] = c.generator;
  }
  j["candidates"] = c.candidates;
  j["k"] = c.k;
  j["power"] = c.power;
  j["epsilon"] = c.epsilon;
  j["epsilon_p"] = c.epsilon_p;
  j["delta_p"] = c.delta_p;
  j["solver"] = c.solver;
  j["solver_params"] = {{"max_iters", c.solver_params.max_iters}, {"restarts", c.solver_params.restarts}};
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["approximate_diameter"] = c.approximate_diameter;
  return j;
}

inline CandidateMode parse_candidates(const std::string& text) {
  if (text == "identity") return CandidateMode::identity();
  if (text.rfind("grid(", 0) == 0 && text.back() == ')') {
    return CandidateMode::grid(detail::parse_real(text.substr(5, text.size() - 6), "grid cell width"));
  }
  throw InputError("candidates must be identity or grid(h), got '" + text + "'");
}

/// Instance described by the config; `trial_offset` shifts the generator
/// seed (bench mode).
inline MetricInstance load_instance(const ExperimentConfig& c, std::uint64_t trial_offset = 0) {
  MetricInstance inst = [&] {
    if (!c.input.empty()) return ingest(c.input, parse_format(c.format), c.k, c.power);
    GeneratorSpec g = parse_generator(c.generator);
    g.seed += trial_offset;
    return generate(g, c.k, c.power);
  }();
  if (inst.is_euclidean()) return euclidean_candidate_provider(inst, parse_candidates(c.candidates));
  detail::require(c.candidates == "identity", "grid candidates need Euclidean coordinates");
  return inst;
}

inline Json descriptor_json(const SolverDescriptor& d) {
  Json j;
  j["name"] = d.name;
  j["guarantee"] = d.guarantee;
  if (std::isnan(d.approx_factor)) {
    j["approx_factor"] = "heuristic (no guarantee)";
  } else {
    j["approx_factor"] = d.approx_factor;
  }
  j["powers"] = d.powers;
  return j;
}

/// Released quantities of one run, the only inputs to the releasable
/// sub-document.
struct ReleasedOutputs {
  std::vector<std::size_t> centers;
  NoisyWeightedInstance noisy;
  double noisy_cost = 0.0;
  ThresholdSchedule schedule;
  std::vector<std::size_t> m_per_round;
  std::vector<double> epsilon_prime_per_round;
  std::vector<std::vector<std::size_t>> chosen_per_round;
  SolverDescriptor solver;
  bool diameter_exact = true;
};

inline ReleasedOutputs released_outputs(const DpClusterRun& run) {
  ReleasedOutputs r;
  r.centers = run.solution.centers;
  r.noisy = run.noisy;
  r.noisy_cost = run.noisy_cost;
  r.schedule = run.schedule;
  for (const auto& round : run.rounds) {
    r.m_per_round.push_back(round.m);
    r.epsilon_prime_per_round.push_back(round.epsilon_prime);
    r.chosen_per_round.push_back(round.chosen);
  }
  r.solver = run.solver;
  r.diameter_exact = run.diameter_exact;
  return r;
}

inline Json releasable_document(const ReleasedOutputs& r) {
  Json j;
  j["centers"] = r.centers;
  j["noisy_cost"] = r.noisy_cost;
  j["noisy_instance"] = {{"centers", r.noisy.centers},
                         {"weights", r.noisy.weights},
                         {"clamped_weights", r.noisy.clamped_weights},
                         {"k", r.noisy.k},
                         {"power", r.noisy.power}};
  j["schedule"] = {{"epsilon", r.schedule.epsilon},
                   {"diameter", r.schedule.diameter},
                   {"diameter_exact", r.diameter_exact},
                   {"radii", r.schedule.radii}};
  Json rounds = Json::array();
  for (std::size_t i = 0; i < r.chosen_per_round.size(); ++i) {
    rounds.push_back({{"radius", r.schedule.radii[i]},
                      {"epsilon_prime", r.epsilon_prime_per_round[i]},
                      {"m", r.m_per_round[i]},
                      {"chosen", r.chosen_per_round[i]}});
  }
  j["rounds"] = rounds;
  j["solver"] = descriptor_json(r.solver);
  return j;
}

struct OptResult {
  std::optional<ClusteringSolution> solution;  // empty when the guard refused
};

/// Unweighted optimum by brute force, or nothing when the enumeration guard
/// would be exceeded.
inline OptResult brute_force_opt(const MetricInstance& inst) {
  const WeightedInstance w = unit_weighted(inst);
  if (detail::binomial(w.facilities.size(), w.k) > kBruteForceGuard) return {};
  return {brute_force_solver(w)};
}

inline Json evaluation_document(const MetricInstance& inst, const DpClusterRun& run, const OptResult& opt) {
  Json j;
  j["true_cost"] = run.solution.cost;
  j["demand_size"] = inst.demand().size();
  if (opt.solution) {
    j["opt"] = opt.solution->cost;
    j["opt_centers"] = opt.solution->centers;
    j["ratio_to_opt"] = opt.solution->cost > 0.0 ? Json(run.solution.cost / opt.solution->cost) : Json(nullptr);
  } else {
    j["opt"] = "skipped(guard)";
  }
  j["true_counts"] = run.true_counts;
  Json rounds = Json::array();
  for (const auto& round : run.rounds) {
    rounds.push_back({{"residual_before", round.residual_before.size()}, {"newly_covered", round.newly_covered}});
  }
  j["rounds"] = rounds;
  const std::vector<std::size_t>& reference = opt.solution ? opt.solution->centers : run.solution.centers;
  const DiagnosticProfile p = diagnostic_profile(inst, reference, run.noisy.centers, run.schedule);
  j["profile"] = {{"reference", opt.solution ? "opt" : "returned"},
                  {"o", p.o},
                  {"a", p.a},
                  {"reference_cost", p.reference_cost},
                  {"snap_cost", p.snap_cost},
                  {"discretized_cost", p.discretized_cost},
                  {"snapped_discretized_cost", p.snapped_discretized_cost}};
  Json ledger = Json::array();
  for (const auto& b : run.ledger) ledger.push_back({{"stage", b.stage}, {"epsilon", b.epsilon}, {"delta", b.delta}});
  j["budget_ledger"] = {{"entries", ledger}, {"epsilon_total", run.epsilon_spent()}, {"delta_total", run.delta_spent()}};
  return j;
}

struct OrderStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Quartiles by linear interpolation between order statistics.
inline OrderStats order_stats(std::vector<double> v) {
  detail::require(!v.empty(), "order statistics of an empty sample");
  std::sort(v.begin(), v.end());
  auto q = [&](double f) {
    const double pos = f * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {v.front(), q(0.25), q(0.5), q(0.75), v.back()};
}

inline Json order_stats_json(const OrderStats& s) {
  return {{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

namespace detail {

// Runs body(i) for i in [0, count) on up to `jobs` threads. The first
// exception is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t count, std::size_t jobs, Body&& body) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  const std::size_t threads = std::min(jobs, count);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// `trials` seeded runs of dp_cluster. With `regenerate` set (bench mode)
/// each trial draws a fresh generated instance with the generator seed
/// shifted by the trial index; otherwise all trials share one instance.
inline Json run_experiment(const ExperimentConfig& config, bool regenerate = false) {
  config.validate();
  detail::require(!regenerate || !config.generator.empty(), "bench mode needs a generator");
  const auto solver = make_solver(config.solver, config.solver_params);
  const DpClusterOptions options{config.epsilon, {config.epsilon_p, config.delta_p},
                                 config.approximate_diameter ? DiameterMode::kFarthestPointSweep
                                                             : DiameterMode::kExact};
  const RandomSource root(config.seed);

  std::optional<MetricInstance> shared;
  OptResult shared_opt;
  if (!regenerate) {
    shared = load_instance(config);
    shared_opt = brute_force_opt(*shared);
  }

  std::vector<Json> entries(config.trials);
  std::vector<double> true_costs(config.trials), noisy_costs(config.trials);
  std::vector<std::optional<double>> ratios(config.trials);
  detail::parallel_for(config.trials, config.jobs, [&](std::size_t t) {
    const MetricInstance inst = regenerate ? load_instance(config, t) : *shared;
    const OptResult opt = regenerate ? brute_force_opt(inst) : shared_opt;
    RandomSource rng = root.substream(t);
    const DpClusterRun run = dp_cluster(inst, options, *solver, rng);
    Json entry;
    entry["trial"] = t;
    if (regenerate) {
      GeneratorSpec g = parse_generator(config.generator);
      g.seed += t;
      entry["instance"] = g.to_string();
    }
    entry["releasable"] = releasable_document(released_outputs(run));
    entry["evaluation"] = evaluation_document(inst, run, opt);
    entries[t] = std::move(entry);
    true_costs[t] = run.solution.cost;
    noisy_costs[t] = run.noisy_cost;
    if (opt.solution && opt.solution->cost > 0.0) ratios[t] = run.solution.cost / opt.solution->cost;
  });

  Json report;
  report["config"] = config_json(config);
  report["mode"] = regenerate ? "bench" : "cluster";
  if (shared) {
    report["instance"] = {{"n", shared->size()},
                          {"dim", shared->dim()},
                          {"metric", shared->is_euclidean() ? "euclidean" : "matrix"},
                          {"facilities", shared->facilities().size()}};
  }
  report["trials"] = entries;
  Json aggregate;
  aggregate["releasable"] = {{"noisy_cost", order_stats_json(order_stats(noisy_costs))}};
  Json eval = {{"true_cost", order_stats_json(order_stats(true_costs))}};
  std::vector<double> r;
  for (const auto& x : ratios)
    if (x) r.push_back(*x);
  eval["ratio_to_opt"] = r.empty() ? Json("skipped(guard)") : order_stats_json(order_stats(r));
  aggregate["evaluation"] = eval;
  report["aggregate"] = aggregate;
  return report;
}

}  // namespace dpcluster
