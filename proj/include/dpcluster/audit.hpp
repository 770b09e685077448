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

// Monte Carlo falsification of (eps, delta) claims on neighboring inputs.
//
// A mechanism is run `samples` times on each side of a neighbor pair and its
// discrete outcomes are tallied. For every singleton outcome and every prefix
// of the outcomes sorted by empirical ratio, in both directions, the audit
// checks
//
//   Pr_A[S] <= exp(eps) * Pr_B[S] + delta
//
// using Wilson score bounds: the claim is flagged only when the lower bound
// on Pr_A[S] exceeds exp(eps) times the upper bound on Pr_B[S] plus delta.
// A PASS means no violation was detected at this confidence, nothing more.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "dpcluster/clustering.hpp"
#include "dpcluster/coverage.hpp"
#include "dpcluster/error.hpp"
#include "dpcluster/mechanisms.hpp"
#include "dpcluster/metric.hpp"
#include "dpcluster/random.hpp"

namespace dpcluster {

/// Minimum samples per observed outcome.
inline constexpr std::size_t kSamplesPerOutcome = 1000;

/// Demand multisets over the same public point set.
struct NeighborPair {
  std::vector<std::size_t> base;
  std::vector<std::size_t> variant;
};

inline std::size_t multiset_symmetric_difference(std::vector<std::size_t> a, std::vector<std::size_t> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::size_t> diff;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
  return diff.size();
}

inline NeighborPair make_neighbor_pair(std::vector<std::size_t> base, std::vector<std::size_t> variant) {
  detail::require(multiset_symmetric_difference(base, variant) == 1,
                  "neighbor demand sets must differ in exactly one element");
  return {std::move(base), std::move(variant)};
}

/// Claimed guarantee. Unlike PrivacyBudget, pure claims (delta = 0) and
/// eps = 0 are allowed.
struct PrivacyClaim {
  double epsilon = 0.0;
  double delta = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for `hits` successes out of `n` trials.
inline Interval wilson_interval(std::size_t hits, std::size_t n, double z) {
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {hits == 0 ? 0.0 : std::max(0.0, center - half), hits == n ? 1.0 : std::min(1.0, center + half)};
}

struct AuditEvent {
  /// "base>variant" bounds Pr_base[S] by Pr_variant[S]; "variant>base" the
  /// reverse.
  std::string direction;
  std::vector<std::int64_t> outcomes;
  double p_numerator = 0.0;
  double p_denominator = 0.0;
  Interval ci_numerator;
  Interval ci_denominator;
  double ratio = 0.0;   // empirical, may be +inf
  double margin = 0.0;  // lo_num - (exp(eps) * hi_den + delta); > 0 is a violation
};

struct AuditReport {
  PrivacyClaim claimed;
  std::size_t samples = 0;
  double confidence = 0.99;
  std::vector<std::int64_t> outcomes;  // sorted
  std::vector<double> freq_base;
  std::vector<double> freq_variant;
  std::vector<Interval> ci_base;
  std::vector<Interval> ci_variant;
  /// Largest empirical ratio over all tested events, both directions.
  double worst_ratio = 1.0;
  /// Largest eps implied by the confidence bounds, ln((lo - delta) / hi);
  /// 0 when no event supports a positive value.
  double epsilon_lower_bound = 0.0;
  AuditEvent worst_event;
  std::size_t events_tested = 0;
  bool pass = true;
  std::string verdict;
};

namespace detail {

// Two-sided normal quantile for the supported confidence levels.
inline double z_for(double confidence) {
  if (confidence == 0.99) return 2.5758293035489004;
  if (confidence == 0.95) return 1.959963984540054;
  if (confidence == 0.999) return 3.2905267314919255;
  throw InputError("confidence must be 0.95, 0.99 or 0.999");
}

// Order-independent digest of a demand multiset.
inline std::uint64_t fingerprint(std::vector<std::size_t> data) {
  std::sort(data.begin(), data.end());
  std::uint64_t h = mix64(data.size());
  for (std::size_t v : data) h = mix64(h ^ mix64(v + 1));
  return h;
}

template <class Mechanism>
std::map<std::int64_t, std::size_t> tally(Mechanism& mech, const std::vector<std::size_t>& data,
                                          std::size_t samples, RandomSource rng) {
  // Fixed-size chunks on derived substreams keep results independent of any
  // later parallel split.
  constexpr std::size_t kChunk = 1 << 16;
  std::map<std::int64_t, std::size_t> counts;
  for (std::size_t start = 0, chunk = 0; start < samples; start += kChunk, ++chunk) {
    RandomSource sub = rng.substream(chunk);
    const std::size_t end = std::min(samples, start + kChunk);
    for (std::size_t s = start; s < end; ++s) ++counts[static_cast<std::int64_t>(mech(data, sub))];
  }
  return counts;
}

}  // namespace detail

/// Runs `mech(demand, rng) -> integer outcome` `samples` times on each side
/// of `pair` and tests `claimed`. Throws RefusalError when fewer than
/// kSamplesPerOutcome samples fall on each observed outcome on average.
template <class Mechanism>
AuditReport audit(Mechanism&& mech, const NeighborPair& pair, std::size_t samples, PrivacyClaim claimed,
                  std::uint64_t seed, double confidence = 0.99) {
  detail::require(claimed.epsilon >= 0.0 && std::isfinite(claimed.epsilon), "claimed epsilon must be >= 0");
  detail::require(claimed.delta >= 0.0 && claimed.delta < 1.0, "claimed delta must lie in [0, 1)");
  detail::require(samples >= 1, "audit needs at least one sample");
  const double z = detail::z_for(confidence);

  // Each side's stream depends only on its own data, so swapping the pair
  // swaps the tallies exactly.
  RandomSource root(seed);
  const auto counts_a = detail::tally(mech, pair.base, samples, root.substream(detail::fingerprint(pair.base)));
  const auto counts_b =
      detail::tally(mech, pair.variant, samples, root.substream(detail::fingerprint(pair.variant)));

  AuditReport report;
  report.claimed = claimed;
  report.samples = samples;
  report.confidence = confidence;
  for (const auto& [o, c] : counts_a) report.outcomes.push_back(o);
  for (const auto& [o, c] : counts_b) report.outcomes.push_back(o);
  std::sort(report.outcomes.begin(), report.outcomes.end());
  report.outcomes.erase(std::unique(report.outcomes.begin(), report.outcomes.end()), report.outcomes.end());
  if (samples / report.outcomes.size() < kSamplesPerOutcome) {
    throw RefusalError("audit refused: " + std::to_string(report.outcomes.size()) +
                       " distinct outcomes for " + std::to_string(samples) +
                       " samples; project the output onto a coarser outcome space or raise samples");
  }

  const std::size_t n_out = report.outcomes.size();
  std::vector<std::size_t> ca(n_out, 0), cb(n_out, 0);
  for (std::size_t i = 0; i < n_out; ++i) {
    if (auto it = counts_a.find(report.outcomes[i]); it != counts_a.end()) ca[i] = it->second;
    if (auto it = counts_b.find(report.outcomes[i]); it != counts_b.end()) cb[i] = it->second;
    const double ns = static_cast<double>(samples);
    report.freq_base.push_back(static_cast<double>(ca[i]) / ns);
    report.freq_variant.push_back(static_cast<double>(cb[i]) / ns);
    report.ci_base.push_back(wilson_interval(ca[i], samples, z));
    report.ci_variant.push_back(wilson_interval(cb[i], samples, z));
  }

  const double bound = std::exp(claimed.epsilon);
  bool have_worst = false;
  auto test_event = [&](const std::string& dir, const std::vector<std::size_t>& num,
                        const std::vector<std::size_t>& den, const std::vector<std::size_t>& members) {
    std::size_t hn = 0, hd = 0;
    AuditEvent ev;
    ev.direction = dir;
    for (std::size_t i : members) {
      hn += num[i];
      hd += den[i];
      ev.outcomes.push_back(report.outcomes[i]);
    }
    const double ns = static_cast<double>(samples);
    ev.p_numerator = static_cast<double>(hn) / ns;
    ev.p_denominator = static_cast<double>(hd) / ns;
    ev.ci_numerator = wilson_interval(hn, samples, z);
    ev.ci_denominator = wilson_interval(hd, samples, z);
    ev.ratio = hd == 0 ? (hn == 0 ? 1.0 : std::numeric_limits<double>::infinity())
                       : ev.p_numerator / ev.p_denominator;
    ev.margin = ev.ci_numerator.lo - (bound * ev.ci_denominator.hi + claimed.delta);
    ++report.events_tested;
    report.worst_ratio = std::max(report.worst_ratio, ev.ratio);
    const double excess = ev.ci_numerator.lo - claimed.delta;
    if (excess > 0.0 && ev.ci_denominator.hi > 0.0) {
      report.epsilon_lower_bound = std::max(report.epsilon_lower_bound, std::log(excess / ev.ci_denominator.hi));
    }
    if (!have_worst || ev.margin > report.worst_event.margin) {
      report.worst_event = ev;
      have_worst = true;
    }
  };

  auto sweep = [&](const std::string& dir, const std::vector<std::size_t>& num,
                   const std::vector<std::size_t>& den) {
    std::vector<std::size_t> order(n_out);
    for (std::size_t i = 0; i < n_out; ++i) order[i] = i;
    for (std::size_t i : order) test_event(dir, num, den, {i});
    // Greedy worst-case event: prefixes by decreasing empirical ratio.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return static_cast<double>(num[x]) * static_cast<double>(den[y]) >
             static_cast<double>(num[y]) * static_cast<double>(den[x]);
    });
    std::vector<std::size_t> prefix;
    for (std::size_t i = 0; i + 1 < n_out; ++i) {
      prefix.push_back(order[i]);
      if (prefix.size() >= 2) test_event(dir, num, den, prefix);
    }
  };
  sweep("base>variant", ca, cb);
  sweep("variant>base", cb, ca);

  report.pass = report.worst_event.margin <= 0.0;
  report.verdict = report.pass
                       ? "PASS: no violation detected at this confidence"
                       : "FAIL: event probability ratio exceeds the claimed bound beyond sampling error";
  return report;
}

// Default outcome projections.

/// First pick of the private coverage selector on a fixed family; the audited
/// data is the target set.
struct FirstPickMechanism {
  CoverageInstance instance;
  double eps_prime;

  std::int64_t operator()(const std::vector<std::size_t>& target, RandomSource& rng) const {
    return static_cast<std::int64_t>(
        private_max_coverage_with_eps_prime(instance, target, eps_prime, 1, rng).chosen.front());
  }
};

/// |data| + Lap(scale) bucketed at `threshold`: 1 if at or above, else 0.
struct NoisyCountSignMechanism {
  double scale;
  double threshold;

  std::int64_t operator()(const std::vector<std::size_t>& data, RandomSource& rng) const {
    const double noisy = static_cast<double>(data.size()) + laplace_sample(scale, rng);
    return noisy >= threshold ? 1 : 0;
  }
};

/// |data| + Lap(scale) in unit-width buckets around `origin`, clipped to
/// [-span, span].
struct NoisyCountBucketMechanism {
  double scale;
  double origin;
  std::int64_t span = 6;

  std::int64_t operator()(const std::vector<std::size_t>& data, RandomSource& rng) const {
    const double noisy = static_cast<double>(data.size()) + laplace_sample(scale, rng);
    const auto b = static_cast<std::int64_t>(std::floor(noisy - origin));
    return std::clamp<std::int64_t>(b, -span, span);
  }
};

/// Sorted multiset of centers chosen in the first coverage round of
/// dp_cluster, encoded base n.
struct FirstRoundMechanism {
  MetricInstance instance;
  DpClusterOptions options;

  std::int64_t operator()(const std::vector<std::size_t>& demand, RandomSource& rng) const {
    const MetricInstance inst = instance.with_demand(demand);
    const ThresholdSchedule schedule = build_thresholds(diameter(inst), inst.size(), options.epsilon);
    const std::size_t m =
        std::min(coverage_rounds_per_threshold(inst.k(), options.epsilon), inst.facilities().size());
    const double eps_prime = coverage_epsilon_prime(options.budget.epsilon / 2.0, options.budget.delta);
    std::vector<std::size_t> residual(demand.size());
    for (std::size_t j = 0; j < residual.size(); ++j) residual[j] = j;
    CoverageRound round = coverage_round(inst, schedule.radii.front(), residual, eps_prime, m, rng);
    std::sort(round.chosen.begin(), round.chosen.end());
    std::int64_t code = 0;
    for (std::size_t c : round.chosen) code = code * static_cast<std::int64_t>(inst.size()) + static_cast<std::int64_t>(c);
    return code;
  }
};

}  // namespace dpcluster
