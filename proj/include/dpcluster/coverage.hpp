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

// Maximum coverage: the private iterated exponential-mechanism selector and
// the exact greedy it approximates.
//
// Both run the same loop. At every step each remaining set is scored by the
// number of still-uncovered target elements it contains; one set is picked,
// removed from the family, and its elements are removed from the residual
// target. The private selector picks with probability proportional to
// exp(eps' * score); greedy picks the highest score, lowest id on ties.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dpcluster/error.hpp"
#include "dpcluster/mechanisms.hpp"
#include "dpcluster/random.hpp"

namespace dpcluster {

/// Elements are the integers [0, universe_size). Sets are stored sorted and
/// deduplicated; set id = position in `family`.
class CoverageInstance {
 public:
  CoverageInstance(std::size_t universe_size, std::vector<std::vector<std::size_t>> family)
      : universe_size_(universe_size), family_(std::move(family)) {
    for (std::size_t s = 0; s < family_.size(); ++s) {
      auto& set = family_[s];
      std::sort(set.begin(), set.end());
      set.erase(std::unique(set.begin(), set.end()), set.end());
      if (!set.empty() && set.back() >= universe_size_) {
        throw InputError("set " + std::to_string(s) + " contains element " +
                         std::to_string(set.back()) + " outside the universe");
      }
    }
  }

  std::size_t universe_size() const { return universe_size_; }
  const std::vector<std::vector<std::size_t>>& family() const { return family_; }

 private:
  std::size_t universe_size_;
  std::vector<std::vector<std::size_t>> family_;
};

struct CoverageSelection {
  /// Chosen set ids in pick order. The only field covered by the privacy
  /// guarantee of the private selector.
  std::vector<std::size_t> chosen;
  // Non-private diagnostics below.
  std::vector<std::size_t> covered;         // sorted
  std::vector<std::size_t> marginal_trace;  // newly covered per pick
};

/// eps' = eps_s / (2 ln(e / delta_s)); delta_s = 1 gives eps_s / 2.
inline double coverage_epsilon_prime(double eps_s, double delta_s) {
  detail::require(std::isfinite(eps_s) && eps_s > 0.0, "eps_s must be positive");
  detail::require(delta_s > 0.0 && delta_s <= 1.0, "delta_s must lie in (0, 1]");
  return eps_s / (2.0 * (1.0 - std::log(delta_s)));
}

namespace detail {

// `pick(scores)` returns an index into the current list of remaining set ids.
template <class Picker>
CoverageSelection run_coverage(const CoverageInstance& inst, std::span<const std::size_t> target,
                               std::size_t m, Picker&& pick) {
  const auto& family = inst.family();
  require(m <= family.size(), "m = " + std::to_string(m) + " exceeds the family size " +
                                  std::to_string(family.size()));
  std::vector<char> residual(inst.universe_size(), 0);
  for (std::size_t e : target) {
    require(e < inst.universe_size(), "target element " + std::to_string(e) + " outside the universe");
    residual[e] = 1;
  }

  std::vector<std::vector<std::size_t>> sets_of(inst.universe_size());
  std::vector<std::size_t> marginal(family.size(), 0);
  for (std::size_t s = 0; s < family.size(); ++s) {
    for (std::size_t e : family[s]) {
      if (!residual[e]) continue;
      sets_of[e].push_back(s);
      ++marginal[s];
    }
  }

  std::vector<std::size_t> remaining(family.size());
  for (std::size_t s = 0; s < remaining.size(); ++s) remaining[s] = s;

  CoverageSelection out;
  out.chosen.reserve(m);
  out.marginal_trace.reserve(m);
  std::vector<double> scores;
  for (std::size_t step = 0; step < m; ++step) {
    scores.resize(remaining.size());
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      scores[i] = static_cast<double>(marginal[remaining[i]]);
    }
    const std::size_t at = pick(std::span<const double>(scores));
    const std::size_t chosen = remaining[at];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(at));

    std::size_t fresh = 0;
    for (std::size_t e : family[chosen]) {
      if (!residual[e]) continue;
      residual[e] = 0;
      ++fresh;
      out.covered.push_back(e);
      for (std::size_t s : sets_of[e]) --marginal[s];
    }
    out.chosen.push_back(chosen);
    out.marginal_trace.push_back(fresh);
  }
  std::sort(out.covered.begin(), out.covered.end());
  return out;
}

}  // namespace detail

/// Picks m sets; each pick uses the exponential mechanism with
/// eps' = coverage_epsilon_prime(eps_s, delta_s) on marginal coverage.
/// Zero-marginal sets stay selectable.
inline CoverageSelection private_max_coverage(const CoverageInstance& inst,
                                              std::span<const std::size_t> target, double eps_s,
                                              double delta_s, std::size_t m, RandomSource& rng) {
  const double eps_prime = coverage_epsilon_prime(eps_s, delta_s);
  return detail::run_coverage(inst, target, m, [&](std::span<const double> scores) {
    return exponential_select(scores, eps_prime, rng);
  });
}

/// Same loop with an explicit eps'. Used where the caller accounts for the
/// budget itself.
inline CoverageSelection private_max_coverage_with_eps_prime(const CoverageInstance& inst,
                                                             std::span<const std::size_t> target,
                                                             double eps_prime, std::size_t m,
                                                             RandomSource& rng) {
  return detail::run_coverage(inst, target, m, [&](std::span<const double> scores) {
    return exponential_select(scores, eps_prime, rng);
  });
}

/// Exact greedy; ties broken by lowest set id.
inline CoverageSelection greedy_max_coverage(const CoverageInstance& inst,
                                             std::span<const std::size_t> target, std::size_t m) {
  return detail::run_coverage(inst, target, m, [](std::span<const double> scores) {
    // Remaining ids are kept in increasing order, so the first maximum is the
    // lowest id.
    return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  });
}

/// Number of target elements the selection leaves uncovered.
inline std::size_t coverage_deficit(const CoverageSelection& selection,
                                    std::span<const std::size_t> target) {
  std::vector<std::size_t> t(target.begin(), target.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  std::size_t hit = 0;
  for (std::size_t e : t) {
    if (std::binary_search(selection.covered.begin(), selection.covered.end(), e)) ++hit;
  }
  return t.size() - hit;
}

}  // namespace dpcluster
