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

// Laplace and exponential mechanisms.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dpcluster/error.hpp"
#include "dpcluster/random.hpp"

namespace dpcluster {

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-6;

  /// Throws unless epsilon > 0 and 0 < delta <= 1.
  void validate() const {
    detail::require(std::isfinite(epsilon) && epsilon > 0.0, "privacy epsilon must be positive");
    detail::require(delta > 0.0 && delta <= 1.0, "privacy delta must lie in (0, 1]");
  }
};

/// One draw from Lap(scale) by inverting the CDF at a uniform variate.
inline double laplace_sample(double scale, RandomSource& rng) {
  detail::require(std::isfinite(scale) && scale > 0.0, "Laplace scale must be positive");
  const double u = rng.uniform_open() - 0.5;
  // 1 - 2|u| lies in (0, 1]; log1p keeps precision near the mode.
  const double magnitude = -scale * std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -magnitude : magnitude;
}

/// count + Lap(sensitivity / eps). The result may be negative.
inline double noisy_count(double count, double sensitivity, double eps, RandomSource& rng) {
  detail::require(sensitivity > 0.0, "sensitivity must be positive");
  detail::require(eps > 0.0, "epsilon must be positive");
  return count + laplace_sample(sensitivity / eps, rng);
}

/// Selection probabilities exp(eps * s_i) / sum_j exp(eps * s_j), evaluated
/// after subtracting the maximum score.
inline std::vector<double> exponential_weights(std::span<const double> scores, double eps_prime) {
  detail::require(!scores.empty(), "exponential mechanism needs at least one score");
  detail::require(std::isfinite(eps_prime) && eps_prime >= 0.0, "eps_prime must be finite and nonnegative");
  double top = scores[0];
  for (double s : scores) {
    detail::require(!std::isnan(s), "NaN score");
    top = std::max(top, s);
  }
  std::vector<double> w(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    w[i] = eps_prime == 0.0 ? 1.0 : std::exp(eps_prime * (scores[i] - top));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

/// Index drawn with probability proportional to exp(eps_prime * scores[i]).
/// Uses one uniform variate per call.
inline std::size_t exponential_select(std::span<const double> scores, double eps_prime,
                                      RandomSource& rng) {
  const std::vector<double> p = exponential_weights(scores, eps_prime);
  double u = rng.uniform_open();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (u < p[i]) return i;
    u -= p[i];
  }
  // Rounding left u just above the accumulated mass; take the last index
  // with positive probability.
  for (std::size_t i = p.size(); i-- > 0;) {
    if (p[i] > 0.0) return i;
  }
  return p.size() - 1;
}

}  // namespace dpcluster
