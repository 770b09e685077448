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

// Point sets, distance oracles and the clustering objective.
//
// A MetricInstance couples a public point set V (Euclidean coordinates or an
// explicit distance matrix) with a private demand multiset D of point
// indices, a target number of centers k and an objective power p. The
// objective is the sum over demand of the p-th power of the distance to the
// nearest center. Centers are drawn from a facility subset of V, which
// defaults to all of V.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dpcluster/error.hpp"
#include "dpcluster/random.hpp"

namespace dpcluster {

/// Number of random triples checked for the triangle inequality when a
/// matrix is too large for an exhaustive check.
inline constexpr std::size_t kTriangleSamples = 10000;

/// Above this size exact diameter scans on coordinate data are considered
/// too slow and callers may opt into DiameterMode::kFarthestPointSweep.
inline constexpr std::size_t kExactDiameterLimit = 20000;

namespace detail {

inline bool triangle_holds(double ab, double ac, double cb) {
  return ab <= ac + cb + 1e-9 * std::max(1.0, ab);
}

struct PointStore {
  std::size_t n = 0;
  std::size_t dim = 0;          // 0 in matrix mode
  std::vector<double> coords;   // n * dim, row major
  std::vector<double> matrix;   // n * n, row major
  bool euclidean = true;
};

}  // namespace detail

class MetricInstance {
 public:
  /// Points given as `coords.size() / dim` rows of `dim` coordinates.
  static MetricInstance euclidean(std::vector<double> coords, std::size_t dim,
                                  std::vector<std::size_t> demand, std::size_t k,
                                  double power = 1.0) {
    detail::require(dim >= 1, "dimension must be at least 1");
    detail::require(coords.size() % dim == 0, "coordinate count is not a multiple of the dimension");
    for (std::size_t i = 0; i < coords.size(); ++i) {
      detail::require(std::isfinite(coords[i]),
                      "non-finite coordinate in point " + std::to_string(i / dim));
    }
    auto store = std::make_shared<detail::PointStore>();
    store->n = coords.size() / dim;
    store->dim = dim;
    store->coords = std::move(coords);
    store->euclidean = true;
    return MetricInstance(std::move(store), std::move(demand), k, power, {});
  }

  /// Explicit symmetric distance matrix, row major. The triangle inequality
  /// is checked exhaustively for small n and on `kTriangleSamples` seeded
  /// random triples otherwise.
  static MetricInstance from_matrix(std::size_t n, std::vector<double> matrix,
                                    std::vector<std::size_t> demand, std::size_t k,
                                    double power = 1.0) {
    detail::require(matrix.size() == n * n, "matrix must have n*n entries");
    auto at = [&](std::size_t i, std::size_t j) { return matrix[i * n + j]; };
    auto where = [](std::size_t i, std::size_t j) {
      return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (at(i, i) != 0.0) throw InputError("nonzero diagonal entry at " + where(i, i));
      for (std::size_t j = 0; j < n; ++j) {
        const double d = at(i, j);
        if (!std::isfinite(d) || d < 0.0) {
          throw InputError("negative or non-finite distance at " + where(i, j));
        }
        if (d != at(j, i)) throw InputError("asymmetric matrix at " + where(i, j));
      }
    }
    auto check = [&](std::size_t a, std::size_t b, std::size_t c) {
      if (!detail::triangle_holds(at(a, b), at(a, c), at(c, b))) {
        throw InputError("triangle inequality violated on triple (" + std::to_string(a) + "," +
                         std::to_string(b) + "," + std::to_string(c) + ")");
      }
    };
    if (n > 0 && n * n * n <= kTriangleSamples) {
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t c = 0; c < n; ++c) check(a, b, c);
    } else if (n > 0) {
      RandomSource rng(0x7472696eULL ^ n);
      for (std::size_t s = 0; s < kTriangleSamples; ++s) {
        check(rng.uniform_index(n), rng.uniform_index(n), rng.uniform_index(n));
      }
    }
    auto store = std::make_shared<detail::PointStore>();
    store->n = n;
    store->matrix = std::move(matrix);
    store->euclidean = false;
    return MetricInstance(std::move(store), std::move(demand), k, power, {});
  }

  // Copies share the immutable point store.
  MetricInstance with_demand(std::vector<std::size_t> demand) const {
    return MetricInstance(points_, std::move(demand), k_, power_, facilities_);
  }
  MetricInstance with_k(std::size_t k) const {
    return MetricInstance(points_, demand_, k, power_, facilities_);
  }
  MetricInstance with_power(double power) const {
    return MetricInstance(points_, demand_, k_, power, facilities_);
  }
  MetricInstance with_facilities(std::vector<std::size_t> facilities) const {
    return MetricInstance(points_, demand_, k_, power_, std::move(facilities));
  }

  std::size_t size() const { return points_->n; }
  bool is_euclidean() const { return points_->euclidean; }
  std::size_t dim() const { return points_->dim; }
  std::size_t k() const { return k_; }
  double power() const { return power_; }
  const std::vector<std::size_t>& demand() const { return demand_; }
  const std::vector<std::size_t>& facilities() const { return facilities_; }

  std::span<const double> coords(std::size_t i) const {
    detail::require(is_euclidean(), "coordinates requested from a matrix instance");
    check_index(i);
    return {points_->coords.data() + i * points_->dim, points_->dim};
  }
  const std::vector<double>& raw_coords() const { return points_->coords; }
  const std::vector<double>& raw_matrix() const { return points_->matrix; }

  double distance(std::size_t u, std::size_t v) const {
    check_index(u);
    check_index(v);
    return distance_unchecked(u, v);
  }

  double powered_distance(std::size_t u, std::size_t v) const {
    return raise(distance(u, v));
  }

  double distance_unchecked(std::size_t u, std::size_t v) const {
    const auto& s = *points_;
    if (!s.euclidean) return s.matrix[u * s.n + v];
    const double* a = s.coords.data() + u * s.dim;
    const double* b = s.coords.data() + v * s.dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < s.dim; ++j) {
      const double diff = a[j] - b[j];
      acc += diff * diff;
    }
    return std::sqrt(acc);
  }

  /// `d` raised to the objective power.
  double raise(double d) const {
    if (power_ == 1.0) return d;
    if (power_ == 2.0) return d * d;
    return std::pow(d, power_);
  }

 private:
  MetricInstance(std::shared_ptr<const detail::PointStore> points, std::vector<std::size_t> demand,
                 std::size_t k, double power, std::vector<std::size_t> facilities)
      : points_(std::move(points)), demand_(std::move(demand)), k_(k), power_(power),
        facilities_(std::move(facilities)) {
    const std::size_t n = points_->n;
    detail::require(n >= 1, "point set is empty");
    detail::require(std::isfinite(power_) && power_ >= 1.0, "power must be >= 1");
    if (facilities_.empty()) {
      facilities_.resize(n);
      std::iota(facilities_.begin(), facilities_.end(), std::size_t{0});
    } else {
      for (std::size_t f : facilities_) {
        detail::require(f < n, "facility index " + std::to_string(f) + " out of range");
      }
      std::vector<std::size_t> sorted = facilities_;
      std::sort(sorted.begin(), sorted.end());
      detail::require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                      "duplicate facility index");
    }
    for (std::size_t i = 0; i < demand_.size(); ++i) {
      detail::require(demand_[i] < n, "demand entry " + std::to_string(i) + " refers to point " +
                                          std::to_string(demand_[i]) + " outside the point set");
    }
    detail::require(k_ >= 1, "k must be positive");
    detail::require(k_ <= facilities_.size(), "k exceeds the number of candidate centers");
  }

  void check_index(std::size_t i) const {
    if (i >= points_->n) {
      throw InputError("point index " + std::to_string(i) + " out of range (n = " +
                       std::to_string(points_->n) + ")");
    }
  }

  std::shared_ptr<const detail::PointStore> points_;
  std::vector<std::size_t> demand_;
  std::size_t k_;
  double power_;
  std::vector<std::size_t> facilities_;
};

struct ClusteringSolution {
  std::vector<std::size_t> centers;
  double cost = 0.0;
  /// Per demand entry, the point index of its serving center.
  std::vector<std::size_t> assignment;
};

inline double distance(const MetricInstance& inst, std::size_t u, std::size_t v) {
  return inst.distance(u, v);
}

inline double powered_distance(const MetricInstance& inst, std::size_t u, std::size_t v) {
  return inst.powered_distance(u, v);
}

enum class DiameterMode { kExact, kFarthestPointSweep };

struct DiameterEstimate {
  double value = 0.0;
  /// False when `value` is the farthest-point upper bound 2 * max_u d(p0, u),
  /// which lies within a factor 2 of the true diameter.
  bool exact = true;
};

/// Largest pairwise (un-powered) distance over all of V.
inline double diameter(const MetricInstance& inst) {
  const std::size_t n = inst.size();
  double best = 0.0;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) best = std::max(best, inst.distance_unchecked(u, v));
  return best;
}

inline DiameterEstimate diameter_estimate(const MetricInstance& inst, DiameterMode mode) {
  if (mode == DiameterMode::kExact) return {diameter(inst), true};
  double radius = 0.0;
  for (std::size_t v = 1; v < inst.size(); ++v) radius = std::max(radius, inst.distance_unchecked(0, v));
  return {2.0 * radius, false};
}

/// Positions j in `restrict` (indices into inst.demand()) whose demand point
/// lies in the closed ball of `radius` around `center`.
inline std::vector<std::size_t> ball(const MetricInstance& inst, std::size_t center, double radius,
                                     std::span<const std::size_t> restrict) {
  detail::require(radius >= 0.0, "ball radius must be nonnegative");
  inst.distance(center, center);
  std::vector<std::size_t> out;
  for (std::size_t j : restrict) {
    detail::require(j < inst.demand().size(), "demand position out of range");
    if (inst.distance_unchecked(center, inst.demand()[j]) <= radius) out.push_back(j);
  }
  return out;
}

/// Index into `centers` of the nearest center to point `v`; ties go to the
/// lowest point index.
inline std::size_t nearest_center(const MetricInstance& inst, std::size_t v,
                                  std::span<const std::size_t> centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = inst.distance_unchecked(v, centers[c]);
    if (d < best_d || (d == best_d && centers[c] < centers[best])) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

/// Objective value of `centers` on the demand multiset.
inline ClusteringSolution clustering_cost(const MetricInstance& inst,
                                          std::span<const std::size_t> centers) {
  detail::require(!centers.empty(), "center set is empty");
  for (std::size_t c : centers) inst.distance(c, c);
  ClusteringSolution sol;
  sol.centers.assign(centers.begin(), centers.end());
  sol.assignment.reserve(inst.demand().size());
  for (std::size_t v : inst.demand()) {
    const std::size_t c = centers[nearest_center(inst, v, centers)];
    sol.assignment.push_back(c);
    sol.cost += inst.raise(inst.distance_unchecked(v, c));
  }
  return sol;
}

}  // namespace dpcluster
