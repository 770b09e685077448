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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "dpcluster/error.hpp"
#include "dpcluster/metric.hpp"

namespace dpcluster {

struct CandidateMode {
  enum class Kind { kIdentity, kGrid };
  Kind kind = Kind::kIdentity;
  double cell = 1.0;  // grid only

  static CandidateMode identity() { return {}; }
  static CandidateMode grid(double h) { return {Kind::kGrid, h}; }
};

/// Candidate centers for Euclidean data.
///
/// identity: facilities are the input points themselves.
/// grid(h): every input point rounded to the nearest corner of an
/// axis-aligned grid of cell width h, deduplicated. The corners are appended
/// after the input points (so demand indices stay valid) and become the only
/// facilities. Each demand point is within h * sqrt(d) / 2 of a facility.
inline MetricInstance euclidean_candidate_provider(const MetricInstance& inst, CandidateMode mode) {
  detail::require(inst.is_euclidean(), "candidate provider needs Euclidean coordinates");
  if (mode.kind == CandidateMode::Kind::kIdentity) return inst.with_facilities({});

  const double h = mode.cell;
  detail::require(std::isfinite(h) && h > 0.0, "grid cell width must be positive");
  const std::size_t dim = inst.dim();
  std::map<std::vector<double>, std::size_t> corners;
  std::vector<double> corner(dim);
  for (std::size_t v = 0; v < inst.size(); ++v) {
    const auto x = inst.coords(v);
    for (std::size_t a = 0; a < dim; ++a) corner[a] = h * std::round(x[a] / h) + 0.0;
    corners.emplace(corner, 0);
  }
  std::vector<double> coords = inst.raw_coords();
  std::vector<std::size_t> facilities;
  std::size_t next = inst.size();
  for (auto& [c, index] : corners) {
    coords.insert(coords.end(), c.begin(), c.end());
    index = next;
    facilities.push_back(next++);
  }
  return MetricInstance::euclidean(std::move(coords), dim, inst.demand(), inst.k(), inst.power())
      .with_facilities(std::move(facilities));
}

}  // namespace dpcluster
