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

// Instance files and synthetic generators.
//
// Coordinate CSV:
//   id,x1,...,xd[,demand_mult]
//   0,0.5,1.25,2
// ids run 0..n-1 in order; demand_mult (default 1) is the number of demand
// copies of the point and may be 0.
//
// Distance-matrix JSON:
//   {"n": 3, "matrix": [0,1,2, 1,0,1, 2,1,0], "demand": [0, 2, 2]}
// matrix is row major, either flat or as nested rows.

#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpcluster/error.hpp"
#include "dpcluster/metric.hpp"
#include "dpcluster/random.hpp"

namespace dpcluster {

enum class InstanceFormat { kCoordinateCsv, kMatrixJson };

inline InstanceFormat parse_format(const std::string& name) {
  if (name == "csv") return InstanceFormat::kCoordinateCsv;
  if (name == "matrix-json") return InstanceFormat::kMatrixJson;
  throw InputError("unknown format '" + name + "' (expected csv or matrix-json)");
}

/// 17 significant digits, enough to parse back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_real(const std::string& text, const std::string& where) {
  if (text.empty()) throw IngestError(where + ": empty field");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw IngestError(where + ": '" + text + "' is not a finite number");
  }
  return v;
}

inline std::size_t parse_count(const std::string& text, const std::string& where) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    throw IngestError(where + ": '" + text + "' is not a nonnegative integer");
  }
  return static_cast<std::size_t>(std::stoull(text));
}

}  // namespace detail

inline MetricInstance parse_coordinate_csv(std::istream& in, std::size_t k, double power) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      header = detail::split_csv(line);
      break;
    }
  }
  if (header.empty()) throw IngestError("CSV has no header");
  if (header[0] != "id") throw IngestError("CSV header must start with 'id'");
  const bool has_mult = header.back() == "demand_mult";
  const std::size_t dim = header.size() - 1 - (has_mult ? 1 : 0);
  if (dim == 0) throw IngestError("CSV header has no coordinate columns");
  for (std::size_t a = 0; a < dim; ++a) {
    if (header[a + 1] != "x" + std::to_string(a + 1)) {
      throw IngestError("CSV header column " + std::to_string(a + 2) + " must be 'x" +
                        std::to_string(a + 1) + "', got '" + header[a + 1] + "'");
    }
  }

  std::vector<double> coords;
  std::vector<std::size_t> demand;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::string where = "CSV line " + std::to_string(line_no);
    const auto cells = detail::split_csv(line);
    if (cells.size() != header.size()) {
      throw IngestError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(cells.size()));
    }
    if (detail::parse_count(cells[0], where) != row) {
      throw IngestError(where + ": id " + cells[0] + " out of sequence (expected " + std::to_string(row) + ")");
    }
    for (std::size_t a = 0; a < dim; ++a) coords.push_back(detail::parse_real(cells[a + 1], where));
    const std::size_t mult = has_mult ? detail::parse_count(cells.back(), where) : 1;
    demand.insert(demand.end(), mult, row);
    ++row;
  }
  if (row == 0) throw IngestError("CSV has no points");
  return MetricInstance::euclidean(std::move(coords), dim, std::move(demand), k, power);
}

inline MetricInstance parse_matrix_json(const nlohmann::json& doc, std::size_t k, double power) {
  if (!doc.is_object() || !doc.contains("n") || !doc.contains("matrix")) {
    throw IngestError("matrix JSON needs fields 'n' and 'matrix'");
  }
  const auto n = doc.at("n").get<std::size_t>();
  std::vector<double> matrix;
  const auto& m = doc.at("matrix");
  if (!m.is_array()) throw IngestError("'matrix' must be an array");
  if (!m.empty() && m.front().is_array()) {
    if (m.size() != n) throw IngestError("'matrix' must have n rows");
    for (std::size_t i = 0; i < n; ++i) {
      if (!m[i].is_array() || m[i].size() != n) {
        throw IngestError("matrix row " + std::to_string(i) + " must have n entries");
      }
      for (const auto& x : m[i]) matrix.push_back(x.get<double>());
    }
  } else {
    if (m.size() != n * n) throw IngestError("'matrix' must have n*n entries");
    for (const auto& x : m) matrix.push_back(x.get<double>());
  }
  std::vector<std::size_t> demand;
  if (doc.contains("demand")) {
    demand = doc.at("demand").get<std::vector<std::size_t>>();
  } else {
    for (std::size_t i = 0; i < n; ++i) demand.push_back(i);
  }
  try {
    return MetricInstance::from_matrix(n, std::move(matrix), std::move(demand), k, power);
  } catch (const IngestError&) {
    throw;
  } catch (const InputError& e) {
    throw IngestError(std::string("matrix JSON: ") + e.what());
  }
}

/// Reads an instance file and validates it.
inline MetricInstance ingest(const std::string& path, InstanceFormat format, std::size_t k = 1,
                             double power = 1.0) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path + "'");
  if (format == InstanceFormat::kCoordinateCsv) return parse_coordinate_csv(in, k, power);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IngestError("'" + path + "' is not valid JSON: " + e.what());
  }
  try {
    return parse_matrix_json(doc, k, power);
  } catch (const nlohmann::json::exception& e) {
    throw IngestError("'" + path + "': " + e.what());
  }
}

inline std::vector<std::size_t> demand_multiplicity(const MetricInstance& inst) {
  std::vector<std::size_t> mult(inst.size(), 0);
  for (std::size_t v : inst.demand()) ++mult[v];
  return mult;
}

/// CSV text for a Euclidean instance. Demand order is not preserved, only
/// multiplicities.
inline std::string export_coordinate_csv(const MetricInstance& inst) {
  detail::require(inst.is_euclidean(), "CSV export needs Euclidean coordinates");
  std::string out = "id";
  for (std::size_t a = 0; a < inst.dim(); ++a) out += ",x" + std::to_string(a + 1);
  out += ",demand_mult\n";
  const auto mult = demand_multiplicity(inst);
  for (std::size_t v = 0; v < inst.size(); ++v) {
    out += std::to_string(v);
    for (double x : inst.coords(v)) out += "," + format_double(x);
    out += "," + std::to_string(mult[v]) + "\n";
  }
  return out;
}

inline nlohmann::ordered_json export_matrix_json(const MetricInstance& inst) {
  nlohmann::ordered_json doc;
  doc["n"] = inst.size();
  std::vector<double> matrix(inst.size() * inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i)
    for (std::size_t j = 0; j < inst.size(); ++j) matrix[i * inst.size() + j] = inst.distance_unchecked(i, j);
  doc["matrix"] = matrix;
  doc["demand"] = inst.demand();
  return doc;
}

/// planted(k*, n, separation, noise_sd, dim, seed), uniform(n, dim, seed)
/// or line(n, seed).
struct GeneratorSpec {
  enum class Kind { kPlanted, kUniform, kLine };
  Kind kind = Kind::kPlanted;
  std::size_t blobs = 3;
  std::size_t n = 30;
  double separation = 10.0;
  double noise_sd = 0.5;
  std::size_t dim = 2;
  std::uint64_t seed = 1;

  std::string to_string() const {
    switch (kind) {
      case Kind::kPlanted:
        return "planted(" + std::to_string(blobs) + "," + std::to_string(n) + "," + format_double(separation) +
               "," + format_double(noise_sd) + "," + std::to_string(dim) + "," + std::to_string(seed) + ")";
      case Kind::kUniform:
        return "uniform(" + std::to_string(n) + "," + std::to_string(dim) + "," + std::to_string(seed) + ")";
      case Kind::kLine:
        return "line(" + std::to_string(n) + "," + std::to_string(seed) + ")";
    }
    return {};
  }
};

inline GeneratorSpec parse_generator(const std::string& text) {
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') {
    throw InputError("generator spec must look like name(arg,...): '" + text + "'");
  }
  const std::string name = detail::trim(text.substr(0, open));
  const auto args = detail::split_csv(text.substr(open + 1, text.size() - open - 2));
  auto count = [&](std::size_t i) { return detail::parse_count(args[i], "generator argument " + std::to_string(i + 1)); };
  auto real = [&](std::size_t i) { return detail::parse_real(args[i], "generator argument " + std::to_string(i + 1)); };
  GeneratorSpec g;
  if (name == "planted") {
    if (args.size() != 6) throw InputError("planted needs (k*, n, separation, noise_sd, dim, seed)");
    g.kind = GeneratorSpec::Kind::kPlanted;
    g.blobs = count(0);
    g.n = count(1);
    g.separation = real(2);
    g.noise_sd = real(3);
    g.dim = count(4);
    g.seed = count(5);
    detail::require(g.blobs >= 1 && g.blobs <= g.n, "planted needs 1 <= k* <= n");
    detail::require(g.separation >= 0.0 && g.noise_sd >= 0.0, "planted needs nonnegative separation and noise");
  } else if (name == "uniform") {
    if (args.size() != 3) throw InputError("uniform needs (n, dim, seed)");
    g.kind = GeneratorSpec::Kind::kUniform;
    g.n = count(0);
    g.dim = count(1);
    g.seed = count(2);
  } else if (name == "line") {
    if (args.size() != 2) throw InputError("line needs (n, seed)");
    g.kind = GeneratorSpec::Kind::kLine;
    g.n = count(0);
    g.dim = 1;
    g.seed = count(1);
  } else {
    throw InputError("unknown generator '" + name + "' (expected planted, uniform or line)");
  }
  detail::require(g.n >= 1, "generator needs n >= 1");
  detail::require(g.dim >= 1, "generator needs dim >= 1");
  return g;
}

/// Deterministic given the spec. Every point carries one unit of demand.
///
/// planted: k* centroids drawn uniformly from a cube of side
/// 2 * separation * max(2, k*) and rejected until pairwise at least
/// `separation` apart; point i joins blob i mod k* with isotropic Gaussian
/// noise. uniform: points in [0,1]^dim. line: 1-d points in [0, n].
inline MetricInstance generate(const GeneratorSpec& spec, std::size_t k = 1, double power = 1.0) {
  RandomSource rng(spec.seed);
  std::vector<double> coords;
  coords.reserve(spec.n * spec.dim);
  switch (spec.kind) {
    case GeneratorSpec::Kind::kPlanted: {
      const double side = 2.0 * spec.separation * static_cast<double>(std::max<std::size_t>(2, spec.blobs));
      std::vector<double> centroids;
      std::size_t attempts = 0;
      while (centroids.size() < spec.blobs * spec.dim) {
        detail::require(++attempts < 100000, "planted: could not place separated centroids");
        std::vector<double> c(spec.dim);
        for (double& x : c) x = side * rng.uniform_open();
        bool ok = true;
        for (std::size_t b = 0; ok && b * spec.dim < centroids.size(); ++b) {
          double acc = 0.0;
          for (std::size_t a = 0; a < spec.dim; ++a) {
            const double d = c[a] - centroids[b * spec.dim + a];
            acc += d * d;
          }
          ok = std::sqrt(acc) >= spec.separation;
        }
        if (ok) centroids.insert(centroids.end(), c.begin(), c.end());
      }
      std::normal_distribution<double> noise(0.0, 1.0);
      for (std::size_t i = 0; i < spec.n; ++i) {
        const std::size_t b = i % spec.blobs;
        for (std::size_t a = 0; a < spec.dim; ++a) {
          coords.push_back(centroids[b * spec.dim + a] + spec.noise_sd * noise(rng));
        }
      }
      break;
    }
    case GeneratorSpec::Kind::kUniform:
      for (std::size_t i = 0; i < spec.n * spec.dim; ++i) coords.push_back(rng.uniform_open());
      break;
    case GeneratorSpec::Kind::kLine:
      for (std::size_t i = 0; i < spec.n; ++i) coords.push_back(static_cast<double>(spec.n) * rng.uniform_open());
      break;
  }
  std::vector<std::size_t> demand(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) demand[i] = i;
  return MetricInstance::euclidean(std::move(coords), spec.dim, std::move(demand), k, power);
}

}  // namespace dpcluster
