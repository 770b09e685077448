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

// dpcluster: command line front end.
//
//   dpcluster cluster  --input pts.csv --k 3 --epsilon-p 1 --seed 7 --out report.json
//   dpcluster bench    --generator "planted(3,30,10,0.5,2,1)" --trials 20 --seed 7
//   dpcluster generate --generator "uniform(100,2,5)" --out pts.csv
//   dpcluster validate --input dist.json --format matrix-json
//   dpcluster audit    --mechanism first-pick --samples 1000000 --seed 3
//
// Every flag can also be set from the environment as DPCLUSTER_<FLAG>, e.g.
// DPCLUSTER_EPSILON_P=0.5. Errors are printed to stderr as JSON and exit
// with status 2.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpcluster/dpcluster.hpp"

namespace {

using dpcluster::Json;

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw dpcluster::InputError("cannot write '" + out + "'");
  f << text;
}

std::string env_name(const std::string& flag) {
  std::string name = "DPCLUSTER_";
  for (char c : flag) name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

template <class T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& target, const std::string& help) {
  return app->add_option("--" + name, target, help)->envname(env_name(name))->capture_default_str();
}

void add_instance_options(CLI::App* app, dpcluster::ExperimentConfig& c) {
  flag(app, "input", c.input, "instance file");
  flag(app, "format", c.format, "csv | matrix-json")->check(CLI::IsMember({"csv", "matrix-json"}));
  flag(app, "generator", c.generator, "planted(k*,n,sep,sd,dim,seed) | uniform(n,dim,seed) | line(n,seed)");
  flag(app, "k", c.k, "number of centers");
  flag(app, "power", c.power, "objective power p (1 = k-medians, 2 = k-means)");
}

void add_experiment_options(CLI::App* app, dpcluster::ExperimentConfig& c) {
  add_instance_options(app, c);
  flag(app, "candidates", c.candidates, "identity | grid(h)");
  flag(app, "epsilon", c.epsilon, "utility parameter in (0, 0.6)");
  flag(app, "epsilon-p", c.epsilon_p, "privacy epsilon");
  flag(app, "delta-p", c.delta_p, "privacy delta in (0, 1)");
  flag(app, "solver", c.solver, "brute-force | local-search | lloyd");
  flag(app, "max-iters", c.solver_params.max_iters, "solver iteration cap");
  flag(app, "restarts", c.solver_params.restarts, "Lloyd restarts");
  flag(app, "seed", c.seed, "random seed")->required();
  flag(app, "trials", c.trials, "number of seeded trials");
  flag(app, "jobs", c.jobs, "concurrent trials");
  flag(app, "out", c.out, "output path (stdout when empty)");
  app->add_flag("--approximate-diameter", c.approximate_diameter,
                "farthest-point diameter bound instead of the exact O(n^2) scan")
      ->envname("DPCLUSTER_APPROXIMATE_DIAMETER");
}

Json audit_json(const dpcluster::AuditReport& r, const std::string& mechanism) {
  auto interval = [](const dpcluster::Interval& i) { return Json::array({i.lo, i.hi}); };
  Json j;
  j["mechanism"] = mechanism;
  j["claimed"] = {{"epsilon", r.claimed.epsilon}, {"delta", r.claimed.delta}};
  j["samples"] = r.samples;
  j["confidence"] = r.confidence;
  Json outcomes = Json::array();
  for (std::size_t i = 0; i < r.outcomes.size(); ++i) {
    outcomes.push_back({{"outcome", r.outcomes[i]},
                        {"freq_base", r.freq_base[i]},
                        {"ci_base", interval(r.ci_base[i])},
                        {"freq_variant", r.freq_variant[i]},
                        {"ci_variant", interval(r.ci_variant[i])}});
  }
  j["outcomes"] = outcomes;
  j["events_tested"] = r.events_tested;
  j["worst_ratio"] = std::isinf(r.worst_ratio) ? Json("inf") : Json(r.worst_ratio);
  j["epsilon_lower_bound"] = r.epsilon_lower_bound;
  const auto& w = r.worst_event;
  j["worst_event"] = {{"direction", w.direction},
                      {"outcomes", w.outcomes},
                      {"p_numerator", w.p_numerator},
                      {"ci_numerator", interval(w.ci_numerator)},
                      {"p_denominator", w.p_denominator},
                      {"ci_denominator", interval(w.ci_denominator)},
                      {"margin", w.margin}};
  j["pass"] = r.pass;
  j["verdict"] = r.verdict;
  return j;
}

struct AuditOptions {
  dpcluster::ExperimentConfig instance;
  std::string mechanism = "first-pick";
  std::size_t samples = 1000000;
  double radius = -1.0;
};

// Neighbor pair: the instance's demand and the same demand without its last
// entry.
Json run_audit(const AuditOptions& o) {
  const auto& c = o.instance;
  dpcluster::MetricInstance inst = [&] {
    if (!c.input.empty()) return dpcluster::ingest(c.input, dpcluster::parse_format(c.format), c.k, c.power);
    if (!c.generator.empty()) return dpcluster::generate(dpcluster::parse_generator(c.generator), c.k, c.power);
    return dpcluster::MetricInstance::euclidean({0.0, 1.0, 2.0, 10.0}, 1, {0, 1, 2, 3}, c.k, c.power);
  }();
  if (inst.demand().empty()) throw dpcluster::InputError("audit needs at least one demand point");
  std::vector<std::size_t> variant = inst.demand();
  variant.pop_back();
  const auto pair = dpcluster::make_neighbor_pair(inst.demand(), variant);
  const double eps_p = c.epsilon_p;
  const double n = static_cast<double>(inst.demand().size());

  if (o.mechanism == "first-pick") {
    // Targets are demand positions; balls over all positions at one radius.
    const double radius = o.radius >= 0.0 ? o.radius : dpcluster::diameter(inst) / 4.0;
    std::vector<std::size_t> all(inst.demand().size());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    std::vector<std::vector<std::size_t>> family;
    for (std::size_t v : inst.facilities()) family.push_back(dpcluster::ball(inst, v, radius, all));
    const double eps_prime = dpcluster::coverage_epsilon_prime(eps_p / 2.0, c.delta_p);
    dpcluster::FirstPickMechanism mech{dpcluster::CoverageInstance(all.size(), family), eps_prime};
    // Audited data are positions, so map the neighbor pair onto positions.
    std::vector<std::size_t> positions_variant(all.begin(), all.end() - 1);
    const auto position_pair = dpcluster::make_neighbor_pair(all, positions_variant);
    return audit_json(dpcluster::audit(mech, position_pair, o.samples, {eps_prime, 0.0}, c.seed), o.mechanism);
  }
  if (o.mechanism == "laplace-line" || o.mechanism == "laplace-line-misbudgeted") {
    const double scale = o.mechanism == "laplace-line" ? 2.0 / eps_p : 1.0 / eps_p;
    dpcluster::NoisyCountBucketMechanism mech{scale, n - 0.5};
    return audit_json(dpcluster::audit(mech, pair, o.samples, {eps_p / 2.0, 0.0}, c.seed), o.mechanism);
  }
  if (o.mechanism == "first-round") {
    dpcluster::FirstRoundMechanism mech{inst, {c.epsilon, {eps_p, c.delta_p}, dpcluster::DiameterMode::kExact}};
    return audit_json(dpcluster::audit(mech, pair, o.samples, {eps_p / 2.0, c.delta_p}, c.seed), o.mechanism);
  }
  throw dpcluster::InputError("unknown mechanism '" + o.mechanism + "'");
}

int fail(const std::string& type, const std::string& message) {
  Json err = {{"error", {{"type", type}, {"message", message}}}};
  std::cerr << err.dump(2) << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private k-medians / k-means clustering"};
  app.require_subcommand(1);

  dpcluster::ExperimentConfig cluster_cfg, bench_cfg;
  auto* cluster = app.add_subcommand("cluster", "run seeded private clustering trials on one instance");
  add_experiment_options(cluster, cluster_cfg);
  auto* bench = app.add_subcommand("bench", "run trials on freshly generated instances");
  add_experiment_options(bench, bench_cfg);

  dpcluster::ExperimentConfig gen_cfg;
  auto* generate = app.add_subcommand("generate", "write a synthetic instance");
  flag(generate, "generator", gen_cfg.generator, "generator spec")->required();
  flag(generate, "format", gen_cfg.format, "csv | matrix-json")->check(CLI::IsMember({"csv", "matrix-json"}));
  flag(generate, "out", gen_cfg.out, "output path (stdout when empty)");

  dpcluster::ExperimentConfig validate_cfg;
  validate_cfg.k = 1;
  auto* validate = app.add_subcommand("validate", "check an instance file");
  flag(validate, "input", validate_cfg.input, "instance file")->required();
  flag(validate, "format", validate_cfg.format, "csv | matrix-json")->check(CLI::IsMember({"csv", "matrix-json"}));
  flag(validate, "k", validate_cfg.k, "number of centers");
  flag(validate, "power", validate_cfg.power, "objective power");

  AuditOptions audit_opts;
  audit_opts.instance.k = 1;
  auto* audit = app.add_subcommand("audit", "Monte Carlo privacy audit on a neighbor pair");
  add_instance_options(audit, audit_opts.instance);
  flag(audit, "mechanism", audit_opts.mechanism, "first-pick | laplace-line | laplace-line-misbudgeted | first-round")
      ->check(CLI::IsMember({"first-pick", "laplace-line", "laplace-line-misbudgeted", "first-round"}));
  flag(audit, "samples", audit_opts.samples, "samples per side");
  flag(audit, "radius", audit_opts.radius, "ball radius for first-pick (default: diameter / 4)");
  flag(audit, "epsilon", audit_opts.instance.epsilon, "utility parameter (first-round)");
  flag(audit, "epsilon-p", audit_opts.instance.epsilon_p, "privacy epsilon");
  flag(audit, "delta-p", audit_opts.instance.delta_p, "privacy delta");
  flag(audit, "seed", audit_opts.instance.seed, "random seed")->required();
  flag(audit, "out", audit_opts.instance.out, "output path (stdout when empty)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cluster) {
      emit(dpcluster::run_experiment(cluster_cfg, false).dump(2) + "\n", cluster_cfg.out);
    } else if (*bench) {
      emit(dpcluster::run_experiment(bench_cfg, true).dump(2) + "\n", bench_cfg.out);
    } else if (*generate) {
      const auto inst = dpcluster::generate(dpcluster::parse_generator(gen_cfg.generator));
      emit(gen_cfg.format == "csv" ? dpcluster::export_coordinate_csv(inst)
                                   : dpcluster::export_matrix_json(inst).dump(2) + "\n",
           gen_cfg.out);
    } else if (*validate) {
      const auto inst = dpcluster::ingest(validate_cfg.input, dpcluster::parse_format(validate_cfg.format),
                                          validate_cfg.k, validate_cfg.power);
      Json j = {{"valid", true},
                {"n", inst.size()},
                {"metric", inst.is_euclidean() ? "euclidean" : "matrix"},
                {"dim", inst.dim()},
                {"demand_size", inst.demand().size()},
                {"diameter", dpcluster::diameter(inst)}};
      std::cout << j.dump(2) << "\n";
    } else if (*audit) {
      emit(run_audit(audit_opts).dump(2) + "\n", audit_opts.instance.out);
    }
  } catch (const dpcluster::IngestError& e) {
    return fail("ingest", e.what());
  } catch (const dpcluster::InputError& e) {
    return fail("input", e.what());
  } catch (const dpcluster::RefusalError& e) {
    return fail("refusal", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
