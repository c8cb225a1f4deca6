/*
 * Copyright 2026 The dapr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance suite: one PASS/FAIL line per criterion. With arguments, runs
// only the listed criterion numbers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "dapr/data.hpp"
#include "dapr/depgraph.hpp"
#include "dapr/errors.hpp"
#include "dapr/fixtures.hpp"
#include "dapr/prune.hpp"
#include "dapr/runtime.hpp"
#include "dapr/search.hpp"
#include "oracles.hpp"

using namespace dapr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
  std::vector<std::string> failures;

  void expect(bool ok, const std::string &what) {
    if (ok) return;
    pass = false;
    if (failures.size() < 5) failures.push_back(what);
  }
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

/// Scratch directory removed on scope exit.
struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("dapr-accept-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int run_cli(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

// ---------------------------------------------------------------------------

Verdict mask_vs_shrink() {
  Verdict v;
  std::mt19937_64 rng(101);
  double worst = 0.0;
  int checked = 0, infeasible = 0;
  for (const auto &name : fixtures::architecture_names()) {
    const auto g = fixtures::by_name(name);
    const auto dm = deps::compute_dependencies(g);
    const auto batch = testing::random_batch(g, 4, 7);
    for (double level : {10.0, 30.0, 50.0, 70.0, 90.0}) {
      for (int trial = 0; trial < 25; ++trial) {
        prune::PrunePlan plan;
        try {
          plan = testing::random_level_plan(g, dm, level, rng);
        } catch (const InfeasibleTarget &) {
          ++infeasible;
          v.expect(false, name + " at " + fmt(level) + "% is infeasible");
          continue;
        }
        const auto w = testing::random_weights(g, rng());
        const auto [shrunk, remap] = prune::shrink_graph(g, plan);
        const auto masked = nn::forward(g, testing::masked_weights(g, w, plan.removals), batch);
        const auto small = nn::forward(shrunk, prune::transfer_weights(w, plan, remap), batch);
        const double d = testing::max_abs_diff(masked.data, small.data);
        worst = std::max(worst, d);
        v.expect(d <= 1e-4, name + " at " + fmt(level) + "%: diff " + fmt(d));
        ++checked;
      }
    }
  }
  v.detail = std::to_string(checked) + " plans, max |logit diff| " + fmt(worst) +
             (infeasible ? ", " + std::to_string(infeasible) + " infeasible" : "");
  return v;
}

Verdict gradient_check() {
  Verdict v;
  std::vector<ir::ModelGraph> graphs{fixtures::toy2(), fixtures::tiny_alexnet(3, 8), fixtures::tiny_resnet(3, 8),
                                     fixtures::tiny_mobilenetv2(3, 8), fixtures::tiny_squeezenet(3, 8)};
  std::set<ir::LayerKind> kinds;
  bool depthwise = false;
  double worst = 0.0;
  int probes = 0, kinks = 0;
  for (const auto &g : graphs) {
    for (const auto &n : g.nodes()) {
      kinds.insert(n.kind);
      depthwise = depthwise || n.annotations.depthwise;
    }
    const auto w = testing::random_weights(g, 4).cast<double>();
    const auto x = testing::random_batch(g, 3, 5).cast<double>();
    std::vector<std::int32_t> labels{0, 1, static_cast<std::int32_t>(g.num_classes() - 1)};
    for (auto mode : {nn::Mode::Train, nn::Mode::Eval}) {
      const auto analytic = nn::loss_and_gradients(g, w, x, labels, mode);
      std::mt19937_64 rng(6);
      for (const auto &name : nn::learnable_names(g)) {
        const auto &grad = analytic.grads.at(name).data;
        for (int probe = 0; probe < 4; ++probe) {
          const auto j = std::uniform_int_distribution<std::size_t>(0, grad.size() - 1)(rng);
          const double h = 1e-5;
          auto central = [&](double step) {
            auto plus = w, minus = w;
            plus.at(name).data[j] += step;
            minus.at(name).data[j] -= step;
            return (nn::loss_and_gradients(g, plus, x, labels, mode).loss -
                    nn::loss_and_gradients(g, minus, x, labels, mode).loss) /
                   (2 * step);
          };
          const double numeric = central(h);
          // A ReLU or max-pool kink inside [-h, h] makes the estimate depend
          // on the step; smooth stretches agree to O(h^2).
          if (std::fabs(numeric - central(h / 10)) > 1e-6 * (1.0 + std::fabs(numeric))) {
            ++kinks;
            continue;
          }
          const double rel = std::fabs(numeric - grad[j]) / std::max({std::fabs(numeric), std::fabs(grad[j]), 1e-4});
          worst = std::max(worst, rel);
          v.expect(rel <= 1e-4, g.name() + "/" + name + "[" + std::to_string(j) + "] rel " + fmt(rel));
          ++probes;
        }
      }
    }
  }
  v.expect(kinds.size() == 9, "only " + std::to_string(kinds.size()) + " of 9 layer kinds covered");
  v.expect(depthwise, "no depthwise convolution covered");
  v.detail = std::to_string(probes) + " probes over " + std::to_string(kinds.size()) +
             " layer kinds, max rel error " + fmt(worst) + ", " + std::to_string(kinks) + " kink probes skipped";
  return v;
}

/// Removals that zero out a layer or index past its filter count.
deps::Removals structural_violation(const deps::DependencyMap &dm, std::mt19937_64 &rng) {
  const auto units = dm.units();
  const auto &unit = units[std::uniform_int_distribution<std::size_t>(0, units.size() - 1)(rng)];
  std::vector<std::int64_t> idx;
  if (rng() % 2 == 0) {
    idx.resize(static_cast<std::size_t>(unit.filters));
    std::iota(idx.begin(), idx.end(), 0);
  } else {
    idx.push_back(unit.filters + std::uniform_int_distribution<std::int64_t>(0, 8)(rng));
  }
  deps::Removals r;
  for (const auto &m : unit.members) r[m] = idx;
  return r;
}

Verdict dependency_fuzz() {
  Verdict v;
  std::mt19937_64 rng(303);
  std::ostringstream detail;
  for (const auto &name : fixtures::architecture_names()) {
    const auto g = fixtures::by_name(name);
    const auto dm = deps::compute_dependencies(g);
    int valid = 0, rejected = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto removals = testing::random_respecting_removals(dm, rng);
      try {
        v.expect(deps::validate_plan_against_deps(dm, removals).empty(), name + ": respecting plan flagged");
        const auto plan = prune::plan_from_removals(g, removals);
        const auto shrunk = prune::shrink_graph(g, plan).first;
        ir::parse_model(ir::serialize_model(shrunk));
        ++valid;
      } catch (const Error &e) {
        v.expect(false, name + ": " + e.what());
      }
    }
    for (int i = 0; i < 1000; ++i) {
      const auto removals =
          dm.sets.empty() ? structural_violation(dm, rng) : testing::random_violating_removals(dm, rng);
      const auto found = deps::validate_plan_against_deps(dm, removals);
      if (!found.empty()) ++rejected;
      v.expect(!found.empty(), name + ": violating plan accepted");
    }
    detail << name << " " << valid << "/" << rejected << (dm.sets.empty() ? " (structural)" : " (coupling)") << "; ";
  }
  v.detail = "shrunk/rejected per fixture: " + detail.str();
  return v;
}

void check_tight(Verdict &v, const ir::ModelGraph &g, const prune::PrunePlan &plan, const std::string &label) {
  const auto orig = ir::count_params(g).total_params;
  const auto now = ir::count_params(prune::shrink_graph(g, plan).first).total_params;
  v.expect(plan.original_params == orig && plan.removed_params == orig - now, label + ": recount differs");
  const double expected = 100.0 * static_cast<double>(orig - now) / static_cast<double>(orig);
  v.expect(plan.achieved_level == expected, label + ": achieved level " + fmt(plan.achieved_level, 17) +
                                                " vs recount " + fmt(expected, 17));
  v.expect(static_cast<double>(now) / static_cast<double>(orig) == 1.0 - plan.achieved_level / 100.0 ||
               std::fabs(static_cast<double>(now) / static_cast<double>(orig) - (1.0 - plan.achieved_level / 100.0)) <=
                   4 * std::numeric_limits<double>::epsilon(),
           label + ": ratio differs");
  v.expect(plan.achieved_level >= plan.target_level, label + ": below target");
  if (plan.steps.empty()) {
    v.expect(plan.target_level == 0.0, label + ": no steps for a positive target");
    return;
  }
  const auto before = plan.removed_params - plan.steps.back().params_removed;
  v.expect(100.0 * static_cast<double>(before) < plan.target_level * static_cast<double>(orig),
           label + ": last step was unnecessary");
}

Verdict tightness() {
  Verdict v;
  std::mt19937_64 rng(404);
  int plans = 0;
  for (const auto &name : fixtures::architecture_names()) {
    const auto g = fixtures::by_name(name);
    const auto w = testing::random_weights(g, 9);
    for (auto policy : {deps::ResidualPolicy::TieGroup, deps::ResidualPolicy::SkipFinal}) {
      const auto dm = deps::compute_dependencies(g, policy);
      for (auto scope : {prune::RankingScope::Global, prune::RankingScope::PerLayer}) {
        for (double level = 5.0; level <= 95.0; level += 5.0) {
          try {
            check_tight(v, g, prune::plan_for_level(g, w, dm, level, scope), name + "@" + fmt(level));
            ++plans;
          } catch (const InfeasibleTarget &e) {
            v.expect(e.max_level() < level, name + ": infeasible target below the reported maximum");
          }
        }
      }
      for (int i = 0; i < 20; ++i) {
        const double level = std::uniform_real_distribution<double>(1.0, 90.0)(rng);
        try {
          check_tight(v, g, testing::random_level_plan(g, dm, level, rng), name + " random@" + fmt(level));
          ++plans;
        } catch (const InfeasibleTarget &) {
        }
      }
    }
  }
  v.detail = std::to_string(plans) + " plans (L1 and random scores, both scopes and residual policies)";
  return v;
}

Verdict search_oracle() {
  Verdict v;
  const auto g = fixtures::toy2();
  const auto w = testing::random_weights(g, 5);
  data::SyntheticParams p;
  p.num_classes = g.num_classes();
  p.train_per_class = 4;
  p.test_per_class = 2;
  p.height = g.input_shape().height();
  p.width = g.input_shape().width();
  const auto [train, test] = data::generate_synthetic(p);
  const auto stats = data::compute_norm_stats(train);
  auto [tr, val] = nn::split_train_val(data::to_dataset(train, stats), 0.25, 1);
  const search::Splits full{tr, val, data::to_dataset(test, stats)};
  const data::SubsetSpec spec{"all", {0, 1}};

  std::mt19937_64 rng(505);
  std::size_t most = 0;
  for (int i = 0; i < 200; ++i) {
    search::SearchConfig cfg;
    cfg.synthetic_threshold = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
    const auto result = search::dapr_search(g, w, full.restrict_to(spec.class_ids), spec, cfg, {}, {});
    search::SweepOptions opt;
    opt.modes = {search::SweepMode::SubsetAware};
    std::optional<double> expected;
    for (const auto &row : search::oracle_sweep(g, w, full, spec, cfg, {}, {}, opt))
      if (row.val_acc >= 1.0) expected = std::max(expected.value_or(row.target_level), row.target_level);
    v.expect(result.converged_level == expected,
             "threshold " + fmt(*cfg.synthetic_threshold) + ": search " +
                 (result.converged_level ? fmt(*result.converged_level) : "none") + " vs sweep " +
                 (expected ? fmt(*expected) : "none"));
    most = std::max(most, result.trace.size());
    v.expect(result.trace.size() <= 6, "threshold " + fmt(*cfg.synthetic_threshold) + " took " +
                                           std::to_string(result.trace.size()) + " evaluations");
  }
  v.detail = "200 thresholds on the 19-level grid, at most " + std::to_string(most) + " evaluations";
  return v;
}

/// Mean subset test accuracy over levels >= 50 for both modes, one model and seed.
std::pair<double, double> directional_trial(const std::string &arch, std::uint64_t seed) {
  data::SyntheticParams p;
  p.num_classes = 10;
  p.train_per_class = 100;
  p.test_per_class = 100;
  p.height = p.width = 16;
  p.noise = 48.0;
  p.seed = seed;
  const auto [train, test] = data::generate_synthetic(p);
  const auto stats = data::compute_norm_stats(train);
  auto [tr, val] = nn::split_train_val(data::to_dataset(train, stats), 0.2, seed);
  const search::Splits full{tr, val, data::to_dataset(test, stats)};
  const auto spec = data::resolve_subset("three", {"random:3"}, train, seed);

  const auto g = fixtures::by_name(arch, 10, 16);
  nn::TrainConfig tc;
  tc.batch_size = 16;
  tc.epochs = 6;
  tc.seed = seed;
  tc.lr_schedule = nn::LrSchedule{0.05, {6}, 0.1};
  tc.augment = nn::AugmentConfig::none();
  const auto deployed = nn::train_on_split(g, nn::init_weights(g, seed), full.train, full.val, tc).best_weights;

  search::SearchConfig sc;
  sc.n_f = 2;
  sc.n_r = 10;
  search::LrPolicy lr;
  lr.second_lr = 0.02;
  lr.final_lr = 0.002;
  lr.retrain_decay_epochs = {6};
  search::SweepOptions opt;
  opt.modes = {search::SweepMode::SubsetAware, search::SweepMode::SubsetAgnostic};
  opt.levels = {50, 70, 90};
  const auto rows = search::oracle_sweep(g, deployed, full, spec, sc, tc, lr, opt);
  double aware = 0, agnostic = 0;
  int na = 0, ng = 0;
  for (const auto &r : rows) {
    if (r.mode == "subset_aware") {
      aware += r.test_acc;
      ++na;
    } else if (r.mode == "subset_agnostic") {
      agnostic += r.test_acc;
      ++ng;
    }
  }
  return {na ? aware / na : 0.0, ng ? agnostic / ng : 0.0};
}

Verdict directional() {
  Verdict v;
  std::ostringstream detail;
  for (const std::string arch : {"tiny-resnet", "tiny-mobilenetv2"}) {
    int wins = 0;
    double gap = 0.0;
    detail << arch << " (aware/agnostic %:";
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto [aware, agnostic] = directional_trial(arch, seed);
      wins += aware >= agnostic;
      gap += (aware - agnostic) / 5.0;
      detail << " " << fmt(100.0 * aware) << "/" << fmt(100.0 * agnostic);
    }
    v.expect(wins >= 4, arch + ": subset-aware ahead in only " + std::to_string(wins) + "/5 seeds");
    detail << ") " << wins << "/5 seeds, mean gap " << fmt(100.0 * gap) << "pp; ";
  }
  v.detail = detail.str();
  return v;
}

Verdict reporting() {
  Verdict v;
  TempDir tmp;
  const auto g = fixtures::tiny_alexnet(10, 32);
  const auto w = testing::random_weights(g, 3);
  data::SyntheticParams p;
  p.train_per_class = 4;
  p.test_per_class = 2;
  const auto [train, test] = data::generate_synthetic(p);
  const auto stats = data::compute_norm_stats(train);
  auto [tr, val] = nn::split_train_val(data::to_dataset(train, stats), 0.25, 1);
  const search::Splits full{tr, val, data::to_dataset(test, stats)};
  search::SearchConfig cfg;
  cfg.synthetic_threshold = 100.0;
  search::SweepOptions opt;
  opt.modes = {search::SweepMode::SubsetAware, search::SweepMode::Unpruned};
  opt.levels = {90};
  const auto csv = search::write_sweep_csv(search::oracle_sweep(g, w, full, {"all", {0, 1, 2}}, cfg, {}, {}, opt));
  cli::write_file(tmp.path / "sweep.csv", csv);
  cli::write_file(tmp.path / "sweep.meta.json", json{{"csv_sha256", cli::sha256_hex(csv)}}.dump());
  v.expect(run_cli({"report", (tmp.path / "sweep.csv").string(), "--buckets", "1", "--out-dir", tmp.path.string()}) == 0,
           "report command failed");

  // Independent recomputation from the table.
  const auto rows = search::parse_sweep_csv(cli::read_file(tmp.path / "sweep.csv"));
  const search::SweepRow *pruned = nullptr, *base = nullptr;
  for (const auto &r : rows) (r.mode == "unpruned" ? base : pruned) = &r;
  if (!pruned || !base) {
    v.expect(false, "sweep table lacks a pruned or an unpruned row");
    return v;
  }
  const double memory = 100.0 * (1.0 - static_cast<double>(pruned->params) / static_cast<double>(base->params));
  const double gops = base->giga_ops / pruned->giga_ops;
  v.expect(memory >= 85.0, "memory reduction " + fmt(memory) + "%");
  v.expect(gops >= 2.0, "GOps ratio " + fmt(gops));
  const auto pareto = json::parse(cli::read_file(tmp.path / "pareto.json"));
  if (pareto["points"].size() == 1) {
    v.expect(std::fabs(pareto["points"][0]["memory_reduction"].get<double>() - memory) < 1e-9,
             "report memory figure differs from the recomputation");
    v.expect(std::fabs(pareto["points"][0]["gops_ratio"].get<double>() - gops) < 1e-9,
             "report GOps figure differs from the recomputation");
  } else {
    v.expect(false, "report has " + std::to_string(pareto["points"].size()) + " points");
  }
  v.detail = "tiny-alexnet at 90%: memory reduction " + fmt(memory) + "%, GOps ratio " + fmt(gops) + "x";
  return v;
}

Verdict divergence() {
  Verdict v;
  const auto g = fixtures::tiny_alexnet();
  const auto dm = deps::compute_dependencies(g);
  const auto plan = prune::plan_for_level(g, testing::random_weights(g, 1), dm, 30.0);
  v.expect(search::filter_divergence(plan, plan).overall == 0.0, "identical plans diverge");

  // Disjoint selections of equal size: the first and the last k filters.
  deps::Removals low, high;
  for (const auto &[layer, n] : dm.conv_filters) {
    if (!dm.is_prunable(layer)) continue;
    const auto k = n / 2;
    for (std::int64_t i = 0; i < k; ++i) {
      low[layer].push_back(i);
      high[layer].push_back(n - k + i);
    }
  }
  const auto d = search::filter_divergence(prune::plan_from_removals(g, low), prune::plan_from_removals(g, high));
  v.expect(d.overall == 100.0, "disjoint plans diverge by " + fmt(d.overall) + "%");

  std::vector<prune::PrunePlan> plans;
  for (std::uint64_t s = 0; s < 5; ++s)
    plans.push_back(prune::plan_for_level(g, testing::random_weights(g, 10 + s), dm, 30.0, prune::RankingScope::PerLayer));
  const auto pw = search::pairwise_divergence(plans);
  v.expect(pw.pair_count == 10, "pair count " + std::to_string(pw.pair_count));
  double sum = 0.0;
  for (std::size_t i = 0; i < plans.size(); ++i)
    for (std::size_t j = i + 1; j < plans.size(); ++j) sum += search::filter_divergence(plans[i], plans[j]).overall;
  v.expect(std::fabs(pw.overall - sum / 10.0) < 1e-9, "pairwise mean differs from the 10-pair average");
  v.detail = "identical 0%, disjoint " + fmt(d.overall) + "%, " + std::to_string(pw.pair_count) + " pairs, mean " +
             fmt(pw.overall) + "%";
  return v;
}

Verdict ingestion() {
  Verdict v;
  std::mt19937_64 rng(909);
  std::uniform_int_distribution<int> byte(0, 255);
  int files = 0;
  for (auto format : {data::SourceFormat::Cifar10, data::SourceFormat::Cifar100}) {
    const bool hundred = format == data::SourceFormat::Cifar100;
    const auto record = data::cifar_record_size(format);
    for (int trial = 0; trial < 5; ++trial) {
      std::string bytes;
      const int records = 1 + trial * 7;
      for (int r = 0; r < records; ++r) {
        const int fine = std::uniform_int_distribution<int>(0, hundred ? 99 : 9)(rng);
        if (hundred) bytes.push_back(static_cast<char>(fine / 5));
        bytes.push_back(static_cast<char>(fine));
        for (int i = 0; i < 3072; ++i) bytes.push_back(static_cast<char>(byte(rng)));
      }
      v.expect(data::serialize_cifar(data::parse_cifar(bytes, format)) == bytes, "round trip differs");
      ++files;
      const auto cut = std::uniform_int_distribution<std::size_t>(1, record - 1)(rng);
      try {
        data::parse_cifar(bytes.substr(0, bytes.size() - cut), format);
        v.expect(false, "truncated file accepted");
      } catch (const FormatError &e) {
        v.expect(e.byte_offset() == (records - 1) * record, "truncation offset " + std::to_string(e.byte_offset()));
      }
      auto bad = bytes;
      const std::size_t at = (records - 1) * record + (hundred ? 1 : 0);
      bad[at] = static_cast<char>(hundred ? 100 : 10);
      try {
        data::parse_cifar(bad, format);
        v.expect(false, "out-of-range label accepted");
      } catch (const FormatError &e) {
        v.expect(e.byte_offset() == at, "label offset " + std::to_string(e.byte_offset()));
      }
    }
  }
  v.detail = std::to_string(files) + " files round-tripped; truncation and label errors carry offsets";
  return v;
}

json run_pipeline(const fs::path &dir) {
  json cfg{{"model", {{"fixture", "tiny-resnet"}, {"num_classes", 6}, {"spatial", 16}}},
           {"dataset",
            {{"format", "synthetic"},
             {"synthetic",
              {{"num_classes", 6}, {"train_per_class", 20}, {"test_per_class", 5}, {"height", 16}, {"width", 16}}}}},
           {"subset", {{"name", "pair"}, {"classes", {"random:2"}}}},
           {"train", {{"batch_size", 16}, {"epochs", 3}, {"lr", {{"initial", 0.05}, {"decay_epochs", {3}}}}}},
           {"search", {{"n_f", 1}, {"n_r", 3}, {"scope", "per-layer"}}},
           {"lr_policy", {{"final_lr", 0.002}, {"second_lr", 0.02}, {"retrain_decay_epochs", json::array()}}},
           {"output_dir", "out"},
           {"seed", 11}};
  cli::write_file(dir / "run.json", cfg.dump(2));
  const auto path = (dir / "run.json").string();
  for (const char *cmd : {"ingest", "train", "search"})
    if (run_cli({cmd, "--config", path}) != 0) return nullptr;
  auto doc = json::parse(cli::read_file(dir / "out" / "search.json"));
  for (auto &t : doc["trace"]) t.erase("wall_seconds");
  return doc;
}

Verdict determinism() {
  Verdict v;
  TempDir a, b;
  const auto first = run_pipeline(a.path);
  const auto second = run_pipeline(b.path);
  v.expect(!first.is_null() && !second.is_null(), "pipeline failed");
  if (first.is_null() || second.is_null()) return v;
  v.expect(first["converged_level"] == second["converged_level"], "converged levels differ");
  v.expect(first["trace"] == second["trace"], "traces differ");
  v.expect(first["converged_level"].is_number(), "search did not converge");
  v.detail = "converged_level " + first["converged_level"].dump() + " twice, " +
             std::to_string(first["trace"].size()) + " identical trace entries";
  return v;
}

} // namespace

int main(int argc, char **argv) {
  const std::vector<std::pair<const char *, std::function<Verdict()>>> criteria{
      {"mask-vs-shrink equivalence", mask_vs_shrink},
      {"gradient correctness", gradient_check},
      {"dependency correctness", dependency_fuzz},
      {"pruning-level tightness", tightness},
      {"search-oracle equivalence", search_oracle},
      {"directional subset-aware advantage", directional},
      {"memory and GOps reporting", reporting},
      {"divergence metric", divergence},
      {"ingestion bit-exactness", ingestion},
      {"end-to-end determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception &e) {
      v.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << ": " << criteria[i].first << " ["
              << fmt(secs) << "s] " << v.detail << "\n";
    for (const auto &f : v.failures) std::cout << "    " << f << "\n";
    std::cout.flush();
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
