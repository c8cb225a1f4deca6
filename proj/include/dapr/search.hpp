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

#ifndef DAPR_SEARCH_HPP
#define DAPR_SEARCH_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dapr/data.hpp"
#include "dapr/depgraph.hpp"
#include "dapr/model_ir.hpp"
#include "dapr/prune.hpp"
#include "dapr/runtime.hpp"

namespace dapr::search {

/// Arithmetic grid of pruning levels {lower, lower+step, ..., upper} and the
/// level probed first.
struct LevelGrid {
  double lower = 5.0;
  double upper = 95.0;
  double step = 5.0;
  double start = 50.0;

  /// Throws ConfigError unless lower <= start <= upper, the span is a whole
  /// number of steps and start lies on the grid.
  void validate() const;
  int size() const;
  double level(int index) const;
  int index_of(double level) const;
  std::vector<double> levels() const;
};

enum class Acceptance { Baseline, Explicit };

struct SearchConfig {
  LevelGrid grid;
  int n_f = 5;
  int n_r = 25;
  prune::RankingScope scope = prune::RankingScope::Global;
  deps::ResidualPolicy residual_policy = deps::ResidualPolicy::TieGroup;
  Acceptance acceptance = Acceptance::Baseline;
  double explicit_target = 0.0;
  /// When set, retraining is replaced by the predicate "level <= threshold"
  /// (val accuracy 1 or 0 against a target of 1). Used to exercise the
  /// search and sweep plumbing without training.
  std::optional<double> synthetic_threshold;

  void validate() const;
};

/// Learning rates of the original training run, reused for finetuning and
/// retraining.
struct LrPolicy {
  /// Last rate of the original schedule; finetuning runs at it.
  double final_lr = 0.001;
  /// Second-highest rate of the original schedule; retraining starts there.
  double second_lr = 0.01;
  double gamma = 0.1;
  std::vector<int> retrain_decay_epochs = {15, 25};
};

/// Train, validation and test partitions of one dataset.
struct Splits {
  data::Dataset train;
  data::Dataset val;
  data::Dataset test;

  Splits restrict_to(const std::set<std::int32_t> &classes) const;
};

/// Outcome of probing one level during the bisection.
struct LevelOutcome {
  bool success = false;
  double achieved_level = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::int64_t peak_memory_estimate = 0;
  std::string provenance;
};

struct TraceEntry {
  int iteration = 0;
  double level = 0.0;
  bool success = false;
  double achieved_level = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double wall_seconds = 0.0;
  /// Parameter bytes of the shrunk model.
  std::int64_t peak_memory_estimate = 0;
  /// Digest of the weights the level was pruned from.
  std::string provenance;
};

using LevelEvaluator = std::function<LevelOutcome(double level)>;

struct BisectionResult {
  std::optional<double> converged_level;
  std::vector<TraceEntry> trace;
};

/// Largest-success search over the grid. Keeps the highest succeeding index
/// S and the lowest failing index F (initially -1 and size); after a success
/// the next probe is ceil((S+F)/2), after a failure floor((S+F)/2); stops
/// once F - S <= 1.
BisectionResult bisect(const LevelGrid &grid, const LevelEvaluator &evaluate);

struct SearchResult {
  std::optional<double> converged_level;
  double baseline_accuracy = 0.0;
  std::vector<TraceEntry> trace;
  std::string finetuned_provenance;
  std::optional<prune::PrunePlan> best_plan;
  std::optional<ir::ModelGraph> best_graph;
  nn::WeightStore best_weights;
};

/// Stable digest of a weight store (FNV-1a over names, shapes and bytes).
std::string weights_fingerprint(const nn::WeightStore &weights);

/// Validation accuracy of the deployed model on the subset's records.
double baseline_accuracy(const ir::ModelGraph &graph, const nn::WeightStore &weights, const data::Dataset &val,
                         const data::SubsetSpec &subset);

/// n_f epochs on the subset at the constant final rate; best-val checkpoint.
nn::TrainResult finetune(const ir::ModelGraph &graph, const nn::WeightStore &weights, const Splits &subset, int n_f,
                         const LrPolicy &lr, const nn::TrainConfig &base);

/// Prunes `source` to `level`, retrains for `epochs` on `splits` with the
/// retraining schedule, and evaluates. InfeasibleTarget yields a failed
/// outcome with achieved_level 0.
struct RetrainOutcome {
  bool feasible = false;
  prune::PrunePlan plan;
  std::optional<ir::ModelGraph> graph;
  nn::WeightStore weights;
  double val_accuracy = 0.0;
};
RetrainOutcome prune_and_retrain(const ir::ModelGraph &graph, const nn::WeightStore &source,
                                 const deps::DependencyMap &depmap, double level, const Splits &splits, int epochs,
                                 const SearchConfig &config, const LrPolicy &lr, const nn::TrainConfig &base);

/// Finetune once, then bisect over the grid, pruning every probed level from
/// the finetuned weights and retraining for n_r epochs on the subset.
/// Success means validation accuracy >= a* (or the explicit target).
SearchResult dapr_search(const ir::ModelGraph &graph, const nn::WeightStore &weights, const Splits &subset,
                         const data::SubsetSpec &spec, const SearchConfig &config, const nn::TrainConfig &base,
                         const LrPolicy &lr);

enum class SweepMode { SubsetAware, SubsetAgnostic, Unpruned };
std::string to_string(SweepMode mode);
/// Accepts "subset_aware"/"subset-aware" and the like. Throws ConfigError.
SweepMode parse_sweep_mode(const std::string &text);

struct SweepRow {
  std::string mode;
  double target_level = 0.0;
  double achieved_level = 0.0;
  double test_acc = 0.0;
  double val_acc = 0.0;
  double giga_ops = 0.0;
  double latency_ms = 0.0;
  std::int64_t params = 0;
  double wall_seconds = 0.0;
};

struct SweepOptions {
  std::vector<SweepMode> modes = {SweepMode::SubsetAware, SweepMode::SubsetAgnostic, SweepMode::Unpruned};
  /// Grid levels to visit; empty means the whole grid.
  std::vector<double> levels;
  int latency_batch = 1;
  int latency_repetitions = 10;
};

/// Exhaustive tradeoff table. subset_aware: finetune on the subset, prune,
/// retrain n_r epochs on the subset. subset_agnostic: prune the deployed
/// weights, retrain n_f + n_r epochs on the full dataset. unpruned: one row
/// for the deployed model. Accuracies are measured on the subset.
std::vector<SweepRow> oracle_sweep(const ir::ModelGraph &graph, const nn::WeightStore &weights, const Splits &full,
                                   const data::SubsetSpec &spec, const SearchConfig &config,
                                   const nn::TrainConfig &base, const LrPolicy &lr, const SweepOptions &options);

std::string sweep_csv_header();
std::string write_sweep_csv(const std::vector<SweepRow> &rows);
/// Throws SchemaError on a malformed table.
std::vector<SweepRow> parse_sweep_csv(const std::string &text);

struct DivergenceReport {
  std::map<std::string, double> per_layer;
  double overall = 0.0;
  std::size_t pair_count = 0;
};

/// Per layer 100 * (1 - |A n B| / |A|) over removed-index sets; overall uses
/// the summed counts. Throws PlanMismatch when the plans differ in layers or
/// per-layer selection sizes.
DivergenceReport filter_divergence(const prune::PrunePlan &a, const prune::PrunePlan &b);
/// Mean of filter_divergence over all unordered pairs.
DivergenceReport pairwise_divergence(const std::vector<prune::PrunePlan> &plans);

std::string serialize_search_result(const SearchResult &result);

struct ParetoPoint {
  int bucket = 0;
  double bucket_low_ms = 0.0;
  double bucket_high_ms = 0.0;
  SweepRow row;
  /// Unpruned GOps divided by this row's GOps.
  double gops_ratio = 0.0;
  /// Percentage of parameter memory removed relative to the unpruned row.
  double memory_reduction = 0.0;
};

/// Best test accuracy per latency bucket over the pruned rows; buckets split
/// [min, max] latency into `buckets` equal intervals and empty buckets are
/// skipped. Needs an unpruned row as reference. Throws SchemaError.
std::vector<ParetoPoint> pareto_summary(const std::vector<SweepRow> &rows, int buckets);

} // namespace dapr::search

#endif
