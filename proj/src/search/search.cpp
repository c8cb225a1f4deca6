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

#include <chrono>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

#include "dapr/errors.hpp"
#include "dapr/search.hpp"

namespace dapr::search {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

void LevelGrid::validate() const {
  if (!(step > 0.0)) throw ConfigError("grid step must be positive");
  if (!(lower >= 0.0 && upper < 100.0 && lower <= upper)) throw ConfigError("grid bounds must satisfy 0 <= p_l <= p_u < 100");
  const double span = (upper - lower) / step;
  if (std::fabs(span - std::round(span)) > 1e-9) throw ConfigError("p_u - p_l must be a multiple of p_i");
  if (start < lower || start > upper) throw ConfigError("p_0 must lie within [p_l, p_u]");
  const double off = (start - lower) / step;
  if (std::fabs(off - std::round(off)) > 1e-9) throw ConfigError("p_0 must lie on the grid");
}

int LevelGrid::size() const { return static_cast<int>(std::lround((upper - lower) / step)) + 1; }

double LevelGrid::level(int index) const {
  if (index < 0 || index >= size()) throw ConfigError("grid index out of range");
  return lower + step * index;
}

int LevelGrid::index_of(double value) const {
  const double off = (value - lower) / step;
  const auto idx = static_cast<int>(std::lround(off));
  if (std::fabs(off - idx) > 1e-9 || idx < 0 || idx >= size())
    throw ConfigError("level " + std::to_string(value) + " is not on the grid");
  return idx;
}

std::vector<double> LevelGrid::levels() const {
  std::vector<double> out;
  for (int i = 0; i < size(); ++i) out.push_back(level(i));
  return out;
}

void SearchConfig::validate() const {
  grid.validate();
  if (n_f < 0 || n_r < 0) throw ConfigError("n_f and n_r must be non-negative");
  if (acceptance == Acceptance::Explicit && !(explicit_target >= 0.0 && explicit_target <= 1.0))
    throw ConfigError("explicit target accuracy must lie in [0, 1]");
}

Splits Splits::restrict_to(const std::set<std::int32_t> &classes) const {
  return Splits{train.filter_classes(classes), val.filter_classes(classes), test.filter_classes(classes)};
}

BisectionResult bisect(const LevelGrid &grid, const LevelEvaluator &evaluate) {
  grid.validate();
  BisectionResult result;
  int succ = -1;
  int fail = grid.size();
  int cur = grid.index_of(grid.start);
  for (int iteration = 1;; ++iteration) {
    const auto t0 = std::chrono::steady_clock::now();
    const double level = grid.level(cur);
    const auto outcome = evaluate(level);
    TraceEntry e;
    e.iteration = iteration;
    e.level = level;
    e.success = outcome.success;
    e.achieved_level = outcome.achieved_level;
    e.val_accuracy = outcome.val_accuracy;
    e.test_accuracy = outcome.test_accuracy;
    e.peak_memory_estimate = outcome.peak_memory_estimate;
    e.provenance = outcome.provenance;
    e.wall_seconds = seconds_since(t0);
    result.trace.push_back(e);
    if (outcome.success)
      succ = cur;
    else
      fail = cur;
    if (fail - succ <= 1) break;
    cur = outcome.success ? (succ + fail + 1) / 2 : (succ + fail) / 2;
  }
  if (succ >= 0) result.converged_level = grid.level(succ);
  return result;
}

std::string weights_fingerprint(const nn::WeightStore &weights) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void *p, std::size_t n) {
    const auto *b = static_cast<const unsigned char *>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto &[name, t] : weights.tensors) {
    mix(name.data(), name.size());
    mix(t.shape.data(), t.shape.size() * sizeof(std::int64_t));
    mix(t.data.data(), t.data.size() * sizeof(float));
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

double baseline_accuracy(const ir::ModelGraph &graph, const nn::WeightStore &weights, const data::Dataset &val,
                         const data::SubsetSpec &subset) {
  return nn::evaluate(graph, weights, val.filter_classes(subset.class_ids)).accuracy;
}

namespace {

nn::TrainConfig with_schedule(const nn::TrainConfig &base, int epochs, double initial, std::vector<int> decays,
                              double gamma) {
  auto cfg = base;
  cfg.epochs = epochs;
  cfg.lr_schedule = nn::LrSchedule{initial, std::move(decays), gamma};
  return cfg;
}

} // namespace

nn::TrainResult finetune(const ir::ModelGraph &graph, const nn::WeightStore &weights, const Splits &subset, int n_f,
                         const LrPolicy &lr, const nn::TrainConfig &base) {
  return nn::train_on_split(graph, weights, subset.train, subset.val, with_schedule(base, n_f, lr.final_lr, {}, lr.gamma));
}

RetrainOutcome prune_and_retrain(const ir::ModelGraph &graph, const nn::WeightStore &source,
                                 const deps::DependencyMap &depmap, double level, const Splits &splits, int epochs,
                                 const SearchConfig &config, const LrPolicy &lr, const nn::TrainConfig &base) {
  RetrainOutcome out;
  try {
    out.plan = prune::plan_for_level(graph, source, depmap, level, config.scope);
  } catch (const InfeasibleTarget &) {
    return out;
  }
  out.feasible = true;
  auto [shrunk, remap] = prune::shrink_graph(graph, out.plan);
  auto w = prune::transfer_weights(source, out.plan, remap);
  out.graph = std::move(shrunk);
  if (config.synthetic_threshold) {
    out.weights = std::move(w);
    out.val_accuracy = level <= *config.synthetic_threshold ? 1.0 : 0.0;
    return out;
  }
  auto cfg = with_schedule(base, epochs, lr.second_lr, lr.retrain_decay_epochs, lr.gamma);
  if (epochs == 0) {
    out.weights = std::move(w);
    out.val_accuracy = nn::evaluate(*out.graph, out.weights, splits.val).accuracy;
    return out;
  }
  auto trained = nn::train_on_split(*out.graph, w, splits.train, splits.val, cfg);
  out.weights = std::move(trained.best_weights);
  out.val_accuracy = trained.best_val_accuracy;
  return out;
}

SearchResult dapr_search(const ir::ModelGraph &graph, const nn::WeightStore &weights, const Splits &subset,
                         const data::SubsetSpec &spec, const SearchConfig &config, const nn::TrainConfig &base,
                         const LrPolicy &lr) {
  config.validate();
  SearchResult result;
  const bool synthetic = config.synthetic_threshold.has_value();
  if (synthetic)
    result.baseline_accuracy = 1.0;
  else if (config.acceptance == Acceptance::Explicit)
    result.baseline_accuracy = config.explicit_target;
  else
    result.baseline_accuracy = baseline_accuracy(graph, weights, subset.val, spec);

  const nn::WeightStore finetuned =
      synthetic || config.n_f == 0 ? weights : finetune(graph, weights, subset, config.n_f, lr, base).best_weights;
  result.finetuned_provenance = weights_fingerprint(finetuned);
  const auto depmap = deps::compute_dependencies(graph, config.residual_policy);

  std::map<double, RetrainOutcome> outcomes;
  auto evaluator = [&](double level) {
    auto r = prune_and_retrain(graph, finetuned, depmap, level, subset, config.n_r, config, lr, base);
    LevelOutcome o;
    o.provenance = result.finetuned_provenance;
    if (!r.feasible) return o;
    o.achieved_level = r.plan.achieved_level;
    o.val_accuracy = r.val_accuracy;
    o.test_accuracy = synthetic ? r.val_accuracy : nn::evaluate(*r.graph, r.weights, subset.test).accuracy;
    o.peak_memory_estimate = ir::count_params(*r.graph).memory_bytes;
    o.success = o.val_accuracy >= result.baseline_accuracy;
    outcomes.insert_or_assign(level, std::move(r));
    return o;
  };
  auto bis = bisect(config.grid, evaluator);
  result.converged_level = bis.converged_level;
  result.trace = std::move(bis.trace);
  if (result.converged_level) {
    auto &best = outcomes.at(*result.converged_level);
    result.best_plan = best.plan;
    result.best_graph = best.graph;
    result.best_weights = std::move(best.weights);
  }
  return result;
}

std::string to_string(SweepMode mode) {
  switch (mode) {
  case SweepMode::SubsetAware:
    return "subset_aware";
  case SweepMode::SubsetAgnostic:
    return "subset_agnostic";
  case SweepMode::Unpruned:
    return "unpruned";
  }
  return "unpruned";
}

SweepMode parse_sweep_mode(const std::string &text) {
  std::string t = text;
  for (auto &c : t)
    if (c == '-') c = '_';
  if (t == "subset_aware") return SweepMode::SubsetAware;
  if (t == "subset_agnostic") return SweepMode::SubsetAgnostic;
  if (t == "unpruned") return SweepMode::Unpruned;
  throw ConfigError("unknown sweep mode '" + text + "'");
}

std::vector<SweepRow> oracle_sweep(const ir::ModelGraph &graph, const nn::WeightStore &weights, const Splits &full,
                                   const data::SubsetSpec &spec, const SearchConfig &config,
                                   const nn::TrainConfig &base, const LrPolicy &lr, const SweepOptions &options) {
  config.validate();
  const bool synthetic = config.synthetic_threshold.has_value();
  const auto subset = full.restrict_to(spec.class_ids);
  std::vector<double> levels = options.levels.empty() ? config.grid.levels() : options.levels;
  for (auto l : levels) config.grid.index_of(l);
  const auto depmap = deps::compute_dependencies(graph, config.residual_policy);

  auto measure = [&](SweepRow &row, const ir::ModelGraph &g, const nn::WeightStore &w) {
    const auto cost = ir::count_cost(g);
    row.giga_ops = cost.total_giga_ops;
    row.params = cost.total_params;
    row.latency_ms = nn::bench_inference(g, w, options.latency_batch, options.latency_repetitions).mean_ms;
  };

  std::vector<SweepRow> rows;
  for (const auto mode : options.modes) {
    if (mode == SweepMode::Unpruned) {
      const auto t0 = std::chrono::steady_clock::now();
      SweepRow row;
      row.mode = to_string(mode);
      if (synthetic) {
        row.test_acc = row.val_acc = 1.0;
      } else {
        row.test_acc = nn::evaluate(graph, weights, subset.test).accuracy;
        row.val_acc = nn::evaluate(graph, weights, subset.val).accuracy;
      }
      measure(row, graph, weights);
      row.wall_seconds = seconds_since(t0);
      rows.push_back(row);
      continue;
    }
    const bool aware = mode == SweepMode::SubsetAware;
    nn::WeightStore source = weights;
    if (aware && !synthetic && config.n_f > 0) source = finetune(graph, weights, subset, config.n_f, lr, base).best_weights;
    const Splits &train_splits = aware ? subset : full;
    const int epochs = aware ? config.n_r : config.n_f + config.n_r;
    for (double level : levels) {
      const auto t0 = std::chrono::steady_clock::now();
      SweepRow row;
      row.mode = to_string(mode);
      row.target_level = level;
      auto r = prune_and_retrain(graph, source, depmap, level, train_splits, epochs, config, lr, base);
      if (!r.feasible) continue;
      row.achieved_level = r.plan.achieved_level;
      if (synthetic) {
        row.test_acc = row.val_acc = r.val_accuracy;
      } else {
        row.test_acc = nn::evaluate(*r.graph, r.weights, subset.test).accuracy;
        row.val_acc = nn::evaluate(*r.graph, r.weights, subset.val).accuracy;
      }
      measure(row, *r.graph, r.weights);
      row.wall_seconds = seconds_since(t0);
      rows.push_back(row);
    }
  }
  return rows;
}

} // namespace dapr::search
