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

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "dapr/errors.hpp"
#include "dapr/prune.hpp"

namespace dapr::prune {

std::string to_string(RankingScope scope) { return scope == RankingScope::Global ? "global" : "per_layer"; }

RankingScope parse_ranking_scope(const std::string &text) {
  if (text == "global") return RankingScope::Global;
  if (text == "per_layer" || text == "per-layer") return RankingScope::PerLayer;
  throw ConfigError("unknown ranking scope '" + text + "'");
}

bool PrunePlan::empty() const {
  return std::all_of(removals.begin(), removals.end(), [](const auto &kv) { return kv.second.empty(); });
}

std::size_t PrunePlan::removed_filters() const {
  std::size_t total = 0;
  for (const auto &[_, v] : removals) total += v.size();
  return total;
}

std::vector<deps::PlanViolation> validate_plan(const deps::DependencyMap &depmap, const PrunePlan &plan) {
  return deps::validate_plan_against_deps(depmap, plan.removals);
}

namespace {

std::vector<double> filter_l1(const ir::LayerNode &node, const nn::WeightStore &weights) {
  const auto &c = node.conv();
  const auto &w = weights.at(nn::weight_name(node.id));
  const std::vector<std::int64_t> expected = {c.out_channels, c.in_channels / c.groups, c.kernel, c.kernel};
  if (w.shape != expected) throw ShapeMismatch(node.id, "weight tensor shape does not match the declared conv");
  const auto per_filter = c.weights_per_filter();
  std::vector<double> out(static_cast<std::size_t>(c.out_channels), 0.0);
  for (std::int64_t f = 0; f < c.out_channels; ++f) {
    double sum = 0.0;
    const float *p = w.ptr() + f * per_filter;
    for (std::int64_t j = 0; j < per_filter; ++j) sum += std::fabs(static_cast<double>(p[j]));
    out[static_cast<std::size_t>(f)] = sum;
  }
  return out;
}

} // namespace

std::vector<FilterScore> score_filters(const ir::ModelGraph &graph, const nn::WeightStore &weights,
                                       const deps::DependencyMap &depmap) {
  std::map<std::string, std::vector<double>> norms;
  for (const auto &node : graph.nodes())
    if (node.is_conv() && depmap.is_prunable(node.id)) norms.emplace(node.id, filter_l1(node, weights));

  std::vector<FilterScore> scores;
  for (const auto &unit : depmap.units()) {
    for (std::int64_t f = 0; f < unit.filters; ++f) {
      double total = 0.0;
      for (const auto &m : unit.members) total += norms.at(m)[static_cast<std::size_t>(f)];
      scores.push_back(
          FilterScore{unit.key(), f, total / static_cast<double>(unit.members.size()), unit.set_index});
    }
  }
  return scores;
}

namespace {

/// Tracks per-layer extents while filters are removed, so each removal's
/// parameter saving is computed from the current (already shrunk) widths.
class CostTracker {
public:
  CostTracker(const ir::ModelGraph &graph, const deps::DependencyMap &depmap) : graph_(graph), depmap_(depmap) {
    out_.resize(graph.size());
    in_.resize(graph.size());
    for (std::size_t i = 0; i < graph.size(); ++i) {
      const auto &n = graph.nodes()[i];
      switch (n.kind) {
      case ir::LayerKind::Conv:
        out_[i] = n.conv().out_channels;
        in_[i] = n.conv().in_channels;
        break;
      case ir::LayerKind::BatchNorm:
        in_[i] = n.batch_norm().channels;
        break;
      case ir::LayerKind::Linear:
        out_[i] = n.linear().out_features;
        in_[i] = n.linear().in_features;
        break;
      default:
        break;
      }
    }
  }

  /// Applies removal of filter `index` from all `members`; returns the
  /// parameter count saved.
  std::int64_t remove(const std::vector<std::string> &members, std::int64_t index) {
    std::set<std::size_t> touched;
    std::set<std::pair<std::string, std::int64_t>> seen;
    std::unordered_map<std::size_t, std::int64_t> before;
    auto remember = [&](std::size_t i) {
      if (touched.insert(i).second) before[i] = params(i);
    };
    for (const auto &m : members) {
      const auto i = graph_.index_of(m);
      remember(i);
      out_[i] -= 1;
    }
    for (const auto &m : members) {
      for (const auto &ref : depmap_.consumer_map.at({m, index})) {
        if (!seen.emplace(ref.consumer, ref.input_channel).second) continue;
        const auto i = graph_.index_of(ref.consumer);
        remember(i);
        in_[i] -= ref.span;
      }
    }
    std::int64_t saved = 0;
    for (auto i : touched) saved += before[i] - params(i);
    return saved;
  }

private:
  std::int64_t params(std::size_t i) const {
    const auto &n = graph_.nodes()[i];
    switch (n.kind) {
    case ir::LayerKind::Conv: {
      const auto &c = n.conv();
      const auto k2 = c.kernel * c.kernel;
      const auto per_filter = c.is_depthwise() ? k2 : in_[i] * k2;
      return out_[i] * per_filter + (c.has_bias ? out_[i] : 0);
    }
    case ir::LayerKind::BatchNorm:
      return 4 * in_[i];
    case ir::LayerKind::Linear:
      return in_[i] * out_[i] + out_[i];
    default:
      return 0;
    }
  }

  const ir::ModelGraph &graph_;
  const deps::DependencyMap &depmap_;
  std::vector<std::int64_t> out_;
  std::vector<std::int64_t> in_;
};

struct Candidate {
  double score;
  std::size_t unit;
  std::int64_t index;
};

} // namespace

PrunePlan build_plan(const ir::ModelGraph &graph, const deps::DependencyMap &depmap,
                     const std::vector<FilterScore> &scores, double target_level, RankingScope scope) {
  if (!(target_level >= 0.0 && target_level < 100.0))
    throw ConfigError("target level must lie in [0, 100), got " + std::to_string(target_level));

  const auto units = depmap.units();
  std::map<std::string, std::size_t> unit_of_key;
  for (std::size_t u = 0; u < units.size(); ++u) unit_of_key[units[u].key()] = u;

  std::vector<std::vector<Candidate>> per_unit(units.size());
  for (const auto &s : scores) {
    auto it = unit_of_key.find(s.layer_id);
    if (it == unit_of_key.end()) throw ValidationError(s.layer_id, "score refers to a layer that is not prunable");
    if (s.filter_index < 0 || s.filter_index >= units[it->second].filters)
      throw ValidationError(s.layer_id, "score filter index out of range");
    per_unit[it->second].push_back(Candidate{s.score, it->second, s.filter_index});
  }
  for (std::size_t u = 0; u < units.size(); ++u) {
    auto &c = per_unit[u];
    std::sort(c.begin(), c.end(), [](const Candidate &a, const Candidate &b) {
      return a.score != b.score ? a.score < b.score : a.index < b.index;
    });
    c.erase(std::unique(c.begin(), c.end(), [](const Candidate &a, const Candidate &b) { return a.index == b.index; }),
            c.end());
    if (static_cast<std::int64_t>(c.size()) != units[u].filters)
      throw ValidationError(units[u].key(), "scores do not cover every filter of the layer");
  }

  PrunePlan plan;
  plan.target_level = target_level;
  plan.scope = scope;
  plan.original_params = ir::count_params(graph).total_params;

  CostTracker tracker(graph, depmap);
  std::vector<std::int64_t> removed_count(units.size(), 0);
  auto reached = [&] {
    return 100.0 * static_cast<double>(plan.removed_params) >= target_level * static_cast<double>(plan.original_params);
  };
  auto can_remove = [&](std::size_t u) { return units[u].filters - removed_count[u] > 1; };
  auto apply = [&](const Candidate &c) {
    const auto saved = tracker.remove(units[c.unit].members, c.index);
    plan.removed_params += saved;
    removed_count[c.unit] += 1;
    for (const auto &m : units[c.unit].members) plan.removals[m].push_back(c.index);
    plan.steps.push_back(RemovalStep{units[c.unit].key(), c.index, saved});
  };

  if (scope == RankingScope::Global) {
    std::vector<Candidate> order;
    for (const auto &c : per_unit) order.insert(order.end(), c.begin(), c.end());
    std::sort(order.begin(), order.end(), [&](const Candidate &a, const Candidate &b) {
      if (a.score != b.score) return a.score < b.score;
      if (a.unit != b.unit) return units[a.unit].key() < units[b.unit].key();
      return a.index < b.index;
    });
    for (const auto &c : order) {
      if (reached()) break;
      if (can_remove(c.unit)) apply(c);
    }
  } else {
    // Round-robin over units in key order; a unit sits out once its own
    // filter fraction reaches the target, until every unit has.
    std::vector<std::size_t> cursor(units.size(), 0);
    auto own_done = [&](std::size_t u) {
      return 100.0 * static_cast<double>(removed_count[u]) >= target_level * static_cast<double>(units[u].filters);
    };
    while (!reached()) {
      bool all_done = true;
      for (std::size_t u = 0; u < units.size(); ++u) all_done = all_done && (own_done(u) || !can_remove(u));
      bool progressed = false;
      for (std::size_t u = 0; u < units.size() && !reached(); ++u) {
        if (!can_remove(u) || (!all_done && own_done(u))) continue;
        apply(per_unit[u][cursor[u]++]);
        progressed = true;
      }
      if (!progressed) break;
    }
  }

  if (plan.original_params > 0)
    plan.achieved_level = 100.0 * static_cast<double>(plan.removed_params) / static_cast<double>(plan.original_params);
  if (!reached()) throw InfeasibleTarget(target_level, plan.achieved_level);
  for (auto &[_, v] : plan.removals) std::sort(v.begin(), v.end());
  return plan;
}

PrunePlan plan_for_level(const ir::ModelGraph &graph, const nn::WeightStore &weights,
                         const deps::DependencyMap &depmap, double target_level, RankingScope scope) {
  return build_plan(graph, depmap, score_filters(graph, weights, depmap), target_level, scope);
}

PrunePlan plan_from_removals(const ir::ModelGraph &graph, deps::Removals removals) {
  PrunePlan plan;
  for (auto &[k, v] : removals) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  plan.removals = std::move(removals);
  plan.original_params = ir::count_params(graph).total_params;
  const auto shrunk = shrink_graph(graph, plan).first;
  plan.removed_params = plan.original_params - ir::count_params(shrunk).total_params;
  plan.achieved_level = 100.0 * static_cast<double>(plan.removed_params) / static_cast<double>(plan.original_params);
  plan.target_level = plan.achieved_level;
  return plan;
}

} // namespace dapr::prune
