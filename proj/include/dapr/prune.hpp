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

#ifndef DAPR_PRUNE_HPP
#define DAPR_PRUNE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dapr/depgraph.hpp"
#include "dapr/model_ir.hpp"
#include "dapr/tensor.hpp"

namespace dapr::prune {

enum class RankingScope { Global, PerLayer };

std::string to_string(RankingScope scope);
RankingScope parse_ranking_scope(const std::string &text);

/// L1 norm of one filter, or the mean of the coupled filters' norms when the
/// layer belongs to a dependency set (then layer_id is the set's key).
struct FilterScore {
  std::string layer_id;
  std::int64_t filter_index = 0;
  double score = 0.0;
  std::optional<std::size_t> group;
};

/// One removal performed while building a plan.
struct RemovalStep {
  std::string unit_key;
  std::int64_t filter_index = 0;
  std::int64_t params_removed = 0;
};

struct PrunePlan {
  deps::Removals removals;
  double target_level = 0.0;
  double achieved_level = 0.0;
  RankingScope scope = RankingScope::Global;
  /// Parameter census the levels refer to.
  std::int64_t original_params = 0;
  std::int64_t removed_params = 0;
  /// Removal order; not part of the serialized document.
  std::vector<RemovalStep> steps;

  bool empty() const;
  std::size_t removed_filters() const;
};

/// Sum of |w| over each filter's (m/groups)*k*k weights; bias excluded.
/// Throws MissingWeight or ShapeMismatch for absent or mis-shaped tensors.
std::vector<FilterScore> score_filters(const ir::ModelGraph &graph, const nn::WeightStore &weights,
                                       const deps::DependencyMap &depmap);

/// Removes the lowest-ranked filter (or coupled group) one at a time until
/// removed parameter memory reaches target_level percent of the original.
/// Throws InfeasibleTarget when one surviving filter per layer cannot reach it.
PrunePlan build_plan(const ir::ModelGraph &graph, const deps::DependencyMap &depmap,
                     const std::vector<FilterScore> &scores, double target_level,
                     RankingScope scope = RankingScope::Global);

/// Convenience wrapper: score with L1 and build the plan.
PrunePlan plan_for_level(const ir::ModelGraph &graph, const nn::WeightStore &weights,
                         const deps::DependencyMap &depmap, double target_level,
                         RankingScope scope = RankingScope::Global);

/// Plan carrying explicit removals, with achieved level from a recount.
PrunePlan plan_from_removals(const ir::ModelGraph &graph, deps::Removals removals);

std::vector<deps::PlanViolation> validate_plan(const deps::DependencyMap &depmap, const PrunePlan &plan);

/// Surviving channels of one parametric layer, as ascending old indices. A
/// survivor's new index is its position.
struct LayerRemap {
  ir::LayerKind kind = ir::LayerKind::Conv;
  bool depthwise = false;
  std::int64_t old_out = 0;
  std::int64_t old_in = 0;
  /// Conv: surviving filters.
  std::vector<std::int64_t> out_kept;
  /// Conv/BatchNorm: surviving input channels. Linear: surviving input
  /// columns (channel c of a flattened (C,H,W) input owns columns
  /// c*H*W .. (c+1)*H*W-1).
  std::vector<std::int64_t> in_kept;
};

struct ChannelRemap {
  std::map<std::string, LayerRemap> layers;

  std::optional<std::int64_t> new_output_index(const std::string &layer, std::int64_t old_index) const;
  std::optional<std::int64_t> new_input_index(const std::string &layer, std::int64_t old_index) const;
};

/// Rewritten graph with the plan's filters physically removed. Throws
/// ShapeError naming the responsible plan entry when the plan breaks an Add
/// or depthwise coupling.
std::pair<ir::ModelGraph, ChannelRemap> shrink_graph(const ir::ModelGraph &graph, const PrunePlan &plan);

/// Slices every tensor down to the survivors recorded in `remap`.
nn::WeightStore transfer_weights(const nn::WeightStore &old, const PrunePlan &plan, const ChannelRemap &remap);

/// Checks that `weights` holds exactly the tensors `graph` needs, with the
/// right shapes. Throws MissingWeight or ShapeMismatch.
void check_weights(const ir::ModelGraph &graph, const nn::WeightStore &weights);

std::string serialize_plan(const PrunePlan &plan);
PrunePlan parse_plan(const std::string &text);

} // namespace dapr::prune

#endif
