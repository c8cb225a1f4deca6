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

#ifndef DAPR_DEPGRAPH_HPP
#define DAPR_DEPGRAPH_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dapr/model_ir.hpp"

namespace dapr::deps {

/// How Add-coupled residual convs are treated: tie them into one set, or
/// leave them unpruned.
enum class ResidualPolicy { TieGroup, SkipFinal };
enum class Coupling { Residual, Depthwise };

std::string to_string(ResidualPolicy policy);
ResidualPolicy parse_residual_policy(const std::string &text);
std::string to_string(Coupling coupling);

/// Conv layers whose output filters must be removed with identical indices.
struct DependencySet {
  std::vector<std::string> members; // sorted
  Coupling coupling = Coupling::Residual;
  std::optional<int> group_id;

  bool contains(const std::string &id) const;
  bool operator==(const DependencySet &) const = default;
};

/// Input channels [input_channel, input_channel + span) of `consumer` that
/// read one producer channel. span is H*W when the channel reaches a
/// Linear through a Flatten.
struct ConsumerRef {
  std::string consumer;
  std::int64_t input_channel = 0;
  std::int64_t span = 1;

  auto operator<=>(const ConsumerRef &) const = default;
};

using ChannelKey = std::pair<std::string, std::int64_t>;
/// Filter indices to remove, per Conv layer id.
using Removals = std::map<std::string, std::vector<std::int64_t>>;

/// A prunable unit: one coupled set, or one free-standing conv.
struct PruneUnit {
  std::vector<std::string> members;
  std::int64_t filters = 0;
  std::optional<std::size_t> set_index;

  const std::string &key() const { return members.front(); }
};

struct DependencyMap {
  ResidualPolicy policy = ResidualPolicy::TieGroup;
  std::vector<DependencySet> sets;
  std::set<std::string> unprunable;
  std::map<ChannelKey, std::vector<ConsumerRef>> consumer_map;
  /// Output channel count of every Conv layer.
  std::map<std::string, std::int64_t> conv_filters;

  const DependencySet *set_of(const std::string &layer) const;
  bool is_prunable(const std::string &layer) const;
  /// Prunable units sorted by key (lexicographically smallest member).
  std::vector<PruneUnit> units() const;
};

DependencyMap compute_dependencies(const ir::ModelGraph &graph,
                                   ResidualPolicy policy = ResidualPolicy::TieGroup);

struct PlanViolation {
  enum class Kind { Coupling, Unprunable, UnknownLayer, IndexOutOfRange, NoSurvivor };

  Kind kind = Kind::Coupling;
  std::optional<std::size_t> set_index;
  std::string layer;
  std::int64_t filter_index = -1;
  std::string message;
};

/// Every way `removals` breaks the dependency map. Empty means valid.
std::vector<PlanViolation> validate_plan_against_deps(const DependencyMap &depmap, const Removals &removals);

/// Canonical report document (the `analyze` command output).
std::string dependency_report(const ir::ModelGraph &graph, const DependencyMap &depmap);

} // namespace dapr::deps

#endif
