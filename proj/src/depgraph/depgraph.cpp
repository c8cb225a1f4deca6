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

#include "dapr/depgraph.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "dapr/channel_flow.hpp"
#include "dapr/errors.hpp"

namespace dapr::deps {

using ir::ChannelOrigin;
using ir::LayerKind;

std::string to_string(ResidualPolicy policy) {
  return policy == ResidualPolicy::TieGroup ? "tie_group" : "skip_final";
}

ResidualPolicy parse_residual_policy(const std::string &text) {
  if (text == "tie_group" || text == "tie-group") return ResidualPolicy::TieGroup;
  if (text == "skip_final" || text == "skip-final") return ResidualPolicy::SkipFinal;
  throw ConfigError("unknown residual policy '" + text + "'");
}

std::string to_string(Coupling coupling) { return coupling == Coupling::Residual ? "residual" : "depthwise"; }

bool DependencySet::contains(const std::string &id) const {
  return std::binary_search(members.begin(), members.end(), id);
}

const DependencySet *DependencyMap::set_of(const std::string &layer) const {
  for (const auto &s : sets)
    if (s.contains(layer)) return &s;
  return nullptr;
}

bool DependencyMap::is_prunable(const std::string &layer) const {
  return conv_filters.count(layer) != 0 && unprunable.count(layer) == 0;
}

std::vector<PruneUnit> DependencyMap::units() const {
  std::vector<PruneUnit> out;
  for (std::size_t s = 0; s < sets.size(); ++s)
    out.push_back(PruneUnit{sets[s].members, conv_filters.at(sets[s].members.front()), s});
  for (const auto &[id, n] : conv_filters)
    if (!unprunable.count(id) && !set_of(id)) out.push_back(PruneUnit{{id}, n, std::nullopt});
  std::sort(out.begin(), out.end(), [](const PruneUnit &a, const PruneUnit &b) { return a.key() < b.key(); });
  return out;
}

namespace {

class DisjointSets {
public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

private:
  std::vector<std::size_t> parent_;
};

bool has_concat_upstream(const ir::ModelGraph &g, std::size_t index) {
  // Walk back through per-channel layers to the layer defining the IFM count.
  std::size_t cur = index;
  while (!g.nodes()[cur].inputs.empty()) {
    const auto p = g.producers(cur).front();
    const auto kind = g.nodes()[p].kind;
    if (kind == LayerKind::Concat) return true;
    if (kind != LayerKind::BatchNorm && kind != LayerKind::ReLU && kind != LayerKind::MaxPool) return false;
    cur = p;
  }
  return false;
}

} // namespace

DependencyMap compute_dependencies(const ir::ModelGraph &graph, ResidualPolicy policy) {
  const auto flow = ir::trace_channels(graph);
  const auto input = ir::graph_input_channels(graph);
  const auto &nodes = graph.nodes();
  const std::size_t n = graph.size();

  DependencyMap dm;
  dm.policy = policy;
  for (const auto &node : nodes)
    if (node.is_conv()) dm.conv_filters[node.id] = node.conv().out_channels;

  DisjointSets add_links(n);
  DisjointSets all_links(n);
  std::vector<bool> linked(n, false);
  std::vector<bool> residual_linked(n, false);
  std::vector<bool> input_tied(n, false);

  auto tie = [&](const std::vector<ChannelOrigin> &origins, std::size_t at, bool residual) {
    const auto index = origins.front().channel;
    for (const auto &o : origins)
      if (o.channel != index)
        throw DependencyError(nodes[at].id, "couples channels with different indices; only index-aligned "
                                            "coupling is supported");
    const bool from_input =
        std::any_of(origins.begin(), origins.end(), [](const auto &o) { return o.node == ir::kGraphInput; });
    std::optional<std::size_t> anchor;
    for (const auto &o : origins) {
      if (o.node == ir::kGraphInput) continue;
      const auto c = static_cast<std::size_t>(o.node);
      linked[c] = true;
      if (residual) residual_linked[c] = true;
      if (from_input) input_tied[c] = true;
      if (anchor) {
        all_links.unite(*anchor, c);
        if (residual) add_links.unite(*anchor, c);
      }
      anchor = c;
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    const auto &node = nodes[i];
    if (node.kind == LayerKind::Add) {
      for (const auto &ch : flow[i])
        if (ch.origins.size() > 1) tie(ch.origins, i, true);
    } else if (node.is_conv() && node.conv().is_depthwise()) {
      if (has_concat_upstream(graph, i))
        throw DependencyError(node.id, "depthwise convolution fed by a Concat is not supported");
      const auto &in = ir::input_channels(graph, flow, i, 0, input);
      for (std::size_t c = 0; c < in.size(); ++c) {
        std::vector<ChannelOrigin> origins = in[c].origins;
        for (const auto &o : origins)
          if (o.channel != static_cast<std::int64_t>(c))
            throw DependencyError(node.id, "depthwise filter " + std::to_string(c) +
                                               " is not index-aligned with its input channel");
        origins.push_back(ChannelOrigin{static_cast<std::int64_t>(i), static_cast<std::int64_t>(c)});
        tie(origins, i, false);
      }
    }
  }

  // Channels reaching the graph output fix num_classes and cannot shrink.
  std::vector<bool> reaches_output(n, false);
  for (const auto &ch : flow[graph.output_index()])
    for (const auto &o : ch.origins)
      if (o.node != ir::kGraphInput) reaches_output[static_cast<std::size_t>(o.node)] = true;

  // Cross-check residual tags against structure.
  std::map<int, std::vector<std::size_t>> finals, downs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto &a = nodes[i].annotations;
    if (a.residual_final) finals[*a.residual_group].push_back(i);
    if (a.residual_down) downs[*a.residual_group].push_back(i);
    if ((a.residual_final || a.residual_down) && !residual_linked[i])
      throw DependencyError(nodes[i].id, "tagged as a residual conv but feeds no Add");
  }
  for (const auto &[gid, members] : downs) {
    if (!finals.count(gid))
      throw DependencyError(nodes[members.front()].id,
                            "residual_down with no residual_final in group " + std::to_string(gid));
    if (members.size() != 1)
      throw DependencyError(nodes[members[1]].id, "group " + std::to_string(gid) + " has more than one residual_down");
  }
  for (const auto &[gid, members] : finals) {
    if (!downs.count(gid))
      throw DependencyError(nodes[members.front()].id,
                            "residual group " + std::to_string(gid) + " has no residual_down conv");
    std::vector<std::size_t> tagged = members;
    tagged.push_back(downs.at(gid).front());
    const auto root = add_links.find(tagged.front());
    for (auto t : tagged)
      if (add_links.find(t) != root)
        throw DependencyError(nodes[t].id, "residual group " + std::to_string(gid) +
                                               " is not coupled through a common Add chain");
    for (std::size_t i = 0; i < n; ++i) {
      if (!residual_linked[i] || add_links.find(i) != root) continue;
      const auto &a = nodes[i].annotations;
      if (!(a.residual_final || a.residual_down) || a.residual_group != gid)
        throw DependencyError(nodes[i].id, "is Add-coupled to residual group " + std::to_string(gid) +
                                               " without a matching residual tag");
    }
  }

  // Components of the coupling graph, keyed by representative.
  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < n; ++i)
    if (nodes[i].is_conv()) components[all_links.find(i)].push_back(i);

  for (const auto &[root, members] : components) {
    bool blocked = false;
    bool residual = false;
    bool tagged = false;
    std::optional<int> gid;
    for (auto m : members) {
      const auto &a = nodes[m].annotations;
      blocked = blocked || input_tied[m] || reaches_output[m];
      residual = residual || residual_linked[m];
      if (a.residual_final || a.residual_down) {
        tagged = true;
        gid = a.residual_group;
      }
    }
    if (tagged && policy == ResidualPolicy::SkipFinal) blocked = true;
    if (blocked) {
      for (auto m : members) dm.unprunable.insert(nodes[m].id);
      continue;
    }
    if (members.size() < 2 || !linked[members.front()]) continue;
    DependencySet set;
    for (auto m : members) set.members.push_back(nodes[m].id);
    std::sort(set.members.begin(), set.members.end());
    set.coupling = residual ? Coupling::Residual : Coupling::Depthwise;
    set.group_id = gid;
    dm.sets.push_back(std::move(set));
  }
  std::sort(dm.sets.begin(), dm.sets.end(),
            [](const DependencySet &a, const DependencySet &b) { return a.members.front() < b.members.front(); });

  for (const auto &[id, filters] : dm.conv_filters)
    for (std::int64_t c = 0; c < filters; ++c) dm.consumer_map[{id, c}];
  for (std::size_t i = 0; i < n; ++i) {
    const auto kind = nodes[i].kind;
    if (kind != LayerKind::Conv && kind != LayerKind::BatchNorm && kind != LayerKind::Linear) continue;
    for (const auto &ch : ir::input_channels(graph, flow, i, 0, input)) {
      for (const auto &o : ch.origins) {
        if (o.node == ir::kGraphInput) continue;
        auto &refs = dm.consumer_map[{nodes[static_cast<std::size_t>(o.node)].id, o.channel}];
        ConsumerRef ref{nodes[i].id, ch.first, ch.span};
        if (std::find(refs.begin(), refs.end(), ref) == refs.end()) refs.push_back(std::move(ref));
      }
    }
  }
  for (auto &[key, refs] : dm.consumer_map) std::sort(refs.begin(), refs.end());
  return dm;
}

std::vector<PlanViolation> validate_plan_against_deps(const DependencyMap &depmap, const Removals &removals) {
  std::vector<PlanViolation> out;
  using Kind = PlanViolation::Kind;
  for (const auto &[layer, indices] : removals) {
    if (indices.empty()) continue;
    auto it = depmap.conv_filters.find(layer);
    if (it == depmap.conv_filters.end()) {
      out.push_back({Kind::UnknownLayer, std::nullopt, layer, -1, "not a Conv layer of this graph"});
      continue;
    }
    if (depmap.unprunable.count(layer)) {
      out.push_back({Kind::Unprunable, std::nullopt, layer, indices.front(), "layer is marked unprunable"});
    }
    std::set<std::int64_t> unique(indices.begin(), indices.end());
    for (auto idx : unique)
      if (idx < 0 || idx >= it->second)
        out.push_back({Kind::IndexOutOfRange, std::nullopt, layer, idx, "filter index out of range"});
    if (static_cast<std::int64_t>(unique.size()) >= it->second)
      out.push_back({Kind::NoSurvivor, std::nullopt, layer, -1, "every filter removed"});
  }

  auto removed = [&](const std::string &layer, std::int64_t idx) {
    auto it = removals.find(layer);
    return it != removals.end() && std::find(it->second.begin(), it->second.end(), idx) != it->second.end();
  };
  for (std::size_t s = 0; s < depmap.sets.size(); ++s) {
    const auto &set = depmap.sets[s];
    std::set<std::int64_t> touched;
    for (const auto &m : set.members) {
      auto it = removals.find(m);
      if (it != removals.end()) touched.insert(it->second.begin(), it->second.end());
    }
    for (auto idx : touched) {
      for (const auto &m : set.members) {
        if (!removed(m, idx)) {
          out.push_back({Kind::Coupling, s, m, idx,
                         "filter " + std::to_string(idx) + " removed elsewhere in its dependency set but kept here"});
          break;
        }
      }
    }
  }
  return out;
}

std::string dependency_report(const ir::ModelGraph &graph, const DependencyMap &depmap) {
  nlohmann::json doc;
  doc["graph"] = graph.name();
  doc["residual_policy"] = to_string(depmap.policy);
  nlohmann::json sets = nlohmann::json::array();
  for (const auto &s : depmap.sets) {
    nlohmann::json j;
    j["members"] = s.members;
    j["coupling"] = to_string(s.coupling);
    j["group_id"] = s.group_id ? nlohmann::json(*s.group_id) : nlohmann::json(nullptr);
    sets.push_back(std::move(j));
  }
  doc["sets"] = std::move(sets);
  doc["unprunable"] = std::vector<std::string>(depmap.unprunable.begin(), depmap.unprunable.end());
  nlohmann::json units = nlohmann::json::array();
  for (const auto &u : depmap.units()) units.push_back(u.members);
  doc["prunable_units"] = std::move(units);
  return doc.dump(2) + "\n";
}

} // namespace dapr::deps
