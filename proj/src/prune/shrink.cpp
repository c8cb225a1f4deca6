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
#include <set>

#include <json.hpp>

#include "dapr/channel_flow.hpp"
#include "dapr/errors.hpp"
#include "dapr/prune.hpp"

namespace dapr::prune {

using ir::LayerKind;

std::optional<std::int64_t> ChannelRemap::new_output_index(const std::string &layer, std::int64_t old_index) const {
  auto it = layers.find(layer);
  if (it == layers.end()) return std::nullopt;
  const auto &kept = it->second.out_kept;
  auto pos = std::lower_bound(kept.begin(), kept.end(), old_index);
  if (pos == kept.end() || *pos != old_index) return std::nullopt;
  return static_cast<std::int64_t>(pos - kept.begin());
}

std::optional<std::int64_t> ChannelRemap::new_input_index(const std::string &layer, std::int64_t old_index) const {
  auto it = layers.find(layer);
  if (it == layers.end()) return std::nullopt;
  const auto &kept = it->second.in_kept;
  auto pos = std::lower_bound(kept.begin(), kept.end(), old_index);
  if (pos == kept.end() || *pos != old_index) return std::nullopt;
  return static_cast<std::int64_t>(pos - kept.begin());
}

namespace {

using Kept = std::vector<std::int64_t>;

std::string describe(const Kept &k, std::size_t total) {
  std::string removed;
  std::size_t j = 0;
  for (std::size_t c = 0; c < total; ++c) {
    if (j < k.size() && k[j] == static_cast<std::int64_t>(c)) {
      ++j;
      continue;
    }
    removed += (removed.empty() ? "" : ",") + std::to_string(c);
  }
  return "{" + removed + "}";
}

} // namespace

std::pair<ir::ModelGraph, ChannelRemap> shrink_graph(const ir::ModelGraph &graph, const PrunePlan &plan) {
  const auto flow = ir::trace_channels(graph);
  const auto input = ir::graph_input_channels(graph);
  const auto &nodes = graph.nodes();

  for (const auto &[layer, indices] : plan.removals) {
    if (indices.empty()) continue;
    if (!graph.contains(layer) || !graph.node(layer).is_conv())
      throw ShapeError(layer, "plan removes filters from a layer that is not a Conv of this graph");
  }

  Kept input_kept(input.size());
  for (std::size_t c = 0; c < input.size(); ++c) input_kept[c] = static_cast<std::int64_t>(c);
  std::vector<Kept> kept(nodes.size());
  auto kept_in = [&](std::size_t i, std::size_t slot) -> const Kept & {
    return nodes[i].inputs.empty() ? input_kept : kept[graph.producers(i).at(slot)];
  };
  auto in_flow = [&](std::size_t i, std::size_t slot) -> const ir::NodeChannels & {
    return ir::input_channels(graph, flow, i, slot, input);
  };
  auto features = [&](std::size_t i) {
    Kept cols;
    const auto &f = in_flow(i, 0);
    for (auto l : kept_in(i, 0))
      for (std::int64_t j = 0; j < f[static_cast<std::size_t>(l)].span; ++j)
        cols.push_back(f[static_cast<std::size_t>(l)].first + j);
    return cols;
  };

  ChannelRemap remap;
  std::vector<ir::LayerNode> out_nodes = nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto &node = nodes[i];
    auto &shrunk = out_nodes[i];
    switch (node.kind) {
    case LayerKind::Conv: {
      const auto &c = node.conv();
      std::vector<bool> drop(static_cast<std::size_t>(c.out_channels), false);
      if (auto it = plan.removals.find(node.id); it != plan.removals.end()) {
        for (auto idx : it->second) {
          if (idx < 0 || idx >= c.out_channels)
            throw ShapeError(node.id, "plan removes filter " + std::to_string(idx) + " which does not exist");
          drop[static_cast<std::size_t>(idx)] = true;
        }
      }
      Kept own;
      for (std::int64_t f = 0; f < c.out_channels; ++f)
        if (!drop[static_cast<std::size_t>(f)]) own.push_back(f);
      if (own.empty()) throw ShapeError(node.id, "plan removes every filter");
      if (c.is_depthwise() && own != kept_in(i, 0))
        throw ShapeError(node.id, "depthwise filters removed " + describe(own, drop.size()) +
                                      " but input channels removed " + describe(kept_in(i, 0), drop.size()));
      LayerRemap r;
      r.kind = LayerKind::Conv;
      r.depthwise = c.is_depthwise();
      r.old_out = c.out_channels;
      r.old_in = c.in_channels;
      r.out_kept = own;
      r.in_kept = features(i);
      auto p = c;
      p.out_channels = static_cast<std::int64_t>(own.size());
      p.in_channels = static_cast<std::int64_t>(r.in_kept.size());
      if (c.is_depthwise()) p.groups = p.in_channels;
      shrunk.params = p;
      kept[i] = std::move(own);
      remap.layers.emplace(node.id, std::move(r));
      break;
    }
    case LayerKind::BatchNorm: {
      LayerRemap r;
      r.kind = LayerKind::BatchNorm;
      r.old_in = node.batch_norm().channels;
      r.in_kept = features(i);
      auto p = node.batch_norm();
      p.channels = static_cast<std::int64_t>(r.in_kept.size());
      shrunk.params = p;
      kept[i] = kept_in(i, 0);
      remap.layers.emplace(node.id, std::move(r));
      break;
    }
    case LayerKind::Linear: {
      LayerRemap r;
      r.kind = LayerKind::Linear;
      r.old_in = node.linear().in_features;
      r.old_out = node.linear().out_features;
      r.in_kept = features(i);
      auto p = node.linear();
      p.in_features = static_cast<std::int64_t>(r.in_kept.size());
      shrunk.params = p;
      kept[i].resize(static_cast<std::size_t>(p.out_features));
      for (std::size_t c = 0; c < kept[i].size(); ++c) kept[i][c] = static_cast<std::int64_t>(c);
      remap.layers.emplace(node.id, std::move(r));
      break;
    }
    case LayerKind::Add: {
      if (kept_in(i, 0) != kept_in(i, 1)) {
        const auto total = flow[i].size();
        throw ShapeError(node.id, "Add inputs lose different channels: " + describe(kept_in(i, 0), total) + " from '" +
                                      node.inputs[0] + "' vs " + describe(kept_in(i, 1), total) + " from '" +
                                      node.inputs[1] + "'");
      }
      kept[i] = kept_in(i, 0);
      break;
    }
    case LayerKind::Concat: {
      std::int64_t offset = 0;
      for (std::size_t slot = 0; slot < node.inputs.size(); ++slot) {
        for (auto l : kept_in(i, slot)) kept[i].push_back(l + offset);
        offset += static_cast<std::int64_t>(in_flow(i, slot).size());
      }
      break;
    }
    default:
      kept[i] = kept_in(i, 0);
    }
  }

  return {ir::ModelGraph(graph.name(), graph.input_shape(), graph.num_classes(), std::move(out_nodes)),
          std::move(remap)};
}

nn::WeightStore transfer_weights(const nn::WeightStore &old, const PrunePlan &plan, const ChannelRemap &remap) {
  for (const auto &[layer, r] : remap.layers) {
    if (r.kind != LayerKind::Conv) continue;
    auto it = plan.removals.find(layer);
    const auto removed = it == plan.removals.end() ? 0 : static_cast<std::int64_t>(it->second.size());
    if (r.old_out - static_cast<std::int64_t>(r.out_kept.size()) != removed)
      throw ShapeMismatch(layer, "channel remap disagrees with the plan");
  }

  nn::WeightStore out;
  for (const auto &[name, tensor] : old.tensors) {
    const auto dot = name.rfind('.');
    const std::string layer = name.substr(0, dot);
    const std::string field = dot == std::string::npos ? std::string{} : name.substr(dot + 1);
    auto it = remap.layers.find(layer);
    if (it == remap.layers.end()) {
      out.tensors.emplace(name, tensor);
      continue;
    }
    const auto &r = it->second;
    auto expect = [&](const std::vector<std::int64_t> &shape) {
      if (tensor.shape != shape) throw ShapeMismatch(layer, "tensor '" + name + "' does not match the unpruned layer");
    };
    nn::Tensor sliced;
    if (r.kind == LayerKind::Conv && field == "weight") {
      if (tensor.shape.size() != 4) throw ShapeMismatch(layer, "conv weight must be 4-d");
      const auto k = tensor.shape[2];
      expect({r.old_out, r.depthwise ? 1 : r.old_in, k, tensor.shape[3]});
      const auto k2 = k * tensor.shape[3];
      const auto in_per = tensor.shape[1];
      const auto new_in = r.depthwise ? std::int64_t{1} : static_cast<std::int64_t>(r.in_kept.size());
      sliced = nn::Tensor({static_cast<std::int64_t>(r.out_kept.size()), new_in, k, tensor.shape[3]});
      float *dst = sliced.ptr();
      for (auto o : r.out_kept) {
        if (r.depthwise) {
          std::copy_n(tensor.ptr() + o * k2, k2, dst);
          dst += k2;
          continue;
        }
        for (auto c : r.in_kept) {
          std::copy_n(tensor.ptr() + (o * in_per + c) * k2, k2, dst);
          dst += k2;
        }
      }
    } else if (r.kind == LayerKind::Conv && field == "bias") {
      expect({r.old_out});
      sliced = nn::Tensor({static_cast<std::int64_t>(r.out_kept.size())});
      for (std::size_t j = 0; j < r.out_kept.size(); ++j) sliced.data[j] = tensor.data[r.out_kept[j]];
    } else if (r.kind == LayerKind::BatchNorm) {
      expect({r.old_in});
      sliced = nn::Tensor({static_cast<std::int64_t>(r.in_kept.size())});
      for (std::size_t j = 0; j < r.in_kept.size(); ++j) sliced.data[j] = tensor.data[r.in_kept[j]];
    } else if (r.kind == LayerKind::Linear && field == "weight") {
      expect({r.old_out, r.old_in});
      const auto cols = static_cast<std::int64_t>(r.in_kept.size());
      sliced = nn::Tensor({r.old_out, cols});
      for (std::int64_t o = 0; o < r.old_out; ++o)
        for (std::int64_t j = 0; j < cols; ++j) sliced.data[o * cols + j] = tensor.data[o * r.old_in + r.in_kept[j]];
    } else {
      sliced = tensor;
    }
    out.tensors.emplace(name, std::move(sliced));
  }
  return out;
}

void check_weights(const ir::ModelGraph &graph, const nn::WeightStore &weights) {
  std::set<std::string> expected;
  auto need = [&](const std::string &layer, const std::string &name, const std::vector<std::int64_t> &shape) {
    expected.insert(name);
    const auto &t = weights.at(name);
    if (t.shape != shape) throw ShapeMismatch(layer, "tensor '" + name + "' has the wrong shape");
  };
  for (const auto &n : graph.nodes()) {
    switch (n.kind) {
    case LayerKind::Conv: {
      const auto &c = n.conv();
      need(n.id, nn::weight_name(n.id), {c.out_channels, c.in_channels / c.groups, c.kernel, c.kernel});
      if (c.has_bias) need(n.id, nn::bias_name(n.id), {c.out_channels});
      break;
    }
    case LayerKind::BatchNorm: {
      const auto ch = n.batch_norm().channels;
      for (const auto &name : {nn::gamma_name(n.id), nn::beta_name(n.id), nn::running_mean_name(n.id),
                               nn::running_var_name(n.id)})
        need(n.id, name, {ch});
      break;
    }
    case LayerKind::Linear: {
      const auto &l = n.linear();
      need(n.id, nn::weight_name(n.id), {l.out_features, l.in_features});
      need(n.id, nn::bias_name(n.id), {l.out_features});
      break;
    }
    default:
      break;
    }
  }
  for (const auto &[name, _] : weights.tensors)
    if (!expected.count(name)) throw ShapeMismatch(name, "tensor does not belong to any layer of the graph");
}

std::string serialize_plan(const PrunePlan &plan) {
  nlohmann::json doc;
  doc["target_level"] = plan.target_level;
  doc["achieved_level"] = plan.achieved_level;
  doc["ranking_scope"] = to_string(plan.scope);
  nlohmann::json removals = nlohmann::json::object();
  for (const auto &[layer, v] : plan.removals)
    if (!v.empty()) removals[layer] = v;
  doc["removals"] = std::move(removals);
  doc["census"] = {{"original_params", plan.original_params}, {"removed_params", plan.removed_params}};
  return doc.dump(2) + "\n";
}

PrunePlan parse_plan(const std::string &text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    PrunePlan plan;
    plan.target_level = doc.at("target_level").get<double>();
    plan.achieved_level = doc.at("achieved_level").get<double>();
    plan.scope = parse_ranking_scope(doc.at("ranking_scope").get<std::string>());
    for (const auto &[layer, v] : doc.at("removals").items())
      plan.removals[layer] = v.get<std::vector<std::int64_t>>();
    if (doc.contains("census")) {
      plan.original_params = doc["census"].at("original_params").get<std::int64_t>();
      plan.removed_params = doc["census"].at("removed_params").get<std::int64_t>();
    }
    return plan;
  } catch (const nlohmann::json::exception &e) {
    throw SchemaError(std::string("malformed plan document: ") + e.what());
  }
}

} // namespace dapr::prune
