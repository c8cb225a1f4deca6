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

#include "dapr/model_ir.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "dapr/errors.hpp"

namespace dapr::ir {

std::int64_t TensorShape::numel() const {
  return std::accumulate(dims.begin(), dims.end(), std::int64_t{1}, std::multiplies<>());
}

std::string TensorShape::to_string() const {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out << ',';
    out << dims[i];
  }
  out << ')';
  return out.str();
}

namespace {

constexpr std::pair<LayerKind, std::string_view> kKindNames[] = {
    {LayerKind::Conv, "Conv"},
    {LayerKind::BatchNorm, "BatchNorm"},
    {LayerKind::ReLU, "ReLU"},
    {LayerKind::MaxPool, "MaxPool"},
    {LayerKind::GlobalAvgPool, "GlobalAvgPool"},
    {LayerKind::Linear, "Linear"},
    {LayerKind::Add, "Add"},
    {LayerKind::Concat, "Concat"},
    {LayerKind::Flatten, "Flatten"},
};

template <typename P>
const P &params_as(const LayerNode &node, const char *what) {
  if (const auto *p = std::get_if<P>(&node.params)) return *p;
  throw ValidationError(node.id, std::string("node has no ") + what + " parameters");
}

} // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto &[k, name] : kKindNames)
    if (k == kind) return name;
  return "?";
}

std::optional<LayerKind> parse_layer_kind(std::string_view text) {
  for (const auto &[k, name] : kKindNames)
    if (name == text) return k;
  return std::nullopt;
}

bool Annotations::empty() const {
  return !residual_final && !residual_down && !depthwise && !fire_squeeze && !fire_expand && !plain &&
         !residual_group;
}

std::vector<std::string> Annotations::tags() const {
  std::vector<std::string> out;
  if (depthwise) out.emplace_back("depthwise");
  if (fire_expand) out.emplace_back("fire_expand");
  if (fire_squeeze) out.emplace_back("fire_squeeze");
  if (plain) out.emplace_back("plain");
  if (residual_down) out.emplace_back("residual_down");
  if (residual_final) out.emplace_back("residual_final");
  if (residual_group) out.emplace_back("residual_group:" + std::to_string(*residual_group));
  std::sort(out.begin(), out.end());
  return out;
}

Annotations Annotations::from_tags(std::span<const std::string> tags, const std::string &node_id) {
  Annotations a;
  constexpr std::string_view kGroupPrefix = "residual_group:";
  for (const auto &tag : tags) {
    if (tag == "residual_final") {
      a.residual_final = true;
    } else if (tag == "residual_down") {
      a.residual_down = true;
    } else if (tag == "depthwise") {
      a.depthwise = true;
    } else if (tag == "fire_squeeze") {
      a.fire_squeeze = true;
    } else if (tag == "fire_expand") {
      a.fire_expand = true;
    } else if (tag == "plain") {
      a.plain = true;
    } else if (tag.starts_with(kGroupPrefix)) {
      const std::string digits = tag.substr(kGroupPrefix.size());
      if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw SchemaError("malformed residual group tag '" + tag + "'", node_id);
      if (a.residual_group) throw SchemaError("multiple residual group tags", node_id);
      a.residual_group = std::stoi(digits);
    } else {
      throw SchemaError("unknown annotation '" + tag + "'", node_id);
    }
  }
  return a;
}

const ConvParams &LayerNode::conv() const { return params_as<ConvParams>(*this, "Conv"); }
const BatchNormParams &LayerNode::batch_norm() const { return params_as<BatchNormParams>(*this, "BatchNorm"); }
const PoolParams &LayerNode::pool() const { return params_as<PoolParams>(*this, "MaxPool"); }
const LinearParams &LayerNode::linear() const { return params_as<LinearParams>(*this, "Linear"); }

namespace {

void check_params(const LayerNode &n) {
  auto positive = [&](std::int64_t v, const char *field) {
    if (v < 1) throw ValidationError(n.id, std::string(field) + " must be >= 1");
  };
  switch (n.kind) {
  case LayerKind::Conv: {
    const auto &c = n.conv();
    positive(c.out_channels, "out_channels");
    positive(c.in_channels, "in_channels");
    positive(c.kernel, "kernel");
    positive(c.stride, "stride");
    positive(c.groups, "groups");
    if (c.padding < 0) throw ValidationError(n.id, "padding must be >= 0");
    if (c.in_channels % c.groups != 0 || c.out_channels % c.groups != 0)
      throw ValidationError(n.id, "groups must divide in_channels and out_channels");
    if (c.groups > 1 && !c.is_depthwise())
      throw ValidationError(n.id, "grouped convolutions other than depthwise are not supported");
    if (c.is_depthwise() && c.out_channels != c.in_channels)
      throw ValidationError(n.id, "depthwise convolution must have out_channels == in_channels");
    // A depthwise layer pruned down to one channel keeps its tag.
    if (c.is_depthwise() && !n.annotations.depthwise)
      throw ValidationError(n.id, "depthwise convolution lacks the depthwise tag");
    if (n.annotations.depthwise && !(c.groups == c.in_channels && c.out_channels == c.in_channels))
      throw ValidationError(n.id, "depthwise tag on a non-depthwise convolution");
    break;
  }
  case LayerKind::BatchNorm: {
    const auto &b = n.batch_norm();
    positive(b.channels, "channels");
    if (!(b.epsilon > 0.0)) throw ValidationError(n.id, "epsilon must be > 0");
    if (!(b.momentum > 0.0 && b.momentum <= 1.0)) throw ValidationError(n.id, "momentum must be in (0, 1]");
    break;
  }
  case LayerKind::MaxPool: {
    const auto &p = n.pool();
    positive(p.kernel, "kernel");
    positive(p.stride, "stride");
    break;
  }
  case LayerKind::Linear: {
    const auto &l = n.linear();
    positive(l.in_features, "in_features");
    positive(l.out_features, "out_features");
    break;
  }
  default:
    if (!std::holds_alternative<std::monostate>(n.params))
      throw ValidationError(n.id, std::string(to_string(n.kind)) + " takes no parameters");
  }

  const auto &a = n.annotations;
  if (n.kind != LayerKind::Conv &&
      (a.residual_final || a.residual_down || a.depthwise || a.fire_squeeze || a.fire_expand))
    throw ValidationError(n.id, "structural conv tags on a non-Conv node");
  if (a.residual_final && a.residual_down)
    throw ValidationError(n.id, "a conv cannot be both residual_final and residual_down");
  if ((a.residual_final || a.residual_down) != a.residual_group.has_value())
    throw ValidationError(n.id, "residual_final/residual_down require exactly one residual_group tag");
}

void check_arity(const LayerNode &n) {
  const std::size_t arity = n.inputs.size();
  switch (n.kind) {
  case LayerKind::Add:
    if (arity != 2) throw ValidationError(n.id, "Add requires exactly 2 inputs");
    break;
  case LayerKind::Concat:
    if (arity < 2) throw ValidationError(n.id, "Concat requires at least 2 inputs");
    break;
  default:
    if (arity > 1) throw ValidationError(n.id, std::string(to_string(n.kind)) + " takes a single input");
  }
}

} // namespace

ModelGraph::ModelGraph(std::string name, TensorShape input_shape, std::int64_t num_classes,
                       std::vector<LayerNode> nodes)
    : name_(std::move(name)), input_shape_(std::move(input_shape)), num_classes_(num_classes) {
  if (input_shape_.dims.size() != 3 ||
      std::any_of(input_shape_.dims.begin(), input_shape_.dims.end(), [](auto d) { return d < 1; }))
    throw ValidationError({}, "input_shape must be three positive dims (c,h,w)");
  if (num_classes_ < 1) throw ValidationError({}, "num_classes must be >= 1");
  if (nodes.empty()) throw ValidationError({}, "graph has no nodes");

  std::unordered_map<std::string, std::size_t> raw_index;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id.empty()) throw ValidationError({}, "node with empty id");
    if (!raw_index.emplace(nodes[i].id, i).second) throw ValidationError(nodes[i].id, "duplicate node id");
  }

  std::vector<std::size_t> sources;
  std::vector<std::vector<std::size_t>> raw_consumers(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto &n = nodes[i];
    check_arity(n);
    check_params(n);
    if (n.inputs.empty()) sources.push_back(i);
    for (const auto &in : n.inputs) {
      auto it = raw_index.find(in);
      if (it == raw_index.end()) throw ValidationError(n.id, "input '" + in + "' does not exist");
      raw_consumers[it->second].push_back(i);
    }
  }
  if (sources.size() != 1)
    throw ValidationError(sources.empty() ? std::string{} : nodes[sources[1]].id,
                          "graph must have exactly one node reading the graph input, found " +
                              std::to_string(sources.size()));
  std::vector<std::size_t> sinks;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (raw_consumers[i].empty()) sinks.push_back(i);
  if (sinks.size() != 1)
    throw ValidationError(sinks.empty() ? std::string{} : nodes[sinks[1]].id,
                          "graph must have exactly one output node, found " + std::to_string(sinks.size()));

  // Canonical order: post-order DFS from the output, visiting inputs in
  // their listed order. Depends only on structure, not on document order.
  enum class Mark { White, Gray, Black };
  std::vector<Mark> mark(nodes.size(), Mark::White);
  std::vector<std::size_t> order;
  order.reserve(nodes.size());
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    if (mark[i] == Mark::Black) return;
    if (mark[i] == Mark::Gray) throw ValidationError(nodes[i].id, "cycle detected");
    mark[i] = Mark::Gray;
    for (const auto &in : nodes[i].inputs) visit(raw_index.at(in));
    mark[i] = Mark::Black;
    order.push_back(i);
  };
  visit(sinks.front());
  if (order.size() != nodes.size()) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (mark[i] != Mark::Black) throw ValidationError(nodes[i].id, "node is part of a cycle or unreachable");
  }

  nodes_.reserve(nodes.size());
  for (auto i : order) nodes_.push_back(std::move(nodes[i]));
  for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i].id, i);

  producers_.resize(nodes_.size());
  consumers_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (const auto &in : nodes_[i].inputs) {
      const auto p = index_.at(in);
      producers_[i].push_back(p);
      if (std::find(consumers_[p].begin(), consumers_[p].end(), i) == consumers_[p].end())
        consumers_[p].push_back(i);
    }
    if (nodes_[i].inputs.empty()) source_ = i;
  }
  output_ = nodes_.size() - 1;

  shapes_.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    std::vector<TensorShape> ins;
    if (nodes_[i].inputs.empty()) ins.push_back(input_shape_);
    for (auto p : producers_[i]) ins.push_back(shapes_[p]);
    shapes_.push_back(infer_node_shape(nodes_[i], ins));
  }

  const TensorShape expected = TensorShape::feature_map(num_classes_, 1, 1);
  if (shapes_[output_] != expected)
    throw ValidationError(nodes_[output_].id, "graph output shape " + shapes_[output_].to_string() +
                                                  " does not match num_classes " + std::to_string(num_classes_));
}

bool ModelGraph::contains(std::string_view id) const { return index_.count(std::string(id)) != 0; }

std::size_t ModelGraph::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw ValidationError(std::string(id), "no such node");
  return it->second;
}

const TensorShape &ModelGraph::input_shape_of(std::size_t node_index, std::size_t slot) const {
  if (nodes_[node_index].inputs.empty()) return input_shape_;
  return shapes_[producers_[node_index].at(slot)];
}

std::vector<std::string> ModelGraph::conv_ids() const {
  std::vector<std::string> ids;
  for (const auto &n : nodes_)
    if (n.is_conv()) ids.push_back(n.id);
  return ids;
}

bool ModelGraph::operator==(const ModelGraph &other) const {
  return name_ == other.name_ && input_shape_ == other.input_shape_ && num_classes_ == other.num_classes_ &&
         nodes_ == other.nodes_;
}

std::map<std::string, TensorShape> infer_shapes(const ModelGraph &graph) {
  std::map<std::string, TensorShape> out;
  for (std::size_t i = 0; i < graph.size(); ++i) out.emplace(graph.nodes()[i].id, graph.shapes()[i]);
  return out;
}

} // namespace dapr::ir
