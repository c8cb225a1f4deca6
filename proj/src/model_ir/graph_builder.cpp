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

#include "dapr/graph_builder.hpp"

#include "dapr/errors.hpp"

namespace dapr::ir {

GraphBuilder::GraphBuilder(std::string name, TensorShape input_shape, std::int64_t num_classes)
    : name_(std::move(name)), input_shape_(std::move(input_shape)), num_classes_(num_classes) {}

const TensorShape &GraphBuilder::shape(const std::string &id) const {
  if (id.empty()) return input_shape_;
  auto it = shapes_.find(id);
  if (it == shapes_.end()) throw ValidationError(id, "builder has no such node");
  return it->second;
}

std::string GraphBuilder::push(LayerNode node) {
  std::vector<TensorShape> ins;
  for (const auto &in : node.inputs) ins.push_back(shape(in));
  if (node.inputs.empty()) ins.push_back(input_shape_);
  shapes_[node.id] = infer_node_shape(node, ins);
  std::string id = node.id;
  nodes_.push_back(std::move(node));
  return id;
}

namespace {
std::vector<std::string> single(const std::string &input) {
  return input.empty() ? std::vector<std::string>{} : std::vector<std::string>{input};
}
} // namespace

std::string GraphBuilder::conv(const std::string &id, const std::string &input, std::int64_t out_channels,
                               std::int64_t kernel, std::int64_t stride, std::int64_t padding, bool bias,
                               Annotations tags) {
  ConvParams p;
  p.out_channels = out_channels;
  p.in_channels = shape(input).channels();
  p.kernel = kernel;
  p.stride = stride;
  p.padding = padding < 0 ? kernel / 2 : padding;
  p.has_bias = bias;
  return push(LayerNode{id, LayerKind::Conv, p, single(input), tags});
}

std::string GraphBuilder::depthwise(const std::string &id, const std::string &input, std::int64_t kernel,
                                    std::int64_t stride, bool bias) {
  const auto channels = shape(input).channels();
  ConvParams p;
  p.out_channels = channels;
  p.in_channels = channels;
  p.groups = channels;
  p.kernel = kernel;
  p.stride = stride;
  p.padding = kernel / 2;
  p.has_bias = bias;
  Annotations a;
  a.depthwise = true;
  return push(LayerNode{id, LayerKind::Conv, p, single(input), a});
}

std::string GraphBuilder::batch_norm(const std::string &id, const std::string &input) {
  return push(LayerNode{id, LayerKind::BatchNorm, BatchNormParams{shape(input).channels()}, single(input), {}});
}

std::string GraphBuilder::relu(const std::string &id, const std::string &input) {
  return push(LayerNode{id, LayerKind::ReLU, std::monostate{}, single(input), {}});
}

std::string GraphBuilder::max_pool(const std::string &id, const std::string &input, std::int64_t kernel,
                                   std::int64_t stride) {
  return push(LayerNode{id, LayerKind::MaxPool, PoolParams{kernel, stride}, single(input), {}});
}

std::string GraphBuilder::global_avg_pool(const std::string &id, const std::string &input) {
  return push(LayerNode{id, LayerKind::GlobalAvgPool, std::monostate{}, single(input), {}});
}

std::string GraphBuilder::flatten(const std::string &id, const std::string &input) {
  return push(LayerNode{id, LayerKind::Flatten, std::monostate{}, single(input), {}});
}

std::string GraphBuilder::linear(const std::string &id, const std::string &input, std::int64_t out_features) {
  return push(LayerNode{id, LayerKind::Linear, LinearParams{shape(input).numel(), out_features}, single(input), {}});
}

std::string GraphBuilder::add(const std::string &id, const std::string &a, const std::string &b) {
  return push(LayerNode{id, LayerKind::Add, std::monostate{}, {a, b}, {}});
}

std::string GraphBuilder::concat(const std::string &id, const std::vector<std::string> &inputs) {
  return push(LayerNode{id, LayerKind::Concat, std::monostate{}, inputs, {}});
}

ModelGraph GraphBuilder::build() const { return ModelGraph(name_, input_shape_, num_classes_, nodes_); }

Annotations tag_plain() {
  Annotations a;
  a.plain = true;
  return a;
}

Annotations tag_residual_final(int group) {
  Annotations a;
  a.residual_final = true;
  a.residual_group = group;
  return a;
}

Annotations tag_residual_down(int group) {
  Annotations a;
  a.residual_down = true;
  a.residual_group = group;
  return a;
}

Annotations tag_fire_squeeze() {
  Annotations a;
  a.fire_squeeze = true;
  return a;
}

Annotations tag_fire_expand() {
  Annotations a;
  a.fire_expand = true;
  return a;
}

} // namespace dapr::ir
