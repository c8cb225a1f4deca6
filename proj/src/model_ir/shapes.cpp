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

#include "dapr/errors.hpp"
#include "dapr/model_ir.hpp"

namespace dapr::ir {

namespace {

const TensorShape &single_feature_map(const LayerNode &node, std::span<const TensorShape> inputs) {
  if (inputs.size() != 1) throw ShapeError(node.id, "expected exactly one input shape");
  if (inputs[0].dims.size() != 3) throw ShapeError(node.id, "input is not a (c,h,w) feature map");
  return inputs[0];
}

std::int64_t window_out(std::int64_t in, std::int64_t pad, std::int64_t k, std::int64_t stride) {
  const std::int64_t span = in + 2 * pad - k;
  return span < 0 ? 0 : span / stride + 1;
}

} // namespace

TensorShape infer_node_shape(const LayerNode &node, std::span<const TensorShape> inputs) {
  switch (node.kind) {
  case LayerKind::Conv: {
    const auto &in = single_feature_map(node, inputs);
    const auto &c = node.conv();
    if (in.channels() != c.in_channels)
      throw ShapeError(node.id, "declares " + std::to_string(c.in_channels) + " input channels but receives " +
                                    std::to_string(in.channels()));
    const auto h = window_out(in.height(), c.padding, c.kernel, c.stride);
    const auto w = window_out(in.width(), c.padding, c.kernel, c.stride);
    if (h < 1 || w < 1) throw ShapeError(node.id, "kernel larger than padded input " + in.to_string());
    return TensorShape::feature_map(c.out_channels, h, w);
  }
  case LayerKind::BatchNorm: {
    const auto &in = single_feature_map(node, inputs);
    if (in.channels() != node.batch_norm().channels)
      throw ShapeError(node.id, "declares " + std::to_string(node.batch_norm().channels) +
                                    " channels but receives " + std::to_string(in.channels()));
    return in;
  }
  case LayerKind::ReLU:
    return single_feature_map(node, inputs);
  case LayerKind::MaxPool: {
    const auto &in = single_feature_map(node, inputs);
    const auto &p = node.pool();
    const auto h = window_out(in.height(), 0, p.kernel, p.stride);
    const auto w = window_out(in.width(), 0, p.kernel, p.stride);
    if (h < 1 || w < 1) throw ShapeError(node.id, "pool window larger than input " + in.to_string());
    return TensorShape::feature_map(in.channels(), h, w);
  }
  case LayerKind::GlobalAvgPool: {
    const auto &in = single_feature_map(node, inputs);
    return TensorShape::feature_map(in.channels(), 1, 1);
  }
  case LayerKind::Flatten: {
    const auto &in = single_feature_map(node, inputs);
    return TensorShape::feature_map(in.numel(), 1, 1);
  }
  case LayerKind::Linear: {
    const auto &in = single_feature_map(node, inputs);
    const auto &l = node.linear();
    if (in.numel() != l.in_features)
      throw ShapeError(node.id, "declares " + std::to_string(l.in_features) + " input features but receives " +
                                    std::to_string(in.numel()));
    return TensorShape::feature_map(l.out_features, 1, 1);
  }
  case LayerKind::Add: {
    if (inputs.size() != 2) throw ShapeError(node.id, "Add requires two inputs");
    if (inputs[0] != inputs[1])
      throw ShapeError(node.id, "Add inputs disagree: " + inputs[0].to_string() + " vs " + inputs[1].to_string());
    return inputs[0];
  }
  case LayerKind::Concat: {
    if (inputs.size() < 2) throw ShapeError(node.id, "Concat requires at least two inputs");
    std::int64_t channels = 0;
    for (const auto &s : inputs) {
      if (s.dims.size() != 3) throw ShapeError(node.id, "Concat input is not a feature map");
      if (s.height() != inputs[0].height() || s.width() != inputs[0].width())
        throw ShapeError(node.id, "Concat inputs disagree on spatial dims: " + inputs[0].to_string() + " vs " +
                                      s.to_string());
      channels += s.channels();
    }
    return TensorShape::feature_map(channels, inputs[0].height(), inputs[0].width());
  }
  }
  throw ShapeError(node.id, "unknown layer kind");
}

} // namespace dapr::ir
