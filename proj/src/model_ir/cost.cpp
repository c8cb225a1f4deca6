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

namespace dapr::ir {

std::int64_t node_params(const LayerNode &node) {
  switch (node.kind) {
  case LayerKind::Conv: {
    const auto &c = node.conv();
    return c.out_channels * c.weights_per_filter() + (c.has_bias ? c.out_channels : 0);
  }
  case LayerKind::BatchNorm:
    // gamma, beta, running mean, running var
    return 4 * node.batch_norm().channels;
  case LayerKind::Linear: {
    const auto &l = node.linear();
    return l.in_features * l.out_features + l.out_features;
  }
  default:
    return 0;
  }
}

std::int64_t node_ops(const LayerNode &node, const TensorShape &output_shape) {
  switch (node.kind) {
  case LayerKind::Conv: {
    const auto &c = node.conv();
    return 2 * output_shape.height() * output_shape.width() * c.out_channels * c.weights_per_filter();
  }
  case LayerKind::Linear: {
    const auto &l = node.linear();
    return 2 * l.in_features * l.out_features;
  }
  default:
    return 0;
  }
}

CostReport count_params(const ModelGraph &graph) {
  CostReport report;
  for (const auto &n : graph.nodes()) {
    const auto p = node_params(n);
    report.per_layer_params[n.id] = p;
    report.total_params += p;
  }
  report.memory_bytes = report.total_params * 4;
  return report;
}

CostReport count_ops(const ModelGraph &graph) {
  CostReport report;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto &n = graph.nodes()[i];
    const auto ops = node_ops(n, graph.shapes()[i]);
    report.per_layer_ops[n.id] = ops;
    report.total_ops += ops;
  }
  report.total_giga_ops = static_cast<double>(report.total_ops) / 1e9;
  return report;
}

CostReport count_cost(const ModelGraph &graph) {
  CostReport report = count_params(graph);
  CostReport ops = count_ops(graph);
  report.per_layer_ops = std::move(ops.per_layer_ops);
  report.total_ops = ops.total_ops;
  report.total_giga_ops = ops.total_giga_ops;
  return report;
}

} // namespace dapr::ir
