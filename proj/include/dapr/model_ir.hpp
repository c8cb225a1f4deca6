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

#ifndef DAPR_MODEL_IR_HPP
#define DAPR_MODEL_IR_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace dapr::ir {

/// Ordered list of positive extents. Feature maps are (C, H, W); conv
/// weights (n, m/groups, k, k); linear weights (out, in).
struct TensorShape {
  std::vector<std::int64_t> dims;

  static TensorShape feature_map(std::int64_t c, std::int64_t h, std::int64_t w) {
    return TensorShape{{c, h, w}};
  }

  std::int64_t channels() const { return dims.at(0); }
  std::int64_t height() const { return dims.at(1); }
  std::int64_t width() const { return dims.at(2); }
  std::int64_t numel() const;
  std::string to_string() const;

  bool operator==(const TensorShape &) const = default;
};

enum class LayerKind { Conv, BatchNorm, ReLU, MaxPool, GlobalAvgPool, Linear, Add, Concat, Flatten };

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view text);

struct ConvParams {
  std::int64_t out_channels = 0;
  std::int64_t in_channels = 0;
  std::int64_t kernel = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  std::int64_t groups = 1;
  bool has_bias = false;

  /// groups == in_channels with one input channel per filter.
  bool is_depthwise() const { return groups > 1 && groups == in_channels && in_channels / groups == 1; }
  std::int64_t weights_per_filter() const { return (in_channels / groups) * kernel * kernel; }

  bool operator==(const ConvParams &) const = default;
};

struct BatchNormParams {
  std::int64_t channels = 0;
  double epsilon = 1e-5;
  double momentum = 0.1;

  bool operator==(const BatchNormParams &) const = default;
};

struct PoolParams {
  std::int64_t kernel = 2;
  std::int64_t stride = 2;

  bool operator==(const PoolParams &) const = default;
};

struct LinearParams {
  std::int64_t in_features = 0;
  std::int64_t out_features = 0;

  bool operator==(const LinearParams &) const = default;
};

using LayerParams = std::variant<std::monostate, ConvParams, BatchNormParams, PoolParams, LinearParams>;

/// Structural role tags attached to a node by the model author.
struct Annotations {
  bool residual_final = false;
  bool residual_down = false;
  bool depthwise = false;
  bool fire_squeeze = false;
  bool fire_expand = false;
  bool plain = false;
  std::optional<int> residual_group;

  bool empty() const;
  /// Canonical, sorted tag strings ("residual_group:<gid>" for groups).
  std::vector<std::string> tags() const;
  /// Throws SchemaError on an unknown tag.
  static Annotations from_tags(std::span<const std::string> tags, const std::string &node_id = {});

  bool operator==(const Annotations &) const = default;
};

struct LayerNode {
  std::string id;
  LayerKind kind = LayerKind::ReLU;
  LayerParams params;
  std::vector<std::string> inputs;
  Annotations annotations;

  const ConvParams &conv() const;
  const BatchNormParams &batch_norm() const;
  const PoolParams &pool() const;
  const LinearParams &linear() const;

  bool is_conv() const { return kind == LayerKind::Conv; }

  bool operator==(const LayerNode &) const = default;
};

/// Output shape of one node given the shapes of its inputs. Throws
/// ShapeError naming the node on any contradiction.
TensorShape infer_node_shape(const LayerNode &node, std::span<const TensorShape> input_shapes);

/// Validated, immutable CNN topology. Nodes are stored in canonical
/// topological order; construction throws ValidationError for structural
/// defects and ShapeError when shape inference fails.
class ModelGraph {
public:
  ModelGraph(std::string name, TensorShape input_shape, std::int64_t num_classes,
             std::vector<LayerNode> nodes);

  const std::string &name() const { return name_; }
  const TensorShape &input_shape() const { return input_shape_; }
  std::int64_t num_classes() const { return num_classes_; }
  const std::vector<LayerNode> &nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  bool contains(std::string_view id) const;
  std::size_t index_of(std::string_view id) const;
  const LayerNode &node(std::string_view id) const { return nodes_[index_of(id)]; }

  /// Output shape of every node, parallel to nodes().
  const std::vector<TensorShape> &shapes() const { return shapes_; }
  const TensorShape &shape_of(std::string_view id) const { return shapes_[index_of(id)]; }
  /// Shape of the tensor a node consumes on input slot `slot`.
  const TensorShape &input_shape_of(std::size_t node_index, std::size_t slot = 0) const;

  /// Indices of nodes consuming node `index`'s output.
  const std::vector<std::size_t> &consumers(std::size_t index) const { return consumers_[index]; }
  /// Indices of the node's producers, parallel to LayerNode::inputs.
  const std::vector<std::size_t> &producers(std::size_t index) const { return producers_[index]; }

  std::size_t source_index() const { return source_; }
  std::size_t output_index() const { return output_; }

  std::vector<std::string> conv_ids() const;

  /// Structural equality: same metadata and same canonical node list.
  bool operator==(const ModelGraph &other) const;

private:
  std::string name_;
  TensorShape input_shape_;
  std::int64_t num_classes_;
  std::vector<LayerNode> nodes_;
  std::vector<TensorShape> shapes_;
  std::vector<std::vector<std::size_t>> producers_;
  std::vector<std::vector<std::size_t>> consumers_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t source_ = 0;
  std::size_t output_ = 0;
};

/// Map of node id to output feature-map shape.
std::map<std::string, TensorShape> infer_shapes(const ModelGraph &graph);

struct CostReport {
  std::map<std::string, std::int64_t> per_layer_params;
  std::int64_t total_params = 0;
  std::map<std::string, std::int64_t> per_layer_ops;
  std::int64_t total_ops = 0;
  double total_giga_ops = 0.0;
  std::int64_t memory_bytes = 0;
};

/// Learnable parameters of a single node (conv, BN and linear only).
std::int64_t node_params(const LayerNode &node);
/// Conv and linear multiply-accumulates times two; zero for other kinds.
std::int64_t node_ops(const LayerNode &node, const TensorShape &output_shape);

CostReport count_params(const ModelGraph &graph);
CostReport count_ops(const ModelGraph &graph);
/// Both censuses in one report.
CostReport count_cost(const ModelGraph &graph);

/// Canonical document: sorted keys, two-space indent, topological node order.
std::string serialize_model(const ModelGraph &graph);
/// Throws SchemaError for malformed documents and ValidationError for
/// structurally invalid graphs (including shape contradictions).
ModelGraph parse_model(std::string_view text);

ModelGraph load_model(const std::string &path);
void save_model(const ModelGraph &graph, const std::string &path);

} // namespace dapr::ir

#endif
