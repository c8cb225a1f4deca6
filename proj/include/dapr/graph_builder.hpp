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

#ifndef DAPR_GRAPH_BUILDER_HPP
#define DAPR_GRAPH_BUILDER_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "dapr/model_ir.hpp"

namespace dapr::ir {

/// Incremental graph construction with shape tracking. An empty input id
/// refers to the graph input. Every method returns the id it created.
class GraphBuilder {
public:
  GraphBuilder(std::string name, TensorShape input_shape, std::int64_t num_classes);

  /// `padding < 0` selects "same" padding (kernel / 2).
  std::string conv(const std::string &id, const std::string &input, std::int64_t out_channels, std::int64_t kernel,
                   std::int64_t stride = 1, std::int64_t padding = -1, bool bias = false, Annotations tags = {});
  std::string depthwise(const std::string &id, const std::string &input, std::int64_t kernel, std::int64_t stride = 1,
                        bool bias = false);
  std::string batch_norm(const std::string &id, const std::string &input);
  std::string relu(const std::string &id, const std::string &input);
  std::string max_pool(const std::string &id, const std::string &input, std::int64_t kernel, std::int64_t stride);
  std::string global_avg_pool(const std::string &id, const std::string &input);
  std::string flatten(const std::string &id, const std::string &input);
  std::string linear(const std::string &id, const std::string &input, std::int64_t out_features);
  std::string add(const std::string &id, const std::string &a, const std::string &b);
  std::string concat(const std::string &id, const std::vector<std::string> &inputs);

  const TensorShape &shape(const std::string &id) const;
  ModelGraph build() const;

private:
  std::string push(LayerNode node);

  std::string name_;
  TensorShape input_shape_;
  std::int64_t num_classes_;
  std::vector<LayerNode> nodes_;
  std::unordered_map<std::string, TensorShape> shapes_;
};

Annotations tag_plain();
Annotations tag_residual_final(int group);
Annotations tag_residual_down(int group);
Annotations tag_fire_squeeze();
Annotations tag_fire_expand();

} // namespace dapr::ir

#endif
