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

#ifndef DAPR_CHANNEL_FLOW_HPP
#define DAPR_CHANNEL_FLOW_HPP

#include <cstdint>
#include <vector>

#include "dapr/model_ir.hpp"

namespace dapr::ir {

/// Index of the graph input in ChannelOrigin::node.
inline constexpr std::int64_t kGraphInput = -1;

/// One channel of a Conv output (or of the graph input) that a tensor
/// channel is derived from.
struct ChannelOrigin {
  std::int64_t node = kGraphInput;
  std::int64_t channel = 0;

  auto operator<=>(const ChannelOrigin &) const = default;
};

/// A channel of some node's output as seen by its consumers: the Conv
/// channels it derives from (several after an Add), and the contiguous
/// range [first, first + span) it occupies in the consumer's input. `span`
/// exceeds 1 only after a Flatten, where one channel expands into H*W
/// features.
struct LogicalChannel {
  std::vector<ChannelOrigin> origins;
  std::int64_t first = 0;
  std::int64_t span = 1;
};

using NodeChannels = std::vector<LogicalChannel>;

/// Per-node logical channels, parallel to graph.nodes(). Linear outputs have
/// no origins. Origins within one channel are sorted and unique.
std::vector<NodeChannels> trace_channels(const ModelGraph &graph);

/// Logical channels entering node `index` through input slot `slot`.
const NodeChannels &input_channels(const ModelGraph &graph, const std::vector<NodeChannels> &flow, std::size_t index,
                                   std::size_t slot, const NodeChannels &graph_input);

/// Logical channels of the graph input: one origin per input channel.
NodeChannels graph_input_channels(const ModelGraph &graph);

} // namespace dapr::ir

#endif
