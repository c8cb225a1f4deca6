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

#include "dapr/channel_flow.hpp"

#include <algorithm>

#include "dapr/errors.hpp"

namespace dapr::ir {

NodeChannels graph_input_channels(const ModelGraph &graph) {
  NodeChannels in(static_cast<std::size_t>(graph.input_shape().channels()));
  for (std::size_t c = 0; c < in.size(); ++c) {
    in[c].origins = {ChannelOrigin{kGraphInput, static_cast<std::int64_t>(c)}};
    in[c].first = static_cast<std::int64_t>(c);
  }
  return in;
}

const NodeChannels &input_channels(const ModelGraph &graph, const std::vector<NodeChannels> &flow, std::size_t index,
                                   std::size_t slot, const NodeChannels &graph_input) {
  if (graph.nodes()[index].inputs.empty()) return graph_input;
  return flow[graph.producers(index).at(slot)];
}

std::vector<NodeChannels> trace_channels(const ModelGraph &graph) {
  const NodeChannels input = graph_input_channels(graph);
  std::vector<NodeChannels> flow(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto &node = graph.nodes()[i];
    const auto &in0 = input_channels(graph, flow, i, 0, input);
    NodeChannels &out = flow[i];
    switch (node.kind) {
    case LayerKind::Conv: {
      const auto n = node.conv().out_channels;
      out.resize(static_cast<std::size_t>(n));
      for (std::int64_t c = 0; c < n; ++c) {
        out[c].origins = {ChannelOrigin{static_cast<std::int64_t>(i), c}};
        out[c].first = c;
      }
      break;
    }
    case LayerKind::Linear: {
      const auto n = node.linear().out_features;
      out.resize(static_cast<std::size_t>(n));
      for (std::int64_t c = 0; c < n; ++c) out[c].first = c;
      break;
    }
    case LayerKind::Flatten: {
      const auto &s = graph.input_shape_of(i);
      const auto hw = s.height() * s.width();
      out = in0;
      for (auto &ch : out) {
        ch.first *= hw;
        ch.span *= hw;
      }
      break;
    }
    case LayerKind::Add: {
      const auto &in1 = input_channels(graph, flow, i, 1, input);
      if (in0.size() != in1.size()) throw ShapeError(node.id, "Add inputs carry different channel counts");
      out = in0;
      for (std::size_t c = 0; c < out.size(); ++c) {
        auto &o = out[c].origins;
        o.insert(o.end(), in1[c].origins.begin(), in1[c].origins.end());
        std::sort(o.begin(), o.end());
        o.erase(std::unique(o.begin(), o.end()), o.end());
      }
      break;
    }
    case LayerKind::Concat: {
      std::int64_t offset = 0;
      for (std::size_t slot = 0; slot < node.inputs.size(); ++slot) {
        const auto &in = input_channels(graph, flow, i, slot, input);
        for (const auto &ch : in) {
          out.push_back(ch);
          out.back().first += offset;
        }
        offset += graph.input_shape_of(i, slot).channels();
      }
      break;
    }
    default:
      // BatchNorm, ReLU, MaxPool and GlobalAvgPool act per channel.
      out = in0;
    }
  }
  return flow;
}

} // namespace dapr::ir
