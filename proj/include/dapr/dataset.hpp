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

#ifndef DAPR_DATASET_HPP
#define DAPR_DATASET_HPP

#include <cstdint>
#include <set>
#include <vector>

#include "dapr/errors.hpp"

namespace dapr::data {

/// Labelled images held as normalized floats, (N, C, H, W) row-major.
struct Dataset {
  std::int64_t channels = 3;
  std::int64_t height = 32;
  std::int64_t width = 32;
  /// Size of the label space, not the number of distinct labels present.
  std::int64_t num_classes = 0;
  std::vector<float> pixels;
  std::vector<std::int32_t> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::int64_t sample_size() const { return channels * height * width; }
  const float *sample(std::size_t i) const { return pixels.data() + static_cast<std::int64_t>(i) * sample_size(); }

  /// Records at `indices`, in that order.
  Dataset select(const std::vector<std::size_t> &indices) const {
    Dataset out = header();
    const auto n = static_cast<std::size_t>(sample_size());
    out.pixels.reserve(indices.size() * n);
    out.labels.reserve(indices.size());
    for (auto i : indices) {
      if (i >= size()) throw EmptySplit("record index out of range");
      out.pixels.insert(out.pixels.end(), sample(i), sample(i) + n);
      out.labels.push_back(labels[i]);
    }
    return out;
  }

  /// Records whose label is in `classes`, in original order.
  Dataset filter_classes(const std::set<std::int32_t> &classes) const {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < size(); ++i)
      if (classes.count(labels[i])) keep.push_back(i);
    return select(keep);
  }

  Dataset header() const {
    Dataset out;
    out.channels = channels;
    out.height = height;
    out.width = width;
    out.num_classes = num_classes;
    return out;
  }
};

} // namespace dapr::data

#endif
