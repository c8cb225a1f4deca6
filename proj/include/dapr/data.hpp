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

#ifndef DAPR_DATA_HPP
#define DAPR_DATA_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dapr/dataset.hpp"

namespace dapr::data {

enum class SourceFormat { Cifar10, Cifar100, Synthetic };

std::string to_string(SourceFormat format);
/// Accepts "cifar10", "cifar100", "synthetic". Throws ConfigError.
SourceFormat parse_source_format(const std::string &text);

/// Raw 8-bit images with their label bytes, in file order.
struct ImageSet {
  SourceFormat format = SourceFormat::Cifar10;
  std::int64_t channels = 3;
  std::int64_t height = 32;
  std::int64_t width = 32;
  std::int64_t num_classes = 10;
  /// 0 when records carry no coarse label.
  std::int64_t num_coarse = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> fine;
  std::vector<std::uint8_t> coarse;

  std::size_t size() const { return fine.size(); }
  std::int64_t sample_size() const { return channels * height * width; }
  bool has_coarse() const { return num_coarse > 0; }
  ImageSet select(const std::vector<std::size_t> &indices) const;
};

/// 3073 for CIFAR-10, 3074 for CIFAR-100.
std::size_t cifar_record_size(SourceFormat format);

/// Parses a CIFAR binary file image. Throws FormatError carrying the byte
/// offset of the first bad record or label byte.
ImageSet parse_cifar(const std::string &bytes, SourceFormat format);
/// Inverse of parse_cifar; reproduces the source bytes exactly.
std::string serialize_cifar(const ImageSet &set);
/// Concatenates the given files in order.
ImageSet load_cifar(const std::vector<std::string> &paths, SourceFormat format);

struct SyntheticParams {
  std::int64_t num_classes = 10;
  std::int64_t train_per_class = 100;
  std::int64_t test_per_class = 40;
  std::int64_t height = 32;
  std::int64_t width = 32;
  /// Classes per coarse group; 0 disables coarse labels.
  std::int64_t coarse_group = 0;
  double noise = 24.0;
  std::uint64_t seed = 0;
};

/// Seeded class-conditional images: each class owns a prototype of coloured
/// blobs; samples are jittered, shifted and noised copies.
std::pair<ImageSet, ImageSet> generate_synthetic(const SyntheticParams &params);

/// Per-channel statistics of pixel values scaled to [0, 1].
struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
};

NormStats compute_norm_stats(const ImageSet &set);
Dataset to_dataset(const ImageSet &set, const NormStats &stats);

std::vector<std::size_t> class_counts(const ImageSet &set);

/// Fine-label selection drawn from the parent label space.
struct SubsetSpec {
  std::string name;
  std::set<std::int32_t> class_ids;
};

/// The 20 CIFAR-100 superclass names, indexed by coarse label.
const std::vector<std::string> &cifar100_coarse_names();

/// Builds a subset from selectors: "<fine id>", "fine:<id>", "coarse:<name>"
/// or a bare coarse name, and "random:<k>". Coarse names expand through the
/// coarse bytes of `set`; random draws use `seed`. Throws UnknownClass.
SubsetSpec resolve_subset(const std::string &name, const std::vector<std::string> &selectors, const ImageSet &set,
                          std::uint64_t seed);

/// Records whose fine label is in the subset. Throws UnknownClass when the
/// subset names classes outside the label space.
ImageSet filter_subset(const ImageSet &set, const SubsetSpec &spec);

} // namespace dapr::data

#endif
