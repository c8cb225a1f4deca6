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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dapr/data.hpp"
#include "dapr/errors.hpp"

namespace dapr::data {

namespace {

struct Blob {
  double cy, cx, radius;
  std::array<double, 3> colour;
};

struct Prototype {
  std::array<double, 3> background;
  std::vector<Blob> blobs;
};

Prototype make_prototype(std::mt19937_64 &rng, std::int64_t h, std::int64_t w) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Prototype p;
  for (auto &c : p.background) c = 40.0 + 120.0 * unit(rng);
  for (int b = 0; b < 3; ++b) {
    Blob blob;
    blob.cy = unit(rng) * static_cast<double>(h);
    blob.cx = unit(rng) * static_cast<double>(w);
    blob.radius = (0.12 + 0.16 * unit(rng)) * static_cast<double>(std::min(h, w));
    for (auto &c : blob.colour) c = 255.0 * unit(rng);
    p.blobs.push_back(blob);
  }
  return p;
}

void render(const Prototype &p, std::mt19937_64 &rng, double noise, std::int64_t h, std::int64_t w,
            std::uint8_t *out) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double max_shift = static_cast<double>(std::min(h, w)) / 8.0;
  const double dy = (2.0 * unit(rng) - 1.0) * max_shift, dx = (2.0 * unit(rng) - 1.0) * max_shift;
  const double gain = 0.8 + 0.4 * unit(rng);
  for (std::int64_t c = 0; c < 3; ++c)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) {
        double v = p.background[static_cast<std::size_t>(c)];
        for (const auto &b : p.blobs) {
          const double ry = static_cast<double>(y) - b.cy - dy, rx = static_cast<double>(x) - b.cx - dx;
          const double weight = std::exp(-(ry * ry + rx * rx) / (2.0 * b.radius * b.radius));
          v = v * (1.0 - weight) + b.colour[static_cast<std::size_t>(c)] * weight;
        }
        v = v * gain + noise * gauss(rng);
        out[(c * h + y) * w + x] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
}

} // namespace

std::pair<ImageSet, ImageSet> generate_synthetic(const SyntheticParams &params) {
  if (params.num_classes < 2 || params.num_classes > 256) throw ConfigError("synthetic class count must lie in [2, 256]");
  if (params.train_per_class < 1 || params.test_per_class < 1)
    throw ConfigError("synthetic datasets need at least one record per class and split");
  if (params.height < 4 || params.width < 4) throw ConfigError("synthetic images must be at least 4x4");
  if (params.coarse_group < 0 || (params.coarse_group > 0 && params.num_classes % params.coarse_group != 0))
    throw ConfigError("coarse_group must divide the class count");

  std::mt19937_64 rng(params.seed);
  std::vector<Prototype> protos;
  for (std::int64_t k = 0; k < params.num_classes; ++k) protos.push_back(make_prototype(rng, params.height, params.width));

  auto make = [&](std::int64_t per_class) {
    ImageSet set;
    set.format = SourceFormat::Synthetic;
    set.height = params.height;
    set.width = params.width;
    set.num_classes = params.num_classes;
    set.num_coarse = params.coarse_group > 0 ? params.num_classes / params.coarse_group : 0;
    const auto n = static_cast<std::size_t>(per_class * params.num_classes);
    set.pixels.resize(n * static_cast<std::size_t>(set.sample_size()));
    // Interleave classes so contiguous slices stay balanced.
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::int64_t>(i % static_cast<std::size_t>(params.num_classes));
      set.fine.push_back(static_cast<std::uint8_t>(k));
      if (set.has_coarse()) set.coarse.push_back(static_cast<std::uint8_t>(k / params.coarse_group));
      render(protos[static_cast<std::size_t>(k)], rng, params.noise, params.height, params.width,
             set.pixels.data() + i * static_cast<std::size_t>(set.sample_size()));
    }
    return set;
  };
  auto train = make(params.train_per_class);
  auto test = make(params.test_per_class);
  return {std::move(train), std::move(test)};
}

NormStats compute_norm_stats(const ImageSet &set) {
  if (set.size() == 0) throw EmptySplit("cannot compute normalization statistics of an empty set");
  NormStats s;
  const auto plane = static_cast<std::size_t>(set.height * set.width);
  for (std::int64_t c = 0; c < set.channels; ++c) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto *p = set.pixels.data() + i * static_cast<std::size_t>(set.sample_size()) + static_cast<std::size_t>(c) * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        const double v = p[j] / 255.0;
        sum += v;
        sq += v * v;
      }
    }
    const double n = static_cast<double>(set.size() * plane);
    const double mean = sum / n;
    s.mean.push_back(mean);
    s.std.push_back(std::sqrt(std::max(sq / n - mean * mean, 1e-12)));
  }
  return s;
}

Dataset to_dataset(const ImageSet &set, const NormStats &stats) {
  if (static_cast<std::int64_t>(stats.mean.size()) != set.channels || stats.std.size() != stats.mean.size())
    throw ConfigError("normalization statistics do not match the channel count");
  Dataset d;
  d.channels = set.channels;
  d.height = set.height;
  d.width = set.width;
  d.num_classes = set.num_classes;
  d.pixels.resize(set.pixels.size());
  const auto plane = static_cast<std::size_t>(set.height * set.width);
  for (std::size_t i = 0; i < set.pixels.size(); ++i) {
    const auto c = (i / plane) % static_cast<std::size_t>(set.channels);
    d.pixels[i] = static_cast<float>((set.pixels[i] / 255.0 - stats.mean[c]) / stats.std[c]);
  }
  d.labels.assign(set.fine.begin(), set.fine.end());
  return d;
}

const std::vector<std::string> &cifar100_coarse_names() {
  static const std::vector<std::string> names = {"aquatic_mammals",
                                                 "fish",
                                                 "flowers",
                                                 "food_containers",
                                                 "fruit_and_vegetables",
                                                 "household_electrical_devices",
                                                 "household_furniture",
                                                 "insects",
                                                 "large_carnivores",
                                                 "large_man-made_outdoor_things",
                                                 "large_natural_outdoor_scenes",
                                                 "large_omnivores_and_herbivores",
                                                 "medium_mammals",
                                                 "non-insect_invertebrates",
                                                 "people",
                                                 "reptiles",
                                                 "small_mammals",
                                                 "trees",
                                                 "vehicles_1",
                                                 "vehicles_2"};
  return names;
}

namespace {

std::optional<std::int64_t> parse_int(const std::string &s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 9) return std::nullopt;
  return std::stoll(s);
}

std::optional<std::int64_t> coarse_index(const std::string &name, const ImageSet &set) {
  if (auto v = parse_int(name)) return v;
  const auto &names = cifar100_coarse_names();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end() || !set.has_coarse() || set.num_coarse != static_cast<std::int64_t>(names.size()))
    return std::nullopt;
  return it - names.begin();
}

} // namespace

SubsetSpec resolve_subset(const std::string &name, const std::vector<std::string> &selectors, const ImageSet &set,
                          std::uint64_t seed) {
  SubsetSpec spec;
  spec.name = name;
  if (selectors.empty()) throw UnknownClass("subset '" + name + "' selects no classes");
  for (const auto &sel : selectors) {
    const auto colon = sel.find(':');
    const std::string kind = colon == std::string::npos ? std::string{} : sel.substr(0, colon);
    const std::string arg = colon == std::string::npos ? sel : sel.substr(colon + 1);
    if (kind == "random") {
      const auto k = parse_int(arg);
      if (!k || *k < 1 || *k > set.num_classes)
        throw UnknownClass("random subset size '" + arg + "' must lie in [1, " + std::to_string(set.num_classes) + "]");
      std::vector<std::int32_t> all(static_cast<std::size_t>(set.num_classes));
      std::iota(all.begin(), all.end(), 0);
      std::mt19937_64 rng(seed);
      std::shuffle(all.begin(), all.end(), rng);
      spec.class_ids.insert(all.begin(), all.begin() + *k);
    } else if (kind == "fine" || (kind.empty() && parse_int(arg))) {
      const auto id = parse_int(arg);
      if (!id || *id >= set.num_classes) throw UnknownClass("fine class '" + arg + "' is not in the label space");
      spec.class_ids.insert(static_cast<std::int32_t>(*id));
    } else if (kind == "coarse" || kind.empty()) {
      const auto c = coarse_index(arg, set);
      if (!c || !set.has_coarse() || *c >= set.num_coarse) throw UnknownClass("coarse class '" + arg + "' is unknown");
      bool any = false;
      for (std::size_t i = 0; i < set.size(); ++i)
        if (set.coarse[i] == *c) {
          spec.class_ids.insert(set.fine[i]);
          any = true;
        }
      if (!any) throw UnknownClass("coarse class '" + arg + "' has no records");
    } else {
      throw UnknownClass("unknown class selector '" + sel + "'");
    }
  }
  return spec;
}

ImageSet filter_subset(const ImageSet &set, const SubsetSpec &spec) {
  if (spec.class_ids.empty()) throw UnknownClass("subset '" + spec.name + "' is empty");
  for (auto id : spec.class_ids)
    if (id < 0 || id >= set.num_classes)
      throw UnknownClass("class " + std::to_string(id) + " is outside the label space");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (spec.class_ids.count(set.fine[i])) keep.push_back(i);
  return set.select(keep);
}

} // namespace dapr::data
