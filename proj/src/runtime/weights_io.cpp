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

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dapr/errors.hpp"
#include "dapr/runtime.hpp"

namespace dapr::nn {

namespace {

constexpr const char *kFormat = "dapr-weights";
constexpr int kVersion = 1;

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

} // namespace

std::string serialize_weights(const WeightStore &weights) {
  nlohmann::json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kVersion;
  auto tensors = nlohmann::json::array();
  std::uint64_t offset = 0;
  std::string blob;
  for (const auto &[name, t] : weights.tensors) {
    const std::uint64_t length = t.data.size() * 4;
    tensors.push_back({{"name", name}, {"dtype", "f32"}, {"shape", t.shape}, {"offset", offset}, {"length", length}});
    offset += length;
    for (float f : t.data) {
      const auto bits = to_le(std::bit_cast<std::uint32_t>(f));
      char b[4];
      std::memcpy(b, &bits, 4);
      blob.append(b, 4);
    }
  }
  manifest["tensors"] = std::move(tensors);
  return manifest.dump() + "\n" + blob;
}

WeightStore parse_weights(const std::string &bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw FormatError("weight container has no manifest line", 0);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("weight manifest is not valid JSON: ") + e.what(), 0);
  }
  const std::uint64_t base = nl + 1;
  const std::uint64_t blob_size = bytes.size() - base;
  WeightStore out;
  try {
    if (m.at("format") != kFormat || m.at("version") != kVersion)
      throw FormatError("unsupported weight container format", 0);
    std::uint64_t expected = 0;
    for (const auto &t : m.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      if (t.at("dtype") != "f32") throw FormatError("tensor '" + name + "' has unsupported dtype", 0);
      const auto shape = t.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      const auto length = t.at("length").get<std::uint64_t>();
      if (offset != expected) throw FormatError("tensor '" + name + "' is not contiguous", base + offset);
      if (length != static_cast<std::uint64_t>(Tensor::count(shape)) * 4)
        throw FormatError("tensor '" + name + "' length disagrees with its shape", base + offset);
      if (offset + length > blob_size) throw FormatError("tensor '" + name + "' runs past the end", bytes.size());
      Tensor tensor(shape);
      for (std::size_t j = 0; j < tensor.data.size(); ++j) {
        std::uint32_t bits;
        std::memcpy(&bits, bytes.data() + base + offset + j * 4, 4);
        tensor.data[j] = std::bit_cast<float>(to_le(bits));
      }
      if (!out.tensors.emplace(name, std::move(tensor)).second)
        throw FormatError("duplicate tensor '" + name + "'", base + offset);
      expected += length;
    }
    if (expected != blob_size) throw FormatError("trailing bytes after the last tensor", base + expected);
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("malformed weight manifest: ") + e.what(), 0);
  }
  return out;
}

void save_weights(const WeightStore &weights, const std::string &path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << serialize_weights(weights);
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

WeightStore load_weights(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_weights(ss.str());
}

} // namespace dapr::nn
