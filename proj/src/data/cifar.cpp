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

#include <fstream>
#include <sstream>

#include "dapr/data.hpp"
#include "dapr/errors.hpp"

namespace dapr::data {

std::string to_string(SourceFormat format) {
  switch (format) {
  case SourceFormat::Cifar10:
    return "cifar10";
  case SourceFormat::Cifar100:
    return "cifar100";
  case SourceFormat::Synthetic:
    return "synthetic";
  }
  return "cifar10";
}

SourceFormat parse_source_format(const std::string &text) {
  if (text == "cifar10") return SourceFormat::Cifar10;
  if (text == "cifar100") return SourceFormat::Cifar100;
  if (text == "synthetic") return SourceFormat::Synthetic;
  throw ConfigError("unknown dataset format '" + text + "'");
}

ImageSet ImageSet::select(const std::vector<std::size_t> &indices) const {
  ImageSet out = *this;
  out.pixels.clear();
  out.fine.clear();
  out.coarse.clear();
  const auto n = static_cast<std::size_t>(sample_size());
  for (auto i : indices) {
    out.pixels.insert(out.pixels.end(), pixels.begin() + static_cast<std::ptrdiff_t>(i * n),
                      pixels.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
    out.fine.push_back(fine.at(i));
    if (has_coarse()) out.coarse.push_back(coarse.at(i));
  }
  return out;
}

std::size_t cifar_record_size(SourceFormat format) {
  switch (format) {
  case SourceFormat::Cifar10:
    return 3073;
  case SourceFormat::Cifar100:
    return 3074;
  case SourceFormat::Synthetic:
    break;
  }
  throw ConfigError("synthetic datasets have no binary record format");
}

ImageSet parse_cifar(const std::string &bytes, SourceFormat format) {
  const auto rec = cifar_record_size(format);
  if (bytes.size() % rec != 0)
    throw FormatError("file size " + std::to_string(bytes.size()) + " is not a multiple of the " + std::to_string(rec) +
                          "-byte record; trailing record truncated",
                      bytes.size() - bytes.size() % rec);
  const bool hundred = format == SourceFormat::Cifar100;
  ImageSet set;
  set.format = format;
  set.num_classes = hundred ? 100 : 10;
  set.num_coarse = hundred ? 20 : 0;
  const auto n = bytes.size() / rec;
  set.pixels.reserve(n * 3072);
  set.fine.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto base = r * rec;
    std::size_t pos = base;
    if (hundred) {
      const auto c = static_cast<std::uint8_t>(bytes[pos]);
      if (c >= 20) throw FormatError("coarse label " + std::to_string(c) + " out of range", pos);
      set.coarse.push_back(c);
      ++pos;
    }
    const auto f = static_cast<std::uint8_t>(bytes[pos]);
    if (f >= set.num_classes) throw FormatError("fine label " + std::to_string(f) + " out of range", pos);
    set.fine.push_back(f);
    ++pos;
    set.pixels.insert(set.pixels.end(), bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(base + rec));
  }
  return set;
}

std::string serialize_cifar(const ImageSet &set) {
  if (set.format == SourceFormat::Synthetic || set.channels != 3 || set.height != 32 || set.width != 32)
    throw ConfigError("only 3x32x32 CIFAR image sets can be written in the binary format");
  const bool hundred = set.format == SourceFormat::Cifar100;
  std::string out;
  out.reserve(set.size() * cifar_record_size(set.format));
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (hundred) out.push_back(static_cast<char>(set.coarse.at(i)));
    out.push_back(static_cast<char>(set.fine[i]));
    out.append(reinterpret_cast<const char *>(set.pixels.data()) + i * 3072, 3072);
  }
  return out;
}

ImageSet load_cifar(const std::vector<std::string> &paths, SourceFormat format) {
  if (paths.empty()) throw ConfigError("no dataset files given");
  ImageSet all;
  bool first = true;
  for (const auto &path : paths) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read dataset file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    auto part = parse_cifar(ss.str(), format);
    if (first) {
      all = std::move(part);
      first = false;
      continue;
    }
    all.pixels.insert(all.pixels.end(), part.pixels.begin(), part.pixels.end());
    all.fine.insert(all.fine.end(), part.fine.begin(), part.fine.end());
    all.coarse.insert(all.coarse.end(), part.coarse.begin(), part.coarse.end());
  }
  return all;
}

std::vector<std::size_t> class_counts(const ImageSet &set) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(set.num_classes), 0);
  for (auto f : set.fine) counts.at(f) += 1;
  return counts;
}

} // namespace dapr::data
