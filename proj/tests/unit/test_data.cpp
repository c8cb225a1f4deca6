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

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "dapr/data.hpp"
#include "dapr/errors.hpp"

using namespace dapr;
using data::SourceFormat;

namespace {

/// Random CIFAR records built byte by byte.
std::string random_cifar_bytes(SourceFormat format, std::size_t records, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  const bool hundred = format == SourceFormat::Cifar100;
  std::string out;
  for (std::size_t r = 0; r < records; ++r) {
    const int fine = std::uniform_int_distribution<int>(0, hundred ? 99 : 9)(rng);
    if (hundred) out.push_back(static_cast<char>(fine / 5));
    out.push_back(static_cast<char>(fine));
    for (int i = 0; i < 3072; ++i) out.push_back(static_cast<char>(byte(rng)));
  }
  return out;
}

} // namespace

TEST_CASE("record sizes") {
  CHECK(data::cifar_record_size(SourceFormat::Cifar10) == 3073);
  CHECK(data::cifar_record_size(SourceFormat::Cifar100) == 3074);
  CHECK(data::parse_source_format("cifar100") == SourceFormat::Cifar100);
  CHECK_THROWS_AS(data::parse_source_format("mnist"), ConfigError);
}

TEST_CASE("CIFAR binaries round-trip bit-exactly") {
  for (auto format : {SourceFormat::Cifar10, SourceFormat::Cifar100}) {
    const auto bytes = random_cifar_bytes(format, 7, 3);
    const auto set = data::parse_cifar(bytes, format);
    CHECK(set.size() == 7);
    CHECK(data::serialize_cifar(set) == bytes);
    CHECK(set.pixels.size() == 7 * 3072);
    CHECK(set.has_coarse() == (format == SourceFormat::Cifar100));
  }
}

TEST_CASE("first record's bytes land in place") {
  auto bytes = random_cifar_bytes(SourceFormat::Cifar100, 2, 1);
  const auto set = data::parse_cifar(bytes, SourceFormat::Cifar100);
  CHECK(set.coarse[0] == static_cast<std::uint8_t>(bytes[0]));
  CHECK(set.fine[0] == static_cast<std::uint8_t>(bytes[1]));
  CHECK(set.pixels[0] == static_cast<std::uint8_t>(bytes[2]));
  CHECK(set.pixels[3072] == static_cast<std::uint8_t>(bytes[3074 + 2]));
}

TEST_CASE("truncated files report the offset of the partial record") {
  const auto bytes = random_cifar_bytes(SourceFormat::Cifar10, 3, 2);
  for (std::size_t cut : {1u, 100u, 3072u}) {
    try {
      data::parse_cifar(bytes.substr(0, bytes.size() - cut), SourceFormat::Cifar10);
      FAIL("expected FormatError");
    } catch (const FormatError &e) {
      CHECK(e.byte_offset() == 2 * 3073);
    }
  }
}

TEST_CASE("out-of-range labels report the label byte offset") {
  auto bytes = random_cifar_bytes(SourceFormat::Cifar10, 3, 2);
  bytes[3073] = static_cast<char>(10);
  try {
    data::parse_cifar(bytes, SourceFormat::Cifar10);
    FAIL("expected FormatError");
  } catch (const FormatError &e) {
    CHECK(e.byte_offset() == 3073);
  }
  auto hundred = random_cifar_bytes(SourceFormat::Cifar100, 2, 2);
  hundred[3074 + 1] = static_cast<char>(100);
  try {
    data::parse_cifar(hundred, SourceFormat::Cifar100);
    FAIL("expected FormatError");
  } catch (const FormatError &e) {
    CHECK(e.byte_offset() == 3075);
  }
}

TEST_CASE("synthetic data is seeded and balanced") {
  data::SyntheticParams p;
  p.num_classes = 6;
  p.train_per_class = 5;
  p.test_per_class = 3;
  p.height = p.width = 8;
  p.coarse_group = 3;
  p.seed = 9;
  const auto [a_train, a_test] = data::generate_synthetic(p);
  const auto [b_train, b_test] = data::generate_synthetic(p);
  CHECK(a_train.pixels == b_train.pixels);
  CHECK(a_test.fine == b_test.fine);
  CHECK(a_train.size() == 30);
  CHECK(a_test.size() == 18);
  CHECK(data::class_counts(a_train) == std::vector<std::size_t>(6, 5));
  CHECK(a_train.num_coarse == 2);
  for (std::size_t i = 0; i < a_train.size(); ++i) CHECK(a_train.coarse[i] == a_train.fine[i] / 3);
  p.seed = 10;
  CHECK(data::generate_synthetic(p).first.pixels != a_train.pixels);
  p.coarse_group = 4;
  CHECK_THROWS_AS(data::generate_synthetic(p), ConfigError);
}

TEST_CASE("normalization yields zero mean and unit variance per channel") {
  data::SyntheticParams p;
  p.num_classes = 3;
  p.train_per_class = 10;
  p.test_per_class = 1;
  p.height = p.width = 8;
  const auto set = data::generate_synthetic(p).first;
  const auto stats = data::compute_norm_stats(set);
  const auto ds = data::to_dataset(set, stats);
  CHECK(ds.size() == set.size());
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
      for (std::int64_t s = 0; s < 64; ++s) {
        const double v = ds.sample(i)[c * 64 + s];
        sum += v;
        sq += v * v;
        ++n;
      }
    const double mean = sum / static_cast<double>(n);
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-4).scale(1.0));
    CHECK(sq / static_cast<double>(n) - mean * mean == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("subset selectors") {
  const auto set = data::parse_cifar(random_cifar_bytes(SourceFormat::Cifar100, 400, 4), SourceFormat::Cifar100);
  const auto fine = data::resolve_subset("mixed", {"3", "fine:7"}, set, 0);
  CHECK(fine.class_ids == std::set<std::int32_t>{3, 7});

  const auto &names = data::cifar100_coarse_names();
  REQUIRE(names.size() == 20);
  CHECK(names.front() == "aquatic_mammals");
  const auto coarse = data::resolve_subset("aquatic", {"coarse:aquatic_mammals"}, set, 0);
  CHECK(coarse.class_ids.size() == 5);
  for (auto id : coarse.class_ids) CHECK(id / 5 == 0);
  CHECK(data::resolve_subset("bare", {"fish"}, set, 0).class_ids == data::resolve_subset("x", {"coarse:1"}, set, 0).class_ids);

  const auto r1 = data::resolve_subset("r", {"random:10"}, set, 42);
  const auto r2 = data::resolve_subset("r", {"random:10"}, set, 42);
  CHECK(r1.class_ids.size() == 10);
  CHECK(r1.class_ids == r2.class_ids);
  CHECK(data::resolve_subset("r", {"random:10"}, set, 43).class_ids != r1.class_ids);

  CHECK_THROWS_AS(data::resolve_subset("bad", {"fine:100"}, set, 0), UnknownClass);
  CHECK_THROWS_AS(data::resolve_subset("bad", {"coarse:dragons"}, set, 0), UnknownClass);
  CHECK_THROWS_AS(data::resolve_subset("bad", {"random:0"}, set, 0), UnknownClass);
  CHECK_THROWS_AS(data::resolve_subset("bad", {}, set, 0), UnknownClass);
}

TEST_CASE("filter_subset keeps records of the chosen classes in order") {
  const auto set = data::parse_cifar(random_cifar_bytes(SourceFormat::Cifar10, 50, 8), SourceFormat::Cifar10);
  const data::SubsetSpec spec{"two", {2, 5}};
  const auto sub = data::filter_subset(set, spec);
  std::size_t expect = 0;
  for (auto f : set.fine) expect += (f == 2 || f == 5);
  CHECK(sub.size() == expect);
  for (auto f : sub.fine) CHECK((f == 2 || f == 5));
  CHECK(sub.num_classes == 10);
  CHECK_THROWS_AS(data::filter_subset(set, data::SubsetSpec{"bad", {11}}), UnknownClass);
  CHECK_THROWS_AS(data::filter_subset(set, data::SubsetSpec{"empty", {}}), UnknownClass);
}
