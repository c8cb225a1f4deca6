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

#ifndef DAPR_TOOLS_CLI_HPP
#define DAPR_TOOLS_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dapr/data.hpp"
#include "dapr/runtime.hpp"
#include "dapr/search.hpp"

namespace dapr::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInternal = 1, kInvalid = 2, kNumerical = 3, kInfeasible = 4 };

struct DatasetConfig {
  data::SourceFormat format = data::SourceFormat::Synthetic;
  std::vector<fs::path> train_paths;
  std::vector<fs::path> test_paths;
  data::SyntheticParams synthetic;
  /// False when the config pins the generator seed.
  bool seed_follows_run = true;
};

/// A bundled architecture built in memory instead of read from disk.
struct FixtureRef {
  std::string name;
  std::int64_t num_classes = 10;
  std::int64_t spatial = 32;
};

/// One document drives every command. Relative paths resolve against the
/// directory holding the config file.
struct RunConfig {
  fs::path source;
  std::optional<fs::path> model_path;
  std::optional<FixtureRef> model_fixture;
  std::optional<fs::path> weights_path;
  DatasetConfig dataset;
  std::string subset_name = "all";
  std::vector<std::string> subset_selectors;
  nn::TrainConfig train;
  search::SearchConfig search;
  search::LrPolicy lr;
  std::vector<double> sweep_levels;
  int latency_batch = 1;
  int latency_repetitions = 10;
  fs::path output_dir = "out";
  std::uint64_t seed = 0;
};

/// Replaces the run seed everywhere it propagates.
void apply_seed(RunConfig &config, std::uint64_t seed);

/// Throws ConfigError on unknown keys, wrong types or missing files.
RunConfig parse_config(const nlohmann::json &doc, const fs::path &base_dir);
RunConfig load_config(const fs::path &path);

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::string &bytes);
std::string file_sha256(const fs::path &path);

std::string read_file(const fs::path &path);
void write_file(const fs::path &path, const std::string &bytes);

/// Image sets loaded per the config, normalized with training statistics.
struct LoadedData {
  data::ImageSet train_images;
  data::ImageSet test_images;
  data::NormStats stats;
  search::Splits full;
};

LoadedData load_data(const RunConfig &config);

/// Runs one command line; `args` excludes the program name. Error
/// documents go to `err` and, when an output directory is known, to
/// <output_dir>/error.json.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace dapr::cli

#endif
