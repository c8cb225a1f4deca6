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
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "cli.hpp"
#include "dapr/errors.hpp"

namespace dapr::cli {

using nlohmann::json;

namespace {

/// Key-checked view of one JSON object.
class Section {
public:
  Section(const json &doc, std::string where) : doc_(doc), where_(std::move(where)) {
    if (!doc_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  void allow(std::initializer_list<const char *> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto &[k, _] : doc_.items())
      if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + where_);
  }

  bool has(const char *key) const { return doc_.contains(key) && !doc_.at(key).is_null(); }
  const json &raw(const char *key) const { return doc_.at(key); }
  Section sub(const char *key) const { return Section(doc_.at(key), where_ + "." + key); }

  template <typename T> void read(const char *key, T &into) const {
    if (!has(key)) return;
    try {
      into = doc_.at(key).get<T>();
    } catch (const json::exception &) {
      throw ConfigError(where_ + "." + key + " has the wrong type");
    }
  }

  template <typename T> void read_optional(const char *key, std::optional<T> &into) const {
    if (!doc_.contains(key)) return;
    if (doc_.at(key).is_null()) {
      into.reset();
      return;
    }
    T v{};
    read(key, v);
    into = v;
  }

private:
  const json &doc_;
  std::string where_;
};

fs::path resolve(const fs::path &base, const std::string &p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

std::vector<fs::path> path_list(const Section &s, const char *key, const fs::path &base) {
  std::vector<std::string> raw;
  if (s.has(key) && s.raw(key).is_string())
    raw.push_back(s.raw(key).get<std::string>());
  else
    s.read(key, raw);
  std::vector<fs::path> out;
  for (const auto &p : raw) out.push_back(resolve(base, p));
  return out;
}

void parse_train(const Section &s, nn::TrainConfig &t) {
  s.allow({"batch_size", "momentum", "weight_decay", "epochs", "val_fraction", "lr", "augment"});
  s.read("batch_size", t.batch_size);
  s.read("momentum", t.momentum);
  s.read("weight_decay", t.weight_decay);
  s.read("epochs", t.epochs);
  s.read("val_fraction", t.val_fraction);
  if (s.has("lr")) {
    const auto lr = s.sub("lr");
    lr.allow({"initial", "decay_epochs", "gamma"});
    lr.read("initial", t.lr_schedule.initial);
    lr.read("decay_epochs", t.lr_schedule.decay_epochs);
    lr.read("gamma", t.lr_schedule.gamma);
  }
  if (s.has("augment")) {
    const auto a = s.sub("augment");
    a.allow({"crop_pad", "horizontal_flip", "rotation_degrees"});
    a.read_optional("crop_pad", t.augment.crop_pad);
    a.read("horizontal_flip", t.augment.horizontal_flip);
    a.read_optional("rotation_degrees", t.augment.rotation_degrees);
  }
}

void parse_search(const Section &s, search::SearchConfig &c) {
  s.allow({"grid", "n_f", "n_r", "scope", "residual_policy", "acceptance", "explicit_target", "synthetic_threshold"});
  if (s.has("grid")) {
    const auto g = s.sub("grid");
    g.allow({"lower", "upper", "step", "start"});
    g.read("lower", c.grid.lower);
    g.read("upper", c.grid.upper);
    g.read("step", c.grid.step);
    g.read("start", c.grid.start);
  }
  s.read("n_f", c.n_f);
  s.read("n_r", c.n_r);
  std::string text;
  if (s.has("scope")) {
    s.read("scope", text);
    c.scope = prune::parse_ranking_scope(text);
  }
  if (s.has("residual_policy")) {
    s.read("residual_policy", text);
    c.residual_policy = deps::parse_residual_policy(text);
  }
  if (s.has("acceptance")) {
    s.read("acceptance", text);
    if (text == "baseline")
      c.acceptance = search::Acceptance::Baseline;
    else if (text == "explicit")
      c.acceptance = search::Acceptance::Explicit;
    else
      throw ConfigError("acceptance must be 'baseline' or 'explicit'");
  }
  s.read("explicit_target", c.explicit_target);
  s.read_optional("synthetic_threshold", c.synthetic_threshold);
}

void parse_dataset(const Section &s, DatasetConfig &d, const fs::path &base, std::uint64_t seed) {
  s.allow({"format", "train", "test", "synthetic"});
  std::string format = "synthetic";
  s.read("format", format);
  d.format = data::parse_source_format(format);
  d.synthetic.seed = seed;
  if (d.format == data::SourceFormat::Synthetic) {
    if (s.has("synthetic")) {
      const auto g = s.sub("synthetic");
      g.allow({"num_classes", "train_per_class", "test_per_class", "height", "width", "coarse_group", "noise", "seed"});
      g.read("num_classes", d.synthetic.num_classes);
      g.read("train_per_class", d.synthetic.train_per_class);
      g.read("test_per_class", d.synthetic.test_per_class);
      g.read("height", d.synthetic.height);
      g.read("width", d.synthetic.width);
      g.read("coarse_group", d.synthetic.coarse_group);
      g.read("noise", d.synthetic.noise);
      if (g.has("seed")) {
        g.read("seed", d.synthetic.seed);
        d.seed_follows_run = false;
      }
    }
    return;
  }
  d.train_paths = path_list(s, "train", base);
  d.test_paths = path_list(s, "test", base);
  if (d.train_paths.empty() || d.test_paths.empty())
    throw ConfigError("dataset.train and dataset.test must name CIFAR binary files");
}

void parse_subset(const Section &s, RunConfig &c, const fs::path &base) {
  s.allow({"name", "classes", "template"});
  if (s.has("template")) {
    std::string p;
    s.read("template", p);
    const auto path = resolve(base, p);
    if (!fs::exists(path)) throw ConfigError("subset template '" + path.string() + "' does not exist");
    json doc;
    try {
      doc = json::parse(read_file(path));
    } catch (const json::exception &) {
      throw ConfigError("subset template '" + path.string() + "' is not valid JSON");
    }
    const Section t(doc, path.filename().string());
    t.allow({"name", "classes", "note"});
    t.read("name", c.subset_name);
    t.read("classes", c.subset_selectors);
  }
  s.read("name", c.subset_name);
  s.read("classes", c.subset_selectors);
}

} // namespace

RunConfig parse_config(const json &doc, const fs::path &base_dir) {
  const Section s(doc, "config");
  s.allow({"model", "weights", "dataset", "subset", "train", "search", "lr_policy", "sweep", "output_dir", "seed"});
  RunConfig c;
  s.read("seed", c.seed);
  if (s.has("model") && s.raw("model").is_object()) {
    const auto m = s.sub("model");
    m.allow({"fixture", "num_classes", "spatial"});
    FixtureRef f;
    m.read("fixture", f.name);
    m.read("num_classes", f.num_classes);
    m.read("spatial", f.spatial);
    c.model_fixture = f;
  } else if (s.has("model")) {
    std::string p;
    s.read("model", p);
    c.model_path = resolve(base_dir, p);
  }
  if (s.has("weights")) {
    std::string p;
    s.read("weights", p);
    c.weights_path = resolve(base_dir, p);
  }
  std::string out = "out";
  s.read("output_dir", out);
  c.output_dir = resolve(base_dir, out);
  if (s.has("dataset")) parse_dataset(s.sub("dataset"), c.dataset, base_dir, c.seed);
  else c.dataset.synthetic.seed = c.seed;
  if (s.has("subset")) parse_subset(s.sub("subset"), c, base_dir);
  if (s.has("train")) parse_train(s.sub("train"), c.train);
  if (s.has("search")) parse_search(s.sub("search"), c.search);
  if (s.has("lr_policy")) {
    const auto l = s.sub("lr_policy");
    l.allow({"final_lr", "second_lr", "gamma", "retrain_decay_epochs"});
    l.read("final_lr", c.lr.final_lr);
    l.read("second_lr", c.lr.second_lr);
    l.read("gamma", c.lr.gamma);
    l.read("retrain_decay_epochs", c.lr.retrain_decay_epochs);
  }
  if (s.has("sweep")) {
    const auto w = s.sub("sweep");
    w.allow({"levels", "latency_batch", "latency_repetitions"});
    w.read("levels", c.sweep_levels);
    w.read("latency_batch", c.latency_batch);
    w.read("latency_repetitions", c.latency_repetitions);
  }
  c.train.seed = c.seed;
  c.train.validate();
  c.train.lr_schedule.validate();
  c.search.validate();
  return c;
}

void apply_seed(RunConfig &config, std::uint64_t seed) {
  config.seed = seed;
  config.train.seed = seed;
  if (config.dataset.seed_follows_run) config.dataset.synthetic.seed = seed;
}

RunConfig load_config(const fs::path &path) {
  if (!fs::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception &e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  auto c = parse_config(doc, path.parent_path());
  c.source = path;
  return c;
}

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path &path, const std::string &bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string sha256_hex(const std::string &bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static const char *hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string file_sha256(const fs::path &path) { return sha256_hex(read_file(path)); }

LoadedData load_data(const RunConfig &config) {
  LoadedData d;
  const auto &ds = config.dataset;
  if (ds.format == data::SourceFormat::Synthetic) {
    auto [train, test] = data::generate_synthetic(ds.synthetic);
    d.train_images = std::move(train);
    d.test_images = std::move(test);
  } else {
    auto strings = [](const std::vector<fs::path> &ps) {
      std::vector<std::string> out;
      for (const auto &p : ps) {
        if (!fs::exists(p)) throw ConfigError("dataset file '" + p.string() + "' does not exist");
        out.push_back(p.string());
      }
      return out;
    };
    d.train_images = data::load_cifar(strings(ds.train_paths), ds.format);
    d.test_images = data::load_cifar(strings(ds.test_paths), ds.format);
  }
  d.stats = data::compute_norm_stats(d.train_images);
  auto [train, val] = nn::split_train_val(data::to_dataset(d.train_images, d.stats), config.train.val_fraction,
                                          config.seed);
  d.full = search::Splits{std::move(train), std::move(val), data::to_dataset(d.test_images, d.stats)};
  return d;
}

} // namespace dapr::cli
