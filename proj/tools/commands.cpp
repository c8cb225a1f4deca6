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
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "dapr/errors.hpp"
#include "dapr/fixtures.hpp"

namespace dapr::cli {

using nlohmann::json;

namespace {

/// Per-invocation bookkeeping for error documents and lineage.
struct Context {
  std::string command;
  std::string stage = "parse-arguments";
  json inputs = json::object();
  std::optional<fs::path> output_dir;
};

struct Options {
  std::string config;
  std::optional<double> level;
  std::vector<double> levels;
  std::optional<std::string> scope;
  std::optional<std::string> residual_policy;
  std::vector<std::string> modes;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  int buckets = 5;
  int batch = 1;
  int reps = 10;
  std::string meta;
  std::string out_dir;
  std::vector<std::string> files;
  std::string fixture;
  std::int64_t classes = 10;
  std::int64_t spatial = 32;
};

std::string dump(const json &doc) { return doc.dump(2) + "\n"; }

void record_input(Context &ctx, const std::string &label, const fs::path &path) {
  ctx.inputs[label] = {{"path", path.string()}, {"sha256", file_sha256(path)}};
}

RunConfig prepare_config(const Options &o, Context &ctx) {
  ctx.stage = "load-config";
  auto cfg = load_config(o.config);
  record_input(ctx, "config", cfg.source);
  if (o.seed) apply_seed(cfg, *o.seed);
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.scope) cfg.search.scope = prune::parse_ranking_scope(*o.scope);
  if (o.residual_policy) cfg.search.residual_policy = deps::parse_residual_policy(*o.residual_policy);
  cfg.train.validate();
  cfg.search.validate();
  fs::create_directories(cfg.output_dir);
  ctx.output_dir = cfg.output_dir;
  return cfg;
}

ir::ModelGraph load_graph(const RunConfig &cfg, Context &ctx) {
  ctx.stage = "load-model";
  if (cfg.model_fixture) {
    const auto &f = *cfg.model_fixture;
    auto g = fixtures::by_name(f.name, f.num_classes, f.spatial);
    ctx.inputs["model"] = {{"fixture", f.name}, {"sha256", sha256_hex(ir::serialize_model(g))}};
    return g;
  }
  if (!cfg.model_path) throw ConfigError("config names no model");
  if (!fs::exists(*cfg.model_path)) throw ConfigError("model file '" + cfg.model_path->string() + "' does not exist");
  record_input(ctx, "model", *cfg.model_path);
  return ir::parse_model(read_file(*cfg.model_path));
}

nn::WeightStore load_graph_weights(const RunConfig &cfg, const ir::ModelGraph &graph, Context &ctx) {
  ctx.stage = "load-weights";
  const fs::path path = cfg.weights_path ? *cfg.weights_path : cfg.output_dir / "weights.bin";
  if (!fs::exists(path))
    throw ConfigError("weights file '" + path.string() + "' does not exist; run `train` first or set 'weights'");
  record_input(ctx, "weights", path);
  auto w = nn::parse_weights(read_file(path));
  prune::check_weights(graph, w);
  return w;
}

json synthetic_params_json(const data::SyntheticParams &p) {
  return {{"num_classes", p.num_classes}, {"train_per_class", p.train_per_class}, {"test_per_class", p.test_per_class},
          {"height", p.height},           {"width", p.width},                     {"coarse_group", p.coarse_group},
          {"noise", p.noise},             {"seed", p.seed}};
}

LoadedData load_dataset(const RunConfig &cfg, Context &ctx) {
  ctx.stage = "load-data";
  const auto &d = cfg.dataset;
  if (d.format == data::SourceFormat::Synthetic) {
    const auto params = synthetic_params_json(d.synthetic);
    ctx.inputs["dataset"] = {{"synthetic", params}, {"sha256", sha256_hex(params.dump())}};
  } else {
    json files = json::array();
    for (const auto *list : {&d.train_paths, &d.test_paths})
      for (const auto &p : *list) {
        if (!fs::exists(p)) throw ConfigError("dataset file '" + p.string() + "' does not exist");
        files.push_back({{"path", p.string()}, {"sha256", file_sha256(p)}});
      }
    ctx.inputs["dataset"] = {{"format", data::to_string(d.format)}, {"files", files}};
  }
  return load_data(cfg);
}

data::SubsetSpec resolve_run_subset(const RunConfig &cfg, const data::ImageSet &images) {
  if (cfg.subset_selectors.empty()) {
    data::SubsetSpec all{cfg.subset_name, {}};
    for (std::int32_t k = 0; k < images.num_classes; ++k) all.class_ids.insert(k);
    return all;
  }
  return data::resolve_subset(cfg.subset_name, cfg.subset_selectors, images, cfg.seed);
}

json subset_json(const data::SubsetSpec &s) {
  return {{"name", s.name}, {"class_ids", std::vector<std::int32_t>(s.class_ids.begin(), s.class_ids.end())}};
}

json cost_json(const ir::ModelGraph &g) {
  const auto c = ir::count_cost(g);
  return {{"params", c.total_params}, {"giga_ops", c.total_giga_ops}, {"memory_bytes", c.memory_bytes}};
}

json with_inputs(json doc, const Context &ctx) {
  doc["inputs"] = ctx.inputs;
  return doc;
}

void emit(const fs::path &path, const std::string &bytes, json &outputs) {
  write_file(path, bytes);
  outputs[path.filename().string()] = sha256_hex(bytes);
}

// ---------------------------------------------------------------------------
// Commands

int cmd_fixture(const Options &o, Context &ctx, std::ostream &out) {
  ctx.stage = "build-fixture";
  const auto g = fixtures::by_name(o.fixture, o.classes, o.spatial);
  const auto text = ir::serialize_model(g);
  if (o.files.empty()) {
    out << text;
  } else {
    write_file(o.files.front(), text);
  }
  return kOk;
}

int cmd_ingest(const Options &o, Context &ctx, std::ostream &out) {
  const auto cfg = prepare_config(o, ctx);
  const auto loaded = load_dataset(cfg, ctx);
  ctx.stage = "summarize";
  json doc;
  doc["format"] = data::to_string(cfg.dataset.format);
  doc["records"] = {{"train", loaded.train_images.size()}, {"test", loaded.test_images.size()}};
  doc["class_counts"] = {{"train", data::class_counts(loaded.train_images)},
                         {"test", data::class_counts(loaded.test_images)}};
  doc["normalization"] = {{"mean", loaded.stats.mean}, {"std", loaded.stats.std}};
  doc["split"] = {{"train", loaded.full.train.size()}, {"val", loaded.full.val.size()}, {"test", loaded.full.test.size()}};
  if (cfg.dataset.format != data::SourceFormat::Synthetic) {
    ctx.stage = "verify-bit-exact";
    bool exact = true;
    for (const auto *list : {&cfg.dataset.train_paths, &cfg.dataset.test_paths})
      for (const auto &p : *list) {
        const auto bytes = read_file(p);
        exact = exact && data::serialize_cifar(data::parse_cifar(bytes, cfg.dataset.format)) == bytes;
      }
    doc["bit_exact"] = exact;
  }
  const auto text = dump(with_inputs(doc, ctx));
  write_file(cfg.output_dir / "ingest.json", text);
  out << text;
  return kOk;
}

int cmd_train(const Options &o, Context &ctx, std::ostream &out) {
  const auto cfg = prepare_config(o, ctx);
  const auto graph = load_graph(cfg, ctx);
  const auto loaded = load_dataset(cfg, ctx);
  ctx.stage = "train";
  const auto result = nn::train_on_split(graph, nn::init_weights(graph, cfg.seed), loaded.full.train, loaded.full.val,
                                         cfg.train);
  ctx.stage = "evaluate";
  const auto test = nn::evaluate(graph, result.best_weights, loaded.full.test);
  ctx.stage = "write-artifacts";
  json outputs = json::object();
  emit(cfg.output_dir / "weights.bin", nn::serialize_weights(result.best_weights), outputs);
  emit(cfg.output_dir / "model.json", ir::serialize_model(graph), outputs);
  json history = json::array();
  for (const auto &e : result.history)
    history.push_back({{"epoch", e.epoch}, {"lr", e.lr}, {"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy}});
  json doc{{"best_epoch", result.best_epoch},
           {"best_val_accuracy", result.best_val_accuracy},
           {"test_accuracy", test.accuracy},
           {"epochs", cfg.train.epochs},
           {"seed", cfg.seed},
           {"history", history},
           {"outputs", outputs}};
  const auto text = dump(with_inputs(doc, ctx));
  write_file(cfg.output_dir / "train.json", text);
  out << text;
  return kOk;
}

int cmd_analyze(const Options &o, Context &ctx, std::ostream &out) {
  const auto cfg = prepare_config(o, ctx);
  const auto graph = load_graph(cfg, ctx);
  ctx.stage = "dependencies";
  const auto depmap = deps::compute_dependencies(graph, cfg.search.residual_policy);
  auto doc = json::parse(deps::dependency_report(graph, depmap));
  ctx.stage = "census";
  const auto cost = ir::count_cost(graph);
  doc["census"] = {{"per_layer_params", cost.per_layer_params},
                   {"per_layer_ops", cost.per_layer_ops},
                   {"total_params", cost.total_params},
                   {"total_ops", cost.total_ops},
                   {"giga_ops", cost.total_giga_ops},
                   {"memory_bytes", cost.memory_bytes}};
  const auto text = dump(with_inputs(doc, ctx));
  write_file(cfg.output_dir / "analysis.json", text);
  out << text;
  return kOk;
}

int cmd_prune(const Options &o, Context &ctx, std::ostream &out) {
  const auto cfg = prepare_config(o, ctx);
  if (!o.level) throw ConfigError("prune needs --level");
  const auto graph = load_graph(cfg, ctx);
  const auto weights = load_graph_weights(cfg, graph, ctx);
  ctx.stage = "dependencies";
  const auto depmap = deps::compute_dependencies(graph, cfg.search.residual_policy);
  ctx.stage = "plan";
  const auto plan = prune::plan_for_level(graph, weights, depmap, *o.level, cfg.search.scope);
  ctx.stage = "shrink";
  const auto [shrunk, remap] = prune::shrink_graph(graph, plan);
  const auto new_weights = prune::transfer_weights(weights, plan, remap);
  ctx.stage = "write-artifacts";
  json outputs = json::object();
  emit(cfg.output_dir / "pruned_model.json", ir::serialize_model(shrunk), outputs);
  emit(cfg.output_dir / "pruned_weights.bin", nn::serialize_weights(new_weights), outputs);
  emit(cfg.output_dir / "plan.json", dump(with_inputs(json::parse(prune::serialize_plan(plan)), ctx)), outputs);
  json doc{{"target_level", plan.target_level},
           {"achieved_level", plan.achieved_level},
           {"removed_filters", plan.removed_filters()},
           {"before", cost_json(graph)},
           {"after", cost_json(shrunk)},
           {"outputs", outputs}};
  const auto text = dump(with_inputs(doc, ctx));
  write_file(cfg.output_dir / "prune.json", text);
  out << text;
  return kOk;
}

int cmd_search(const Options &o, Context &ctx, std::ostream &out) {
  const auto cfg = prepare_config(o, ctx);
  const auto graph = load_graph(cfg, ctx);
  const auto weights = load_graph_weights(cfg, graph, ctx);
  const auto loaded = load_dataset(cfg, ctx);
  ctx.stage = "subset";
  const auto spec = resolve_run_subset(cfg, loaded.train_images);
  const auto subset = loaded.full.restrict_to(spec.class_ids);
  ctx.stage = "search";
  const auto result = search::dapr_search(graph, weights, subset, spec, cfg.search, cfg.train, cfg.lr);
  ctx.stage = "write-artifacts";
  json outputs = json::object();
  if (result.converged_level) {
    emit(cfg.output_dir / "best_model.json", ir::serialize_model(*result.best_graph), outputs);
    emit(cfg.output_dir / "best_weights.bin", nn::serialize_weights(result.best_weights), outputs);
    emit(cfg.output_dir / "best_plan.json", dump(with_inputs(json::parse(prune::serialize_plan(*result.best_plan)), ctx)),
         outputs);
  }
  auto doc = json::parse(search::serialize_search_result(result));
  doc["subset"] = subset_json(spec);
  doc["seed"] = cfg.seed;
  doc["outputs"] = outputs;
  const auto text = dump(with_inputs(doc, ctx));
  write_file(cfg.output_dir / "search.json", text);
  out << text;
  return kOk;
}

int cmd_sweep(const Options &o, Context &ctx, std::ostream &out) {
  const auto cfg = prepare_config(o, ctx);
  const auto graph = load_graph(cfg, ctx);
  const auto weights = load_graph_weights(cfg, graph, ctx);
  const auto loaded = load_dataset(cfg, ctx);
  ctx.stage = "subset";
  const auto spec = resolve_run_subset(cfg, loaded.train_images);
  search::SweepOptions opt;
  if (!o.modes.empty()) {
    opt.modes.clear();
    for (const auto &m : o.modes) opt.modes.push_back(search::parse_sweep_mode(m));
  }
  opt.levels = o.levels;
  if (o.level) opt.levels.push_back(*o.level);
  if (opt.levels.empty()) opt.levels = cfg.sweep_levels;
  opt.latency_batch = cfg.latency_batch;
  opt.latency_repetitions = cfg.latency_repetitions;
  ctx.stage = "sweep";
  const auto rows = search::oracle_sweep(graph, weights, loaded.full, spec, cfg.search, cfg.train, cfg.lr, opt);
  ctx.stage = "write-artifacts";
  const auto csv = search::write_sweep_csv(rows);
  write_file(cfg.output_dir / "sweep.csv", csv);
  json modes = json::array();
  for (auto m : opt.modes) modes.push_back(search::to_string(m));
  json meta{{"csv", "sweep.csv"},
            {"csv_sha256", sha256_hex(csv)},
            {"rows", rows.size()},
            {"modes", modes},
            {"levels", opt.levels.empty() ? cfg.search.grid.levels() : opt.levels},
            {"subset", subset_json(spec)},
            {"seed", cfg.seed}};
  const auto text = dump(with_inputs(meta, ctx));
  write_file(cfg.output_dir / "sweep.meta.json", text);
  out << csv;
  return kOk;
}

fs::path loose_output_dir(const Options &o, Context &ctx) {
  fs::path dir = o.out_dir.empty() ? fs::path(".") : fs::path(o.out_dir);
  if (!o.config.empty()) dir = prepare_config(o, ctx).output_dir;
  fs::create_directories(dir);
  ctx.output_dir = dir;
  return dir;
}

int cmd_divergence(const Options &o, Context &ctx, std::ostream &out) {
  const auto dir = loose_output_dir(o, ctx);
  ctx.stage = "load-plans";
  if (o.files.size() < 2) throw ConfigError("divergence needs at least two plan files");
  std::vector<prune::PrunePlan> plans;
  json files = json::array();
  for (const auto &f : o.files) {
    if (!fs::exists(f)) throw ConfigError("plan file '" + f + "' does not exist");
    const auto text = read_file(f);
    files.push_back({{"path", f}, {"sha256", sha256_hex(text)}});
    plans.push_back(prune::parse_plan(text));
  }
  ctx.inputs["plans"] = files;
  ctx.stage = "divergence";
  const auto r = search::pairwise_divergence(plans);
  json doc{{"pair_count", r.pair_count}, {"overall", r.overall}, {"per_layer", r.per_layer}};
  const auto text = dump(with_inputs(doc, ctx));
  write_file(dir / "divergence.json", text);
  out << text;
  return kOk;
}

int cmd_bench(const Options &o, Context &ctx, std::ostream &out) {
  const auto cfg = prepare_config(o, ctx);
  const auto graph = load_graph(cfg, ctx);
  const auto weights = load_graph_weights(cfg, graph, ctx);
  ctx.stage = "bench";
  const auto s = nn::bench_inference(graph, weights, o.batch, o.reps);
  json doc{{"batch", o.batch},          {"repetitions", o.reps},   {"samples_ms", s.samples_ms},
           {"mean_ms", s.mean_ms},      {"std_ms", s.std_ms},      {"per_image_ms", s.per_image_ms},
           {"ops", s.ops},              {"cost", cost_json(graph)}};
  const auto text = dump(with_inputs(doc, ctx));
  write_file(cfg.output_dir / "bench.json", text);
  out << text;
  return kOk;
}

int cmd_report(const Options &o, Context &ctx, std::ostream &out) {
  const auto dir = loose_output_dir(o, ctx);
  ctx.stage = "load-sweep";
  if (o.files.size() != 1) throw ConfigError("report needs exactly one sweep CSV");
  const fs::path csv_path = o.files.front();
  if (!fs::exists(csv_path)) throw ConfigError("sweep table '" + csv_path.string() + "' does not exist");
  const auto csv = read_file(csv_path);
  const fs::path meta_path = o.meta.empty() ? csv_path.parent_path() / "sweep.meta.json" : fs::path(o.meta);
  ctx.inputs["sweep"] = {{"path", csv_path.string()}, {"sha256", sha256_hex(csv)}};
  ctx.stage = "check-lineage";
  if (!fs::exists(meta_path)) throw SchemaError("lineage document '" + meta_path.string() + "' is missing");
  record_input(ctx, "meta", meta_path);
  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const json::exception &e) {
    throw SchemaError("lineage document is not valid JSON: " + std::string(e.what()));
  }
  if (!meta.contains("csv_sha256") || meta["csv_sha256"] != sha256_hex(csv))
    throw SchemaError("lineage mismatch: sweep table digest differs from " + meta_path.filename().string());
  ctx.stage = "pareto";
  const auto rows = search::parse_sweep_csv(csv);
  const auto points = search::pareto_summary(rows, o.buckets);
  json arr = json::array();
  std::ostringstream table;
  table << "bucket  latency_ms        mode             level  test_acc  GOps_improvement  memory_reduction\n";
  for (const auto &p : points) {
    arr.push_back({{"bucket", p.bucket},
                   {"latency_low_ms", p.bucket_low_ms},
                   {"latency_high_ms", p.bucket_high_ms},
                   {"mode", p.row.mode},
                   {"pruning_level", p.row.target_level},
                   {"achieved_level", p.row.achieved_level},
                   {"test_acc", p.row.test_acc},
                   {"latency_ms", p.row.latency_ms},
                   {"gops_ratio", p.gops_ratio},
                   {"memory_reduction", p.memory_reduction},
                   {"label", "relative improvement in GOps " + [&] {
                      std::ostringstream s;
                      s << std::fixed << std::setprecision(2) << p.gops_ratio << "x, pruning level "
                        << std::setprecision(0) << p.row.target_level << "%";
                      return s.str();
                    }()}});
    table << std::setw(6) << p.bucket << "  " << std::fixed << std::setprecision(3) << std::setw(7) << p.bucket_low_ms
          << "-" << std::setw(7) << p.bucket_high_ms << "  " << std::left << std::setw(16) << p.row.mode << std::right
          << std::setw(6) << std::setprecision(0) << p.row.target_level << "  " << std::setprecision(4) << std::setw(8)
          << p.row.test_acc << "  " << std::setprecision(2) << std::setw(15) << p.gops_ratio << "x  " << std::setw(15)
          << p.memory_reduction << "%\n";
  }
  json doc{{"buckets", o.buckets}, {"points", arr}};
  const auto text = dump(with_inputs(doc, ctx));
  write_file(dir / "pareto.json", text);
  out << table.str();
  return kOk;
}

int exit_code_for(const Error &e) {
  if (dynamic_cast<const InfeasibleTarget *>(&e)) return kInfeasible;
  if (dynamic_cast<const NonFinite *>(&e)) return kNumerical;
  return kInvalid;
}

json error_json(const std::string &kind, const std::string &message) { return {{"kind", kind}, {"message", message}}; }

int report_error(const Context &ctx, json error, int code, std::ostream &err) {
  json doc{{"command", ctx.command}, {"stage", ctx.stage}, {"exit_code", code}, {"error", std::move(error)},
           {"inputs", ctx.inputs}};
  const auto text = dump(doc);
  err << text;
  if (ctx.output_dir) {
    try {
      write_file(*ctx.output_dir / "error.json", text);
    } catch (...) {
      // The document already went to stderr.
    }
  }
  return code;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Data-aware structured pruning toolkit"};
  app.require_subcommand(1);
  Options o;
  Context ctx;

  auto add_config = [&](CLI::App *sub, bool required = true) {
    auto *opt = sub->add_option("--config", o.config, "run configuration document");
    if (required) opt->required();
    sub->add_option("--seed", o.seed, "run seed override");
  };
  auto add_pruning = [&](CLI::App *sub) {
    sub->add_option("--scope", o.scope, "filter ranking scope: global | per-layer");
    sub->add_option("--residual-policy", o.residual_policy, "residual handling: tie-group | skip-final");
  };

  auto *fixture = app.add_subcommand("fixture", "write a bundled architecture as a model document");
  fixture->add_option("name", o.fixture, "tiny-alexnet | tiny-resnet | tiny-mobilenetv2 | tiny-squeezenet | toy2")
      ->required();
  fixture->add_option("output", o.files, "output path (stdout when omitted)");
  fixture->add_option("--classes", o.classes, "number of classes");
  fixture->add_option("--spatial", o.spatial, "input height and width");

  auto *ingest = app.add_subcommand("ingest", "parse the dataset and summarize it");
  add_config(ingest);
  auto *train = app.add_subcommand("train", "train the model on the full dataset");
  add_config(train);
  train->add_option("--epochs", o.epochs, "epoch count override");
  auto *analyze = app.add_subcommand("analyze", "report dependency sets and the cost census");
  add_config(analyze);
  add_pruning(analyze);
  auto *prune_cmd = app.add_subcommand("prune", "prune the trained model to one level");
  add_config(prune_cmd);
  add_pruning(prune_cmd);
  prune_cmd->add_option("--level", o.level, "target pruning level in percent");
  auto *search_cmd = app.add_subcommand("search", "data-aware search for the largest acceptable level");
  add_config(search_cmd);
  add_pruning(search_cmd);
  auto *sweep = app.add_subcommand("sweep", "evaluate every level for each mode");
  add_config(sweep);
  add_pruning(sweep);
  sweep->add_option("--mode", o.modes, "subset-aware | subset-agnostic | unpruned (repeatable)");
  sweep->add_option("--level", o.levels, "grid level to visit (repeatable)");
  auto *divergence = app.add_subcommand("divergence", "pairwise filter-selection divergence of plans");
  add_config(divergence, false);
  divergence->add_option("plans", o.files, "plan documents")->required();
  divergence->add_option("--out-dir", o.out_dir, "output directory when no config is given");
  auto *bench = app.add_subcommand("bench", "time inference of the trained model");
  add_config(bench);
  bench->add_option("--batch", o.batch, "batch size");
  bench->add_option("--reps", o.reps, "timed repetitions (>= 10)");
  auto *report = app.add_subcommand("report", "pareto summary of a sweep table");
  add_config(report, false);
  report->add_option("sweep", o.files, "sweep CSV")->required();
  report->add_option("--meta", o.meta, "lineage document (default: sweep.meta.json beside the CSV)");
  report->add_option("--buckets", o.buckets, "latency buckets");
  report->add_option("--out-dir", o.out_dir, "output directory when no config is given");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError &e) {
    ctx.command = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
    return report_error(ctx, error_json("UsageError", e.what()), kInvalid, err);
  }
  auto *sub = app.get_subcommands().front();
  ctx.command = sub->get_name();

  try {
    if (sub == fixture) return cmd_fixture(o, ctx, out);
    if (sub == ingest) return cmd_ingest(o, ctx, out);
    if (sub == train) return cmd_train(o, ctx, out);
    if (sub == analyze) return cmd_analyze(o, ctx, out);
    if (sub == prune_cmd) return cmd_prune(o, ctx, out);
    if (sub == search_cmd) return cmd_search(o, ctx, out);
    if (sub == sweep) return cmd_sweep(o, ctx, out);
    if (sub == divergence) return cmd_divergence(o, ctx, out);
    if (sub == bench) return cmd_bench(o, ctx, out);
    if (sub == report) return cmd_report(o, ctx, out);
  } catch (const InfeasibleTarget &e) {
    auto doc = error_json(e.kind(), e.what());
    doc["target_level"] = e.target_level();
    doc["max_level"] = e.max_level();
    return report_error(ctx, doc, kInfeasible, err);
  } catch (const FormatError &e) {
    auto doc = error_json(e.kind(), e.what());
    doc["byte_offset"] = e.byte_offset();
    return report_error(ctx, doc, kInvalid, err);
  } catch (const NodeError &e) {
    auto doc = error_json(e.kind(), e.what());
    if (!e.node_id().empty()) doc["node_id"] = e.node_id();
    return report_error(ctx, doc, exit_code_for(e), err);
  } catch (const Error &e) {
    return report_error(ctx, error_json(e.kind(), e.what()), exit_code_for(e), err);
  } catch (const fs::filesystem_error &e) {
    return report_error(ctx, error_json("IOError", e.what()), kInvalid, err);
  } catch (const std::exception &e) {
    return report_error(ctx, error_json("InternalError", e.what()), kInternal, err);
  }
  return kInternal;
}

} // namespace dapr::cli
