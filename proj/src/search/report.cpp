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
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dapr/errors.hpp"
#include "dapr/search.hpp"

namespace dapr::search {

DivergenceReport filter_divergence(const prune::PrunePlan &a, const prune::PrunePlan &b) {
  if (a.original_params != b.original_params)
    throw PlanMismatch({}, "plans refer to graphs with different parameter counts");
  std::set<std::string> layers;
  for (const auto &[k, v] : a.removals)
    if (!v.empty()) layers.insert(k);
  for (const auto &[k, v] : b.removals)
    if (!v.empty()) layers.insert(k);

  DivergenceReport r;
  r.pair_count = 1;
  std::size_t total = 0, shared_total = 0;
  for (const auto &layer : layers) {
    auto get = [&](const prune::PrunePlan &p) {
      auto it = p.removals.find(layer);
      return it == p.removals.end() ? std::set<std::int64_t>{} : std::set<std::int64_t>(it->second.begin(), it->second.end());
    };
    const auto sa = get(a), sb = get(b);
    if (sa.size() != sb.size())
      throw PlanMismatch(layer, "plans remove " + std::to_string(sa.size()) + " and " + std::to_string(sb.size()) +
                                    " filters; selections must have equal size");
    std::size_t shared = 0;
    for (auto i : sa) shared += sb.count(i);
    r.per_layer[layer] = 100.0 * (1.0 - static_cast<double>(shared) / static_cast<double>(sa.size()));
    total += sa.size();
    shared_total += shared;
  }
  r.overall = total == 0 ? 0.0 : 100.0 * (1.0 - static_cast<double>(shared_total) / static_cast<double>(total));
  return r;
}

DivergenceReport pairwise_divergence(const std::vector<prune::PrunePlan> &plans) {
  if (plans.size() < 2) throw PlanMismatch({}, "pairwise divergence needs at least two plans");
  DivergenceReport sum;
  for (std::size_t i = 0; i < plans.size(); ++i)
    for (std::size_t j = i + 1; j < plans.size(); ++j) {
      const auto d = filter_divergence(plans[i], plans[j]);
      for (const auto &[k, v] : d.per_layer) sum.per_layer[k] += v;
      sum.overall += d.overall;
      sum.pair_count += 1;
    }
  const auto n = static_cast<double>(sum.pair_count);
  for (auto &[_, v] : sum.per_layer) v /= n;
  sum.overall /= n;
  return sum;
}

std::string sweep_csv_header() {
  return "mode,target_level,achieved_level,test_acc,val_acc,giga_ops,latency_ms,params,wall_seconds";
}

namespace {

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

std::vector<std::string> split_line(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string &s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw SchemaError("line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
}

} // namespace

std::string write_sweep_csv(const std::vector<SweepRow> &rows) {
  std::string out = sweep_csv_header() + "\n";
  for (const auto &r : rows)
    out += r.mode + "," + num(r.target_level) + "," + num(r.achieved_level) + "," + num(r.test_acc) + "," +
           num(r.val_acc) + "," + num(r.giga_ops) + "," + num(r.latency_ms) + "," + std::to_string(r.params) + "," +
           num(r.wall_seconds) + "\n";
  return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string &text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line) || line != sweep_csv_header()) throw SchemaError("sweep table header is missing or wrong");
  std::vector<SweepRow> rows;
  std::size_t n = 1;
  while (std::getline(ss, line)) {
    ++n;
    if (line.empty()) continue;
    const auto c = split_line(line);
    if (c.size() != 9) throw SchemaError("line " + std::to_string(n) + ": expected 9 columns");
    SweepRow r;
    r.mode = c[0];
    parse_sweep_mode(r.mode);
    r.target_level = to_double(c[1], n);
    r.achieved_level = to_double(c[2], n);
    r.test_acc = to_double(c[3], n);
    r.val_acc = to_double(c[4], n);
    r.giga_ops = to_double(c[5], n);
    r.latency_ms = to_double(c[6], n);
    r.params = static_cast<std::int64_t>(to_double(c[7], n));
    r.wall_seconds = to_double(c[8], n);
    rows.push_back(r);
  }
  return rows;
}

std::string serialize_search_result(const SearchResult &result) {
  nlohmann::json j;
  j["converged_level"] = result.converged_level ? nlohmann::json(*result.converged_level) : nlohmann::json(nullptr);
  j["baseline_accuracy"] = result.baseline_accuracy;
  j["finetuned_provenance"] = result.finetuned_provenance;
  auto trace = nlohmann::json::array();
  for (const auto &e : result.trace)
    trace.push_back({{"iteration", e.iteration},
                     {"level", e.level},
                     {"success", e.success},
                     {"achieved_level", e.achieved_level},
                     {"val_accuracy", e.val_accuracy},
                     {"test_accuracy", e.test_accuracy},
                     {"wall_seconds", e.wall_seconds},
                     {"peak_memory_estimate", e.peak_memory_estimate},
                     {"provenance", e.provenance}});
  j["trace"] = std::move(trace);
  if (result.best_plan) j["best_plan"] = nlohmann::json::parse(prune::serialize_plan(*result.best_plan));
  return j.dump(2) + "\n";
}

std::vector<ParetoPoint> pareto_summary(const std::vector<SweepRow> &rows, int buckets) {
  if (buckets < 1) throw ConfigError("bucket count must be at least 1");
  const SweepRow *ref = nullptr;
  std::vector<const SweepRow *> pruned;
  for (const auto &r : rows) {
    if (r.mode == "unpruned")
      ref = &r;
    else
      pruned.push_back(&r);
  }
  if (!ref) throw SchemaError("sweep table has no unpruned reference row");
  if (pruned.empty()) return {};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto *r : pruned) {
    lo = std::min(lo, r->latency_ms);
    hi = std::max(hi, r->latency_ms);
  }
  const double width = (hi - lo) / buckets;
  std::vector<const SweepRow *> best(static_cast<std::size_t>(buckets), nullptr);
  for (const auto *r : pruned) {
    int b = width > 0.0 ? static_cast<int>((r->latency_ms - lo) / width) : 0;
    b = std::clamp(b, 0, buckets - 1);
    auto &slot = best[static_cast<std::size_t>(b)];
    if (!slot || r->test_acc > slot->test_acc ||
        (r->test_acc == slot->test_acc && r->latency_ms < slot->latency_ms))
      slot = r;
  }
  std::vector<ParetoPoint> out;
  for (int b = 0; b < buckets; ++b) {
    const auto *r = best[static_cast<std::size_t>(b)];
    if (!r) continue;
    ParetoPoint p;
    p.bucket = b;
    p.bucket_low_ms = lo + width * b;
    p.bucket_high_ms = b == buckets - 1 ? hi : lo + width * (b + 1);
    p.row = *r;
    p.gops_ratio = r->giga_ops > 0.0 ? ref->giga_ops / r->giga_ops : 0.0;
    p.memory_reduction =
        ref->params > 0 ? 100.0 * (1.0 - static_cast<double>(r->params) / static_cast<double>(ref->params)) : 0.0;
    out.push_back(p);
  }
  return out;
}

} // namespace dapr::search
