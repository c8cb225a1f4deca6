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

#include <algorithm>
#include <random>

#include "dapr/depgraph.hpp"
#include "dapr/errors.hpp"
#include "dapr/fixtures.hpp"
#include "dapr/graph_builder.hpp"
#include "dapr/prune.hpp"
#include "dapr/runtime.hpp"
#include "oracles.hpp"

using namespace dapr;

namespace {

ir::ModelGraph single_channel_net() {
  ir::GraphBuilder b("one-channel", ir::TensorShape::feature_map(1, 8, 8), 2);
  auto x = b.conv("conv", "", 2, 3, 1, 1, false, ir::tag_plain());
  x = b.global_avg_pool("gap", x);
  x = b.flatten("flat", x);
  b.linear("fc", x, 2);
  return b.build();
}

std::int64_t params_of(const ir::ModelGraph &g, const std::string &layer) {
  return ir::count_params(g).per_layer_params.at(layer);
}

} // namespace

TEST_CASE("L1 score of a filter is the sum of absolute weights") {
  const auto g = single_channel_net();
  auto w = nn::init_weights(g, 1);
  auto &t = w.at("conv.weight").data;
  std::fill(t.begin(), t.begin() + 9, 1.0f);
  std::fill(t.begin() + 9, t.end(), -0.1f);
  const auto scores = prune::score_filters(g, w, deps::compute_dependencies(g));
  REQUIRE(scores.size() == 2);
  CHECK(scores[0].score == doctest::Approx(9.0));
  CHECK(scores[1].score == doctest::Approx(0.9));
}

TEST_CASE("coupled filters score as the mean of their members") {
  const auto g = fixtures::tiny_resnet();
  const auto w = testing::random_weights(g, 3);
  const auto dm = deps::compute_dependencies(g);
  const auto scores = prune::score_filters(g, w, dm);
  const auto *set = dm.set_of("conv_down_1");
  REQUIRE(set != nullptr);
  for (const auto &s : scores) {
    if (s.layer_id != set->members.front()) continue;
    double expect = 0.0;
    for (const auto &m : set->members) {
      const auto &t = w.at(nn::weight_name(m));
      const auto per = t.numel() / t.shape[0];
      for (std::int64_t j = 0; j < per; ++j) expect += std::fabs(t.data[static_cast<std::size_t>(s.filter_index * per + j)]);
    }
    CHECK(s.score == doctest::Approx(expect / static_cast<double>(set->members.size())));
    CHECK(s.group.has_value());
  }
}

TEST_CASE("score_filters reports missing and mis-shaped weights") {
  const auto g = fixtures::toy2();
  const auto dm = deps::compute_dependencies(g);
  auto w = nn::init_weights(g, 1);
  auto bad = w;
  bad.tensors.erase("conv2.weight");
  CHECK_THROWS_AS(prune::score_filters(g, bad, dm), MissingWeight);
  bad = w;
  bad.at("conv2.weight").shape = {4, 4, 9, 1};
  CHECK_THROWS_AS(prune::score_filters(g, bad, dm), ShapeMismatch);
}

TEST_CASE("greedy plan on toy2 matches the brute-force recount") {
  const auto g = fixtures::toy2();
  const auto dm = deps::compute_dependencies(g);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto w = testing::random_weights(g, static_cast<std::uint64_t>(trial));
    const auto scores = prune::score_filters(g, w, dm);
    const auto plan = prune::build_plan(g, dm, scores, 40.0);
    const auto expected = testing::brute_force_removal_order(g, dm, scores, 40.0);
    REQUIRE(plan.steps.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(plan.steps[i].unit_key == expected[i].first);
      CHECK(plan.steps[i].filter_index == expected[i].second);
    }
  }
}

TEST_CASE("greedy plans on every fixture match the brute-force recount") {
  for (const auto &name : fixtures::architecture_names()) {
    CAPTURE(name);
    const auto g = fixtures::by_name(name);
    const auto dm = deps::compute_dependencies(g);
    const auto scores = prune::score_filters(g, testing::random_weights(g, 9), dm);
    for (double level : {10.0, 35.0}) {
      const auto plan = prune::build_plan(g, dm, scores, level);
      const auto expected = testing::brute_force_removal_order(g, dm, scores, level);
      REQUIRE(plan.steps.size() == expected.size());
      for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(plan.steps[i].unit_key == expected[i].first);
        CHECK(plan.steps[i].filter_index == expected[i].second);
      }
    }
  }
}

TEST_CASE("plans stop at the first removal reaching the target") {
  std::mt19937_64 rng(13);
  for (const auto &name : fixtures::architecture_names()) {
    CAPTURE(name);
    const auto g = fixtures::by_name(name);
    const auto dm = deps::compute_dependencies(g);
    for (double level : {5.0, 20.0, 50.0, 70.0}) {
      const auto plan = testing::random_level_plan(g, dm, level, rng);
      CHECK(plan.achieved_level >= level);
      REQUIRE_FALSE(plan.steps.empty());
      const auto before = plan.removed_params - plan.steps.back().params_removed;
      CHECK(100.0 * static_cast<double>(before) < level * static_cast<double>(plan.original_params));
    }
  }
}

TEST_CASE("achieved level equals the recount of the shrunk graph") {
  std::mt19937_64 rng(17);
  for (const auto &name : fixtures::architecture_names()) {
    CAPTURE(name);
    const auto g = fixtures::by_name(name);
    const auto dm = deps::compute_dependencies(g);
    for (double level : {10.0, 30.0, 60.0, 90.0}) {
      prune::PrunePlan plan;
      try {
        plan = testing::random_level_plan(g, dm, level, rng);
      } catch (const InfeasibleTarget &) {
        continue;
      }
      const auto shrunk = prune::shrink_graph(g, plan).first;
      const auto orig = ir::count_params(g).total_params;
      const auto now = ir::count_params(shrunk).total_params;
      CHECK(plan.original_params == orig);
      CHECK(plan.removed_params == orig - now);
      CHECK(plan.achieved_level == doctest::Approx(100.0 * static_cast<double>(orig - now) / static_cast<double>(orig)));
      CHECK(prune::validate_plan(dm, plan).empty());
    }
  }
}

TEST_CASE("per-layer plans also reach the target and respect dependencies") {
  for (const auto &name : fixtures::architecture_names()) {
    CAPTURE(name);
    const auto g = fixtures::by_name(name);
    const auto dm = deps::compute_dependencies(g);
    const auto w = testing::random_weights(g, 21);
    const auto plan = prune::plan_for_level(g, w, dm, 40.0, prune::RankingScope::PerLayer);
    CHECK(plan.achieved_level >= 40.0);
    CHECK(prune::validate_plan(dm, plan).empty());
    for (const auto &u : dm.units()) {
      auto it = plan.removals.find(u.key());
      CHECK((it == plan.removals.end() || static_cast<std::int64_t>(it->second.size()) < u.filters));
    }
  }
}

TEST_CASE("unreachable targets throw InfeasibleTarget with the maximum") {
  const auto g = fixtures::toy2();
  const auto dm = deps::compute_dependencies(g);
  const auto w = nn::init_weights(g, 1);
  try {
    prune::plan_for_level(g, w, dm, 99.0);
    FAIL("expected InfeasibleTarget");
  } catch (const InfeasibleTarget &e) {
    CHECK(e.target_level() == 99.0);
    CHECK(e.max_level() < 99.0);
    CHECK(e.max_level() > 0.0);
  }
  CHECK_THROWS_AS(prune::plan_for_level(g, w, dm, 100.0), ConfigError);
}

TEST_CASE("removing half the filters halves the layer's own parameters") {
  const auto g = fixtures::toy2();
  const auto plan = prune::plan_from_removals(g, {{"conv1", {0, 2}}});
  const auto shrunk = prune::shrink_graph(g, plan).first;
  CHECK(params_of(g, "conv1") == 112);
  CHECK(params_of(shrunk, "conv1") == 56);
  CHECK(params_of(shrunk, "conv2") == 4 * 2 * 9 + 4);
  CHECK(shrunk.node("conv2").conv().in_channels == 2);
}

TEST_CASE("remap shifts concat channels after a pruned branch") {
  const auto g = fixtures::tiny_squeezenet();
  const auto plan = prune::plan_from_removals(g, {{"fire1_expand1x1", {0, 5}}});
  const auto [shrunk, remap] = prune::shrink_graph(g, plan);
  CHECK(shrunk.node("fire2_squeeze").conv().in_channels == 30);
  CHECK(remap.new_input_index("fire2_squeeze", 0) == std::nullopt);
  CHECK(remap.new_input_index("fire2_squeeze", 1) == 0);
  CHECK(remap.new_input_index("fire2_squeeze", 16 + 3) == 16 + 3 - 2);
  CHECK(remap.new_output_index("fire1_expand1x1", 6) == 4);
}

TEST_CASE("depthwise weights follow their expand filters") {
  const auto g = fixtures::tiny_mobilenetv2();
  const auto w = testing::random_weights(g, 4);
  const auto plan = prune::plan_from_removals(g, {{"b2_expand_1x1", {1, 7}}, {"b2_dw_3x3", {1, 7}}});
  const auto [shrunk, remap] = prune::shrink_graph(g, plan);
  const auto nw = prune::transfer_weights(w, plan, remap);
  prune::check_weights(shrunk, nw);
  const auto &dw = shrunk.node("b2_dw_3x3").conv();
  CHECK(dw.out_channels == 30);
  CHECK(dw.groups == 30);
  CHECK(dw.in_channels == 30);
  const auto &old_t = w.at("b2_dw_3x3.weight").data;
  const auto &new_t = nw.at("b2_dw_3x3.weight").data;
  for (std::int64_t old = 0; old < 32; ++old) {
    const auto ni = remap.new_output_index("b2_dw_3x3", old);
    if (!ni) continue;
    for (int j = 0; j < 9; ++j)
      CHECK(new_t[static_cast<std::size_t>(*ni * 9 + j)] == old_t[static_cast<std::size_t>(old * 9 + j)]);
  }
  CHECK(nw.at("b2_dw_bn.gamma").data.size() == 30);
  CHECK(nw.at("b2_project_1x1.weight").shape == std::vector<std::int64_t>{24, 30, 1, 1});
}

TEST_CASE("an empty plan is the identity") {
  for (const auto &name : fixtures::architecture_names()) {
    CAPTURE(name);
    const auto g = fixtures::by_name(name);
    const auto w = testing::random_weights(g, 2);
    const auto plan = prune::plan_from_removals(g, {});
    CHECK(plan.empty());
    const auto [shrunk, remap] = prune::shrink_graph(g, plan);
    CHECK(shrunk == g);
    CHECK(prune::transfer_weights(w, plan, remap) == w);
  }
}

TEST_CASE("coupling-breaking plans fail to shrink, naming a layer") {
  std::mt19937_64 rng(23);
  for (const auto &name : {"tiny-resnet", "tiny-mobilenetv2"}) {
    CAPTURE(name);
    const auto g = fixtures::by_name(name);
    const auto dm = deps::compute_dependencies(g);
    for (int i = 0; i < 50; ++i) {
      prune::PrunePlan plan;
      plan.removals = testing::random_violating_removals(dm, rng);
      try {
        prune::shrink_graph(g, plan);
        FAIL("expected ShapeError");
      } catch (const ShapeError &e) {
        CHECK_FALSE(e.node_id().empty());
      }
    }
  }
}

TEST_CASE("shrunk network equals the masked original") {
  std::mt19937_64 rng(29);
  for (const auto &name : fixtures::architecture_names()) {
    CAPTURE(name);
    const auto g = fixtures::by_name(name);
    const auto dm = deps::compute_dependencies(g);
    const auto batch = testing::random_batch(g, 3, 31);
    for (int trial = 0; trial < 5; ++trial) {
      const auto w = testing::random_weights(g, 100 + static_cast<std::uint64_t>(trial));
      auto removals = testing::random_respecting_removals(dm, rng);
      const auto plan = prune::plan_from_removals(g, removals);
      const auto [shrunk, remap] = prune::shrink_graph(g, plan);
      const auto nw = prune::transfer_weights(w, plan, remap);
      const auto masked = nn::forward(g, testing::masked_weights(g, w, plan.removals), batch);
      const auto small = nn::forward(shrunk, nw, batch);
      CHECK(testing::max_abs_diff(masked.data, small.data) <= 1e-4);
    }
  }
}

TEST_CASE("ops and params shrink monotonically with the level") {
  for (const auto &name : fixtures::architecture_names()) {
    CAPTURE(name);
    const auto g = fixtures::by_name(name);
    const auto dm = deps::compute_dependencies(g);
    const auto w = testing::random_weights(g, 8);
    auto prev = ir::count_cost(g);
    for (double level = 10.0; level <= 80.0; level += 10.0) {
      const auto plan = prune::plan_for_level(g, w, dm, level);
      const auto cost = ir::count_cost(prune::shrink_graph(g, plan).first);
      CHECK(cost.total_ops <= prev.total_ops);
      CHECK(cost.total_params <= prev.total_params);
      prev = cost;
    }
  }
}

TEST_CASE("plan documents round-trip") {
  const auto g = fixtures::tiny_resnet();
  const auto dm = deps::compute_dependencies(g);
  const auto plan = prune::plan_for_level(g, testing::random_weights(g, 6), dm, 30.0);
  const auto text = prune::serialize_plan(plan);
  const auto back = prune::parse_plan(text);
  CHECK(back.removals == plan.removals);
  CHECK(back.target_level == plan.target_level);
  CHECK(back.achieved_level == plan.achieved_level);
  CHECK(back.original_params == plan.original_params);
  CHECK(prune::serialize_plan(back) == text);
  CHECK_THROWS_AS(prune::parse_plan("[1, 2"), SchemaError);
}

TEST_CASE("check_weights rejects stray and mis-shaped tensors") {
  const auto g = fixtures::toy2();
  auto w = nn::init_weights(g, 1);
  prune::check_weights(g, w);
  auto extra = w;
  extra.tensors.emplace("ghost.weight", nn::Tensor({1}));
  CHECK_THROWS_AS(prune::check_weights(g, extra), ShapeMismatch);
  auto missing = w;
  missing.tensors.erase("fc.bias");
  CHECK_THROWS_AS(prune::check_weights(g, missing), MissingWeight);
}
