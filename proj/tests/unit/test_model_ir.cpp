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
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dapr/errors.hpp"
#include "dapr/fixtures.hpp"
#include "dapr/graph_builder.hpp"
#include "dapr/model_ir.hpp"

using namespace dapr;
using ir::GraphBuilder;
using ir::TensorShape;

namespace {

const char *kMinimal = R"({
  "name": "minimal",
  "input_shape": [3, 4, 4],
  "num_classes": 2,
  "nodes": [
    {"id": "conv", "kind": "Conv", "inputs": [],
     "params": {"out_channels": 4, "in_channels": 3, "kernel": 1, "stride": 1, "padding": 0, "groups": 1, "bias": false}},
    {"id": "flat", "kind": "Flatten", "inputs": ["conv"], "params": {}},
    {"id": "fc", "kind": "Linear", "inputs": ["flat"], "params": {"in_features": 64, "out_features": 2}}
  ]
})";

std::string read_file(const std::string &path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Random chain of the four structural modules.
ir::ModelGraph random_graph(std::mt19937_64 &rng, int index) {
  GraphBuilder b("random-" + std::to_string(index), TensorShape::feature_map(3, 16, 16), 5);
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_int_distribution<std::int64_t> width(2, 12);
  std::string x = b.conv("stem", "", width(rng), 3, 1, -1, false, ir::tag_plain());
  int group = 0;
  const int modules = std::uniform_int_distribution<int>(1, 4)(rng);
  for (int m = 0; m < modules; ++m) {
    const auto p = "m" + std::to_string(m) + "_";
    switch (kind(rng)) {
    case 0: {
      x = b.conv(p + "conv", x, width(rng), 3, 1, -1, false, ir::tag_plain());
      x = b.batch_norm(p + "bn", x);
      x = b.relu(p + "relu", x);
      break;
    }
    case 1: {
      const auto w = width(rng);
      auto y = b.conv(p + "c1", x, w, 3);
      y = b.relu(p + "r1", y);
      y = b.conv(p + "final", y, w, 3, 1, -1, false, ir::tag_residual_final(group));
      auto s = b.conv(p + "down", x, w, 1, 1, 0, false, ir::tag_residual_down(group));
      x = b.relu(p + "out", b.add(p + "add", y, s));
      ++group;
      break;
    }
    case 2: {
      const auto c = b.shape(x).channels();
      auto y = b.conv(p + "expand", x, c * 2, 1);
      y = b.depthwise(p + "dw", y, 3);
      y = b.conv(p + "project", y, c, 1);
      x = b.add(p + "add", y, x);
      break;
    }
    default: {
      auto s = b.conv(p + "squeeze", x, width(rng), 1, 1, 0, true, ir::tag_fire_squeeze());
      auto e1 = b.conv(p + "e1", s, width(rng), 1, 1, 0, true, ir::tag_fire_expand());
      auto e3 = b.conv(p + "e3", s, width(rng), 3, 1, 1, true, ir::tag_fire_expand());
      x = b.concat(p + "cat", {e1, e3});
      break;
    }
    }
  }
  x = b.global_avg_pool("gap", x);
  x = b.flatten("flat", x);
  b.linear("fc", x, 5);
  return b.build();
}

} // namespace

TEST_CASE("parse_model builds the smallest legal graph") {
  const auto g = ir::parse_model(kMinimal);
  CHECK(g.size() == 3);
  CHECK(g.shape_of("fc") == TensorShape::feature_map(2, 1, 1));
  CHECK(ir::serialize_model(ir::parse_model(ir::serialize_model(g))) == ir::serialize_model(g));
}

TEST_CASE("Add with mismatched channel counts is rejected at the Add") {
  // Assembled by hand so the builder's own checks do not fire first.
  auto doc = nlohmann::json::parse(kMinimal);
  doc["nodes"] = nlohmann::json::array();
  auto conv = [](const std::string &id, int out) {
    return nlohmann::json{{"id", id},
                          {"kind", "Conv"},
                          {"inputs", nlohmann::json::array()},
                          {"params",
                           {{"out_channels", out},
                            {"in_channels", 3},
                            {"kernel", 1},
                            {"stride", 1},
                            {"padding", 0},
                            {"groups", 1},
                            {"bias", false}}}};
  };
  doc["nodes"].push_back(conv("x16", 16));
  auto x32 = conv("x32", 32);
  x32["inputs"] = {"x16"};
  x32["params"]["in_channels"] = 16;
  doc["nodes"].push_back(x32);
  doc["nodes"].push_back({{"id", "sum"}, {"kind", "Add"}, {"inputs", {"x16", "x32"}}, {"params", nlohmann::json::object()}});
  doc["nodes"].push_back({{"id", "flat"}, {"kind", "Flatten"}, {"inputs", {"sum"}}, {"params", nlohmann::json::object()}});
  doc["nodes"].push_back({{"id", "fc"},
                          {"kind", "Linear"},
                          {"inputs", {"flat"}},
                          {"params", {{"in_features", 512}, {"out_features", 2}}}});
  try {
    ir::parse_model(doc.dump());
    FAIL("expected ValidationError");
  } catch (const ValidationError &e) {
    CHECK(e.node_id() == "sum");
  }
}

TEST_CASE("malformed documents raise SchemaError") {
  CHECK_THROWS_AS(ir::parse_model("{"), SchemaError);
  CHECK_THROWS_AS(ir::parse_model(R"({"name": "x"})"), SchemaError);
  auto doc = nlohmann::json::parse(kMinimal);
  doc["nodes"][0]["kind"] = "Softmax";
  CHECK_THROWS_AS(ir::parse_model(doc.dump()), SchemaError);
  doc = nlohmann::json::parse(kMinimal);
  doc["nodes"][0]["annotations"] = {"bogus"};
  CHECK_THROWS_AS(ir::parse_model(doc.dump()), SchemaError);
}

TEST_CASE("structural defects raise ValidationError naming the node") {
  auto doc = nlohmann::json::parse(kMinimal);
  doc["nodes"][1]["inputs"] = {"missing"};
  try {
    ir::parse_model(doc.dump());
    FAIL("expected ValidationError");
  } catch (const ValidationError &e) {
    CHECK(e.node_id() == "flat");
  }
  doc = nlohmann::json::parse(kMinimal);
  doc["nodes"][0]["inputs"] = {"fc"};
  CHECK_THROWS_AS(ir::parse_model(doc.dump()), ValidationError);
}

TEST_CASE("depthwise convolutions must carry the depthwise tag") {
  GraphBuilder b("dw", TensorShape::feature_map(4, 8, 8), 2);
  auto x = b.depthwise("dw", "", 3);
  x = b.global_avg_pool("gap", x);
  x = b.flatten("flat", x);
  b.linear("fc", x, 2);
  auto nodes = b.build().nodes();
  for (auto &n : nodes)
    if (n.id == "dw") n.annotations.depthwise = false;
  CHECK_THROWS_AS(ir::ModelGraph("dw", TensorShape::feature_map(4, 8, 8), 2, nodes), ValidationError);
}

TEST_CASE("round trip and canonical form for every bundled fixture") {
  for (const auto &name : fixtures::architecture_names()) {
    CAPTURE(name);
    const auto g = fixtures::by_name(name);
    const auto text = ir::serialize_model(g);
    const auto back = ir::parse_model(text);
    CHECK(back == g);
    CHECK(ir::serialize_model(back) == text);
    CHECK(ir::serialize_model(g) == text);
    const auto committed = read_file(std::string(DAPR_SOURCE_DIR) + "/models/" + name + ".json");
    CHECK(committed == text);
  }
}

TEST_CASE("node order in the canonical form ignores document order") {
  for (const auto &name : fixtures::architecture_names()) {
    CAPTURE(name);
    const auto text = ir::serialize_model(fixtures::by_name(name));
    auto doc = nlohmann::json::parse(text);
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 5; ++trial) {
      auto nodes = doc["nodes"];
      std::vector<nlohmann::json> v(nodes.begin(), nodes.end());
      std::shuffle(v.begin(), v.end(), rng);
      auto shuffled = doc;
      shuffled["nodes"] = v;
      CHECK(ir::serialize_model(ir::parse_model(shuffled.dump())) == text);
    }
  }
}

TEST_CASE("empty annotations are omitted and serialization is deterministic") {
  const auto g = fixtures::tiny_resnet();
  const auto doc = nlohmann::json::parse(ir::serialize_model(g));
  for (const auto &n : doc["nodes"]) {
    if (n["id"] == "stem_bn") CHECK_FALSE(n.contains("annotations"));
    if (n["id"] == "conv_down_0") {
      REQUIRE(n.contains("annotations"));
      CHECK(n["annotations"] == nlohmann::json({"residual_down", "residual_group:0"}));
    }
  }
  CHECK(ir::serialize_model(g) == ir::serialize_model(g));
}

TEST_CASE("randomized module graphs round-trip") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto g = random_graph(rng, i);
    const auto text = ir::serialize_model(g);
    CHECK(ir::parse_model(text) == g);
  }
}

TEST_CASE("shape inference follows the conv formula") {
  ir::LayerNode conv{"c", ir::LayerKind::Conv, ir::ConvParams{16, 3, 3, 1, 1, 1, false}, {}, {}};
  const TensorShape in = TensorShape::feature_map(3, 32, 32);
  CHECK(ir::infer_node_shape(conv, std::span(&in, 1)) == TensorShape::feature_map(16, 32, 32));

  ir::ConvParams strided{8, 3, 3, 2, 0, 1, false};
  conv.params = strided;
  CHECK(ir::infer_node_shape(conv, std::span(&in, 1)) == TensorShape::feature_map(8, 15, 15));

  ir::LayerNode gap{"g", ir::LayerKind::GlobalAvgPool, std::monostate{}, {"x"}, {}};
  const TensorShape fm = TensorShape::feature_map(64, 8, 8);
  CHECK(ir::infer_node_shape(gap, std::span(&fm, 1)) == TensorShape::feature_map(64, 1, 1));
}

TEST_CASE("declared in_channels mismatch is a ShapeError at the consumer") {
  auto nodes = std::vector<ir::LayerNode>{};
  nodes.push_back(ir::LayerNode{"producer", ir::LayerKind::Conv, ir::ConvParams{16, 3, 3, 1, 1, 1, false}, {}, {}});
  nodes.push_back(ir::LayerNode{"consumer", ir::LayerKind::Conv, ir::ConvParams{4, 8, 3, 1, 1, 1, false}, {"producer"}, {}});
  nodes.push_back(ir::LayerNode{"flat", ir::LayerKind::Flatten, std::monostate{}, {"consumer"}, {}});
  nodes.push_back(ir::LayerNode{"fc", ir::LayerKind::Linear, ir::LinearParams{256, 2}, {"flat"}, {}});
  try {
    ir::ModelGraph("m", TensorShape::feature_map(3, 8, 8), 2, nodes);
    FAIL("expected ShapeError");
  } catch (const ShapeError &e) {
    CHECK(e.node_id() == "consumer");
  }
}

TEST_CASE("parameter census") {
  ir::LayerNode conv{"c", ir::LayerKind::Conv, ir::ConvParams{16, 3, 3, 1, 1, 1, true}, {}, {}};
  CHECK(ir::node_params(conv) == 448);
  ir::LayerNode bn{"b", ir::LayerKind::BatchNorm, ir::BatchNormParams{16}, {"c"}, {}};
  CHECK(ir::node_params(bn) == 64);
  ir::LayerNode fc{"f", ir::LayerKind::Linear, ir::LinearParams{64, 10}, {"x"}, {}};
  CHECK(ir::node_params(fc) == 650);
}

TEST_CASE("operation census") {
  ir::LayerNode conv{"c", ir::LayerKind::Conv, ir::ConvParams{16, 3, 3, 1, 1, 1, false}, {}, {}};
  CHECK(ir::node_ops(conv, TensorShape::feature_map(16, 32, 32)) == 884736);
  ir::LayerNode dw{"d", ir::LayerKind::Conv, ir::ConvParams{16, 16, 3, 1, 1, 16, false}, {"c"}, {}};
  dw.annotations.depthwise = true;
  CHECK(ir::node_ops(dw, TensorShape::feature_map(16, 8, 8)) == 18432);
  ir::LayerNode relu{"r", ir::LayerKind::ReLU, std::monostate{}, {"c"}, {}};
  CHECK(ir::node_ops(relu, TensorShape::feature_map(16, 8, 8)) == 0);
}

TEST_CASE("cost totals equal the per-layer sums") {
  for (const auto &name : fixtures::architecture_names()) {
    CAPTURE(name);
    const auto c = ir::count_cost(fixtures::by_name(name));
    std::int64_t p = 0, o = 0;
    for (const auto &[_, v] : c.per_layer_params) p += v;
    for (const auto &[_, v] : c.per_layer_ops) o += v;
    CHECK(p == c.total_params);
    CHECK(o == c.total_ops);
    CHECK(c.memory_bytes == 4 * c.total_params);
    CHECK(c.total_giga_ops == doctest::Approx(static_cast<double>(o) / 1e9));
  }
}

TEST_CASE("fixtures accept a smaller input resolution") {
  for (const auto &name : fixtures::architecture_names()) {
    CAPTURE(name);
    const auto g = fixtures::by_name(name, 10, 16);
    CHECK(g.input_shape() == TensorShape::feature_map(3, 16, 16));
    CHECK(g.shapes()[g.output_index()] == TensorShape::feature_map(10, 1, 1));
  }
}
