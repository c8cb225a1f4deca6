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

#include <json.hpp>

#include "dapr/errors.hpp"
#include "dapr/model_ir.hpp"

namespace dapr::ir {

using nlohmann::json;

namespace {

json params_to_json(const LayerNode &n) {
  json p = json::object();
  if (const auto *c = std::get_if<ConvParams>(&n.params)) {
    p["out_channels"] = c->out_channels;
    p["in_channels"] = c->in_channels;
    p["kernel"] = c->kernel;
    p["stride"] = c->stride;
    p["padding"] = c->padding;
    p["groups"] = c->groups;
    p["bias"] = c->has_bias;
  } else if (const auto *b = std::get_if<BatchNormParams>(&n.params)) {
    p["channels"] = b->channels;
    p["epsilon"] = b->epsilon;
    p["momentum"] = b->momentum;
  } else if (const auto *m = std::get_if<PoolParams>(&n.params)) {
    p["kernel"] = m->kernel;
    p["stride"] = m->stride;
  } else if (const auto *l = std::get_if<LinearParams>(&n.params)) {
    p["in_features"] = l->in_features;
    p["out_features"] = l->out_features;
  }
  return p;
}

class FieldReader {
public:
  FieldReader(const json &obj, std::string where, std::string node_id)
      : obj_(obj), where_(std::move(where)), node_id_(std::move(node_id)) {
    if (!obj_.is_object()) fail(where_ + " must be an object");
  }

  [[noreturn]] void fail(const std::string &message) const { throw SchemaError(message, node_id_); }

  void allow_only(std::initializer_list<const char *> keys) const {
    for (const auto &[k, _] : obj_.items()) {
      bool known = false;
      for (const char *key : keys) known = known || k == key;
      if (!known) fail("unknown field '" + k + "' in " + where_);
    }
  }

  const json *find(const char *key) const {
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  const json &require(const char *key) const {
    const json *v = find(key);
    if (!v) fail("missing field '" + std::string(key) + "' in " + where_);
    return *v;
  }

  std::int64_t integer(const char *key, std::optional<std::int64_t> fallback = std::nullopt) const {
    const json *v = find(key);
    if (!v) {
      if (fallback) return *fallback;
      require(key);
    }
    if (!v->is_number_integer()) fail("field '" + std::string(key) + "' in " + where_ + " must be an integer");
    return v->get<std::int64_t>();
  }

  double real(const char *key, double fallback) const {
    const json *v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) fail("field '" + std::string(key) + "' in " + where_ + " must be a number");
    return v->get<double>();
  }

  bool boolean(const char *key, bool fallback) const {
    const json *v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail("field '" + std::string(key) + "' in " + where_ + " must be a boolean");
    return v->get<bool>();
  }

  std::string string(const char *key) const {
    const json &v = require(key);
    if (!v.is_string()) fail("field '" + std::string(key) + "' in " + where_ + " must be a string");
    return v.get<std::string>();
  }

  std::vector<std::string> strings(const char *key, bool required) const {
    const json *v = required ? &require(key) : find(key);
    std::vector<std::string> out;
    if (!v) return out;
    if (!v->is_array()) fail("field '" + std::string(key) + "' in " + where_ + " must be an array");
    for (const auto &e : *v) {
      if (!e.is_string()) fail("field '" + std::string(key) + "' in " + where_ + " must hold strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

private:
  const json &obj_;
  std::string where_;
  std::string node_id_;
};

LayerParams params_from_json(LayerKind kind, const json &p, const std::string &id) {
  FieldReader r(p, "params", id);
  switch (kind) {
  case LayerKind::Conv:
    r.allow_only({"out_channels", "in_channels", "kernel", "stride", "padding", "groups", "bias"});
    return ConvParams{r.integer("out_channels"), r.integer("in_channels"), r.integer("kernel"), r.integer("stride", 1),
                      r.integer("padding", 0),    r.integer("groups", 1),   r.boolean("bias", false)};
  case LayerKind::BatchNorm:
    r.allow_only({"channels", "epsilon", "momentum"});
    return BatchNormParams{r.integer("channels"), r.real("epsilon", 1e-5), r.real("momentum", 0.1)};
  case LayerKind::MaxPool:
    r.allow_only({"kernel", "stride"});
    return PoolParams{r.integer("kernel"), r.integer("stride", r.integer("kernel"))};
  case LayerKind::Linear:
    r.allow_only({"in_features", "out_features"});
    return LinearParams{r.integer("in_features"), r.integer("out_features")};
  default:
    r.allow_only({});
    return std::monostate{};
  }
}

} // namespace

std::string serialize_model(const ModelGraph &graph) {
  json doc;
  doc["name"] = graph.name();
  doc["input_shape"] = graph.input_shape().dims;
  doc["num_classes"] = graph.num_classes();
  json nodes = json::array();
  for (const auto &n : graph.nodes()) {
    json j;
    j["id"] = n.id;
    j["kind"] = std::string(to_string(n.kind));
    j["inputs"] = n.inputs;
    j["params"] = params_to_json(n);
    if (!n.annotations.empty()) j["annotations"] = n.annotations.tags();
    nodes.push_back(std::move(j));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(2) + "\n";
}

ModelGraph parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error &e) {
    throw SchemaError(std::string("malformed model document: ") + e.what());
  }
  FieldReader top(doc, "model document", {});
  top.allow_only({"name", "input_shape", "num_classes", "nodes"});
  const std::string name = top.string("name");

  const json &shape = top.require("input_shape");
  if (!shape.is_array() || shape.size() != 3) top.fail("input_shape must be an array [c,h,w]");
  TensorShape input;
  for (const auto &d : shape) {
    if (!d.is_number_integer()) top.fail("input_shape entries must be integers");
    input.dims.push_back(d.get<std::int64_t>());
  }
  const std::int64_t num_classes = top.integer("num_classes");

  const json &jnodes = top.require("nodes");
  if (!jnodes.is_array()) top.fail("nodes must be an array");
  std::vector<LayerNode> nodes;
  nodes.reserve(jnodes.size());
  for (const auto &jn : jnodes) {
    std::string id;
    if (jn.is_object() && jn.contains("id") && jn["id"].is_string()) id = jn["id"].get<std::string>();
    FieldReader r(jn, "node", id);
    r.allow_only({"id", "kind", "inputs", "params", "annotations"});
    LayerNode n;
    n.id = r.string("id");
    const std::string kind_text = r.string("kind");
    const auto kind = parse_layer_kind(kind_text);
    if (!kind) r.fail("unknown kind '" + kind_text + "'");
    n.kind = *kind;
    n.inputs = r.strings("inputs", true);
    const json *p = r.find("params");
    n.params = params_from_json(n.kind, p ? *p : json::object(), n.id);
    const auto tags = r.strings("annotations", false);
    n.annotations = Annotations::from_tags(tags, n.id);
    nodes.push_back(std::move(n));
  }

  try {
    return ModelGraph(name, std::move(input), num_classes, std::move(nodes));
  } catch (const ShapeError &e) {
    throw ValidationError(e.node_id(), std::string("shape inference failed: ") + e.what());
  }
}

ModelGraph load_model(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

void save_model(const ModelGraph &graph, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write model file '" + path + "'");
  out << serialize_model(graph);
}

} // namespace dapr::ir
