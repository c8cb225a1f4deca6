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

#include "dapr/fixtures.hpp"

#include "dapr/errors.hpp"
#include "dapr/graph_builder.hpp"

namespace dapr::fixtures {

using ir::GraphBuilder;
using ir::TensorShape;

namespace {
TensorShape rgb(std::int64_t spatial) {
  if (spatial < 8) throw ValidationError({}, "fixture input must be at least 8x8");
  return TensorShape::feature_map(3, spatial, spatial);
}
} // namespace

ir::ModelGraph tiny_alexnet(std::int64_t num_classes, std::int64_t spatial) {
  GraphBuilder b("tiny-alexnet", rgb(spatial), num_classes);
  std::string x;
  const std::int64_t widths[] = {16, 32, 64, 64};
  for (int i = 0; i < 4; ++i) {
    const auto n = std::to_string(i + 1);
    x = b.conv("conv" + n, x, widths[i], 3, 1, 1, false, ir::tag_plain());
    x = b.batch_norm("bn" + n, x);
    x = b.relu("relu" + n, x);
    if (i != 2) x = b.max_pool("pool" + n, x, 2, 2);
  }
  x = b.flatten("flatten", x);
  x = b.linear("fc1", x, 64);
  x = b.relu("fc1_relu", x);
  b.linear("fc2", x, num_classes);
  return b.build();
}

ir::ModelGraph tiny_resnet(std::int64_t num_classes, std::int64_t spatial) {
  GraphBuilder b("tiny-resnet", rgb(spatial), num_classes);
  std::string x = b.conv("stem_conv", "", 8, 3);
  x = b.batch_norm("stem_bn", x);
  x = b.relu("stem_relu", x);
  const std::int64_t widths[] = {8, 16, 32};
  for (int g = 0; g < 3; ++g) {
    const auto gs = std::to_string(g);
    const std::int64_t stride = g == 0 ? 1 : 2;
    for (const char *blk : {"a", "b"}) {
      const std::string tag = gs + blk;
      const bool first = blk[0] == 'a';
      const std::string block_in = x;
      std::string y = b.conv("conv_" + tag + "_1", block_in, widths[g], 3, first ? stride : 1);
      y = b.batch_norm("bn_" + tag + "_1", y);
      y = b.relu("relu_" + tag + "_1", y);
      y = b.conv("conv_final_" + tag, y, widths[g], 3, 1, -1, false, ir::tag_residual_final(g));
      y = b.batch_norm("bn_final_" + tag, y);
      std::string shortcut = block_in;
      if (first) {
        shortcut = b.conv("conv_down_" + gs, block_in, widths[g], 1, stride, 0, false, ir::tag_residual_down(g));
        shortcut = b.batch_norm("bn_down_" + gs, shortcut);
      }
      y = b.add("add_" + tag, y, shortcut);
      x = b.relu("relu_out_" + tag, y);
    }
  }
  x = b.global_avg_pool("gap", x);
  x = b.flatten("flatten", x);
  b.linear("fc", x, num_classes);
  return b.build();
}

ir::ModelGraph tiny_mobilenetv2(std::int64_t num_classes, std::int64_t spatial) {
  GraphBuilder b("tiny-mobilenetv2", rgb(spatial), num_classes);
  std::string x = b.conv("stem_conv", "", 16, 3);
  x = b.batch_norm("stem_bn", x);
  x = b.relu("stem_relu", x);
  struct Block {
    std::int64_t out;
    std::int64_t stride;
  };
  const Block blocks[] = {{16, 1}, {24, 2}, {24, 1}, {32, 2}};
  constexpr std::int64_t kExpansion = 2;
  for (int i = 0; i < 4; ++i) {
    const std::string p = "b" + std::to_string(i + 1) + "_";
    const auto in_ch = b.shape(x).channels();
    std::string y = b.conv(p + "expand_1x1", x, in_ch * kExpansion, 1);
    y = b.batch_norm(p + "expand_bn", y);
    y = b.relu(p + "expand_relu", y);
    y = b.depthwise(p + "dw_3x3", y, 3, blocks[i].stride);
    y = b.batch_norm(p + "dw_bn", y);
    y = b.relu(p + "dw_relu", y);
    y = b.conv(p + "project_1x1", y, blocks[i].out, 1);
    y = b.batch_norm(p + "project_bn", y);
    if (blocks[i].stride == 1 && in_ch == blocks[i].out) y = b.add(p + "add", y, x);
    x = y;
  }
  x = b.conv("head_conv", x, 64, 1);
  x = b.batch_norm("head_bn", x);
  x = b.relu("head_relu", x);
  x = b.global_avg_pool("gap", x);
  x = b.flatten("flatten", x);
  b.linear("fc", x, num_classes);
  return b.build();
}

ir::ModelGraph tiny_squeezenet(std::int64_t num_classes, std::int64_t spatial) {
  GraphBuilder b("tiny-squeezenet", rgb(spatial), num_classes);
  std::string x = b.conv("conv1", "", 16, 3, 1, 1, true, ir::tag_plain());
  x = b.relu("relu1", x);
  x = b.max_pool("pool1", x, 2, 2);
  struct Fire {
    std::int64_t squeeze;
    std::int64_t expand;
  };
  const Fire fires[] = {{8, 16}, {8, 16}, {16, 32}};
  for (int i = 0; i < 3; ++i) {
    const std::string p = "fire" + std::to_string(i + 1) + "_";
    std::string s = b.conv(p + "squeeze", x, fires[i].squeeze, 1, 1, 0, true, ir::tag_fire_squeeze());
    s = b.relu(p + "squeeze_relu", s);
    std::string e1 = b.conv(p + "expand1x1", s, fires[i].expand, 1, 1, 0, true, ir::tag_fire_expand());
    e1 = b.relu(p + "expand1x1_relu", e1);
    std::string e3 = b.conv(p + "expand3x3", s, fires[i].expand, 3, 1, 1, true, ir::tag_fire_expand());
    e3 = b.relu(p + "expand3x3_relu", e3);
    x = b.concat(p + "concat", {e1, e3});
    if (i == 1) x = b.max_pool("pool2", x, 2, 2);
  }
  x = b.global_avg_pool("gap", x);
  x = b.flatten("flatten", x);
  b.linear("fc", x, num_classes);
  return b.build();
}

ir::ModelGraph toy2() {
  GraphBuilder b("toy2", TensorShape::feature_map(3, 8, 8), 2);
  std::string x = b.conv("conv1", "", 4, 3, 1, 1, true, ir::tag_plain());
  x = b.relu("relu1", x);
  x = b.conv("conv2", x, 4, 3, 1, 1, true, ir::tag_plain());
  x = b.relu("relu2", x);
  x = b.global_avg_pool("gap", x);
  x = b.flatten("flatten", x);
  b.linear("fc", x, 2);
  return b.build();
}

const std::vector<std::string> &architecture_names() {
  static const std::vector<std::string> names = {"tiny-alexnet", "tiny-resnet", "tiny-mobilenetv2",
                                                 "tiny-squeezenet"};
  return names;
}

ir::ModelGraph by_name(const std::string &name, std::int64_t num_classes, std::int64_t spatial) {
  if (name == "tiny-alexnet") return tiny_alexnet(num_classes, spatial);
  if (name == "tiny-resnet") return tiny_resnet(num_classes, spatial);
  if (name == "tiny-mobilenetv2") return tiny_mobilenetv2(num_classes, spatial);
  if (name == "tiny-squeezenet") return tiny_squeezenet(num_classes, spatial);
  if (name == "toy2") return toy2();
  throw ConfigError("unknown fixture '" + name + "'");
}

} // namespace dapr::fixtures
