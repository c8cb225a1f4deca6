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

#ifndef DAPR_FIXTURES_HPP
#define DAPR_FIXTURES_HPP

#include <string>
#include <vector>

#include "dapr/model_ir.hpp"

namespace dapr::fixtures {

// Desk-scale versions of the four reference architectures, one per
// structural module family, sized for 3x32x32 inputs by default.

/// Sequential conv/BN/ReLU/pool stack with a two-layer classifier.
ir::ModelGraph tiny_alexnet(std::int64_t num_classes = 10, std::int64_t spatial = 32);
/// Three residual groups of two basic blocks each; every group opens with a
/// 1x1 conv_down on the shortcut.
ir::ModelGraph tiny_resnet(std::int64_t num_classes = 10, std::int64_t spatial = 32);
/// Four MBConv blocks (expand 1x1, depthwise 3x3, project 1x1); blocks with
/// stride 1 and matching widths carry an identity shortcut.
ir::ModelGraph tiny_mobilenetv2(std::int64_t num_classes = 10, std::int64_t spatial = 32);
/// Stem conv followed by three Fire modules.
ir::ModelGraph tiny_squeezenet(std::int64_t num_classes = 10, std::int64_t spatial = 32);
/// Two 3x3 convs on 3x8x8 inputs and a 2-way classifier.
ir::ModelGraph toy2();

/// "tiny-alexnet", "tiny-resnet", "tiny-mobilenetv2", "tiny-squeezenet".
const std::vector<std::string> &architecture_names();
/// Lookup by name; also accepts "toy2".
ir::ModelGraph by_name(const std::string &name, std::int64_t num_classes = 10, std::int64_t spatial = 32);

} // namespace dapr::fixtures

#endif
