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

#ifndef DAPR_TESTS_ORACLES_HPP
#define DAPR_TESTS_ORACLES_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dapr/depgraph.hpp"
#include "dapr/model_ir.hpp"
#include "dapr/prune.hpp"
#include "dapr/runtime.hpp"

namespace dapr::testing {

/// Seeded weights with non-trivial BN statistics and biases.
nn::WeightStore random_weights(const ir::ModelGraph &graph, std::uint64_t seed);

/// Seeded standard-normal batch shaped for the graph input.
nn::Tensor random_batch(const ir::ModelGraph &graph, std::int64_t n, std::uint64_t seed);

/// Plan reaching `level` on uniformly random filter scores.
prune::PrunePlan random_level_plan(const ir::ModelGraph &graph, const deps::DependencyMap &depmap, double level,
                                   std::mt19937_64 &rng);

/// Random group-wise removals: each unit independently loses a random subset
/// of filters (at least one survivor), identically across its members.
deps::Removals random_respecting_removals(const deps::DependencyMap &depmap, std::mt19937_64 &rng);

/// Removals that break a residual or depthwise coupling: some index is
/// removed from a proper, non-empty subset of one set's members. Requires a
/// set with at least two members.
deps::Removals random_violating_removals(const deps::DependencyMap &depmap, std::mt19937_64 &rng);

/// Copy of `weights` in which every removed filter's weights and bias are
/// zero and the BN channels fed by those filters have gamma = beta = 0.
/// The BN-to-conv mapping is traced independently of the library.
nn::WeightStore masked_weights(const ir::ModelGraph &graph, const nn::WeightStore &weights,
                               const deps::Removals &removals);

/// Eval-mode forward written as plain nested loops in double precision.
std::vector<double> reference_forward(const ir::ModelGraph &graph, const nn::WeightStore &weights,
                                      const nn::Tensor &batch);

/// Removal order found by trying every remaining unit/filter at each step,
/// recounting parameters through shrink_graph + count_params, and taking
/// the lowest score (ties by unit key, then index). Returns (unit key,
/// filter) pairs in order.
std::vector<std::pair<std::string, std::int64_t>> brute_force_removal_order(const ir::ModelGraph &graph,
                                                                           const deps::DependencyMap &depmap,
                                                                           const std::vector<prune::FilterScore> &scores,
                                                                           double target_level);

double max_abs_diff(const std::vector<float> &a, const std::vector<float> &b);

} // namespace dapr::testing

#endif
