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

#ifndef DAPR_TENSOR_HPP
#define DAPR_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dapr/errors.hpp"

namespace dapr::nn {

/// Dense row-major tensor; batches are laid out (N, C, H, W).
template <typename T> struct BasicTensor {
  std::vector<std::int64_t> shape;
  std::vector<T> data;

  BasicTensor() = default;
  explicit BasicTensor(std::vector<std::int64_t> dims, T fill = T(0))
      : shape(std::move(dims)), data(static_cast<std::size_t>(count(shape)), fill) {}
  BasicTensor(std::vector<std::int64_t> dims, std::vector<T> values) : shape(std::move(dims)), data(std::move(values)) {
    if (static_cast<std::int64_t>(data.size()) != count(shape))
      throw ShapeMismatch({}, "tensor data length does not match its shape");
  }

  static std::int64_t count(const std::vector<std::int64_t> &dims) {
    return std::accumulate(dims.begin(), dims.end(), std::int64_t{1}, std::multiplies<>());
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  std::int64_t dim(std::size_t i) const { return shape.at(i); }
  T *ptr() { return data.data(); }
  const T *ptr() const { return data.data(); }

  template <typename U> BasicTensor<U> cast() const {
    BasicTensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }

  bool operator==(const BasicTensor &) const = default;
};

using Tensor = BasicTensor<float>;

/// Named parameter tensors: "<layer>.weight", "<layer>.bias", "<layer>.gamma",
/// "<layer>.beta", "<layer>.running_mean", "<layer>.running_var".
template <typename T> struct BasicWeightStore {
  std::map<std::string, BasicTensor<T>> tensors;

  bool contains(const std::string &name) const { return tensors.count(name) != 0; }

  const BasicTensor<T> &at(const std::string &name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw MissingWeight(name.substr(0, name.rfind('.')), "no tensor '" + name + "'");
    return it->second;
  }
  BasicTensor<T> &at(const std::string &name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw MissingWeight(name.substr(0, name.rfind('.')), "no tensor '" + name + "'");
    return it->second;
  }

  template <typename U> BasicWeightStore<U> cast() const {
    BasicWeightStore<U> out;
    for (const auto &[k, v] : tensors) out.tensors.emplace(k, v.template cast<U>());
    return out;
  }

  bool operator==(const BasicWeightStore &) const = default;
};

using WeightStore = BasicWeightStore<float>;

inline std::string weight_name(const std::string &layer) { return layer + ".weight"; }
inline std::string bias_name(const std::string &layer) { return layer + ".bias"; }
inline std::string gamma_name(const std::string &layer) { return layer + ".gamma"; }
inline std::string beta_name(const std::string &layer) { return layer + ".beta"; }
inline std::string running_mean_name(const std::string &layer) { return layer + ".running_mean"; }
inline std::string running_var_name(const std::string &layer) { return layer + ".running_var"; }

} // namespace dapr::nn

#endif
