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

#ifndef DAPR_RUNTIME_HPP
#define DAPR_RUNTIME_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dapr/dataset.hpp"
#include "dapr/model_ir.hpp"
#include "dapr/tensor.hpp"

namespace dapr::nn {

enum class Mode { Train, Eval };

/// Per-channel batch statistics gathered by a train-mode forward pass.
template <typename T> struct BatchStats {
  std::vector<T> mean;
  /// Unbiased variance, the value blended into the running estimate.
  std::vector<T> var;
};

/// Executes one graph. Activations of the last forward pass are cached so
/// backward() can be called right after it.
template <typename T> class Executor {
public:
  explicit Executor(const ir::ModelGraph &graph);

  /// Logits of shape (N, num_classes). Train mode normalizes with batch
  /// statistics; eval mode with the running statistics.
  BasicTensor<T> forward(const BasicWeightStore<T> &weights, const BasicTensor<T> &batch, Mode mode);

  /// Gradients of the learnable tensors given d(loss)/d(logits) for the most
  /// recent forward pass.
  BasicWeightStore<T> backward(const BasicWeightStore<T> &weights, const BasicTensor<T> &grad_logits);

  /// Blends the last train-mode batch statistics into the running buffers.
  void update_running_stats(BasicWeightStore<T> &weights) const;

  const ir::ModelGraph &graph() const { return graph_; }

private:
  const ir::ModelGraph &graph_;
  std::vector<BasicTensor<T>> acts_;
  std::vector<BasicTensor<T>> aux_;
  std::vector<std::vector<std::int32_t>> argmax_;
  std::vector<BatchStats<T>> stats_;
  std::vector<std::vector<T>> inv_std_;
  BasicTensor<T> input_;
  Mode mode_ = Mode::Eval;
  bool has_forward_ = false;
};

extern template class Executor<float>;
extern template class Executor<double>;

/// Eval-mode logits.
Tensor forward(const ir::ModelGraph &graph, const WeightStore &weights, const Tensor &batch);
/// Train mode also updates the BN running statistics held in `weights`.
Tensor forward(const ir::ModelGraph &graph, WeightStore &weights, const Tensor &batch, Mode mode);

template <typename T> struct LossAndGrads {
  T loss = 0;
  BasicWeightStore<T> grads;
};

/// Mean softmax cross-entropy of `logits` (N, K) and its gradient.
template <typename T>
T softmax_cross_entropy(const BasicTensor<T> &logits, const std::vector<std::int32_t> &labels,
                        BasicTensor<T> *grad = nullptr);

/// Loss and gradients of every learnable tensor. Running statistics are
/// left untouched. Throws NonFinite when the loss or a gradient is not
/// finite.
template <typename T>
LossAndGrads<T> loss_and_gradients(const ir::ModelGraph &graph, const BasicWeightStore<T> &weights,
                                   const BasicTensor<T> &batch, const std::vector<std::int32_t> &labels,
                                   Mode mode = Mode::Train);

/// Names of the tensors the optimizer updates (weight, bias, gamma, beta).
std::vector<std::string> learnable_names(const ir::ModelGraph &graph);

/// He-normal conv/linear weights, zero biases, identity BN.
WeightStore init_weights(const ir::ModelGraph &graph, std::uint64_t seed);

struct LrSchedule {
  double initial = 0.01;
  /// 1-indexed epochs at whose start the rate is multiplied by gamma.
  std::vector<int> decay_epochs;
  double gamma = 0.1;

  double at_epoch(int epoch) const;
  void validate() const;
};

struct AugmentConfig {
  std::optional<int> crop_pad = 4;
  bool horizontal_flip = true;
  std::optional<double> rotation_degrees;

  static AugmentConfig none() { return AugmentConfig{std::nullopt, false, std::nullopt}; }
};

/// Random choices for one sample.
struct AugmentDraw {
  int shift_y = 0;
  int shift_x = 0;
  bool flip = false;
  double angle_degrees = 0.0;
};

AugmentDraw draw_augment(const AugmentConfig &config, std::mt19937_64 &rng);
/// Applies `draw` to one (C, H, W) sample in place.
void apply_augment(float *sample, std::int64_t channels, std::int64_t height, std::int64_t width,
                   const AugmentConfig &config, const AugmentDraw &draw);
/// Independent draw per sample of an (N, C, H, W) batch.
void augment(Tensor &batch, const AugmentConfig &config, std::mt19937_64 &rng);

struct TrainConfig {
  int batch_size = 128;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  LrSchedule lr_schedule;
  int epochs = 0;
  std::uint64_t seed = 0;
  AugmentConfig augment;
  double val_fraction = 0.2;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  WeightStore best_weights;
  std::vector<EpochRecord> history;
  /// 0 when no epoch ran.
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
};

/// Seeded shuffle split into (train, val); both parts are non-empty.
std::pair<data::Dataset, data::Dataset> split_train_val(const data::Dataset &dataset, double val_fraction,
                                                        std::uint64_t seed);

/// Splits `dataset` with split_train_val(config.val_fraction, config.seed),
/// then trains.
TrainResult train(const ir::ModelGraph &graph, const WeightStore &weights, const data::Dataset &dataset,
                  const TrainConfig &config);
/// Trains on `train_set`, selecting the checkpoint by accuracy on `val_set`.
TrainResult train_on_split(const ir::ModelGraph &graph, const WeightStore &weights, const data::Dataset &train_set,
                           const data::Dataset &val_set, const TrainConfig &config);

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  /// Indexed by class; empty when the class has no sample in the split.
  std::vector<std::optional<double>> per_class;
  std::vector<std::size_t> class_counts;
};

/// Top-1 accuracy in eval mode. Throws EmptySplit.
EvalResult evaluate(const ir::ModelGraph &graph, const WeightStore &weights, const data::Dataset &split);

struct LatencyStats {
  std::vector<double> samples_ms;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double per_image_ms = 0.0;
  std::int64_t ops = 0;
};

/// Times eval-mode forward passes on a random batch after `warmup` runs.
LatencyStats bench_inference(const ir::ModelGraph &graph, const WeightStore &weights, int batch_size,
                             int repetitions, int warmup = 3);

/// Weight container: one compact JSON manifest line, then the raw
/// little-endian float blob in manifest order.
std::string serialize_weights(const WeightStore &weights);
WeightStore parse_weights(const std::string &bytes);
void save_weights(const WeightStore &weights, const std::string &path);
WeightStore load_weights(const std::string &path);

} // namespace dapr::nn

#endif
