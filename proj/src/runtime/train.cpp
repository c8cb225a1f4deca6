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
#include <chrono>
#include <cmath>
#include <numeric>

#include "dapr/errors.hpp"
#include "dapr/runtime.hpp"

namespace dapr::nn {

using ir::LayerKind;

WeightStore init_weights(const ir::ModelGraph &graph, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WeightStore w;
  auto he = [&](std::vector<std::int64_t> shape, std::int64_t fan_in) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (auto &v : t.data) v = static_cast<float>(dist(rng));
    return t;
  };
  for (const auto &n : graph.nodes()) {
    switch (n.kind) {
    case LayerKind::Conv: {
      const auto &p = n.conv();
      w.tensors[weight_name(n.id)] =
          he({p.out_channels, p.in_channels / p.groups, p.kernel, p.kernel}, p.weights_per_filter());
      if (p.has_bias) w.tensors[bias_name(n.id)] = Tensor({p.out_channels});
      break;
    }
    case LayerKind::Linear: {
      const auto &p = n.linear();
      w.tensors[weight_name(n.id)] = he({p.out_features, p.in_features}, p.in_features);
      w.tensors[bias_name(n.id)] = Tensor({p.out_features});
      break;
    }
    case LayerKind::BatchNorm: {
      const auto c = n.batch_norm().channels;
      w.tensors[gamma_name(n.id)] = Tensor({c}, 1.0f);
      w.tensors[beta_name(n.id)] = Tensor({c});
      w.tensors[running_mean_name(n.id)] = Tensor({c});
      w.tensors[running_var_name(n.id)] = Tensor({c}, 1.0f);
      break;
    }
    default:
      break;
    }
  }
  return w;
}

double LrSchedule::at_epoch(int epoch) const {
  double lr = initial;
  for (auto e : decay_epochs)
    if (epoch >= e) lr *= gamma;
  return lr;
}

void LrSchedule::validate() const {
  if (!(initial > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("lr gamma must lie in (0, 1)");
  for (std::size_t i = 1; i < decay_epochs.size(); ++i)
    if (decay_epochs[i] <= decay_epochs[i - 1]) throw ConfigError("decay epochs must be strictly increasing");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (momentum < 0.0 || weight_decay < 0.0) throw ConfigError("momentum and weight decay must be non-negative");
  if (augment.crop_pad && *augment.crop_pad < 0) throw ConfigError("crop_pad must be non-negative");
  lr_schedule.validate();
}

AugmentDraw draw_augment(const AugmentConfig &config, std::mt19937_64 &rng) {
  AugmentDraw d;
  if (config.crop_pad && *config.crop_pad > 0) {
    std::uniform_int_distribution<int> shift(-*config.crop_pad, *config.crop_pad);
    d.shift_y = shift(rng);
    d.shift_x = shift(rng);
  }
  if (config.horizontal_flip) d.flip = std::bernoulli_distribution(0.5)(rng);
  if (config.rotation_degrees && *config.rotation_degrees > 0.0)
    d.angle_degrees = std::uniform_real_distribution<double>(-*config.rotation_degrees, *config.rotation_degrees)(rng);
  return d;
}

namespace {

std::int64_t reflect(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

} // namespace

void apply_augment(float *sample, std::int64_t channels, std::int64_t height, std::int64_t width,
                   const AugmentConfig &config, const AugmentDraw &draw) {
  const auto plane = height * width;
  std::vector<float> buf(static_cast<std::size_t>(plane));
  const bool crop = config.crop_pad && (draw.shift_y != 0 || draw.shift_x != 0);
  const bool rotate = config.rotation_degrees && draw.angle_degrees != 0.0;
  const double rad = draw.angle_degrees * 3.14159265358979323846 / 180.0;
  const double cy = (static_cast<double>(height) - 1.0) / 2.0, cx = (static_cast<double>(width) - 1.0) / 2.0;
  for (std::int64_t c = 0; c < channels; ++c) {
    float *p = sample + c * plane;
    if (crop) {
      // Window of the reflect-padded image offset by the drawn shift.
      for (std::int64_t y = 0; y < height; ++y)
        for (std::int64_t x = 0; x < width; ++x)
          buf[static_cast<std::size_t>(y * width + x)] =
              p[reflect(y + draw.shift_y, height) * width + reflect(x + draw.shift_x, width)];
      std::copy(buf.begin(), buf.end(), p);
    }
    if (config.horizontal_flip && draw.flip)
      for (std::int64_t y = 0; y < height; ++y) std::reverse(p + y * width, p + (y + 1) * width);
    if (rotate) {
      const double cs = std::cos(rad), sn = std::sin(rad);
      for (std::int64_t y = 0; y < height; ++y)
        for (std::int64_t x = 0; x < width; ++x) {
          const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
          const auto sy = static_cast<std::int64_t>(std::lround(cy + cs * dy - sn * dx));
          const auto sx = static_cast<std::int64_t>(std::lround(cx + sn * dy + cs * dx));
          buf[static_cast<std::size_t>(y * width + x)] =
              (sy < 0 || sy >= height || sx < 0 || sx >= width) ? 0.0f : p[sy * width + sx];
        }
      std::copy(buf.begin(), buf.end(), p);
    }
  }
}

void augment(Tensor &batch, const AugmentConfig &config, std::mt19937_64 &rng) {
  if (batch.shape.size() != 4) throw ShapeMismatch({}, "augment expects an (N, C, H, W) batch");
  const auto C = batch.shape[1], H = batch.shape[2], W = batch.shape[3];
  for (std::int64_t n = 0; n < batch.shape[0]; ++n)
    apply_augment(batch.ptr() + n * C * H * W, C, H, W, config, draw_augment(config, rng));
}

std::pair<data::Dataset, data::Dataset> split_train_val(const data::Dataset &dataset, double val_fraction,
                                                        std::uint64_t seed) {
  if (dataset.size() < 2) throw EmptySplit("need at least two records to split into train and val");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(dataset.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, dataset.size() - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  return {dataset.select(tr), dataset.select(val)};
}

namespace {

Tensor gather(const data::Dataset &d, const std::vector<std::size_t> &idx, std::size_t from, std::size_t to,
              std::vector<std::int32_t> &labels) {
  const auto S = d.sample_size();
  Tensor batch({static_cast<std::int64_t>(to - from), d.channels, d.height, d.width});
  labels.clear();
  for (std::size_t j = from; j < to; ++j) {
    std::copy(d.sample(idx[j]), d.sample(idx[j]) + S, batch.ptr() + static_cast<std::int64_t>(j - from) * S);
    labels.push_back(d.labels[idx[j]]);
  }
  return batch;
}

void check_dataset(const ir::ModelGraph &graph, const data::Dataset &d) {
  const auto &s = graph.input_shape();
  if (s.dims != std::vector<std::int64_t>{d.channels, d.height, d.width})
    throw ShapeMismatch({}, "dataset images do not match the graph input " + s.to_string());
  if (d.num_classes > graph.num_classes())
    throw ShapeMismatch({}, "dataset has more classes than the model outputs");
}

} // namespace

TrainResult train(const ir::ModelGraph &graph, const WeightStore &weights, const data::Dataset &dataset,
                  const TrainConfig &config) {
  config.validate();
  if (config.epochs == 0) return TrainResult{weights, {}, 0, 0.0};
  auto [tr, val] = split_train_val(dataset, config.val_fraction, config.seed);
  return train_on_split(graph, weights, tr, val, config);
}

TrainResult train_on_split(const ir::ModelGraph &graph, const WeightStore &weights, const data::Dataset &train_set,
                           const data::Dataset &val_set, const TrainConfig &config) {
  config.validate();
  TrainResult result{weights, {}, 0, 0.0};
  if (config.epochs == 0) return result;
  if (train_set.empty()) throw EmptySplit("training split is empty");
  if (val_set.empty()) throw EmptySplit("validation split is empty");
  check_dataset(graph, train_set);
  check_dataset(graph, val_set);

  WeightStore w = weights;
  const auto names = learnable_names(graph);
  std::map<std::string, std::vector<float>> velocity;
  for (const auto &n : names) velocity[n].assign(w.at(n).data.size(), 0.0f);

  // Separate streams so augmentation settings do not change the batch order.
  std::mt19937_64 order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 aug_rng(config.seed ^ 0xc2b2ae3d27d4eb4fULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Executor<float> ex(graph);
  std::vector<std::int32_t> labels;
  const auto bs = static_cast<std::size_t>(config.batch_size);

  result.best_val_accuracy = -1.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.lr_schedule.at_epoch(epoch);
    std::shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    int step = 0;
    for (std::size_t from = 0; from < order.size(); from += bs, ++step) {
      const auto to = std::min(order.size(), from + bs);
      auto batch = gather(train_set, order, from, to, labels);
      augment(batch, config.augment, aug_rng);
      const auto logits = ex.forward(w, batch, Mode::Train);
      Tensor g;
      const float loss = softmax_cross_entropy(logits, labels, &g);
      if (!std::isfinite(loss))
        throw NonFinite("loss is not finite at epoch " + std::to_string(epoch) + ", step " + std::to_string(step));
      const auto grads = ex.backward(w, g);
      ex.update_running_stats(w);
      for (const auto &n : names) {
        auto &param = w.at(n).data;
        const auto &grad = grads.at(n).data;
        auto &v = velocity[n];
        const auto mom = static_cast<float>(config.momentum), wd = static_cast<float>(config.weight_decay),
                   rate = static_cast<float>(lr);
        for (std::size_t j = 0; j < param.size(); ++j) {
          const float d = grad[j] + wd * param[j];
          v[j] = mom * v[j] + d;
          param[j] -= rate * v[j];
        }
      }
      loss_sum += static_cast<double>(loss) * static_cast<double>(to - from);
      seen += to - from;
    }
    const double val_acc = evaluate(graph, w, val_set).accuracy;
    result.history.push_back(EpochRecord{epoch, lr, loss_sum / static_cast<double>(seen), val_acc});
    if (val_acc > result.best_val_accuracy) {
      result.best_val_accuracy = val_acc;
      result.best_epoch = epoch;
      result.best_weights = w;
    }
  }
  return result;
}

EvalResult evaluate(const ir::ModelGraph &graph, const WeightStore &weights, const data::Dataset &split) {
  if (split.empty()) throw EmptySplit("cannot evaluate on an empty split");
  check_dataset(graph, split);
  const auto K = static_cast<std::size_t>(graph.num_classes());
  EvalResult r;
  r.total = split.size();
  r.class_counts.assign(K, 0);
  std::vector<std::size_t> class_correct(K, 0);
  std::vector<std::size_t> idx(split.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Executor<float> ex(graph);
  std::vector<std::int32_t> labels;
  constexpr std::size_t kBatch = 256;
  for (std::size_t from = 0; from < idx.size(); from += kBatch) {
    const auto to = std::min(idx.size(), from + kBatch);
    const auto logits = ex.forward(weights, gather(split, idx, from, to, labels), Mode::Eval);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const float *z = logits.ptr() + static_cast<std::int64_t>(j * K);
      const auto pred = static_cast<std::int32_t>(std::max_element(z, z + K) - z);
      const auto y = static_cast<std::size_t>(labels[j]);
      if (y >= K) throw ShapeMismatch({}, "label outside the model's class range");
      r.class_counts[y] += 1;
      if (pred == labels[j]) {
        r.correct += 1;
        class_correct[y] += 1;
      }
    }
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  r.per_class.resize(K);
  for (std::size_t k = 0; k < K; ++k)
    if (r.class_counts[k] > 0)
      r.per_class[k] = static_cast<double>(class_correct[k]) / static_cast<double>(r.class_counts[k]);
  return r;
}

LatencyStats bench_inference(const ir::ModelGraph &graph, const WeightStore &weights, int batch_size,
                             int repetitions, int warmup) {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (repetitions < 10) throw ConfigError("at least 10 timed repetitions are required");
  if (warmup < 3) throw ConfigError("at least 3 warm-up runs are required");
  std::vector<std::int64_t> dims{batch_size};
  for (auto d : graph.input_shape().dims) dims.push_back(d);
  Tensor batch(dims);
  std::mt19937_64 rng(12345);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  for (auto &v : batch.data) v = dist(rng);
  Executor<float> ex(graph);
  for (int i = 0; i < warmup; ++i) ex.forward(weights, batch, Mode::Eval);
  LatencyStats s;
  for (int i = 0; i < repetitions; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    ex.forward(weights, batch, Mode::Eval);
    const auto t1 = std::chrono::steady_clock::now();
    s.samples_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  const double n = static_cast<double>(s.samples_ms.size());
  s.mean_ms = std::accumulate(s.samples_ms.begin(), s.samples_ms.end(), 0.0) / n;
  double sq = 0.0;
  for (auto v : s.samples_ms) sq += (v - s.mean_ms) * (v - s.mean_ms);
  s.std_ms = std::sqrt(sq / n);
  s.per_image_ms = s.mean_ms / static_cast<double>(batch_size);
  s.ops = ir::count_ops(graph).total_ops;
  return s;
}

} // namespace dapr::nn
