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

#include <Eigen/Core>

#include "dapr/errors.hpp"
#include "dapr/runtime.hpp"

namespace dapr::nn {

using ir::LayerKind;

namespace {

template <typename T> using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T> using MatMap = Eigen::Map<RowMat<T>>;
template <typename T> using CMatMap = Eigen::Map<const RowMat<T>>;

struct Geometry {
  std::int64_t c, h, w;
};

Geometry geometry_of(const ir::TensorShape &s) {
  if (s.dims.size() == 3) return {s.dims[0], s.dims[1], s.dims[2]};
  return {s.numel(), 1, 1};
}

template <typename T>
const BasicTensor<T> &checked(const BasicWeightStore<T> &w, const std::string &name, const std::string &layer,
                              const std::vector<std::int64_t> &shape) {
  const auto &t = w.at(name);
  if (t.shape != shape) throw ShapeMismatch(layer, "tensor '" + name + "' has an unexpected shape");
  return t;
}

/// Unfolds one (C, H, W) sample into a (C*k*k, Ho*Wo) column matrix.
template <typename T>
void im2col(const T *x, const Geometry &in, const ir::ConvParams &p, std::int64_t ho, std::int64_t wo, T *cols) {
  const auto k = p.kernel;
  for (std::int64_t c = 0; c < in.c; ++c)
    for (std::int64_t ky = 0; ky < k; ++ky)
      for (std::int64_t kx = 0; kx < k; ++kx) {
        T *row = cols + ((c * k + ky) * k + kx) * ho * wo;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
          const auto iy = oy * p.stride - p.padding + ky;
          T *dst = row + oy * wo;
          if (iy < 0 || iy >= in.h) {
            std::fill(dst, dst + wo, T(0));
            continue;
          }
          const T *src = x + (c * in.h + iy) * in.w;
          for (std::int64_t ox = 0; ox < wo; ++ox) {
            const auto ix = ox * p.stride - p.padding + kx;
            dst[ox] = (ix < 0 || ix >= in.w) ? T(0) : src[ix];
          }
        }
      }
}

template <typename T>
void col2im(const T *cols, const Geometry &in, const ir::ConvParams &p, std::int64_t ho, std::int64_t wo, T *dx) {
  const auto k = p.kernel;
  for (std::int64_t c = 0; c < in.c; ++c)
    for (std::int64_t ky = 0; ky < k; ++ky)
      for (std::int64_t kx = 0; kx < k; ++kx) {
        const T *row = cols + ((c * k + ky) * k + kx) * ho * wo;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
          const auto iy = oy * p.stride - p.padding + ky;
          if (iy < 0 || iy >= in.h) continue;
          T *dst = dx + (c * in.h + iy) * in.w;
          const T *src = row + oy * wo;
          for (std::int64_t ox = 0; ox < wo; ++ox) {
            const auto ix = ox * p.stride - p.padding + kx;
            if (ix >= 0 && ix < in.w) dst[ix] += src[ox];
          }
        }
      }
}

bool is_pointwise(const ir::ConvParams &p) { return p.kernel == 1 && p.stride == 1 && p.padding == 0; }

} // namespace

template <typename T> Executor<T>::Executor(const ir::ModelGraph &graph) : graph_(graph) {
  const auto n = graph.size();
  acts_.resize(n);
  aux_.resize(n);
  argmax_.resize(n);
  stats_.resize(n);
  inv_std_.resize(n);
}

template <typename T>
BasicTensor<T> Executor<T>::forward(const BasicWeightStore<T> &weights, const BasicTensor<T> &batch, Mode mode) {
  const auto &in_shape = graph_.input_shape();
  if (batch.shape.size() != in_shape.dims.size() + 1 ||
      !std::equal(in_shape.dims.begin(), in_shape.dims.end(), batch.shape.begin() + 1))
    throw ShapeMismatch({}, "batch shape does not match the graph input " + in_shape.to_string());
  const auto N = batch.shape[0];
  if (N < 1) throw ShapeMismatch({}, "empty batch");
  input_ = batch;
  mode_ = mode;
  const auto &nodes = graph_.nodes();

  auto input_of = [&](std::size_t i, std::size_t slot) -> const BasicTensor<T> & {
    return nodes[i].inputs.empty() ? input_ : acts_[graph_.producers(i).at(slot)];
  };

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto &node = nodes[i];
    const auto &x = input_of(i, 0);
    const auto gin = geometry_of(graph_.input_shape_of(i, 0));
    const auto gout = geometry_of(graph_.shapes()[i]);
    std::vector<std::int64_t> out_dims{N};
    for (auto d : graph_.shapes()[i].dims) out_dims.push_back(d);
    BasicTensor<T> y(out_dims);
    const auto in_sz = gin.c * gin.h * gin.w;
    const auto out_sz = gout.c * gout.h * gout.w;

    switch (node.kind) {
    case LayerKind::Conv: {
      const auto &p = node.conv();
      const auto k2 = p.kernel * p.kernel;
      const auto &w = checked(weights, weight_name(node.id), node.id, {p.out_channels, p.in_channels / p.groups, p.kernel, p.kernel});
      const BasicTensor<T> *b = nullptr;
      if (p.has_bias) b = &checked(weights, bias_name(node.id), node.id, {p.out_channels});
      const auto hw = gout.h * gout.w;
      if (p.is_depthwise()) {
        for (std::int64_t n = 0; n < N; ++n)
          for (std::int64_t c = 0; c < gout.c; ++c) {
            const T *src = x.ptr() + n * in_sz + c * gin.h * gin.w;
            const T *ker = w.ptr() + c * k2;
            T *dst = y.ptr() + n * out_sz + c * hw;
            const T bias = b ? b->data[static_cast<std::size_t>(c)] : T(0);
            for (std::int64_t oy = 0; oy < gout.h; ++oy)
              for (std::int64_t ox = 0; ox < gout.w; ++ox) {
                T acc = bias;
                for (std::int64_t ky = 0; ky < p.kernel; ++ky) {
                  const auto iy = oy * p.stride - p.padding + ky;
                  if (iy < 0 || iy >= gin.h) continue;
                  for (std::int64_t kx = 0; kx < p.kernel; ++kx) {
                    const auto ix = ox * p.stride - p.padding + kx;
                    if (ix < 0 || ix >= gin.w) continue;
                    acc += src[iy * gin.w + ix] * ker[ky * p.kernel + kx];
                  }
                }
                dst[oy * gout.w + ox] = acc;
              }
          }
      } else {
        const auto rows = gin.c * k2;
        CMatMap<T> wm(w.ptr(), p.out_channels, rows);
        std::vector<T> cols;
        if (!is_pointwise(p)) cols.resize(static_cast<std::size_t>(rows * hw));
        for (std::int64_t n = 0; n < N; ++n) {
          const T *colp = x.ptr() + n * in_sz;
          if (!is_pointwise(p)) {
            im2col(x.ptr() + n * in_sz, gin, p, gout.h, gout.w, cols.data());
            colp = cols.data();
          }
          MatMap<T> ym(y.ptr() + n * out_sz, p.out_channels, hw);
          ym.noalias() = wm * CMatMap<T>(colp, rows, hw);
          if (b)
            for (std::int64_t c = 0; c < p.out_channels; ++c) ym.row(c).array() += b->data[static_cast<std::size_t>(c)];
        }
      }
      break;
    }
    case LayerKind::BatchNorm: {
      const auto &p = node.batch_norm();
      const auto C = p.channels;
      const auto &gamma = checked(weights, gamma_name(node.id), node.id, {C});
      const auto &beta = checked(weights, beta_name(node.id), node.id, {C});
      const auto &rm = checked(weights, running_mean_name(node.id), node.id, {C});
      const auto &rv = checked(weights, running_var_name(node.id), node.id, {C});
      const auto S = in_sz / C;
      const auto m = N * S;
      BasicTensor<T> xhat(out_dims);
      auto &inv = inv_std_[i];
      inv.assign(static_cast<std::size_t>(C), T(0));
      auto &st = stats_[i];
      st.mean.assign(static_cast<std::size_t>(C), T(0));
      st.var.assign(static_cast<std::size_t>(C), T(0));
      for (std::int64_t c = 0; c < C; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        T mean, var;
        if (mode == Mode::Train) {
          T sum = 0;
          for (std::int64_t n = 0; n < N; ++n) {
            const T *src = x.ptr() + n * in_sz + c * S;
            for (std::int64_t s = 0; s < S; ++s) sum += src[s];
          }
          mean = sum / static_cast<T>(m);
          T sq = 0;
          for (std::int64_t n = 0; n < N; ++n) {
            const T *src = x.ptr() + n * in_sz + c * S;
            for (std::int64_t s = 0; s < S; ++s) sq += (src[s] - mean) * (src[s] - mean);
          }
          var = sq / static_cast<T>(m);
          st.mean[cu] = mean;
          st.var[cu] = m > 1 ? sq / static_cast<T>(m - 1) : var;
        } else {
          mean = rm.data[cu];
          var = rv.data[cu];
        }
        const T is = T(1) / std::sqrt(var + static_cast<T>(p.epsilon));
        inv[cu] = is;
        for (std::int64_t n = 0; n < N; ++n) {
          const auto off = n * in_sz + c * S;
          for (std::int64_t s = 0; s < S; ++s) {
            const T h = (x.data[static_cast<std::size_t>(off + s)] - mean) * is;
            xhat.data[static_cast<std::size_t>(off + s)] = h;
            y.data[static_cast<std::size_t>(off + s)] = gamma.data[cu] * h + beta.data[cu];
          }
        }
      }
      aux_[i] = std::move(xhat);
      break;
    }
    case LayerKind::ReLU:
      for (std::size_t j = 0; j < y.data.size(); ++j) y.data[j] = std::max(x.data[j], T(0));
      break;
    case LayerKind::MaxPool: {
      const auto &p = node.pool();
      auto &am = argmax_[i];
      am.assign(y.data.size(), 0);
      for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t c = 0; c < gout.c; ++c) {
          const auto base = n * in_sz + c * gin.h * gin.w;
          for (std::int64_t oy = 0; oy < gout.h; ++oy)
            for (std::int64_t ox = 0; ox < gout.w; ++ox) {
              std::int64_t best = base + (oy * p.stride) * gin.w + ox * p.stride;
              for (std::int64_t ky = 0; ky < p.kernel; ++ky)
                for (std::int64_t kx = 0; kx < p.kernel; ++kx) {
                  const auto idx = base + (oy * p.stride + ky) * gin.w + ox * p.stride + kx;
                  if (x.data[static_cast<std::size_t>(idx)] > x.data[static_cast<std::size_t>(best)]) best = idx;
                }
              const auto o = static_cast<std::size_t>(n * out_sz + (c * gout.h + oy) * gout.w + ox);
              y.data[o] = x.data[static_cast<std::size_t>(best)];
              am[o] = static_cast<std::int32_t>(best);
            }
        }
      break;
    }
    case LayerKind::GlobalAvgPool: {
      const auto S = gin.h * gin.w;
      for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t c = 0; c < gin.c; ++c) {
          const T *src = x.ptr() + n * in_sz + c * S;
          T sum = 0;
          for (std::int64_t s = 0; s < S; ++s) sum += src[s];
          y.data[static_cast<std::size_t>(n * gin.c + c)] = sum / static_cast<T>(S);
        }
      break;
    }
    case LayerKind::Flatten:
      y.data = x.data;
      break;
    case LayerKind::Linear: {
      const auto &p = node.linear();
      const auto &w = checked(weights, weight_name(node.id), node.id, {p.out_features, p.in_features});
      const auto &b = checked(weights, bias_name(node.id), node.id, {p.out_features});
      MatMap<T> ym(y.ptr(), N, p.out_features);
      ym.noalias() = CMatMap<T>(x.ptr(), N, p.in_features) * CMatMap<T>(w.ptr(), p.out_features, p.in_features).transpose();
      for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t o = 0; o < p.out_features; ++o) ym(n, o) += b.data[static_cast<std::size_t>(o)];
      break;
    }
    case LayerKind::Add: {
      const auto &x2 = input_of(i, 1);
      for (std::size_t j = 0; j < y.data.size(); ++j) y.data[j] = x.data[j] + x2.data[j];
      break;
    }
    case LayerKind::Concat: {
      std::int64_t offset = 0;
      for (std::size_t slot = 0; slot < node.inputs.size(); ++slot) {
        const auto &xs = input_of(i, slot);
        const auto gs = geometry_of(graph_.input_shape_of(i, slot));
        const auto part = gs.c * gs.h * gs.w;
        for (std::int64_t n = 0; n < N; ++n)
          std::copy(xs.ptr() + n * part, xs.ptr() + (n + 1) * part, y.ptr() + n * out_sz + offset);
        offset += part;
      }
      break;
    }
    }
    acts_[i] = std::move(y);
  }
  has_forward_ = true;
  BasicTensor<T> logits = acts_[graph_.output_index()];
  logits.shape = {N, graph_.num_classes()};
  return logits;
}

template <typename T>
BasicWeightStore<T> Executor<T>::backward(const BasicWeightStore<T> &weights, const BasicTensor<T> &grad_logits) {
  if (!has_forward_) throw ShapeMismatch({}, "backward called without a forward pass");
  const auto &nodes = graph_.nodes();
  const auto out = graph_.output_index();
  const auto N = input_.shape[0];
  if (grad_logits.shape != std::vector<std::int64_t>{N, graph_.num_classes()})
    throw ShapeMismatch({}, "gradient shape does not match the logits");

  std::vector<BasicTensor<T>> grads(nodes.size());
  grads[out] = BasicTensor<T>(acts_[out].shape, grad_logits.data);
  BasicWeightStore<T> result;

  auto grad_slot = [&](std::size_t i, std::size_t slot) -> BasicTensor<T> * {
    if (nodes[i].inputs.empty()) return nullptr;
    const auto p = graph_.producers(i).at(slot);
    if (grads[p].data.empty()) grads[p] = BasicTensor<T>(acts_[p].shape);
    return &grads[p];
  };
  auto input_of = [&](std::size_t i, std::size_t slot) -> const BasicTensor<T> & {
    return nodes[i].inputs.empty() ? input_ : acts_[graph_.producers(i).at(slot)];
  };

  for (std::size_t ii = nodes.size(); ii-- > 0;) {
    const auto i = ii;
    const auto &node = nodes[i];
    if (grads[i].data.empty()) continue;
    const auto &dy = grads[i];
    const auto &x = input_of(i, 0);
    const auto gin = geometry_of(graph_.input_shape_of(i, 0));
    const auto gout = geometry_of(graph_.shapes()[i]);
    const auto in_sz = gin.c * gin.h * gin.w;
    const auto out_sz = gout.c * gout.h * gout.w;

    switch (node.kind) {
    case LayerKind::Conv: {
      const auto &p = node.conv();
      const auto k2 = p.kernel * p.kernel;
      const auto &w = weights.at(weight_name(node.id));
      BasicTensor<T> dw(w.shape);
      const auto hw = gout.h * gout.w;
      auto *dx = grad_slot(i, 0);
      if (p.has_bias) {
        BasicTensor<T> db({p.out_channels});
        for (std::int64_t n = 0; n < N; ++n)
          for (std::int64_t c = 0; c < p.out_channels; ++c) {
            const T *g = dy.ptr() + n * out_sz + c * hw;
            T s = 0;
            for (std::int64_t j = 0; j < hw; ++j) s += g[j];
            db.data[static_cast<std::size_t>(c)] += s;
          }
        result.tensors[bias_name(node.id)] = std::move(db);
      }
      if (p.is_depthwise()) {
        for (std::int64_t n = 0; n < N; ++n)
          for (std::int64_t c = 0; c < gout.c; ++c) {
            const T *src = x.ptr() + n * in_sz + c * gin.h * gin.w;
            const T *ker = w.ptr() + c * k2;
            T *dker = dw.ptr() + c * k2;
            T *dsrc = dx ? dx->ptr() + n * in_sz + c * gin.h * gin.w : nullptr;
            const T *g = dy.ptr() + n * out_sz + c * hw;
            for (std::int64_t oy = 0; oy < gout.h; ++oy)
              for (std::int64_t ox = 0; ox < gout.w; ++ox) {
                const T go = g[oy * gout.w + ox];
                for (std::int64_t ky = 0; ky < p.kernel; ++ky) {
                  const auto iy = oy * p.stride - p.padding + ky;
                  if (iy < 0 || iy >= gin.h) continue;
                  for (std::int64_t kx = 0; kx < p.kernel; ++kx) {
                    const auto ix = ox * p.stride - p.padding + kx;
                    if (ix < 0 || ix >= gin.w) continue;
                    dker[ky * p.kernel + kx] += go * src[iy * gin.w + ix];
                    if (dsrc) dsrc[iy * gin.w + ix] += go * ker[ky * p.kernel + kx];
                  }
                }
              }
          }
      } else {
        const auto rows = gin.c * k2;
        CMatMap<T> wm(w.ptr(), p.out_channels, rows);
        MatMap<T> dwm(dw.ptr(), p.out_channels, rows);
        const bool pw = is_pointwise(p);
        std::vector<T> cols(pw ? 0 : static_cast<std::size_t>(rows * hw));
        std::vector<T> dcols(static_cast<std::size_t>(rows * hw));
        for (std::int64_t n = 0; n < N; ++n) {
          const T *colp = x.ptr() + n * in_sz;
          if (!pw) {
            im2col(x.ptr() + n * in_sz, gin, p, gout.h, gout.w, cols.data());
            colp = cols.data();
          }
          CMatMap<T> gm(dy.ptr() + n * out_sz, p.out_channels, hw);
          dwm.noalias() += gm * CMatMap<T>(colp, rows, hw).transpose();
          if (dx) {
            if (pw) {
              MatMap<T>(dx->ptr() + n * in_sz, rows, hw).noalias() += wm.transpose() * gm;
            } else {
              MatMap<T>(dcols.data(), rows, hw).noalias() = wm.transpose() * gm;
              col2im(dcols.data(), gin, p, gout.h, gout.w, dx->ptr() + n * in_sz);
            }
          }
        }
      }
      result.tensors[weight_name(node.id)] = std::move(dw);
      break;
    }
    case LayerKind::BatchNorm: {
      const auto C = node.batch_norm().channels;
      const auto &gamma = weights.at(gamma_name(node.id));
      const auto &xhat = aux_[i];
      const auto S = in_sz / C;
      const auto m = static_cast<T>(N * S);
      BasicTensor<T> dg({C}), db({C});
      auto *dx = grad_slot(i, 0);
      for (std::int64_t c = 0; c < C; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        T sg = 0, sb = 0;
        for (std::int64_t n = 0; n < N; ++n) {
          const auto off = static_cast<std::size_t>(n * in_sz + c * S);
          for (std::int64_t s = 0; s < S; ++s) {
            sb += dy.data[off + static_cast<std::size_t>(s)];
            sg += dy.data[off + static_cast<std::size_t>(s)] * xhat.data[off + static_cast<std::size_t>(s)];
          }
        }
        dg.data[cu] = sg;
        db.data[cu] = sb;
        if (!dx) continue;
        const T scale = gamma.data[cu] * inv_std_[i][cu];
        for (std::int64_t n = 0; n < N; ++n) {
          const auto off = static_cast<std::size_t>(n * in_sz + c * S);
          for (std::int64_t s = 0; s < S; ++s) {
            const auto j = off + static_cast<std::size_t>(s);
            if (mode_ == Mode::Train)
              dx->data[j] += scale * (dy.data[j] - sb / m - xhat.data[j] * sg / m);
            else
              dx->data[j] += scale * dy.data[j];
          }
        }
      }
      result.tensors[gamma_name(node.id)] = std::move(dg);
      result.tensors[beta_name(node.id)] = std::move(db);
      break;
    }
    case LayerKind::ReLU: {
      if (auto *dx = grad_slot(i, 0)) {
        const auto &y = acts_[i];
        for (std::size_t j = 0; j < dy.data.size(); ++j)
          if (y.data[j] > T(0)) dx->data[j] += dy.data[j];
      }
      break;
    }
    case LayerKind::MaxPool: {
      if (auto *dx = grad_slot(i, 0)) {
        const auto &am = argmax_[i];
        for (std::size_t j = 0; j < dy.data.size(); ++j) dx->data[static_cast<std::size_t>(am[j])] += dy.data[j];
      }
      break;
    }
    case LayerKind::GlobalAvgPool: {
      if (auto *dx = grad_slot(i, 0)) {
        const auto S = gin.h * gin.w;
        for (std::int64_t n = 0; n < N; ++n)
          for (std::int64_t c = 0; c < gin.c; ++c) {
            const T g = dy.data[static_cast<std::size_t>(n * gin.c + c)] / static_cast<T>(S);
            T *d = dx->ptr() + n * in_sz + c * S;
            for (std::int64_t s = 0; s < S; ++s) d[s] += g;
          }
      }
      break;
    }
    case LayerKind::Flatten: {
      if (auto *dx = grad_slot(i, 0))
        for (std::size_t j = 0; j < dy.data.size(); ++j) dx->data[j] += dy.data[j];
      break;
    }
    case LayerKind::Linear: {
      const auto &p = node.linear();
      const auto &w = weights.at(weight_name(node.id));
      CMatMap<T> gm(dy.ptr(), N, p.out_features);
      BasicTensor<T> dw(w.shape), db({p.out_features});
      MatMap<T>(dw.ptr(), p.out_features, p.in_features).noalias() = gm.transpose() * CMatMap<T>(x.ptr(), N, p.in_features);
      for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t o = 0; o < p.out_features; ++o) db.data[static_cast<std::size_t>(o)] += gm(n, o);
      if (auto *dx = grad_slot(i, 0))
        MatMap<T>(dx->ptr(), N, p.in_features).noalias() += gm * CMatMap<T>(w.ptr(), p.out_features, p.in_features);
      result.tensors[weight_name(node.id)] = std::move(dw);
      result.tensors[bias_name(node.id)] = std::move(db);
      break;
    }
    case LayerKind::Add: {
      for (std::size_t slot = 0; slot < 2; ++slot)
        if (auto *dx = grad_slot(i, slot))
          for (std::size_t j = 0; j < dy.data.size(); ++j) dx->data[j] += dy.data[j];
      break;
    }
    case LayerKind::Concat: {
      std::int64_t offset = 0;
      for (std::size_t slot = 0; slot < node.inputs.size(); ++slot) {
        const auto gs = geometry_of(graph_.input_shape_of(i, slot));
        const auto part = gs.c * gs.h * gs.w;
        if (auto *dx = grad_slot(i, slot))
          for (std::int64_t n = 0; n < N; ++n) {
            const T *src = dy.ptr() + n * out_sz + offset;
            T *dst = dx->ptr() + n * part;
            for (std::int64_t j = 0; j < part; ++j) dst[j] += src[j];
          }
        offset += part;
      }
      break;
    }
    }
    grads[i] = BasicTensor<T>();
  }

  // Parameters of unreachable-by-gradient layers still get zero tensors.
  for (const auto &name : learnable_names(graph_))
    if (!result.contains(name)) result.tensors[name] = BasicTensor<T>(weights.at(name).shape);
  return result;
}

template <typename T> void Executor<T>::update_running_stats(BasicWeightStore<T> &weights) const {
  if (!has_forward_ || mode_ != Mode::Train) return;
  for (std::size_t i = 0; i < graph_.size(); ++i) {
    const auto &node = graph_.nodes()[i];
    if (node.kind != LayerKind::BatchNorm) continue;
    const auto mom = static_cast<T>(node.batch_norm().momentum);
    auto &rm = weights.at(running_mean_name(node.id));
    auto &rv = weights.at(running_var_name(node.id));
    for (std::size_t c = 0; c < rm.data.size(); ++c) {
      rm.data[c] = (T(1) - mom) * rm.data[c] + mom * stats_[i].mean[c];
      rv.data[c] = (T(1) - mom) * rv.data[c] + mom * stats_[i].var[c];
    }
  }
}

template class Executor<float>;
template class Executor<double>;

Tensor forward(const ir::ModelGraph &graph, const WeightStore &weights, const Tensor &batch) {
  Executor<float> ex(graph);
  return ex.forward(weights, batch, Mode::Eval);
}

Tensor forward(const ir::ModelGraph &graph, WeightStore &weights, const Tensor &batch, Mode mode) {
  Executor<float> ex(graph);
  auto out = ex.forward(weights, batch, mode);
  ex.update_running_stats(weights);
  return out;
}

template <typename T>
T softmax_cross_entropy(const BasicTensor<T> &logits, const std::vector<std::int32_t> &labels, BasicTensor<T> *grad) {
  if (logits.shape.size() != 2) throw ShapeMismatch({}, "logits must be (N, K)");
  const auto N = logits.shape[0], K = logits.shape[1];
  if (static_cast<std::int64_t>(labels.size()) != N) throw ShapeMismatch({}, "label count does not match the batch");
  if (grad) *grad = BasicTensor<T>(logits.shape);
  T total = 0;
  std::vector<T> p(static_cast<std::size_t>(K));
  for (std::int64_t n = 0; n < N; ++n) {
    const T *z = logits.ptr() + n * K;
    const auto y = labels[static_cast<std::size_t>(n)];
    if (y < 0 || y >= K) throw ShapeMismatch({}, "label " + std::to_string(y) + " outside [0, " + std::to_string(K) + ")");
    const T zmax = *std::max_element(z, z + K);
    T sum = 0;
    for (std::int64_t k = 0; k < K; ++k) sum += std::exp(z[k] - zmax);
    const T lse = zmax + std::log(sum);
    total += lse - z[y];
    if (grad) {
      T *g = grad->ptr() + n * K;
      for (std::int64_t k = 0; k < K; ++k) g[k] = (std::exp(z[k] - lse) - (k == y ? T(1) : T(0))) / static_cast<T>(N);
    }
  }
  return total / static_cast<T>(N);
}

template float softmax_cross_entropy(const BasicTensor<float> &, const std::vector<std::int32_t> &, BasicTensor<float> *);
template double softmax_cross_entropy(const BasicTensor<double> &, const std::vector<std::int32_t> &,
                                      BasicTensor<double> *);

template <typename T>
LossAndGrads<T> loss_and_gradients(const ir::ModelGraph &graph, const BasicWeightStore<T> &weights,
                                   const BasicTensor<T> &batch, const std::vector<std::int32_t> &labels, Mode mode) {
  Executor<T> ex(graph);
  const auto logits = ex.forward(weights, batch, mode);
  BasicTensor<T> g;
  LossAndGrads<T> out;
  out.loss = softmax_cross_entropy(logits, labels, &g);
  if (!std::isfinite(static_cast<double>(out.loss))) throw NonFinite("loss is not finite");
  out.grads = ex.backward(weights, g);
  for (const auto &[name, t] : out.grads.tensors)
    for (auto v : t.data)
      if (!std::isfinite(static_cast<double>(v))) throw NonFinite("gradient of '" + name + "' is not finite");
  return out;
}

template LossAndGrads<float> loss_and_gradients(const ir::ModelGraph &, const BasicWeightStore<float> &,
                                                const BasicTensor<float> &, const std::vector<std::int32_t> &, Mode);
template LossAndGrads<double> loss_and_gradients(const ir::ModelGraph &, const BasicWeightStore<double> &,
                                                 const BasicTensor<double> &, const std::vector<std::int32_t> &, Mode);

std::vector<std::string> learnable_names(const ir::ModelGraph &graph) {
  std::vector<std::string> names;
  for (const auto &n : graph.nodes()) {
    switch (n.kind) {
    case LayerKind::Conv:
      names.push_back(weight_name(n.id));
      if (n.conv().has_bias) names.push_back(bias_name(n.id));
      break;
    case LayerKind::Linear:
      names.push_back(weight_name(n.id));
      names.push_back(bias_name(n.id));
      break;
    case LayerKind::BatchNorm:
      names.push_back(gamma_name(n.id));
      names.push_back(beta_name(n.id));
      break;
    default:
      break;
    }
  }
  return names;
}

} // namespace dapr::nn
