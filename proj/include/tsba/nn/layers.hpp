// Copyright 2026 The tsbalab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "tsba/core/error.hpp"
#include "tsba/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace tsba::nn {

template <typename T>
struct LayerCache {
  Index batch = 0;
  Index length = 0;
  bool train = false;
  std::vector<Mat<T>> mats;
  std::vector<LayerCache> children;
};

template <typename T>
struct ForwardContext {
  const T* params = nullptr;
  const T* state = nullptr;
  T* state_update = nullptr;  // set in train mode: batch-norm running statistics are written here
  bool train = false;
};

template <typename T>
struct BackwardContext {
  const T* params = nullptr;
  const T* state = nullptr;
  T* param_grad = nullptr;  // null: parameter gradients are skipped
  T* state_grad = nullptr;  // null: gate gradients are skipped
};

// A layer is immutable after construction; parameters and running state
// live in flat buffers owned by the network, addressed by offset.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Activations<T> forward(const ForwardContext<T>& ctx, const Activations<T>& x,
                                 LayerCache<T>* cache) const = 0;
  // Returns the gradient with respect to the input data.
  virtual Mat<T> backward(const BackwardContext<T>& ctx, const Mat<T>& grad_out,
                          const LayerCache<T>& cache) const = 0;
  virtual void initialize(T* /*params*/, T* /*state*/, Rng& /*rng*/) const {}
  virtual std::string name() const = 0;

  std::size_t param_offset = 0;
  std::size_t param_count = 0;
  std::size_t state_offset = 0;
  std::size_t state_count = 0;
};

template <typename T>
using LayerPtr = std::shared_ptr<const Layer<T>>;

namespace detail {

template <typename T>
void glorot_uniform(T* dst, std::size_t n, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<T>(dist(rng));
}

template <typename T>
Eigen::Map<const Mat<T>> cmap(const T* base, std::size_t offset, Index rows, Index cols) {
  return Eigen::Map<const Mat<T>>(base + offset, rows, cols);
}

template <typename T>
Eigen::Map<Mat<T>> map(T* base, std::size_t offset, Index rows, Index cols) {
  return Eigen::Map<Mat<T>>(base + offset, rows, cols);
}

}  // namespace detail

// 1-D convolution, stride 1, zero padded so the output keeps the input length.
// "Same" padding puts the extra element of an even receptive field on the right;
// causal padding puts all of it on the left.
template <typename T>
class Conv1d final : public Layer<T> {
 public:
  Conv1d(Index in_channels, Index out_channels, Index kernel, Index dilation = 1, bool causal = false)
      : in_(in_channels), out_(out_channels), kernel_(kernel), dilation_(dilation), causal_(causal) {
    if (kernel < 1 || dilation < 1 || in_channels < 1 || out_channels < 1)
      throw ConfigError("invalid conv1d configuration");
    this->param_count = static_cast<std::size_t>(out_ * kernel_ * in_ + out_);
  }

  Index left_pad() const {
    const Index span = dilation_ * (kernel_ - 1);
    return causal_ ? span : span / 2;
  }

  Activations<T> forward(const ForwardContext<T>& ctx, const Activations<T>& x,
                         LayerCache<T>* cache) const override {
    if (x.channels() != in_) throw ShapeError("conv1d expects " + std::to_string(in_) + " input channels");
    const auto w = detail::cmap(ctx.params, this->param_offset, out_, kernel_ * in_);
    const auto b = detail::cmap(ctx.params, this->param_offset + static_cast<std::size_t>(out_ * kernel_ * in_), out_, 1);
    Activations<T> y;
    y.batch = x.batch;
    y.length = x.length;
    Mat<T> col = im2col(x);
    y.data.noalias() = w * col;
    y.data.colwise() += b.col(0);
    if (cache) {
      cache->batch = x.batch;
      cache->length = x.length;
      cache->mats = {std::move(col)};
    }
    return y;
  }

  Mat<T> backward(const BackwardContext<T>& ctx, const Mat<T>& grad_out, const LayerCache<T>& cache) const override {
    const auto w = detail::cmap(ctx.params, this->param_offset, out_, kernel_ * in_);
    const Mat<T>& col = cache.mats.at(0);
    if (ctx.param_grad) {
      auto dw = detail::map(ctx.param_grad, this->param_offset, out_, kernel_ * in_);
      auto db = detail::map(ctx.param_grad, this->param_offset + static_cast<std::size_t>(out_ * kernel_ * in_), out_, 1);
      dw.noalias() += grad_out * col.transpose();
      db.col(0) += grad_out.rowwise().sum();
    }
    Mat<T> dcol;
    dcol.noalias() = w.transpose() * grad_out;
    return col2im(dcol, cache.batch, cache.length);
  }

  void initialize(T* params, T*, Rng& rng) const override {
    const auto n = static_cast<std::size_t>(out_ * kernel_ * in_);
    detail::glorot_uniform(params + this->param_offset, n, static_cast<double>(in_ * kernel_),
                           static_cast<double>(out_ * kernel_), rng);
    std::fill_n(params + this->param_offset + n, static_cast<std::size_t>(out_), T(0));
  }

  std::string name() const override { return "conv1d"; }
  Index in_channels() const { return in_; }
  Index out_channels() const { return out_; }

 private:
  // Rows are grouped by tap: row k*in + c holds channel c shifted by tap k.
  Mat<T> im2col(const Activations<T>& x) const {
    const Index L = x.length;
    if (kernel_ == 1) return x.data;
    Mat<T> col = Mat<T>::Zero(kernel_ * in_, x.data.cols());
    for (Index k = 0; k < kernel_; ++k) {
      const Index off = k * dilation_ - left_pad();
      const Index lo = std::max<Index>(0, -off);
      const Index hi = std::min<Index>(L, L - off);
      if (hi <= lo) continue;
      for (Index b = 0; b < x.batch; ++b)
        col.block(k * in_, b * L + lo, in_, hi - lo) = x.data.block(0, b * L + lo + off, in_, hi - lo);
    }
    return col;
  }

  Mat<T> col2im(const Mat<T>& dcol, Index batch, Index L) const {
    if (kernel_ == 1) return dcol;
    Mat<T> dx = Mat<T>::Zero(in_, batch * L);
    for (Index k = 0; k < kernel_; ++k) {
      const Index off = k * dilation_ - left_pad();
      const Index lo = std::max<Index>(0, -off);
      const Index hi = std::min<Index>(L, L - off);
      if (hi <= lo) continue;
      for (Index b = 0; b < batch; ++b)
        dx.block(0, b * L + lo + off, in_, hi - lo) += dcol.block(k * in_, b * L + lo, in_, hi - lo);
    }
    return dx;
  }

  Index in_, out_, kernel_, dilation_;
  bool causal_;
};

// Affine map applied column-wise: per timestep on sequences, or on pooled vectors.
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(Index in, Index out) : in_(in), out_(out) { this->param_count = static_cast<std::size_t>(out * in + out); }

  Activations<T> forward(const ForwardContext<T>& ctx, const Activations<T>& x,
                         LayerCache<T>* cache) const override {
    if (x.channels() != in_) throw ShapeError("dense expects " + std::to_string(in_) + " inputs");
    const auto w = detail::cmap(ctx.params, this->param_offset, out_, in_);
    const auto b = detail::cmap(ctx.params, this->param_offset + static_cast<std::size_t>(out_ * in_), out_, 1);
    Activations<T> y{Mat<T>(out_, x.data.cols()), x.batch, x.length};
    y.data.noalias() = w * x.data;
    y.data.colwise() += b.col(0);
    if (cache) {
      cache->batch = x.batch;
      cache->length = x.length;
      cache->mats = {x.data};
    }
    return y;
  }

  Mat<T> backward(const BackwardContext<T>& ctx, const Mat<T>& grad_out, const LayerCache<T>& cache) const override {
    const auto w = detail::cmap(ctx.params, this->param_offset, out_, in_);
    if (ctx.param_grad) {
      auto dw = detail::map(ctx.param_grad, this->param_offset, out_, in_);
      auto db = detail::map(ctx.param_grad, this->param_offset + static_cast<std::size_t>(out_ * in_), out_, 1);
      dw.noalias() += grad_out * cache.mats.at(0).transpose();
      db.col(0) += grad_out.rowwise().sum();
    }
    Mat<T> dx;
    dx.noalias() = w.transpose() * grad_out;
    return dx;
  }

  void initialize(T* params, T*, Rng& rng) const override {
    const auto n = static_cast<std::size_t>(out_ * in_);
    detail::glorot_uniform(params + this->param_offset, n, static_cast<double>(in_), static_cast<double>(out_), rng);
    std::fill_n(params + this->param_offset + n, static_cast<std::size_t>(out_), T(0));
  }

  std::string name() const override { return "dense"; }
  Index in_features() const { return in_; }
  Index out_features() const { return out_; }

 private:
  Index in_, out_;
};

// Per-channel normalisation over all timesteps of the batch.
// Parameters: [gamma, beta]; state: [running_mean, running_var].
template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.1;

  explicit BatchNorm(Index channels) : c_(channels) {
    this->param_count = static_cast<std::size_t>(2 * c_);
    this->state_count = static_cast<std::size_t>(2 * c_);
  }

  Activations<T> forward(const ForwardContext<T>& ctx, const Activations<T>& x,
                         LayerCache<T>* cache) const override {
    const auto gamma = detail::cmap(ctx.params, this->param_offset, c_, 1).col(0);
    const auto beta = detail::cmap(ctx.params, this->param_offset + static_cast<std::size_t>(c_), c_, 1).col(0);
    const Index n = x.data.cols();
    Vec<T> mean, var;
    if (ctx.train) {
      mean = x.data.rowwise().mean();
      var = (x.data.colwise() - mean).array().square().rowwise().mean();
      if (ctx.state_update) {
        auto rm = detail::map(ctx.state_update, this->state_offset, c_, 1).col(0);
        auto rv = detail::map(ctx.state_update, this->state_offset + static_cast<std::size_t>(c_), c_, 1).col(0);
        const T m = static_cast<T>(kMomentum);
        const T unbias = n > 1 ? static_cast<T>(n) / static_cast<T>(n - 1) : T(1);
        rm = (T(1) - m) * rm + m * mean;
        rv = (T(1) - m) * rv + m * unbias * var;
      }
    } else {
      mean = detail::cmap(ctx.state, this->state_offset, c_, 1).col(0);
      var = detail::cmap(ctx.state, this->state_offset + static_cast<std::size_t>(c_), c_, 1).col(0);
    }
    Vec<T> inv = (var.array() + static_cast<T>(kEpsilon)).rsqrt();
    Mat<T> xhat = (x.data.colwise() - mean).array().colwise() * inv.array();
    Activations<T> y{(xhat.array().colwise() * gamma.array()).colwise() + beta.array(), x.batch, x.length};
    if (cache) {
      cache->batch = x.batch;
      cache->length = x.length;
      cache->train = ctx.train;
      cache->mats = {std::move(xhat), Mat<T>(inv)};
    }
    return y;
  }

  Mat<T> backward(const BackwardContext<T>& ctx, const Mat<T>& grad_out, const LayerCache<T>& cache) const override {
    const auto gamma = detail::cmap(ctx.params, this->param_offset, c_, 1).col(0);
    const Mat<T>& xhat = cache.mats.at(0);
    const Vec<T> inv = cache.mats.at(1).col(0);
    if (ctx.param_grad) {
      auto dg = detail::map(ctx.param_grad, this->param_offset, c_, 1).col(0);
      auto db = detail::map(ctx.param_grad, this->param_offset + static_cast<std::size_t>(c_), c_, 1).col(0);
      dg += grad_out.cwiseProduct(xhat).rowwise().sum();
      db += grad_out.rowwise().sum();
    }
    Mat<T> dxhat = grad_out.array().colwise() * gamma.array();
    if (!cache.train) return dxhat.array().colwise() * inv.array();
    const T n = static_cast<T>(grad_out.cols());
    Vec<T> sum_d = dxhat.rowwise().sum();
    Vec<T> sum_dx = dxhat.cwiseProduct(xhat).rowwise().sum();
    Mat<T> dx = (n * dxhat.array() - xhat.array().colwise() * sum_dx.array()).colwise() - sum_d.array();
    return dx.array().colwise() * (inv.array() / n);
  }

  void initialize(T* params, T* state, Rng&) const override {
    std::fill_n(params + this->param_offset, static_cast<std::size_t>(c_), T(1));
    std::fill_n(params + this->param_offset + c_, static_cast<std::size_t>(c_), T(0));
    std::fill_n(state + this->state_offset, static_cast<std::size_t>(c_), T(0));
    std::fill_n(state + this->state_offset + c_, static_cast<std::size_t>(c_), T(1));
  }

  std::string name() const override { return "batch_norm"; }

 private:
  Index c_;
};

template <typename T>
class Activation final : public Layer<T> {
 public:
  enum class Kind { relu, tanh };
  explicit Activation(Kind kind) : kind_(kind) {}

  Activations<T> forward(const ForwardContext<T>&, const Activations<T>& x, LayerCache<T>* cache) const override {
    Activations<T> y{Mat<T>(), x.batch, x.length};
    if (kind_ == Kind::relu)
      y.data = x.data.cwiseMax(T(0));
    else
      y.data = x.data.array().tanh();
    if (cache) cache->mats = {y.data};
    return y;
  }

  Mat<T> backward(const BackwardContext<T>&, const Mat<T>& grad_out, const LayerCache<T>& cache) const override {
    const Mat<T>& y = cache.mats.at(0);
    if (kind_ == Kind::relu) return (y.array() > T(0)).select(grad_out, T(0));
    return grad_out.array() * (T(1) - y.array().square());
  }

  std::string name() const override { return kind_ == Kind::relu ? "relu" : "tanh"; }

 private:
  Kind kind_;
};

// Multiplies each channel by (mask + perturbation). Both live in the network
// state so pruning survives checkpointing; neither is touched by the optimiser.
// State: [mask(c), perturbation(c)].
template <typename T>
class NeuronGate final : public Layer<T> {
 public:
  explicit NeuronGate(Index channels) : c_(channels) { this->state_count = static_cast<std::size_t>(2 * c_); }

  Vec<T> scale(const T* state) const {
    return detail::cmap(state, this->state_offset, c_, 1).col(0) +
           detail::cmap(state, this->state_offset + static_cast<std::size_t>(c_), c_, 1).col(0);
  }

  Activations<T> forward(const ForwardContext<T>& ctx, const Activations<T>& x,
                         LayerCache<T>* cache) const override {
    Activations<T> y{x.data.array().colwise() * scale(ctx.state).array(), x.batch, x.length};
    if (cache) cache->mats = {x.data};
    return y;
  }

  Mat<T> backward(const BackwardContext<T>& ctx, const Mat<T>& grad_out, const LayerCache<T>& cache) const override {
    if (ctx.state_grad) {
      Vec<T> g = grad_out.cwiseProduct(cache.mats.at(0)).rowwise().sum();
      detail::map(ctx.state_grad, this->state_offset, c_, 1).col(0) += g;
      detail::map(ctx.state_grad, this->state_offset + static_cast<std::size_t>(c_), c_, 1).col(0) += g;
    }
    return grad_out.array().colwise() * scale(ctx.state).array();
  }

  void initialize(T*, T* state, Rng&) const override {
    std::fill_n(state + this->state_offset, static_cast<std::size_t>(c_), T(1));
    std::fill_n(state + this->state_offset + c_, static_cast<std::size_t>(c_), T(0));
  }

  std::string name() const override { return "neuron_gate"; }
  Index channels() const { return c_; }

 private:
  Index c_;
};

template <typename T>
class GlobalAvgPool final : public Layer<T> {
 public:
  Activations<T> forward(const ForwardContext<T>&, const Activations<T>& x, LayerCache<T>* cache) const override {
    Activations<T> y{Mat<T>(x.channels(), x.batch), x.batch, 1};
    for (Index b = 0; b < x.batch; ++b) y.data.col(b) = x.sample(b).rowwise().mean();
    if (cache) {
      cache->batch = x.batch;
      cache->length = x.length;
    }
    return y;
  }

  Mat<T> backward(const BackwardContext<T>&, const Mat<T>& grad_out, const LayerCache<T>& cache) const override {
    const Index L = cache.length;
    Mat<T> dx(grad_out.rows(), cache.batch * L);
    for (Index b = 0; b < cache.batch; ++b)
      dx.middleCols(b * L, L) = (grad_out.col(b) / static_cast<T>(L)).replicate(1, L);
    return dx;
  }

  std::string name() const override { return "global_avg_pool"; }
};

// Single-layer LSTM returning the final hidden state (length collapses to 1).
// Gate order i, f, g, o. Parameters: W (4H x in), U (4H x H), b (4H).
template <typename T>
class Lstm final : public Layer<T> {
 public:
  Lstm(Index in, Index hidden) : in_(in), h_(hidden) {
    this->param_count = static_cast<std::size_t>(4 * h_ * in_ + 4 * h_ * h_ + 4 * h_);
  }

  Activations<T> forward(const ForwardContext<T>& ctx, const Activations<T>& x,
                         LayerCache<T>* cache) const override {
    if (x.channels() != in_) throw ShapeError("lstm expects " + std::to_string(in_) + " inputs");
    const Index B = x.batch, L = x.length, H = h_;
    const auto w = detail::cmap(ctx.params, this->param_offset, 4 * H, in_);
    const auto u = detail::cmap(ctx.params, u_offset(), 4 * H, H);
    const auto bias = detail::cmap(ctx.params, b_offset(), 4 * H, 1).col(0);
    Mat<T> zx;
    zx.noalias() = w * x.data;  // sample-major columns
    // time-major caches: column t*B + b
    Mat<T> gates(4 * H, L * B), cells(H, (L + 1) * B), hiddens(H, (L + 1) * B);
    cells.leftCols(B).setZero();
    hiddens.leftCols(B).setZero();
    Mat<T> z(4 * H, B);
    for (Index t = 0; t < L; ++t) {
      for (Index b = 0; b < B; ++b) z.col(b) = zx.col(b * L + t);
      z.noalias() += u * hiddens.middleCols(t * B, B);
      z.colwise() += bias;
      auto g = gates.middleCols(t * B, B);
      g.topRows(2 * H) = (T(1) + (-z.topRows(2 * H)).array().exp()).inverse();
      g.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh();
      g.bottomRows(H) = (T(1) + (-z.bottomRows(H)).array().exp()).inverse();
      cells.middleCols((t + 1) * B, B) = g.middleRows(H, H).cwiseProduct(cells.middleCols(t * B, B)) +
                                         g.topRows(H).cwiseProduct(g.middleRows(2 * H, H));
      hiddens.middleCols((t + 1) * B, B) =
          g.bottomRows(H).array() * cells.middleCols((t + 1) * B, B).array().tanh();
    }
    Activations<T> y{hiddens.rightCols(B), B, 1};
    if (cache) {
      cache->batch = B;
      cache->length = L;
      cache->mats = {x.data, std::move(gates), std::move(cells), std::move(hiddens)};
    }
    return y;
  }

  Mat<T> backward(const BackwardContext<T>& ctx, const Mat<T>& grad_out, const LayerCache<T>& cache) const override {
    const Index B = cache.batch, L = cache.length, H = h_;
    const auto w = detail::cmap(ctx.params, this->param_offset, 4 * H, in_);
    const auto u = detail::cmap(ctx.params, u_offset(), 4 * H, H);
    const Mat<T>& xin = cache.mats.at(0);
    const Mat<T>& gates = cache.mats.at(1);
    const Mat<T>& cells = cache.mats.at(2);
    const Mat<T>& hiddens = cache.mats.at(3);

    Mat<T> dzx(4 * H, B * L);  // sample-major
    Mat<T> dh = grad_out;
    Mat<T> dc = Mat<T>::Zero(H, B);
    Mat<T> dz(4 * H, B);
    Mat<T> du = Mat<T>::Zero(4 * H, H);
    Vec<T> dbias = Vec<T>::Zero(4 * H);
    for (Index t = L - 1; t >= 0; --t) {
      const auto g = gates.middleCols(t * B, B);
      const auto i = g.topRows(H).array();
      const auto f = g.middleRows(H, H).array();
      const auto gg = g.middleRows(2 * H, H).array();
      const auto o = g.bottomRows(H).array();
      const Mat<T> tanh_c = cells.middleCols((t + 1) * B, B).array().tanh();
      dc.array() += dh.array() * o * (T(1) - tanh_c.array().square());
      dz.topRows(H) = dc.array() * gg * i * (T(1) - i);
      dz.middleRows(H, H) = dc.array() * cells.middleCols(t * B, B).array() * f * (T(1) - f);
      dz.middleRows(2 * H, H) = dc.array() * i * (T(1) - gg.square());
      dz.bottomRows(H) = dh.array() * tanh_c.array() * o * (T(1) - o);
      dc = dc.cwiseProduct(g.middleRows(H, H));
      if (ctx.param_grad) {
        du.noalias() += dz * hiddens.middleCols(t * B, B).transpose();
        dbias += dz.rowwise().sum();
      }
      dh.noalias() = u.transpose() * dz;
      for (Index b = 0; b < B; ++b) dzx.col(b * L + t) = dz.col(b);
    }
    if (ctx.param_grad) {
      detail::map(ctx.param_grad, this->param_offset, 4 * H, in_).noalias() += dzx * xin.transpose();
      detail::map(ctx.param_grad, u_offset(), 4 * H, H) += du;
      detail::map(ctx.param_grad, b_offset(), 4 * H, 1).col(0) += dbias;
    }
    Mat<T> dx;
    dx.noalias() = w.transpose() * dzx;
    return dx;
  }

  void initialize(T* params, T*, Rng& rng) const override {
    const auto nw = static_cast<std::size_t>(4 * h_ * in_);
    const auto nu = static_cast<std::size_t>(4 * h_ * h_);
    detail::glorot_uniform(params + this->param_offset, nw, static_cast<double>(in_), static_cast<double>(4 * h_), rng);
    detail::glorot_uniform(params + u_offset(), nu, static_cast<double>(h_), static_cast<double>(4 * h_), rng);
    T* b = params + b_offset();
    std::fill_n(b, static_cast<std::size_t>(4 * h_), T(0));
    std::fill_n(b + h_, static_cast<std::size_t>(h_), T(1));  // forget-gate bias
  }

  std::string name() const override { return "lstm"; }
  Index hidden() const { return h_; }

 private:
  std::size_t u_offset() const { return this->param_offset + static_cast<std::size_t>(4 * h_ * in_); }
  std::size_t b_offset() const { return u_offset() + static_cast<std::size_t>(4 * h_ * h_); }

  Index in_, h_;
};

// y = main(x) + shortcut(x); an empty shortcut is the identity.
template <typename T>
class Residual final : public Layer<T> {
 public:
  Residual(std::vector<LayerPtr<T>> main, std::vector<LayerPtr<T>> shortcut)
      : main_(std::move(main)), shortcut_(std::move(shortcut)) {}

  Activations<T> forward(const ForwardContext<T>& ctx, const Activations<T>& x,
                         LayerCache<T>* cache) const override {
    if (cache) cache->children.assign(main_.size() + shortcut_.size(), {});
    Activations<T> a = x;
    for (std::size_t i = 0; i < main_.size(); ++i) a = main_[i]->forward(ctx, a, cache ? &cache->children[i] : nullptr);
    Activations<T> s = x;
    for (std::size_t i = 0; i < shortcut_.size(); ++i)
      s = shortcut_[i]->forward(ctx, s, cache ? &cache->children[main_.size() + i] : nullptr);
    if (a.data.rows() != s.data.rows()) throw ShapeError("residual branches disagree on channel count");
    a.data += s.data;
    return a;
  }

  Mat<T> backward(const BackwardContext<T>& ctx, const Mat<T>& grad_out, const LayerCache<T>& cache) const override {
    Mat<T> g = grad_out;
    for (std::size_t i = main_.size(); i-- > 0;) g = main_[i]->backward(ctx, g, cache.children[i]);
    Mat<T> s = grad_out;
    for (std::size_t i = shortcut_.size(); i-- > 0;) s = shortcut_[i]->backward(ctx, s, cache.children[main_.size() + i]);
    g += s;
    return g;
  }

  void initialize(T* params, T* state, Rng& rng) const override {
    for (const auto& l : main_) l->initialize(params, state, rng);
    for (const auto& l : shortcut_) l->initialize(params, state, rng);
  }

  std::string name() const override { return "residual_block"; }
  const std::vector<LayerPtr<T>>& main() const { return main_; }
  const std::vector<LayerPtr<T>>& shortcut() const { return shortcut_; }

 private:
  std::vector<LayerPtr<T>> main_, shortcut_;
};

}  // namespace tsba::nn
