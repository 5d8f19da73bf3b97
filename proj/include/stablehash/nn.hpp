#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "stablehash/rng.hpp"
#include "stablehash/types.hpp"

namespace stablehash::nn {

/// Activations flowing between layers: data is (channels*h*w) x batch,
/// row index = c*(h*w) + y*w + x.
template <typename S>
struct Tensor {
  MatrixX<S> data;
  int channels = 0;
  int height = 0;
  int width = 0;

  Eigen::Index batch() const { return data.cols(); }
  int features() const { return channels * height * width; }
};

/// Named view of one trainable matrix and its gradient accumulator.
/// Buffers (batch-norm running statistics) have grad == nullptr.
template <typename S>
struct ParamRef {
  MatrixX<S>* value = nullptr;
  MatrixX<S>* grad = nullptr;
  std::string name;
};

struct Mode {
  bool update_running = false;  // update batch-norm running statistics
};

/// Layers expose two paths: `infer` is const and cache-free, safe for
/// concurrent callers on a frozen net; `forward` is the training path and
/// caches whatever `backward` needs.
template <typename S>
class Layer {
public:
  virtual ~Layer() = default;
  virtual Tensor<S> infer(const Tensor<S>& in) const = 0;
  virtual Tensor<S> forward(const Tensor<S>& in, const Mode& mode) = 0;
  virtual Tensor<S> backward(const Tensor<S>& grad_out) = 0;
  virtual void collect_params(std::vector<ParamRef<S>>& out) {}
  virtual void collect_buffers(std::vector<ParamRef<S>>& out) {}
  virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Convolution, stride 1, square kernel, zero padding keeping spatial size.

template <typename S>
class Conv2d : public Layer<S> {
public:
  Conv2d(int in_ch, int out_ch, int kernel, Rng& rng)
      : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), pad_((kernel - 1) / 2) {
    const int fan_in = in_ch * kernel * kernel;
    const S std = std::sqrt(S(2) / S(fan_in));
    weight_.resize(out_ch, fan_in);
    for (Eigen::Index i = 0; i < weight_.rows(); ++i) {
      for (Eigen::Index j = 0; j < weight_.cols(); ++j) {
        weight_(i, j) = static_cast<S>(rng.normal()) * std;
      }
    }
    bias_ = MatrixX<S>::Zero(out_ch, 1);
    grad_weight_ = MatrixX<S>::Zero(weight_.rows(), weight_.cols());
    grad_bias_ = MatrixX<S>::Zero(out_ch, 1);
  }

  Tensor<S> infer(const Tensor<S>& in) const override {
    MatrixX<S> cols;
    im2col(in, cols);
    return apply(in, cols);
  }

  Tensor<S> forward(const Tensor<S>& in, const Mode&) override {
    im2col(in, cols_);
    in_shape_ = {in.channels, in.height, in.width};
    return apply(in, cols_);
  }

  Tensor<S> backward(const Tensor<S>& grad_out) override {
    const int h = grad_out.height, w = grad_out.width, hw = h * w;
    const Eigen::Index b = grad_out.batch();
    MatrixX<S> dy(out_ch_, b * hw);
    for (Eigen::Index s = 0; s < b; ++s) {
      for (int c = 0; c < out_ch_; ++c) {
        dy.row(c).segment(s * hw, hw) =
            grad_out.data.col(s).segment(static_cast<Eigen::Index>(c) * hw, hw).transpose();
      }
    }
    grad_bias_.col(0) += dy.rowwise().sum();
    grad_weight_ += dy * cols_.transpose();
    const MatrixX<S> dcols = weight_.transpose() * dy;
    Tensor<S> din;
    din.channels = in_shape_.ch;
    din.height = in_shape_.h;
    din.width = in_shape_.w;
    din.data = MatrixX<S>::Zero(static_cast<Eigen::Index>(in_shape_.ch) * hw, b);
    col2im(dcols, din);
    return din;
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({&weight_, &grad_weight_, this->name() + ".weight"});
    out.push_back({&bias_, &grad_bias_, this->name() + ".bias"});
  }

  std::string name() const override {
    return "conv" + std::to_string(in_ch_) + "_" + std::to_string(out_ch_);
  }

private:
  struct Shape { int ch = 0, h = 0, w = 0; };

  Tensor<S> apply(const Tensor<S>& in, const MatrixX<S>& cols) const {
    const int h = in.height, w = in.width, hw = h * w;
    const Eigen::Index b = in.batch();
    MatrixX<S> y = weight_ * cols;  // out_ch x (b*hw)
    y.colwise() += bias_.col(0);
    Tensor<S> out;
    out.channels = out_ch_;
    out.height = h;
    out.width = w;
    out.data.resize(static_cast<Eigen::Index>(out_ch_) * hw, b);
    for (Eigen::Index s = 0; s < b; ++s) {
      for (int c = 0; c < out_ch_; ++c) {
        out.data.col(s).segment(static_cast<Eigen::Index>(c) * hw, hw) =
            y.row(c).segment(s * hw, hw).transpose();
      }
    }
    return out;
  }

  void im2col(const Tensor<S>& in, MatrixX<S>& cols) const {
    const int h = in.height, w = in.width, hw = h * w;
    const Eigen::Index b = in.batch();
    cols.resize(static_cast<Eigen::Index>(in_ch_) * k_ * k_, b * hw);
    cols.setZero();
    for (Eigen::Index s = 0; s < b; ++s) {
      const auto col = in.data.col(s);
      for (int ci = 0; ci < in_ch_; ++ci) {
        for (int ky = 0; ky < k_; ++ky) {
          for (int kx = 0; kx < k_; ++kx) {
            const Eigen::Index row =
                (static_cast<Eigen::Index>(ci) * k_ + ky) * k_ + kx;
            for (int y = 0; y < h; ++y) {
              const int iy = y + ky - pad_;
              if (iy < 0 || iy >= h) continue;
              for (int x = 0; x < w; ++x) {
                const int ix = x + kx - pad_;
                if (ix < 0 || ix >= w) continue;
                cols(row, s * hw + y * w + x) = col[ci * hw + iy * w + ix];
              }
            }
          }
        }
      }
    }
  }

  void col2im(const MatrixX<S>& dcols, Tensor<S>& din) const {
    const int h = din.height, w = din.width, hw = h * w;
    const Eigen::Index b = din.batch();
    for (Eigen::Index s = 0; s < b; ++s) {
      auto col = din.data.col(s);
      for (int ci = 0; ci < in_ch_; ++ci) {
        for (int ky = 0; ky < k_; ++ky) {
          for (int kx = 0; kx < k_; ++kx) {
            const Eigen::Index row =
                (static_cast<Eigen::Index>(ci) * k_ + ky) * k_ + kx;
            for (int y = 0; y < h; ++y) {
              const int iy = y + ky - pad_;
              if (iy < 0 || iy >= h) continue;
              for (int x = 0; x < w; ++x) {
                const int ix = x + kx - pad_;
                if (ix < 0 || ix >= w) continue;
                col[ci * hw + iy * w + ix] += dcols(row, s * hw + y * w + x);
              }
            }
          }
        }
      }
    }
  }

  int in_ch_, out_ch_, k_, pad_;
  MatrixX<S> weight_, bias_, grad_weight_, grad_bias_;
  MatrixX<S> cols_;
  Shape in_shape_;
};

// ---------------------------------------------------------------------------
// Batch normalization over (batch x spatial) per channel. The training path
// normalizes with batch statistics; `infer` uses running statistics.

template <typename S>
class BatchNorm : public Layer<S> {
public:
  BatchNorm(int channels, S momentum, S eps, std::string tag)
      : channels_(channels), momentum_(momentum), eps_(eps), tag_(std::move(tag)) {
    gamma_ = MatrixX<S>::Ones(channels, 1);
    beta_ = MatrixX<S>::Zero(channels, 1);
    grad_gamma_ = MatrixX<S>::Zero(channels, 1);
    grad_beta_ = MatrixX<S>::Zero(channels, 1);
    running_mean_ = MatrixX<S>::Zero(channels, 1);
    running_var_ = MatrixX<S>::Ones(channels, 1);
  }

  Tensor<S> infer(const Tensor<S>& in) const override {
    const int hw = in.height * in.width;
    const Eigen::Index b = in.batch();
    Tensor<S> out = in;
    for (int c = 0; c < channels_; ++c) {
      const S scale = gamma_(c, 0) / std::sqrt(running_var_(c, 0) + eps_);
      const S shift = beta_(c, 0) - scale * running_mean_(c, 0);
      out.data.middleRows(static_cast<Eigen::Index>(c) * hw, hw) =
          in.data.middleRows(static_cast<Eigen::Index>(c) * hw, hw) * scale +
          MatrixX<S>::Constant(hw, b, shift);
    }
    return out;
  }

  Tensor<S> forward(const Tensor<S>& in, const Mode& mode) override {
    const int hw = in.height * in.width;
    const Eigen::Index b = in.batch();
    const S n = static_cast<S>(b) * static_cast<S>(hw);
    Tensor<S> out = in;
    mean_.assign(channels_, S(0));
    invstd_.assign(channels_, S(0));
    xhat_ = in.data;
    for (int c = 0; c < channels_; ++c) {
      auto block = in.data.middleRows(static_cast<Eigen::Index>(c) * hw, hw);
      const S mu = block.sum() / n;
      const S var = (block.array() - mu).square().sum() / n;
      mean_[c] = mu;
      invstd_[c] = S(1) / std::sqrt(var + eps_);
      xhat_.middleRows(static_cast<Eigen::Index>(c) * hw, hw) =
          ((block.array() - mu) * invstd_[c]).matrix();
      out.data.middleRows(static_cast<Eigen::Index>(c) * hw, hw) =
          xhat_.middleRows(static_cast<Eigen::Index>(c) * hw, hw) * gamma_(c, 0) +
          MatrixX<S>::Constant(hw, b, beta_(c, 0));
      if (mode.update_running) {
        running_mean_(c, 0) = momentum_ * running_mean_(c, 0) + (S(1) - momentum_) * mu;
        running_var_(c, 0) = momentum_ * running_var_(c, 0) + (S(1) - momentum_) * var;
      }
    }
    group_ = hw;
    return out;
  }

  Tensor<S> backward(const Tensor<S>& grad_out) override {
    const int hw = group_;
    const Eigen::Index b = grad_out.batch();
    const S n = static_cast<S>(b) * static_cast<S>(hw);
    Tensor<S> din = grad_out;
    for (int c = 0; c < channels_; ++c) {
      auto dy = grad_out.data.middleRows(static_cast<Eigen::Index>(c) * hw, hw);
      auto xh = xhat_.middleRows(static_cast<Eigen::Index>(c) * hw, hw);
      const S sum_dy = dy.sum();
      const S sum_dy_xhat = (dy.array() * xh.array()).sum();
      grad_beta_(c, 0) += sum_dy;
      grad_gamma_(c, 0) += sum_dy_xhat;
      din.data.middleRows(static_cast<Eigen::Index>(c) * hw, hw) =
          ((dy.array() * n - sum_dy - xh.array() * sum_dy_xhat) *
           (gamma_(c, 0) * invstd_[c] / n))
              .matrix();
    }
    return din;
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({&gamma_, &grad_gamma_, name() + ".gamma"});
    out.push_back({&beta_, &grad_beta_, name() + ".beta"});
  }

  void collect_buffers(std::vector<ParamRef<S>>& out) override {
    out.push_back({&running_mean_, nullptr, name() + ".running_mean"});
    out.push_back({&running_var_, nullptr, name() + ".running_var"});
  }

  std::string name() const override { return "bn" + tag_; }

private:
  int channels_;
  S momentum_, eps_;
  std::string tag_;
  MatrixX<S> gamma_, beta_, grad_gamma_, grad_beta_;
  MatrixX<S> running_mean_, running_var_;
  MatrixX<S> xhat_;
  std::vector<S> mean_, invstd_;
  int group_ = 1;
};

// ---------------------------------------------------------------------------

template <typename S>
class Relu : public Layer<S> {
public:
  Tensor<S> infer(const Tensor<S>& in) const override {
    Tensor<S> out = in;
    out.data = in.data.cwiseMax(S(0));
    return out;
  }

  Tensor<S> forward(const Tensor<S>& in, const Mode&) override {
    mask_ = (in.data.array() > S(0)).template cast<S>();
    return infer(in);
  }

  Tensor<S> backward(const Tensor<S>& grad_out) override {
    Tensor<S> din = grad_out;
    din.data = grad_out.data.cwiseProduct(mask_);
    return din;
  }

  std::string name() const override { return "relu"; }

private:
  MatrixX<S> mask_;
};

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
template <typename S>
class MaxPool2 : public Layer<S> {
public:
  Tensor<S> infer(const Tensor<S>& in) const override {
    return pool(in, nullptr);
  }

  Tensor<S> forward(const Tensor<S>& in, const Mode&) override {
    in_shape_ = {in.channels, in.height, in.width};
    return pool(in, &argmax_);
  }

  Tensor<S> backward(const Tensor<S>& grad_out) override {
    Tensor<S> din;
    din.channels = in_shape_.ch;
    din.height = in_shape_.h;
    din.width = in_shape_.w;
    din.data = MatrixX<S>::Zero(
        static_cast<Eigen::Index>(in_shape_.ch) * in_shape_.h * in_shape_.w,
        grad_out.batch());
    for (Eigen::Index s = 0; s < grad_out.batch(); ++s) {
      for (Eigen::Index i = 0; i < grad_out.data.rows(); ++i) {
        din.data(argmax_(i, s), s) += grad_out.data(i, s);
      }
    }
    return din;
  }

  std::string name() const override { return "pool2"; }

private:
  struct Shape { int ch = 0, h = 0, w = 0; };
  using IndexMatrix = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic>;

  Tensor<S> pool(const Tensor<S>& in, IndexMatrix* argmax) const {
    const int h2 = in.height / 2, w2 = in.width / 2;
    const Eigen::Index b = in.batch();
    Tensor<S> out;
    out.channels = in.channels;
    out.height = h2;
    out.width = w2;
    out.data.resize(static_cast<Eigen::Index>(in.channels) * h2 * w2, b);
    if (argmax) argmax->resize(out.data.rows(), b);
    const int hw_in = in.height * in.width;
    for (Eigen::Index s = 0; s < b; ++s) {
      for (int c = 0; c < in.channels; ++c) {
        const Eigen::Index base = static_cast<Eigen::Index>(c) * hw_in;
        for (int y = 0; y < h2; ++y) {
          for (int x = 0; x < w2; ++x) {
            S best = -std::numeric_limits<S>::infinity();
            Eigen::Index best_idx = 0;
            for (int py = 0; py < 2; ++py) {
              for (int px = 0; px < 2; ++px) {
                const Eigen::Index idx =
                    base + (2 * y + py) * in.width + (2 * x + px);
                const S v = in.data(idx, s);
                if (v > best) {
                  best = v;
                  best_idx = idx;
                }
              }
            }
            const Eigen::Index out_idx =
                (static_cast<Eigen::Index>(c) * h2 + y) * w2 + x;
            out.data(out_idx, s) = best;
            if (argmax) (*argmax)(out_idx, s) = best_idx;
          }
        }
      }
    }
    return out;
  }

  Shape in_shape_;
  IndexMatrix argmax_;
};

/// Collapses (c,h,w) into a feature vector; the data layout is unchanged.
template <typename S>
class Flatten : public Layer<S> {
public:
  Tensor<S> infer(const Tensor<S>& in) const override {
    Tensor<S> out = in;
    out.channels = in.features();
    out.height = 1;
    out.width = 1;
    return out;
  }

  Tensor<S> forward(const Tensor<S>& in, const Mode&) override {
    in_shape_ = {in.channels, in.height, in.width};
    return infer(in);
  }

  Tensor<S> backward(const Tensor<S>& grad_out) override {
    Tensor<S> din = grad_out;
    din.channels = in_shape_.ch;
    din.height = in_shape_.h;
    din.width = in_shape_.w;
    return din;
  }

  std::string name() const override { return "flatten"; }

private:
  struct Shape { int ch = 0, h = 0, w = 0; };
  Shape in_shape_;
};

template <typename S>
class Dense : public Layer<S> {
public:
  Dense(int in_features, int out_features, Rng& rng, std::string tag)
      : tag_(std::move(tag)) {
    const S std = std::sqrt(S(2) / S(in_features));
    weight_.resize(out_features, in_features);
    for (Eigen::Index i = 0; i < weight_.rows(); ++i) {
      for (Eigen::Index j = 0; j < weight_.cols(); ++j) {
        weight_(i, j) = static_cast<S>(rng.normal()) * std;
      }
    }
    bias_ = MatrixX<S>::Zero(out_features, 1);
    grad_weight_ = MatrixX<S>::Zero(weight_.rows(), weight_.cols());
    grad_bias_ = MatrixX<S>::Zero(out_features, 1);
  }

  Tensor<S> infer(const Tensor<S>& in) const override {
    Tensor<S> out;
    out.channels = static_cast<int>(weight_.rows());
    out.height = 1;
    out.width = 1;
    out.data = weight_ * in.data;
    out.data.colwise() += bias_.col(0);
    return out;
  }

  Tensor<S> forward(const Tensor<S>& in, const Mode&) override {
    input_ = in.data;
    return infer(in);
  }

  Tensor<S> backward(const Tensor<S>& grad_out) override {
    grad_weight_ += grad_out.data * input_.transpose();
    grad_bias_.col(0) += grad_out.data.rowwise().sum();
    Tensor<S> din;
    din.channels = static_cast<int>(weight_.cols());
    din.height = 1;
    din.width = 1;
    din.data = weight_.transpose() * grad_out.data;
    return din;
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({&weight_, &grad_weight_, name() + ".weight"});
    out.push_back({&bias_, &grad_bias_, name() + ".bias"});
  }

  std::string name() const override { return "fc" + tag_; }

  MatrixX<S>& weight() { return weight_; }
  MatrixX<S>& bias() { return bias_; }

private:
  std::string tag_;
  MatrixX<S> weight_, bias_, grad_weight_, grad_bias_, input_;
};

// ---------------------------------------------------------------------------

template <typename S>
class Net {
public:
  void add(std::unique_ptr<Layer<S>> layer) { layers_.push_back(std::move(layer)); }

  /// Const, cache-free pass; safe for concurrent callers.
  Tensor<S> infer(Tensor<S> x) const {
    for (const auto& l : layers_) x = l->infer(x);
    return x;
  }

  Tensor<S> forward(Tensor<S> x, const Mode& mode) {
    for (auto& l : layers_) x = l->forward(x, mode);
    return x;
  }

  void backward(Tensor<S> grad) {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      grad = (*it)->backward(grad);
    }
  }

  std::vector<ParamRef<S>> params() {
    std::vector<ParamRef<S>> out;
    for (auto& l : layers_) l->collect_params(out);
    return out;
  }

  std::vector<ParamRef<S>> buffers() {
    std::vector<ParamRef<S>> out;
    for (auto& l : layers_) l->collect_buffers(out);
    return out;
  }

  void zero_grads() {
    for (auto& p : params()) p.grad->setZero();
  }

  std::vector<std::unique_ptr<Layer<S>>>& layers() { return layers_; }
  const std::vector<std::unique_ptr<Layer<S>>>& layers() const { return layers_; }

private:
  std::vector<std::unique_ptr<Layer<S>>> layers_;
};

}  // namespace stablehash::nn
