// Copyright 2026 The DeepJSCC Lab Authors. All Rights Reserved.
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

#ifndef DJSCC_NN_HPP_
#define DJSCC_NN_HPP_

// Minimal dense layers with hand-written backward passes. Feature maps are
// stored as (channels, batch*height*width) matrices; column index is
// b*H*W + y*W + x.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "djscc/common.hpp"

namespace djscc {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Ordered, named parameter tensors.
template <typename Scalar>
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Matrix<Scalar> value;
  };

  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    entries_.push_back({std::move(name), Matrix<Scalar>::Zero(rows, cols)});
    return entries_.size() - 1;
  }

  std::size_t size() const { return entries_.size(); }
  Matrix<Scalar>& operator[](std::size_t i) { return entries_[i].value; }
  const Matrix<Scalar>& operator[](std::size_t i) const { return entries_[i].value; }
  const std::string& name(std::size_t i) const { return entries_[i].name; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name == name) return i;
    }
    throw Error(ErrorCode::kBadParams, "no parameter named " + name);
  }

  Eigen::Index total_size() const {
    Eigen::Index n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  void set_zero() {
    for (auto& e : entries_) e.value.setZero();
  }

  bool all_finite() const {
    for (const auto& e : entries_) {
      if (!e.value.allFinite()) return false;
    }
    return true;
  }

  template <typename To>
  ParameterSet<To> cast() const {
    ParameterSet<To> out;
    for (const auto& e : entries_) {
      out.add(e.name, e.value.rows(), e.value.cols());
      out[out.size() - 1] = e.value.template cast<To>();
    }
    return out;
  }

  ParameterSet zeros_like() const {
    ParameterSet out;
    for (const auto& e : entries_) out.add(e.name, e.value.rows(), e.value.cols());
    return out;
  }

  Vector<Scalar> flatten() const {
    Vector<Scalar> flat(total_size());
    Eigen::Index offset = 0;
    for (const auto& e : entries_) {
      flat.segment(offset, e.value.size()) = e.value.reshaped();
      offset += e.value.size();
    }
    return flat;
  }

  void unflatten(const Vector<Scalar>& flat) {
    Eigen::Index offset = 0;
    for (auto& e : entries_) {
      e.value.reshaped() = flat.segment(offset, e.value.size());
      offset += e.value.size();
    }
  }

 private:
  std::vector<Entry> entries_;
};

template <typename Scalar>
struct FeatureMap {
  Matrix<Scalar> data;  // (channels, batch*height*width)
  int batch = 0;
  int height = 0;
  int width = 0;

  int channels() const { return static_cast<int>(data.rows()); }
  int pixels() const { return height * width; }
};

struct ConvGeometry {
  int channels;  // channels of the (larger) spatial side
  int height, width;
  int out_height, out_width;
  int kernel, stride, pad;
};

// cols row index = (ky*kernel + kx)*channels + c.
template <typename Scalar>
void im2col(const Matrix<Scalar>& x, int batch, const ConvGeometry& g, Matrix<Scalar>& cols) {
  const int kk = g.kernel * g.kernel;
  cols.setZero(static_cast<Eigen::Index>(kk) * g.channels,
               static_cast<Eigen::Index>(batch) * g.out_height * g.out_width);
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < g.out_height; ++oy) {
      for (int ox = 0; ox < g.out_width; ++ox) {
        const Eigen::Index col = (static_cast<Eigen::Index>(b) * g.out_height + oy) * g.out_width + ox;
        for (int ky = 0; ky < g.kernel; ++ky) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.height) continue;
          for (int kx = 0; kx < g.kernel; ++kx) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix < 0 || ix >= g.width) continue;
            const Eigen::Index src = (static_cast<Eigen::Index>(b) * g.height + iy) * g.width + ix;
            cols.col(col).segment(static_cast<Eigen::Index>(ky * g.kernel + kx) * g.channels, g.channels) =
                x.col(src);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im(const Matrix<Scalar>& cols, int batch, const ConvGeometry& g, Matrix<Scalar>& x) {
  x.setZero(g.channels, static_cast<Eigen::Index>(batch) * g.height * g.width);
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < g.out_height; ++oy) {
      for (int ox = 0; ox < g.out_width; ++ox) {
        const Eigen::Index col = (static_cast<Eigen::Index>(b) * g.out_height + oy) * g.out_width + ox;
        for (int ky = 0; ky < g.kernel; ++ky) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.height) continue;
          for (int kx = 0; kx < g.kernel; ++kx) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix < 0 || ix >= g.width) continue;
            const Eigen::Index dst = (static_cast<Eigen::Index>(b) * g.height + iy) * g.width + ix;
            x.col(dst) +=
                cols.col(col).segment(static_cast<Eigen::Index>(ky * g.kernel + kx) * g.channels, g.channels);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void he_normal(Matrix<Scalar>& w, int fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(normal(rng));
}

// Stride-s convolution with zero padding; weight (out, k*k*in).
template <typename Scalar>
class Conv2d {
 public:
  Conv2d(ParameterSet<Scalar>& params, const std::string& name, int in_channels, int out_channels, int kernel,
         int stride)
      : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), pad_((kernel - 1) / 2) {
    weight_ = params.add(name + ".weight", out_channels, static_cast<Eigen::Index>(kernel) * kernel * in_channels);
    bias_ = params.add(name + ".bias", out_channels, 1);
  }

  void init(ParameterSet<Scalar>& params, std::mt19937_64& rng) const {
    he_normal(params[weight_], in_ * kernel_ * kernel_, rng);
  }

  int out_size(int in) const { return (in + 2 * pad_ - kernel_) / stride_ + 1; }

  FeatureMap<Scalar> forward(const ParameterSet<Scalar>& params, const FeatureMap<Scalar>& x) {
    geom_ = {in_, x.height, x.width, out_size(x.height), out_size(x.width), kernel_, stride_, pad_};
    batch_ = x.batch;
    im2col(x.data, x.batch, geom_, cols_);
    FeatureMap<Scalar> y{params[weight_] * cols_, x.batch, geom_.out_height, geom_.out_width};
    y.data.colwise() += params[bias_].col(0);
    return y;
  }

  FeatureMap<Scalar> backward(const ParameterSet<Scalar>& params, ParameterSet<Scalar>& grads,
                              const FeatureMap<Scalar>& dy) {
    grads[weight_].noalias() += dy.data * cols_.transpose();
    grads[bias_] += dy.data.rowwise().sum();
    Matrix<Scalar> dcols = params[weight_].transpose() * dy.data;
    FeatureMap<Scalar> dx{Matrix<Scalar>(), batch_, geom_.height, geom_.width};
    col2im(dcols, batch_, geom_, dx.data);
    return dx;
  }

 private:
  int in_, out_, kernel_, stride_, pad_;
  std::size_t weight_ = 0, bias_ = 0;
  ConvGeometry geom_{};
  int batch_ = 0;
  Matrix<Scalar> cols_;
};

// Transposed convolution: the adjoint of Conv2d's input map, plus bias.
// Stride 2 uses output_padding 1 so that the spatial size doubles exactly.
template <typename Scalar>
class ConvTranspose2d {
 public:
  ConvTranspose2d(ParameterSet<Scalar>& params, const std::string& name, int in_channels, int out_channels,
                  int kernel, int stride)
      : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), pad_((kernel - 1) / 2) {
    weight_ = params.add(name + ".weight", in_channels, static_cast<Eigen::Index>(kernel) * kernel * out_channels);
    bias_ = params.add(name + ".bias", out_channels, 1);
  }

  void init(ParameterSet<Scalar>& params, std::mt19937_64& rng) const {
    he_normal(params[weight_], in_ * kernel_ * kernel_ / (stride_ * stride_), rng);
  }

  int out_size(int in) const { return stride_ == 1 ? in : in * stride_; }

  FeatureMap<Scalar> forward(const ParameterSet<Scalar>& params, const FeatureMap<Scalar>& x) {
    geom_ = {out_, out_size(x.height), out_size(x.width), x.height, x.width, kernel_, stride_, pad_};
    batch_ = x.batch;
    input_ = x.data;
    Matrix<Scalar> cols = params[weight_].transpose() * x.data;
    FeatureMap<Scalar> y{Matrix<Scalar>(), x.batch, geom_.height, geom_.width};
    col2im(cols, x.batch, geom_, y.data);
    y.data.colwise() += params[bias_].col(0);
    return y;
  }

  FeatureMap<Scalar> backward(const ParameterSet<Scalar>& params, ParameterSet<Scalar>& grads,
                              const FeatureMap<Scalar>& dy) {
    Matrix<Scalar> dcols;
    im2col(dy.data, batch_, geom_, dcols);
    grads[weight_].noalias() += input_ * dcols.transpose();
    grads[bias_] += dy.data.rowwise().sum();
    return {params[weight_] * dcols, batch_, geom_.out_height, geom_.out_width};
  }

 private:
  int in_, out_, kernel_, stride_, pad_;
  std::size_t weight_ = 0, bias_ = 0;
  ConvGeometry geom_{};
  int batch_ = 0;
  Matrix<Scalar> input_;
};

// Parametric rectifier with one slope per channel (row).
template <typename Scalar>
class PRelu {
 public:
  PRelu(ParameterSet<Scalar>& params, const std::string& name, int channels) {
    slope_ = params.add(name + ".slope", channels, 1);
  }

  void init(ParameterSet<Scalar>& params) const { params[slope_].setConstant(Scalar(0.25)); }

  Matrix<Scalar> forward(const ParameterSet<Scalar>& params, const Matrix<Scalar>& x) {
    input_ = x;
    const auto& a = params[slope_];
    Matrix<Scalar> y = x;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      for (Eigen::Index c = 0; c < y.rows(); ++c) {
        if (y(c, j) < Scalar(0)) y(c, j) *= a(c, 0);
      }
    }
    return y;
  }

  Matrix<Scalar> backward(const ParameterSet<Scalar>& params, ParameterSet<Scalar>& grads, const Matrix<Scalar>& dy) {
    const auto& a = params[slope_];
    auto& da = grads[slope_];
    Matrix<Scalar> dx = dy;
    for (Eigen::Index j = 0; j < dx.cols(); ++j) {
      for (Eigen::Index c = 0; c < dx.rows(); ++c) {
        if (input_(c, j) < Scalar(0)) {
          da(c, 0) += dy(c, j) * input_(c, j);
          dx(c, j) *= a(c, 0);
        }
      }
    }
    return dx;
  }

 private:
  std::size_t slope_ = 0;
  Matrix<Scalar> input_;
};

// Attention-feature stage: context = [per-channel mean; snr], a two-layer
// factor-prediction network maps it to a logistic mask that rescales each
// channel of the incoming features.
template <typename Scalar>
class AttentionFeature {
 public:
  AttentionFeature(ParameterSet<Scalar>& params, const std::string& name, int channels)
      : channels_(channels), hidden_(params, name + ".hidden", channels) {
    w1_ = params.add(name + ".fc1.weight", channels, channels + 1);
    b1_ = params.add(name + ".fc1.bias", channels, 1);
    w2_ = params.add(name + ".fc2.weight", channels, channels);
    b2_ = params.add(name + ".fc2.bias", channels, 1);
  }

  void init(ParameterSet<Scalar>& params, std::mt19937_64& rng) const {
    he_normal(params[w1_], channels_ + 1, rng);
    he_normal(params[w2_], channels_, rng);
    hidden_.init(params);
  }

  std::size_t output_bias_index() const { return b2_; }

  // mask: (channels, batch); snr_normalized: one value per image.
  FeatureMap<Scalar> forward(const ParameterSet<Scalar>& params, const FeatureMap<Scalar>& x,
                             const Vector<Scalar>& snr_normalized) {
    const int hw = x.pixels();
    input_ = x;
    context_.resize(channels_ + 1, x.batch);
    for (int b = 0; b < x.batch; ++b) {
      context_.col(b).head(channels_) = x.data.middleCols(static_cast<Eigen::Index>(b) * hw, hw).rowwise().mean();
      context_(channels_, b) = snr_normalized[b];
    }
    Matrix<Scalar> h = params[w1_] * context_;
    h.colwise() += params[b1_].col(0);
    hidden_out_ = hidden_.forward(params, h);
    Matrix<Scalar> s = params[w2_] * hidden_out_;
    s.colwise() += params[b2_].col(0);
    mask_ = (Scalar(1) / (Scalar(1) + (-s.array()).exp())).matrix();
    FeatureMap<Scalar> y = x;
    for (int b = 0; b < x.batch; ++b) {
      y.data.middleCols(static_cast<Eigen::Index>(b) * hw, hw).array().colwise() *= mask_.col(b).array();
    }
    return y;
  }

  FeatureMap<Scalar> backward(const ParameterSet<Scalar>& params, ParameterSet<Scalar>& grads,
                              const FeatureMap<Scalar>& dy) {
    const int hw = input_.pixels();
    FeatureMap<Scalar> dx = dy;
    Matrix<Scalar> dmask(channels_, input_.batch);
    for (int b = 0; b < input_.batch; ++b) {
      const Eigen::Index off = static_cast<Eigen::Index>(b) * hw;
      dmask.col(b) = (dy.data.middleCols(off, hw).array() * input_.data.middleCols(off, hw).array())
                         .rowwise()
                         .sum()
                         .matrix();
      dx.data.middleCols(off, hw).array().colwise() *= mask_.col(b).array();
    }
    Matrix<Scalar> ds = (dmask.array() * mask_.array() * (Scalar(1) - mask_.array())).matrix();
    grads[w2_].noalias() += ds * hidden_out_.transpose();
    grads[b2_] += ds.rowwise().sum();
    Matrix<Scalar> dh = hidden_.backward(params, grads, params[w2_].transpose() * ds);
    grads[w1_].noalias() += dh * context_.transpose();
    grads[b1_] += dh.rowwise().sum();
    Matrix<Scalar> dctx = params[w1_].transpose() * dh;
    for (int b = 0; b < input_.batch; ++b) {
      dx.data.middleCols(static_cast<Eigen::Index>(b) * hw, hw).colwise() +=
          dctx.col(b).head(channels_) / static_cast<Scalar>(hw);
    }
    return dx;
  }

  const Matrix<Scalar>& last_mask() const { return mask_; }

 private:
  int channels_;
  PRelu<Scalar> hidden_;
  std::size_t w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0;
  FeatureMap<Scalar> input_;
  Matrix<Scalar> context_, hidden_out_, mask_;
};

}  // namespace djscc

#endif  // DJSCC_NN_HPP_
