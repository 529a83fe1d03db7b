/*
 * Copyright 2026 the kdmsi authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdmsi/rng.hpp"
#include "kdmsi/tensor.hpp"

namespace kdmsi {

/// Named view onto one parameter tensor and its gradient accumulator.
template <typename Scalar>
struct ParamRef {
  std::string name;
  Scalar* value;
  Scalar* grad;
  Eigen::Index size;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Map<VecX<Scalar>> value_vec() const { return {value, size}; }
  Eigen::Map<VecX<Scalar>> grad_vec() const { return {grad, size}; }
};

template <typename Scalar>
using ParamList = std::vector<ParamRef<Scalar>>;

template <typename Scalar>
ParamRef<Scalar> make_param(std::string name, MatX<Scalar>& v, MatX<Scalar>& g) {
  return {std::move(name), v.data(), g.data(), v.size(), v.rows(), v.cols()};
}

template <typename Scalar>
ParamRef<Scalar> make_param(std::string name, VecX<Scalar>& v, VecX<Scalar>& g) {
  return {std::move(name), v.data(), g.data(), v.size(), v.size(), 1};
}

/// k×k convolution via im2col + GEMM. Weight layout: out_ch × (in_ch·k·k),
/// patch element q = ci·k·k + ky·k + kx.
template <typename Scalar>
struct Conv2d {
  int in_ch = 0, out_ch = 0, k = 1, stride = 1, pad = 0, dilation = 1;
  MatX<Scalar> weight;  // out_ch × in_ch·k·k
  VecX<Scalar> bias;
  MatX<Scalar> grad_weight;
  VecX<Scalar> grad_bias;

  struct Cache {
    MatX<Scalar> cols;  // (in_ch·k·k) × out_pixels
    int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  };

  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int ksize, int stride_ = 1, int pad_ = 0,
         int dilation_ = 1)
      : in_ch(in_channels),
        out_ch(out_channels),
        k(ksize),
        stride(stride_),
        pad(pad_),
        dilation(dilation_),
        weight(MatX<Scalar>::Zero(out_channels, static_cast<Eigen::Index>(in_channels) * ksize * ksize)),
        bias(VecX<Scalar>::Zero(out_channels)),
        grad_weight(MatX<Scalar>::Zero(weight.rows(), weight.cols())),
        grad_bias(VecX<Scalar>::Zero(out_channels)) {}

  /// He-normal weight init, zero bias.
  void init(Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_ch * k * k));
    for (Eigen::Index i = 0; i < weight.size(); ++i)
      weight.data()[i] = static_cast<Scalar>(rng.normal(0.0, stddev));
    bias.setZero();
  }

  int out_dim(int n) const { return (n + 2 * pad - dilation * (k - 1) - 1) / stride + 1; }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& c) const {
    if (x.channels() != in_ch)
      throw std::invalid_argument("Conv2d: expected " + std::to_string(in_ch) + " channels, got " +
                                  std::to_string(x.channels()));
    c.in_h = x.h;
    c.in_w = x.w;
    c.out_h = out_dim(x.h);
    c.out_w = out_dim(x.w);
    if (c.out_h <= 0 || c.out_w <= 0) throw std::invalid_argument("Conv2d: input too small");
    im2col(x, c);
    Tensor<Scalar> y(out_ch, c.out_h, c.out_w);
    y.data.noalias() = weight * c.cols;
    y.data.colwise() += bias;
    return y;
  }

  /// Accumulates weight/bias gradients and returns the input gradient.
  Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& c) {
    grad_weight.noalias() += dy.data * c.cols.transpose();
    grad_bias.noalias() += dy.data.rowwise().sum();
    MatX<Scalar> dcols(weight.cols(), c.cols.cols());
    dcols.noalias() = weight.transpose() * dy.data;
    return col2im(dcols, c);
  }

  void zero_grad() {
    grad_weight.setZero();
    grad_bias.setZero();
  }

  void collect_params(const std::string& prefix, ParamList<Scalar>& out) {
    out.push_back(make_param(prefix + ".weight", weight, grad_weight));
    out.push_back(make_param(prefix + ".bias", bias, grad_bias));
  }

 private:
  void im2col(const Tensor<Scalar>& x, Cache& c) const {
    const Eigen::Index patch = static_cast<Eigen::Index>(in_ch) * k * k;
    c.cols.resize(patch, static_cast<Eigen::Index>(c.out_h) * c.out_w);
    c.cols.setZero();
    for (int oy = 0; oy < c.out_h; ++oy) {
      for (int ox = 0; ox < c.out_w; ++ox) {
        const Eigen::Index p = static_cast<Eigen::Index>(oy) * c.out_w + ox;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride - pad + ky * dilation;
          if (iy < 0 || iy >= c.in_h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride - pad + kx * dilation;
            if (ix < 0 || ix >= c.in_w) continue;
            for (int ci = 0; ci < in_ch; ++ci)
              c.cols(static_cast<Eigen::Index>(ci) * k * k + ky * k + kx, p) =
                  x.data(ci, static_cast<Eigen::Index>(iy) * c.in_w + ix);
          }
        }
      }
    }
  }

  Tensor<Scalar> col2im(const MatX<Scalar>& dcols, const Cache& c) const {
    Tensor<Scalar> dx(in_ch, c.in_h, c.in_w);
    for (int oy = 0; oy < c.out_h; ++oy) {
      for (int ox = 0; ox < c.out_w; ++ox) {
        const Eigen::Index p = static_cast<Eigen::Index>(oy) * c.out_w + ox;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride - pad + ky * dilation;
          if (iy < 0 || iy >= c.in_h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride - pad + kx * dilation;
            if (ix < 0 || ix >= c.in_w) continue;
            for (int ci = 0; ci < in_ch; ++ci)
              dx.data(ci, static_cast<Eigen::Index>(iy) * c.in_w + ix) +=
                  dcols(static_cast<Eigen::Index>(ci) * k * k + ky * k + kx, p);
          }
        }
      }
    }
    return dx;
  }
};

/// Per-channel, per-sample normalization over spatial positions with learned
/// scale and shift (instance-norm style; no cross-sample statistics, so
/// training and inference behave identically and runs stay deterministic).
template <typename Scalar>
struct ChannelNorm {
  static constexpr Scalar kEps = static_cast<Scalar>(1e-5);
  int ch = 0;
  VecX<Scalar> gamma, beta;
  VecX<Scalar> grad_gamma, grad_beta;

  struct Cache {
    MatX<Scalar> xhat;
    VecX<Scalar> inv_std;
  };

  ChannelNorm() = default;
  explicit ChannelNorm(int channels)
      : ch(channels),
        gamma(VecX<Scalar>::Ones(channels)),
        beta(VecX<Scalar>::Zero(channels)),
        grad_gamma(VecX<Scalar>::Zero(channels)),
        grad_beta(VecX<Scalar>::Zero(channels)) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& c) const {
    const auto n = static_cast<Scalar>(x.pixels());
    Tensor<Scalar> y(ch, x.h, x.w);
    c.xhat.resize(x.data.rows(), x.data.cols());
    c.inv_std.resize(ch);
    for (int i = 0; i < ch; ++i) {
      const Scalar mu = x.data.row(i).mean();
      const Scalar var = (x.data.row(i).array() - mu).square().sum() / n;
      const Scalar inv = Scalar(1) / std::sqrt(var + kEps);
      c.inv_std(i) = inv;
      c.xhat.row(i) = (x.data.row(i).array() - mu) * inv;
      y.data.row(i) = gamma(i) * c.xhat.row(i).array() + beta(i);
    }
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& c) {
    const auto n = static_cast<Scalar>(dy.pixels());
    Tensor<Scalar> dx(ch, dy.h, dy.w);
    for (int i = 0; i < ch; ++i) {
      grad_gamma(i) += (dy.data.row(i).array() * c.xhat.row(i).array()).sum();
      grad_beta(i) += dy.data.row(i).sum();
      const auto dxhat = (dy.data.row(i).array() * gamma(i)).eval();
      const Scalar sum_d = dxhat.sum();
      const Scalar sum_dx = (dxhat * c.xhat.row(i).array()).sum();
      dx.data.row(i) =
          (c.inv_std(i) / n) * (n * dxhat - sum_d - c.xhat.row(i).array() * sum_dx);
    }
    return dx;
  }

  void zero_grad() {
    grad_gamma.setZero();
    grad_beta.setZero();
  }

  void collect_params(const std::string& prefix, ParamList<Scalar>& out) {
    out.push_back(make_param(prefix + ".gamma", gamma, grad_gamma));
    out.push_back(make_param(prefix + ".beta", beta, grad_beta));
  }
};

template <typename Scalar>
struct Relu {
  struct Cache {
    MatX<Scalar> out;
  };

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& c) const {
    Tensor<Scalar> y = x;
    y.data = y.data.cwiseMax(Scalar(0));
    c.out = y.data;
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& c) const {
    Tensor<Scalar> dx = dy;
    dx.data = (c.out.array() > Scalar(0)).template cast<Scalar>() * dy.data.array();
    return dx;
  }
};

/// 2×2 max pooling with stride 2; gradient routes to the first maximum.
template <typename Scalar>
struct MaxPool2 {
  struct Cache {
    std::vector<Eigen::Index> argmax;  // per (channel-major) output element
    int in_h = 0, in_w = 0, out_h = 0, out_w = 0, ch = 0;
  };

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& c) const {
    if (x.h % 2 != 0 || x.w % 2 != 0) throw std::invalid_argument("MaxPool2: odd input dims");
    c.in_h = x.h;
    c.in_w = x.w;
    c.out_h = x.h / 2;
    c.out_w = x.w / 2;
    c.ch = x.channels();
    Tensor<Scalar> y(c.ch, c.out_h, c.out_w);
    c.argmax.assign(static_cast<std::size_t>(c.ch) * c.out_h * c.out_w, 0);
    for (int oy = 0; oy < c.out_h; ++oy) {
      for (int ox = 0; ox < c.out_w; ++ox) {
        const Eigen::Index p = static_cast<Eigen::Index>(oy) * c.out_w + ox;
        const Eigen::Index base = static_cast<Eigen::Index>(2 * oy) * x.w + 2 * ox;
        const Eigen::Index cand[4] = {base, base + 1, base + x.w, base + x.w + 1};
        for (int ci = 0; ci < c.ch; ++ci) {
          Scalar best = x.data(ci, cand[0]);
          Eigen::Index arg = cand[0];
          for (int j = 1; j < 4; ++j) {
            const Scalar v = x.data(ci, cand[j]);
            if (v > best) {
              best = v;
              arg = cand[j];
            }
          }
          y.data(ci, p) = best;
          c.argmax[static_cast<std::size_t>(ci) * c.out_h * c.out_w + p] = arg;
        }
      }
    }
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& c) const {
    Tensor<Scalar> dx(c.ch, c.in_h, c.in_w);
    const Eigen::Index npix = static_cast<Eigen::Index>(c.out_h) * c.out_w;
    for (int ci = 0; ci < c.ch; ++ci)
      for (Eigen::Index p = 0; p < npix; ++p)
        dx.data(ci, c.argmax[static_cast<std::size_t>(ci) * npix + p]) += dy.data(ci, p);
    return dx;
  }
};

/// Spatial mean per channel, returned as a 1×1 tensor.
template <typename Scalar>
Tensor<Scalar> global_avg_pool(const Tensor<Scalar>& x) {
  Tensor<Scalar> y(x.channels(), 1, 1);
  y.data.col(0) = x.data.rowwise().mean();
  return y;
}

template <typename Scalar>
Tensor<Scalar> global_avg_pool_backward(const Tensor<Scalar>& dy, int in_h, int in_w) {
  Tensor<Scalar> dx(dy.channels(), in_h, in_w);
  const Scalar inv = Scalar(1) / static_cast<Scalar>(in_h * in_w);
  dx.data.colwise() = (dy.data.col(0) * inv).eval();
  return dx;
}

/// Broadcast a 1×1 tensor over an h×w grid.
template <typename Scalar>
Tensor<Scalar> broadcast_spatial(const Tensor<Scalar>& x, int h, int w) {
  Tensor<Scalar> y(x.channels(), h, w);
  y.data.colwise() = x.data.col(0);
  return y;
}

template <typename Scalar>
Tensor<Scalar> broadcast_spatial_backward(const Tensor<Scalar>& dy) {
  Tensor<Scalar> dx(dy.channels(), 1, 1);
  dx.data.col(0) = dy.data.rowwise().sum();
  return dx;
}

}  // namespace kdmsi
