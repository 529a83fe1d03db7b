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

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "kdmsi/tensor.hpp"

namespace kdmsi {

namespace detail {

/// One 1-D bilinear sample: out[i] = w0·src[i0] + w1·src[i1].
/// Half-pixel-center convention; mirrored outputs sample mirrored inputs with
/// the same weights, so resizing commutes with flips.
template <typename Scalar>
struct LinSample {
  int i0, i1;
  Scalar w0, w1;
};

template <typename Scalar>
std::vector<LinSample<Scalar>> linear_samples(int src_n, int dst_n) {
  std::vector<LinSample<Scalar>> s(static_cast<std::size_t>(dst_n));
  const double ratio = static_cast<double>(src_n) / static_cast<double>(dst_n);
  for (int i = 0; i < dst_n; ++i) {
    double pos = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(src_n - 1));
    const int i0 = static_cast<int>(pos);
    const int i1 = std::min(i0 + 1, src_n - 1);
    const double f = pos - static_cast<double>(i0);
    s[static_cast<std::size_t>(i)] = {i0, i1, static_cast<Scalar>(1.0 - f), static_cast<Scalar>(f)};
  }
  return s;
}

inline std::vector<int> nearest_samples(int src_n, int dst_n) {
  std::vector<int> s(static_cast<std::size_t>(dst_n));
  const double ratio = static_cast<double>(src_n) / static_cast<double>(dst_n);
  for (int i = 0; i < dst_n; ++i) {
    const int j = static_cast<int>(std::floor((static_cast<double>(i) + 0.5) * ratio));
    s[static_cast<std::size_t>(i)] = std::clamp(j, 0, src_n - 1);
  }
  return s;
}

}  // namespace detail

/// Bilinear resize of a multi-channel tensor to out_h × out_w.
template <typename Scalar>
Tensor<Scalar> resize_bilinear(const Tensor<Scalar>& x, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("resize_bilinear: non-positive target");
  if (out_h == x.h && out_w == x.w) return x;
  const auto ys = detail::linear_samples<Scalar>(x.h, out_h);
  const auto xs = detail::linear_samples<Scalar>(x.w, out_w);
  Tensor<Scalar> out(x.channels(), out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    const auto& sy = ys[static_cast<std::size_t>(y)];
    for (int x2 = 0; x2 < out_w; ++x2) {
      const auto& sx = xs[static_cast<std::size_t>(x2)];
      out.data.col(static_cast<Eigen::Index>(y) * out_w + x2) =
          sy.w0 * (sx.w0 * x.data.col(static_cast<Eigen::Index>(sy.i0) * x.w + sx.i0) +
                   sx.w1 * x.data.col(static_cast<Eigen::Index>(sy.i0) * x.w + sx.i1)) +
          sy.w1 * (sx.w0 * x.data.col(static_cast<Eigen::Index>(sy.i1) * x.w + sx.i0) +
                   sx.w1 * x.data.col(static_cast<Eigen::Index>(sy.i1) * x.w + sx.i1));
    }
  }
  return out;
}

template <typename Scalar>
MapX<Scalar> resize_bilinear(const MapX<Scalar>& m, int out_h, int out_w) {
  const int in_h = static_cast<int>(m.rows());
  const int in_w = static_cast<int>(m.cols());
  if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("resize_bilinear: non-positive target");
  if (out_h == in_h && out_w == in_w) return m;
  const auto ys = detail::linear_samples<Scalar>(in_h, out_h);
  const auto xs = detail::linear_samples<Scalar>(in_w, out_w);
  MapX<Scalar> out(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    const auto& sy = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_w; ++x) {
      const auto& sx = xs[static_cast<std::size_t>(x)];
      out(y, x) = sy.w0 * (sx.w0 * m(sy.i0, sx.i0) + sx.w1 * m(sy.i0, sx.i1)) +
                  sy.w1 * (sx.w0 * m(sy.i1, sx.i0) + sx.w1 * m(sy.i1, sx.i1));
    }
  }
  return out;
}

/// Adjoint of resize_bilinear: scatters an out_h × out_w gradient back onto an
/// in_h × in_w grid. Linear operator, so this is the exact transpose.
template <typename Scalar>
Tensor<Scalar> resize_bilinear_adjoint(const Tensor<Scalar>& dy, int in_h, int in_w) {
  if (dy.h == in_h && dy.w == in_w) return dy;
  const auto ys = detail::linear_samples<Scalar>(in_h, dy.h);
  const auto xs = detail::linear_samples<Scalar>(in_w, dy.w);
  Tensor<Scalar> dx(dy.channels(), in_h, in_w);
  for (int y = 0; y < dy.h; ++y) {
    const auto& sy = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < dy.w; ++x) {
      const auto& sx = xs[static_cast<std::size_t>(x)];
      const auto g = dy.data.col(static_cast<Eigen::Index>(y) * dy.w + x);
      dx.data.col(static_cast<Eigen::Index>(sy.i0) * in_w + sx.i0) += sy.w0 * sx.w0 * g;
      dx.data.col(static_cast<Eigen::Index>(sy.i0) * in_w + sx.i1) += sy.w0 * sx.w1 * g;
      dx.data.col(static_cast<Eigen::Index>(sy.i1) * in_w + sx.i0) += sy.w1 * sx.w0 * g;
      dx.data.col(static_cast<Eigen::Index>(sy.i1) * in_w + sx.i1) += sy.w1 * sx.w1 * g;
    }
  }
  return dx;
}

/// Nearest-neighbor resize for masks and label maps.
inline Mask resize_nearest(const Mask& m, int out_h, int out_w) {
  const int in_h = static_cast<int>(m.rows());
  const int in_w = static_cast<int>(m.cols());
  if (out_h == in_h && out_w == in_w) return m;
  const auto ys = detail::nearest_samples(in_h, out_h);
  const auto xs = detail::nearest_samples(in_w, out_w);
  Mask out(out_h, out_w);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x)
      out(y, x) = m(ys[static_cast<std::size_t>(y)], xs[static_cast<std::size_t>(x)]);
  return out;
}

enum class FlipAxis { Horizontal, Vertical };

template <typename Scalar>
Tensor<Scalar> flip(const Tensor<Scalar>& t, FlipAxis axis) {
  return axis == FlipAxis::Horizontal ? flip_horizontal(t) : flip_vertical(t);
}

template <typename Scalar>
MapX<Scalar> flip(const MapX<Scalar>& m, FlipAxis axis) {
  return axis == FlipAxis::Horizontal ? flip_horizontal(m) : flip_vertical(m);
}

template <typename Scalar>
ImagePairT<Scalar> flip(const ImagePairT<Scalar>& p, FlipAxis axis) {
  return {flip(p.pre, axis), flip(p.post, axis), p.id};
}

template <typename Scalar>
ImagePairT<Scalar> resize_bilinear(const ImagePairT<Scalar>& p, int out_h, int out_w) {
  return {resize_bilinear(p.pre, out_h, out_w), resize_bilinear(p.post, out_h, out_w), p.id};
}

/// Smallest multiple of `stride` that is >= round(scale · n), never below `stride`.
inline int scaled_size_snapped(int n, double scale, int stride) {
  const auto target = static_cast<int>(std::lround(scale * n));
  const int snapped = ((std::max(target, 1) + stride - 1) / stride) * stride;
  return snapped;
}

}  // namespace kdmsi
