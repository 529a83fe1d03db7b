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

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kdmsi {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Single-channel h×w map (score map, probability map, ...).
template <typename Scalar>
using MapX = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// h×w binary mask, values exactly 0 or 1 (1 = change).
using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Dense c-channel raster stored as a channels × (h·w) matrix; pixel p = y·w + x.
/// Column p holds all channels of one pixel, which keeps im2col gathers and
/// per-pixel reductions contiguous.
template <typename Scalar>
struct Tensor {
  MatX<Scalar> data;
  int h = 0;
  int w = 0;

  Tensor() = default;
  Tensor(int channels, int height, int width)
      : data(MatX<Scalar>::Zero(channels, static_cast<Eigen::Index>(height) * width)),
        h(height),
        w(width) {}

  int channels() const { return static_cast<int>(data.rows()); }
  int pixels() const { return h * w; }

  Scalar& at(int c, int y, int x) { return data(c, static_cast<Eigen::Index>(y) * w + x); }
  Scalar at(int c, int y, int x) const { return data(c, static_cast<Eigen::Index>(y) * w + x); }

  bool same_shape(const Tensor& o) const {
    return h == o.h && w == o.w && data.rows() == o.data.rows();
  }
  bool all_finite() const { return data.allFinite(); }

  static Tensor zeros_like(const Tensor& o) { return Tensor(o.channels(), o.h, o.w); }
};

using Tensorf = Tensor<float>;
using Mapf = MapX<float>;

/// View a 1-channel tensor as an h×w map.
template <typename Scalar>
MapX<Scalar> to_map(const Tensor<Scalar>& t) {
  if (t.channels() != 1) throw std::invalid_argument("to_map: tensor must have 1 channel");
  MapX<Scalar> m(t.h, t.w);
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x) m(y, x) = t.at(0, y, x);
  return m;
}

template <typename Scalar>
Tensor<Scalar> from_map(const MapX<Scalar>& m) {
  Tensor<Scalar> t(1, static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x) t.at(0, y, x) = m(y, x);
  return t;
}

/// Channel stacking: [a; b].
template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.h != b.h || a.w != b.w)
    throw std::invalid_argument("concat_channels: spatial shape mismatch");
  Tensor<Scalar> out(a.channels() + b.channels(), a.h, a.w);
  out.data.topRows(a.data.rows()) = a.data;
  out.data.bottomRows(b.data.rows()) = b.data;
  return out;
}

template <typename Scalar>
Tensor<Scalar> flip_horizontal(const Tensor<Scalar>& t) {
  Tensor<Scalar> out(t.channels(), t.h, t.w);
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x)
      out.data.col(static_cast<Eigen::Index>(y) * t.w + x) =
          t.data.col(static_cast<Eigen::Index>(y) * t.w + (t.w - 1 - x));
  return out;
}

template <typename Scalar>
Tensor<Scalar> flip_vertical(const Tensor<Scalar>& t) {
  Tensor<Scalar> out(t.channels(), t.h, t.w);
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x)
      out.data.col(static_cast<Eigen::Index>(y) * t.w + x) =
          t.data.col(static_cast<Eigen::Index>(t.h - 1 - y) * t.w + x);
  return out;
}

template <typename Scalar>
MapX<Scalar> flip_horizontal(const MapX<Scalar>& m) {
  return m.rowwise().reverse();
}

template <typename Scalar>
MapX<Scalar> flip_vertical(const MapX<Scalar>& m) {
  return m.colwise().reverse();
}

/// Co-registered pre-event / post-event raster pair, the unit of all inference.
template <typename Scalar>
struct ImagePairT {
  Tensor<Scalar> pre;
  Tensor<Scalar> post;
  std::string id;

  void validate() const {
    if (!pre.same_shape(post))
      throw std::invalid_argument("ImagePair '" + id + "': pre/post shape mismatch");
  }
};

using ImagePair = ImagePairT<float>;

}  // namespace kdmsi
