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

#include <stdexcept>
#include <vector>

#include "kdmsi/cam.hpp"
#include "kdmsi/image.hpp"
#include "kdmsi/losses.hpp"
#include "kdmsi/net.hpp"
#include "kdmsi/tensor.hpp"

namespace kdmsi {

/// Test-time scale set. Flipped variants double the evaluation count.
struct ScaleSet {
  std::vector<double> scales = {0.5, 1.0, 1.5, 2.0};
  bool flip = true;
  FlipAxis flip_axis = FlipAxis::Horizontal;

  void validate() const {
    if (scales.empty()) throw std::invalid_argument("ScaleSet: empty scale list");
    for (double s : scales)
      if (s <= 0.0) throw std::invalid_argument("ScaleSet: scales must be positive");
  }
};

/// Pixel-level {background, change} labels derived from a probability map.
struct PseudoLabelMap {
  Mask labels;
  double threshold = 0.0;
};

namespace detail {

/// Runs `score` on every scale/flip variant of `pair` and hands each raw
/// score map to `reduce(map, was_flipped)` after flipping it back to the
/// original orientation. Maps are NOT resized here.
template <typename Scalar, typename ScoreFn, typename ReduceFn>
void for_each_scale_variant(const ScoreFn& score, const ImagePairT<Scalar>& pair,
                            const ScaleSet& set, int stride, ReduceFn&& reduce) {
  set.validate();
  for (const double s : set.scales) {
    const int hs = scaled_size_snapped(pair.pre.h, s, stride);
    const int ws = scaled_size_snapped(pair.pre.w, s, stride);
    const ImagePairT<Scalar> scaled = resize_bilinear(pair, hs, ws);
    reduce(score(scaled), false);
    if (set.flip) {
      const MapX<Scalar> g_flipped = score(flip(scaled, set.flip_axis));
      reduce(flip(g_flipped, set.flip_axis), true);
    }
  }
}

}  // namespace detail

/// Multiscale inference baseline: raw score maps of all scale/flip variants
/// are resized to the input size, summed, and max-normalized once.
template <typename Scalar, typename ScoreFn>
MapX<Scalar> multiscale_inference(const ScoreFn& score, const ImagePairT<Scalar>& pair,
                                  const ScaleSet& set, int stride) {
  MapX<Scalar> sum = MapX<Scalar>::Zero(pair.pre.h, pair.pre.w);
  detail::for_each_scale_variant<Scalar>(
      score, pair, set, stride, [&](const MapX<Scalar>& g, bool) {
        sum += resize_bilinear(g, pair.pre.h, pair.pre.w);
      });
  return cam_normalize(sum);
}

/// Multiscale sigmoid inference: sigmoid is applied per scale before the
/// resize so every variant contributes with equal weight; the result is the
/// plain average (sigmoid -> flip-back -> resize -> average).
template <typename Scalar, typename ScoreFn>
MapX<Scalar> multiscale_sigmoid_inference(const ScoreFn& score, const ImagePairT<Scalar>& pair,
                                          const ScaleSet& set, int stride) {
  MapX<Scalar> sum = MapX<Scalar>::Zero(pair.pre.h, pair.pre.w);
  int count = 0;
  detail::for_each_scale_variant<Scalar>(
      score, pair, set, stride, [&](const MapX<Scalar>& g, bool) {
        sum += resize_bilinear(sigmoid_map(g), pair.pre.h, pair.pre.w);
        ++count;
      });
  return sum / static_cast<Scalar>(count);
}

template <typename Scalar>
MapX<Scalar> multiscale_inference(const ScoreNet<Scalar>& net, const ImagePairT<Scalar>& pair,
                                  const ScaleSet& set) {
  return multiscale_inference<Scalar>([&](const ImagePairT<Scalar>& p) { return net.score(p); },
                                      pair, set, net.output_stride());
}

template <typename Scalar>
MapX<Scalar> multiscale_sigmoid_inference(const ScoreNet<Scalar>& net,
                                          const ImagePairT<Scalar>& pair, const ScaleSet& set) {
  return multiscale_sigmoid_inference<Scalar>(
      [&](const ImagePairT<Scalar>& p) { return net.score(p); }, pair, set, net.output_stride());
}

/// Background-threshold argmax: a pixel is change iff M(p) > threshold
/// (argmax over the stacked [threshold, M(p)] channels; ties to background).
template <typename Scalar>
PseudoLabelMap pseudo_label(const MapX<Scalar>& m, double bg_threshold) {
  if (bg_threshold <= 0.0 || bg_threshold >= 1.0)
    throw std::invalid_argument("pseudo_label: threshold must be in (0,1)");
  PseudoLabelMap out;
  out.threshold = bg_threshold;
  out.labels = (m > static_cast<Scalar>(bg_threshold)).template cast<std::uint8_t>();
  return out;
}

/// Same threshold rule applied directly to a map, returning a mask.
template <typename Scalar>
Mask threshold_map(const MapX<Scalar>& m, double threshold) {
  return (m > static_cast<Scalar>(threshold)).template cast<std::uint8_t>();
}

}  // namespace kdmsi
