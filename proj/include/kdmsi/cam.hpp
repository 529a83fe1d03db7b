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

#include "kdmsi/tensor.hpp"

namespace kdmsi {

/// Guard below which a rectified score map is treated as all-background.
inline constexpr double kCamZeroGuard = 1e-6;

/// Class activation map from a score map: ReLU then max-normalization.
/// If the rectified map has no mass (max <= guard) the CAM is all zeros.
template <typename Scalar>
MapX<Scalar> cam_normalize(const MapX<Scalar>& g) {
  MapX<Scalar> r = g.max(Scalar(0));
  const Scalar m = r.maxCoeff();
  if (m <= static_cast<Scalar>(kCamZeroGuard)) return MapX<Scalar>::Zero(g.rows(), g.cols());
  return r / m;
}

/// Global average pooling of a score map into a classification logit.
template <typename Scalar>
Scalar classification_logit(const MapX<Scalar>& g) {
  return g.mean();
}

}  // namespace kdmsi
