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

#include "kdmsi/tensor.hpp"

namespace kdmsi {

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
MapX<Scalar> sigmoid_map(const MapX<Scalar>& g) {
  return g.unaryExpr([](Scalar z) { return sigmoid(z); });
}

/// Binary cross-entropy of a single logit against y ∈ {0,1}, in the
/// log-sum-exp form: max(z,0) − z·y + log(1 + exp(−|z|)).
template <typename Scalar>
Scalar bce_with_logit(Scalar logit, int y) {
  if (y != 0 && y != 1) throw std::invalid_argument("bce_with_logit: label must be 0 or 1");
  const Scalar z = logit;
  return std::max(z, Scalar(0)) - z * static_cast<Scalar>(y) +
         std::log1p(std::exp(-std::abs(z)));
}

/// d(bce)/d(logit) = sigmoid(logit) − y.
template <typename Scalar>
Scalar bce_with_logit_grad(Scalar logit, int y) {
  return sigmoid(logit) - static_cast<Scalar>(y);
}

/// Mean squared error between two equal-shape maps.
template <typename Scalar>
Scalar mse_map(const MapX<Scalar>& a, const MapX<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("mse_map: shape mismatch");
  return (a - b).square().sum() / static_cast<Scalar>(a.size());
}

/// d(mse)/d(b) — gradient with respect to the second argument.
template <typename Scalar>
MapX<Scalar> mse_map_grad(const MapX<Scalar>& a, const MapX<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("mse_map_grad: shape mismatch");
  return Scalar(2) * (b - a) / static_cast<Scalar>(a.size());
}

template <typename Scalar>
Scalar total_loss(Scalar l_cls, Scalar l_kd, Scalar lambda) {
  if (lambda < Scalar(0)) throw std::invalid_argument("total_loss: lambda must be >= 0");
  return l_cls + lambda * l_kd;
}

}  // namespace kdmsi
