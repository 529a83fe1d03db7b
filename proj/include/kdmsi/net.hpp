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

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdmsi/image.hpp"
#include "kdmsi/layers.hpp"
#include "kdmsi/rng.hpp"
#include "kdmsi/tensor.hpp"

namespace kdmsi {

enum class BackboneKind { TinyCnn, Resnet50Shaped };

inline std::string to_string(BackboneKind k) {
  return k == BackboneKind::TinyCnn ? "tiny-cnn" : "resnet50-shaped";
}

inline BackboneKind backbone_kind_from_string(const std::string& s) {
  if (s == "tiny-cnn") return BackboneKind::TinyCnn;
  if (s == "resnet50-shaped") return BackboneKind::Resnet50Shaped;
  throw std::invalid_argument("unknown backbone kind: " + s);
}

/// Feature-combination operator for the two time-step branches.
enum class CombineMode { Subtract, AbsSubtract, Concat };

inline std::string to_string(CombineMode m) {
  switch (m) {
    case CombineMode::Subtract: return "subtract";
    case CombineMode::AbsSubtract: return "abs-subtract";
    default: return "concat";
  }
}

inline CombineMode combine_mode_from_string(const std::string& s) {
  if (s == "subtract") return CombineMode::Subtract;
  if (s == "abs-subtract") return CombineMode::AbsSubtract;
  if (s == "concat") return CombineMode::Concat;
  throw std::invalid_argument("unknown combine mode: " + s);
}

/// Architecture of a feature extractor: one entry per block, each block
/// halving the spatial resolution (3×3 conv, channel norm, ReLU, 2× max pool).
struct BackboneSpec {
  BackboneKind kind = BackboneKind::TinyCnn;
  int in_ch = 3;
  std::vector<int> channels = {16, 32, 64, 64};
  bool with_norm = true;

  int output_stride() const { return 1 << channels.size(); }
  int out_channels() const { return channels.back(); }

  static BackboneSpec tiny_cnn(int in_ch = 3) { return {BackboneKind::TinyCnn, in_ch, {16, 32, 64, 64}, true}; }
  static BackboneSpec resnet50_shaped(int in_ch = 3) {
    return {BackboneKind::Resnet50Shaped, in_ch, {32, 64, 128, 256, 512}, true};
  }
  static BackboneSpec from_kind(BackboneKind k, int in_ch = 3) {
    return k == BackboneKind::TinyCnn ? tiny_cnn(in_ch) : resnet50_shaped(in_ch);
  }
};

template <typename Scalar>
struct ConvBlock {
  Conv2d<Scalar> conv;
  ChannelNorm<Scalar> norm;
  Relu<Scalar> relu;
  MaxPool2<Scalar> pool;
  bool with_norm = true;

  struct Cache {
    typename Conv2d<Scalar>::Cache conv;
    typename ChannelNorm<Scalar>::Cache norm;
    typename Relu<Scalar>::Cache relu;
    typename MaxPool2<Scalar>::Cache pool;
  };

  ConvBlock() = default;
  ConvBlock(int in_ch, int out_ch, bool norm_)
      : conv(in_ch, out_ch, 3, 1, 1), norm(out_ch), with_norm(norm_) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& c) const {
    Tensor<Scalar> t = conv.forward(x, c.conv);
    if (with_norm) t = norm.forward(t, c.norm);
    t = relu.forward(t, c.relu);
    return pool.forward(t, c.pool);
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& c) {
    Tensor<Scalar> d = pool.backward(dy, c.pool);
    d = relu.backward(d, c.relu);
    if (with_norm) d = norm.backward(d, c.norm);
    return conv.backward(d, c.conv);
  }

  void init(Rng& rng) { conv.init(rng); }

  void zero_grad() {
    conv.zero_grad();
    norm.zero_grad();
  }

  void collect_params(const std::string& prefix, ParamList<Scalar>& out) {
    conv.collect_params(prefix + ".conv", out);
    if (with_norm) norm.collect_params(prefix + ".norm", out);
  }
};

/// Weight-shared Siamese feature extractor. One instance serves both time
/// steps; each forward pass uses its own cache so two branch passes can be
/// back-propagated independently (gradients accumulate into the shared
/// parameters).
template <typename Scalar>
struct Backbone {
  BackboneSpec spec;
  std::vector<ConvBlock<Scalar>> blocks;

  struct Cache {
    std::vector<typename ConvBlock<Scalar>::Cache> blocks;
    std::vector<Tensor<Scalar>> outputs;  // per-block outputs (for low-level taps)
  };

  Backbone() = default;
  explicit Backbone(const BackboneSpec& s) : spec(s) {
    int in = s.in_ch;
    for (int ch : s.channels) {
      blocks.emplace_back(in, ch, s.with_norm);
      in = ch;
    }
  }

  int output_stride() const { return spec.output_stride(); }
  int out_channels() const { return spec.out_channels(); }

  void init(Rng& rng) {
    for (auto& b : blocks) b.init(rng);
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& c) const {
    if (x.h % output_stride() != 0 || x.w % output_stride() != 0)
      throw std::invalid_argument("Backbone: input " + std::to_string(x.h) + "x" +
                                  std::to_string(x.w) + " not divisible by stride " +
                                  std::to_string(output_stride()));
    c.blocks.resize(blocks.size());
    c.outputs.clear();
    c.outputs.reserve(blocks.size());
    Tensor<Scalar> t = x;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      t = blocks[i].forward(t, c.blocks[i]);
      c.outputs.push_back(t);
    }
    return t;
  }

  /// Back-propagate d(out). `tap_grads` adds extra gradient at intermediate
  /// block outputs (block index -> gradient), used by encoder taps.
  void backward(const Tensor<Scalar>& d_out, const Cache& c,
                const std::map<int, Tensor<Scalar>>* tap_grads = nullptr) {
    Tensor<Scalar> d = d_out;
    for (int i = static_cast<int>(blocks.size()) - 1; i >= 0; --i) {
      if (tap_grads) {
        const auto it = tap_grads->find(i);
        if (it != tap_grads->end()) d.data += it->second.data;
      }
      d = blocks[static_cast<std::size_t>(i)].backward(d, c.blocks[static_cast<std::size_t>(i)]);
    }
  }

  void zero_grad() {
    for (auto& b : blocks) b.zero_grad();
  }

  void collect_params(const std::string& prefix, ParamList<Scalar>& out) {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].collect_params(prefix + ".block" + std::to_string(i), out);
  }
};

/// Features of both branches combined with the ⊕ operator.
template <typename Scalar>
Tensor<Scalar> combine_features(const Tensor<Scalar>& f1, const Tensor<Scalar>& f2,
                                CombineMode mode) {
  if (!f1.same_shape(f2)) throw std::invalid_argument("combine_features: shape mismatch");
  switch (mode) {
    case CombineMode::Subtract: {
      Tensor<Scalar> out = f1;
      out.data -= f2.data;
      return out;
    }
    case CombineMode::AbsSubtract: {
      Tensor<Scalar> out = f1;
      out.data = (f1.data - f2.data).cwiseAbs();
      return out;
    }
    default:
      return concat_channels(f1, f2);
  }
}

/// Gradient of combine_features with respect to both branch inputs.
/// AbsSubtract uses sign(f1 - f2), zero at ties.
template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> combine_backward(const Tensor<Scalar>& d_comb,
                                                           const Tensor<Scalar>& f1,
                                                           const Tensor<Scalar>& f2,
                                                           CombineMode mode) {
  Tensor<Scalar> d_f1, d_f2;
  switch (mode) {
    case CombineMode::Subtract:
      d_f1 = d_comb;
      d_f2 = d_comb;
      d_f2.data = -d_f2.data;
      break;
    case CombineMode::AbsSubtract: {
      d_f1 = d_comb;
      const MatX<Scalar> sgn = (f1.data - f2.data).array().sign().matrix();
      d_f1.data = d_comb.data.cwiseProduct(sgn);
      d_f2 = d_f1;
      d_f2.data = -d_f2.data;
      break;
    }
    default: {
      const Eigen::Index ch = f1.data.rows();
      d_f1 = Tensor<Scalar>(static_cast<int>(ch), f1.h, f1.w);
      d_f2 = d_f1;
      d_f1.data = d_comb.data.topRows(ch);
      d_f2.data = d_comb.data.bottomRows(ch);
      break;
    }
  }
  return {std::move(d_f1), std::move(d_f2)};
}

/// Siamese score network: shared-weight backbone on each image, feature
/// combination, then a 1×1 projection head to a single pre-activation channel.
template <typename Scalar>
struct ScoreNet {
  Backbone<Scalar> backbone;
  CombineMode combine = CombineMode::AbsSubtract;
  Conv2d<Scalar> head;  // 1×1, combined channels -> 1

  struct Cache {
    typename Backbone<Scalar>::Cache pre, post;
    Tensor<Scalar> f1, f2, combined;
    typename Conv2d<Scalar>::Cache head;
  };

  ScoreNet() = default;
  ScoreNet(const BackboneSpec& spec, CombineMode mode)
      : backbone(spec),
        combine(mode),
        head(mode == CombineMode::Concat ? 2 * spec.out_channels() : spec.out_channels(), 1, 1) {}

  void init(Rng& rng) {
    backbone.init(rng);
    head.init(rng);
  }

  int output_stride() const { return backbone.output_stride(); }

  /// Score map G for a pair (pre-activation, single channel).
  MapX<Scalar> forward(const ImagePairT<Scalar>& pair, Cache& c) const {
    c.f1 = backbone.forward(pair.pre, c.pre);
    c.f2 = backbone.forward(pair.post, c.post);
    c.combined = combine_features(c.f1, c.f2, combine);
    const Tensor<Scalar> g = head.forward(c.combined, c.head);
    return to_map(g);
  }

  /// Convenience forward without keeping the cache.
  MapX<Scalar> score(const ImagePairT<Scalar>& pair) const {
    Cache c;
    return forward(pair, c);
  }

  /// Back-propagates dL/dG; gradients of the shared backbone accumulate over
  /// both branches.
  void backward(const MapX<Scalar>& d_score, Cache& c) {
    const Tensor<Scalar> dg = from_map(d_score);
    const Tensor<Scalar> d_comb = head.backward(dg, c.head);
    auto [d_f1, d_f2] = combine_backward(d_comb, c.f1, c.f2, combine);
    backbone.backward(d_f1, c.pre);
    backbone.backward(d_f2, c.post);
  }

  void zero_grad() {
    backbone.zero_grad();
    head.zero_grad();
  }

  ParamList<Scalar> params() {
    ParamList<Scalar> out;
    backbone.collect_params("backbone", out);
    head.collect_params("head", out);
    return out;
  }
};

/// Backbone features for one image (contract: dims divisible by the stride).
template <typename Scalar>
Tensor<Scalar> extract_features(const Backbone<Scalar>& backbone, const Tensor<Scalar>& image) {
  typename Backbone<Scalar>::Cache c;
  return backbone.forward(image, c);
}

/// 1×1 projection of a feature map to a single-channel score map.
template <typename Scalar>
MapX<Scalar> head_project(const Tensor<Scalar>& f, const Conv2d<Scalar>& head) {
  typename Conv2d<Scalar>::Cache c;
  return to_map(head.forward(f, c));
}

}  // namespace kdmsi
