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
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kdmsi/image.hpp"
#include "kdmsi/layers.hpp"
#include "kdmsi/net.hpp"
#include "kdmsi/tensor.hpp"

namespace kdmsi {

/// conv → channel norm → ReLU, the unit both the context block and the
/// decoder are built from. Norm is skipped where the spatial extent is 1×1
/// (per-channel statistics degenerate there).
template <typename Scalar>
struct ConvNormRelu {
  Conv2d<Scalar> conv;
  ChannelNorm<Scalar> norm;
  Relu<Scalar> relu;
  bool with_norm = true;

  struct Cache {
    typename Conv2d<Scalar>::Cache conv;
    typename ChannelNorm<Scalar>::Cache norm;
    typename Relu<Scalar>::Cache relu;
  };

  ConvNormRelu() = default;
  ConvNormRelu(int in_ch, int out_ch, int k, int pad, int dilation, bool norm_)
      : conv(in_ch, out_ch, k, 1, pad, dilation), norm(out_ch), with_norm(norm_) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& c) const {
    Tensor<Scalar> t = conv.forward(x, c.conv);
    if (with_norm) t = norm.forward(t, c.norm);
    return relu.forward(t, c.relu);
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& c) {
    Tensor<Scalar> d = relu.backward(dy, c.relu);
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

/// Segmentation head architecture. The encoder tap supplies low-level
/// features from the block at `tap_block` (stride 2^(tap_block+1)).
struct SegSpec {
  BackboneSpec encoder = BackboneSpec::tiny_cnn();
  std::vector<int> dilations = {1, 2, 4};
  int context_ch = 24;  // per context branch
  int fuse_ch = 48;     // after 1×1 fusion of the branches
  int low_ch = 8;       // low-level projection width
  int decoder_ch = 32;
  int tap_block = 0;
  static constexpr int kNumClasses = 2;

  void validate() const {
    if (dilations.empty()) throw std::invalid_argument("SegSpec: no dilation rates");
    for (int d : dilations)
      if (d < 1) throw std::invalid_argument("SegSpec: dilation rates must be >= 1");
    if (context_ch < 1 || fuse_ch < 1 || low_ch < 1 || decoder_ch < 1)
      throw std::invalid_argument("SegSpec: channel widths must be positive");
    if (tap_block < 0 || tap_block >= static_cast<int>(encoder.channels.size()) - 1)
      throw std::invalid_argument("SegSpec: tap_block out of range");
  }
};

/// Siamese segmentation network. Both images pass through a shared encoder;
/// the high-level feature difference F1−F2 feeds a multi-rate context block
/// (parallel dilated 3×3 convs plus a global-pooling branch, fused 1×1);
/// the decoder upsamples the fused context to the tap grid, concatenates the
/// projected low-level difference, and predicts 2-channel logits at input
/// resolution.
template <typename Scalar>
struct SegNet {
  SegSpec spec;
  Backbone<Scalar> encoder;
  std::vector<ConvNormRelu<Scalar>> context;  // one per dilation rate
  Conv2d<Scalar> pool_conv;                   // 1×1 on the pooled vector
  Relu<Scalar> pool_relu;
  ConvNormRelu<Scalar> fuse;      // 1×1 over concatenated branches
  ConvNormRelu<Scalar> low_proj;  // 1×1 on the low-level difference
  ConvNormRelu<Scalar> decode;    // 3×3 over concat(upsampled context, low)
  Conv2d<Scalar> head;            // 1×1 -> 2 logits

  struct Cache {
    typename Backbone<Scalar>::Cache pre, post;
    Tensor<Scalar> f1, f2, diff_high;      // encoder outputs + their difference
    Tensor<Scalar> f1_low, f2_low, diff_low;
    std::vector<typename ConvNormRelu<Scalar>::Cache> context;
    typename Conv2d<Scalar>::Cache pool_conv;
    typename Relu<Scalar>::Cache pool_relu;
    typename ConvNormRelu<Scalar>::Cache fuse;
    Tensor<Scalar> fused;
    typename ConvNormRelu<Scalar>::Cache low_proj;
    typename ConvNormRelu<Scalar>::Cache decode;
    typename Conv2d<Scalar>::Cache head;
    int in_h = 0, in_w = 0;
  };

  SegNet() = default;
  // spec is the first member, so the comma-validated copy runs before any
  // initializer below reads it.
  explicit SegNet(const SegSpec& s)
      : spec((s.validate(), s)),
        encoder(s.encoder),
        pool_conv(s.encoder.out_channels(), s.context_ch, 1),
        fuse(static_cast<int>(s.dilations.size() + 1) * s.context_ch, s.fuse_ch, 1, 0, 1, true),
        low_proj(s.encoder.channels.at(static_cast<std::size_t>(s.tap_block)), s.low_ch, 1, 0, 1,
                 true),
        decode(s.fuse_ch + s.low_ch, s.decoder_ch, 3, 1, 1, true),
        head(s.decoder_ch, SegSpec::kNumClasses, 1) {
    const int c = s.encoder.out_channels();
    for (int d : s.dilations) context.emplace_back(c, s.context_ch, 3, d, d, true);
  }

  int output_stride() const { return encoder.output_stride(); }

  void init(Rng& rng) {
    encoder.init(rng);
    for (auto& b : context) b.init(rng);
    pool_conv.init(rng);
    fuse.init(rng);
    low_proj.init(rng);
    decode.init(rng);
    head.init(rng);
  }

  /// Logits at input resolution: 2 × (h·w), channel 0 background, 1 change.
  Tensor<Scalar> forward(const ImagePairT<Scalar>& pair, Cache& c) const {
    pair.validate();
    c.in_h = pair.pre.h;
    c.in_w = pair.pre.w;
    c.f1 = encoder.forward(pair.pre, c.pre);
    c.f2 = encoder.forward(pair.post, c.post);
    c.f1_low = c.pre.outputs.at(static_cast<std::size_t>(spec.tap_block));
    c.f2_low = c.post.outputs.at(static_cast<std::size_t>(spec.tap_block));
    c.diff_high = combine_features(c.f1, c.f2, CombineMode::Subtract);
    c.diff_low = combine_features(c.f1_low, c.f2_low, CombineMode::Subtract);

    c.context.resize(context.size());
    Tensor<Scalar> cat = context[0].forward(c.diff_high, c.context[0]);
    for (std::size_t i = 1; i < context.size(); ++i)
      cat = concat_channels(cat, context[i].forward(c.diff_high, c.context[i]));
    Tensor<Scalar> pooled = global_avg_pool(c.diff_high);
    pooled = pool_conv.forward(pooled, c.pool_conv);
    pooled = pool_relu.forward(pooled, c.pool_relu);
    cat = concat_channels(cat, broadcast_spatial(pooled, c.diff_high.h, c.diff_high.w));
    c.fused = fuse.forward(cat, c.fuse);

    const Tensor<Scalar> up = resize_bilinear(c.fused, c.diff_low.h, c.diff_low.w);
    const Tensor<Scalar> low = low_proj.forward(c.diff_low, c.low_proj);
    const Tensor<Scalar> dec = decode.forward(concat_channels(up, low), c.decode);
    const Tensor<Scalar> logits = head.forward(dec, c.head);
    return resize_bilinear(logits, c.in_h, c.in_w);
  }

  Tensor<Scalar> logits(const ImagePairT<Scalar>& pair) const {
    Cache c;
    return forward(pair, c);
  }

  /// Back-propagates dL/d(logits); encoder gradients accumulate over both
  /// branches, with the low-level tap feeding extra gradient mid-encoder.
  void backward(const Tensor<Scalar>& d_logits, Cache& c) {
    const Tensor<Scalar> d_small = resize_bilinear_adjoint(d_logits, c.diff_low.h, c.diff_low.w);
    const Tensor<Scalar> d_dec = head.backward(d_small, c.head);
    const Tensor<Scalar> d_cat2 = decode.backward(d_dec, c.decode);

    Tensor<Scalar> d_up(spec.fuse_ch, c.diff_low.h, c.diff_low.w);
    d_up.data = d_cat2.data.topRows(spec.fuse_ch);
    Tensor<Scalar> d_low_proj(spec.low_ch, c.diff_low.h, c.diff_low.w);
    d_low_proj.data = d_cat2.data.bottomRows(spec.low_ch);
    Tensor<Scalar> d_diff_low = low_proj.backward(d_low_proj, c.low_proj);

    const Tensor<Scalar> d_fused = resize_bilinear_adjoint(d_up, c.fused.h, c.fused.w);
    const Tensor<Scalar> d_cat = fuse.backward(d_fused, c.fuse);

    Tensor<Scalar> d_diff = Tensor<Scalar>::zeros_like(c.diff_high);
    for (std::size_t i = 0; i < context.size(); ++i) {
      Tensor<Scalar> d_branch(spec.context_ch, c.diff_high.h, c.diff_high.w);
      d_branch.data =
          d_cat.data.middleRows(static_cast<Eigen::Index>(i) * spec.context_ch, spec.context_ch);
      d_diff.data += context[i].backward(d_branch, c.context[i]).data;
    }
    Tensor<Scalar> d_pool_bcast(spec.context_ch, c.diff_high.h, c.diff_high.w);
    d_pool_bcast.data = d_cat.data.bottomRows(spec.context_ch);
    Tensor<Scalar> d_pooled = broadcast_spatial_backward(d_pool_bcast);
    d_pooled = pool_relu.backward(d_pooled, c.pool_relu);
    d_pooled = pool_conv.backward(d_pooled, c.pool_conv);
    d_diff.data += global_avg_pool_backward(d_pooled, c.diff_high.h, c.diff_high.w).data;

    auto [d_f1, d_f2] = combine_backward(d_diff, c.f1, c.f2, CombineMode::Subtract);
    auto [d_f1_low, d_f2_low] = combine_backward(d_diff_low, c.f1_low, c.f2_low,
                                                 CombineMode::Subtract);
    std::map<int, Tensor<Scalar>> tap_pre{{spec.tap_block, std::move(d_f1_low)}};
    std::map<int, Tensor<Scalar>> tap_post{{spec.tap_block, std::move(d_f2_low)}};
    encoder.backward(d_f1, c.pre, &tap_pre);
    encoder.backward(d_f2, c.post, &tap_post);
  }

  void zero_grad() {
    encoder.zero_grad();
    for (auto& b : context) b.zero_grad();
    pool_conv.zero_grad();
    fuse.zero_grad();
    low_proj.zero_grad();
    decode.zero_grad();
    head.zero_grad();
  }

  ParamList<Scalar> params() {
    ParamList<Scalar> out;
    encoder.collect_params("encoder", out);
    for (std::size_t i = 0; i < context.size(); ++i)
      context[i].collect_params("context.rate" + std::to_string(spec.dilations[i]), out);
    pool_conv.collect_params("context.pool", out);
    fuse.collect_params("fuse", out);
    low_proj.collect_params("low_proj", out);
    decode.collect_params("decode", out);
    head.collect_params("head", out);
    return out;
  }
};

/// Per-pixel argmax over the two logit channels; ties go to background.
template <typename Scalar>
Mask predict_mask_from_logits(const Tensor<Scalar>& logits) {
  if (logits.channels() != SegSpec::kNumClasses)
    throw std::invalid_argument("predict_mask_from_logits: expected 2 channels");
  Mask m(logits.h, logits.w);
  for (int y = 0; y < logits.h; ++y)
    for (int x = 0; x < logits.w; ++x) {
      const Eigen::Index p = static_cast<Eigen::Index>(y) * logits.w + x;
      m(y, x) = logits.data(1, p) > logits.data(0, p) ? 1 : 0;
    }
  return m;
}

template <typename Scalar>
Mask predict_change_mask(const SegNet<Scalar>& net, const ImagePairT<Scalar>& pair) {
  return predict_mask_from_logits(net.logits(pair));
}

/// Mean per-pixel 2-class cross-entropy of logits against a 0/1 target mask,
/// computed via a stable log-sum-exp.
template <typename Scalar>
Scalar softmax_cross_entropy(const Tensor<Scalar>& logits, const Mask& target) {
  if (logits.channels() != SegSpec::kNumClasses)
    throw std::invalid_argument("softmax_cross_entropy: expected 2 channels");
  if (target.rows() != logits.h || target.cols() != logits.w)
    throw std::invalid_argument("softmax_cross_entropy: target shape mismatch");
  double total = 0.0;
  for (int y = 0; y < logits.h; ++y)
    for (int x = 0; x < logits.w; ++x) {
      const Eigen::Index p = static_cast<Eigen::Index>(y) * logits.w + x;
      const double z0 = logits.data(0, p), z1 = logits.data(1, p);
      const double m = std::max(z0, z1);
      const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
      total += lse - (target(y, x) != 0 ? z1 : z0);
    }
  return static_cast<Scalar>(total / static_cast<double>(logits.pixels()));
}

/// d(mean cross-entropy)/d(logits): (softmax − one-hot) / pixel count.
template <typename Scalar>
Tensor<Scalar> softmax_cross_entropy_grad(const Tensor<Scalar>& logits, const Mask& target) {
  if (target.rows() != logits.h || target.cols() != logits.w)
    throw std::invalid_argument("softmax_cross_entropy_grad: target shape mismatch");
  Tensor<Scalar> d(SegSpec::kNumClasses, logits.h, logits.w);
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(logits.pixels());
  for (int y = 0; y < logits.h; ++y)
    for (int x = 0; x < logits.w; ++x) {
      const Eigen::Index p = static_cast<Eigen::Index>(y) * logits.w + x;
      const Scalar z0 = logits.data(0, p), z1 = logits.data(1, p);
      const Scalar m = std::max(z0, z1);
      const Scalar e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
      const Scalar s1 = e1 / (e0 + e1);
      const bool change = target(y, x) != 0;
      d.data(0, p) = ((Scalar(1) - s1) - (change ? Scalar(0) : Scalar(1))) * inv_n;
      d.data(1, p) = (s1 - (change ? Scalar(1) : Scalar(0))) * inv_n;
    }
  return d;
}

}  // namespace kdmsi
