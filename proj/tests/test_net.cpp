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

#include <doctest.h>

#include <cmath>

#include "fd_check.hpp"
#include "kdmsi/net.hpp"

using namespace kdmsi;

TEST_CASE("backbone spec strings and shapes") {
  CHECK(to_string(BackboneKind::TinyCnn) == "tiny-cnn");
  CHECK(backbone_kind_from_string("resnet50-shaped") == BackboneKind::Resnet50Shaped);
  CHECK_THROWS_AS(backbone_kind_from_string("vgg"), std::invalid_argument);

  const BackboneSpec tiny = BackboneSpec::tiny_cnn();
  CHECK(tiny.output_stride() == 16);
  CHECK(tiny.out_channels() == 64);
  const BackboneSpec big = BackboneSpec::resnet50_shaped();
  CHECK(big.output_stride() == 32);
  CHECK(big.out_channels() == 512);
}

TEST_CASE("backbone downsamples by its stride and rejects other sizes") {
  Rng rng(41);
  BackboneSpec spec;
  spec.in_ch = 3;
  spec.channels = {4, 8};
  Backbone<double> bb(spec);
  bb.init(rng);

  const Tensor<double> x = testutil::random_tensor<double>(3, 8, 12, rng);
  Backbone<double>::Cache cache;
  const Tensor<double> f = bb.forward(x, cache);
  CHECK(f.channels() == 8);
  CHECK(f.h == 2);
  CHECK(f.w == 3);
  CHECK(cache.outputs.size() == 2);
  CHECK(cache.outputs[0].h == 4);

  const Tensor<double> bad = testutil::random_tensor<double>(3, 6, 8, rng);
  Backbone<double>::Cache c2;
  CHECK_THROWS_AS(bb.forward(bad, c2), std::invalid_argument);
}

TEST_CASE("combine_features implements all three operators") {
  Rng rng(42);
  const Tensor<double> f1 = testutil::random_tensor<double>(3, 2, 2, rng);
  const Tensor<double> f2 = testutil::random_tensor<double>(3, 2, 2, rng);

  const Tensor<double> sub = combine_features(f1, f2, CombineMode::Subtract);
  CHECK((sub.data - (f1.data - f2.data)).cwiseAbs().maxCoeff() == 0.0);

  const Tensor<double> asub = combine_features(f1, f2, CombineMode::AbsSubtract);
  CHECK((asub.data - (f1.data - f2.data).cwiseAbs()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(asub.data.minCoeff() >= 0.0);

  const Tensor<double> cat = combine_features(f1, f2, CombineMode::Concat);
  CHECK(cat.channels() == 6);
  CHECK(cat.at(0, 1, 1) == f1.at(0, 1, 1));
  CHECK(cat.at(3, 1, 1) == f2.at(0, 1, 1));

  // Zero property: identical features produce an all-zero difference under
  // both subtractive modes.
  const Tensor<double> zs = combine_features(f1, f1, CombineMode::Subtract);
  const Tensor<double> za = combine_features(f1, f1, CombineMode::AbsSubtract);
  CHECK(zs.data.cwiseAbs().maxCoeff() == 0.0);
  CHECK(za.data.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("combine_backward matches central differences in every mode") {
  Rng rng(43);
  for (const CombineMode mode :
       {CombineMode::Subtract, CombineMode::AbsSubtract, CombineMode::Concat}) {
    CAPTURE(to_string(mode));
    Tensor<double> f1 = testutil::random_tensor<double>(2, 3, 3, rng);
    Tensor<double> f2 = testutil::random_tensor<double>(2, 3, 3, rng);
    const Tensor<double> out = combine_features(f1, f2, mode);
    MatX<double> w(out.data.rows(), out.data.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1.0, 1.0);

    Tensor<double> d_comb = out;
    d_comb.data = w;
    auto [d_f1, d_f2] = combine_backward(d_comb, f1, f2, mode);

    const auto loss = [&] {
      return (combine_features(f1, f2, mode).data.array() * w.array()).sum();
    };
    ParamList<double> p1, p2;
    p1.push_back(make_param("f1", f1.data, d_f1.data));
    p2.push_back(make_param("f2", f2.data, d_f2.data));
    CHECK(testutil::max_relative_grad_error(p1, loss) < 1e-6);
    CHECK(testutil::max_relative_grad_error(p2, loss) < 1e-6);
  }
}

TEST_CASE("score net output geometry follows the backbone stride") {
  Rng rng(44);
  BackboneSpec spec;
  spec.channels = {4, 8};
  ScoreNet<double> net(spec, CombineMode::AbsSubtract);
  net.init(rng);

  const ImagePairT<double> pair = testutil::random_pair<double>(3, 8, 16, rng);
  const MapX<double> g = net.score(pair);
  CHECK(g.rows() == 2);
  CHECK(g.cols() == 4);
  CHECK(net.output_stride() == 4);
  CHECK(g.isFinite().all());
}

TEST_CASE("swapping the pair flips the score sign under subtract") {
  Rng rng(45);
  BackboneSpec spec;
  spec.channels = {4};
  ScoreNet<double> net(spec, CombineMode::Subtract);
  net.init(rng);  // zero head bias keeps the 1x1 projection odd

  ImagePairT<double> pair = testutil::random_pair<double>(3, 8, 8, rng);
  ImagePairT<double> swapped{pair.post, pair.pre, pair.id};
  const MapX<double> g = net.score(pair);
  const MapX<double> h = net.score(swapped);
  CHECK((g + h).abs().maxCoeff() < 1e-12);
}

TEST_CASE("swapping the pair leaves the score unchanged under abs-subtract") {
  Rng rng(46);
  BackboneSpec spec;
  spec.channels = {4, 8};
  ScoreNet<double> net(spec, CombineMode::AbsSubtract);
  net.init(rng);

  ImagePairT<double> pair = testutil::random_pair<double>(3, 8, 8, rng);
  ImagePairT<double> swapped{pair.post, pair.pre, pair.id};
  const MapX<double> g = net.score(pair);
  const MapX<double> h = net.score(swapped);
  CHECK((g - h).abs().maxCoeff() < 1e-12);
}

TEST_CASE("score net backward reaches every parameter") {
  Rng rng(47);
  BackboneSpec spec;
  spec.channels = {4, 8};
  ScoreNet<double> net(spec, CombineMode::Subtract);
  net.init(rng);

  const ImagePairT<double> pair = testutil::random_pair<double>(3, 8, 8, rng);
  ScoreNet<double>::Cache cache;
  const MapX<double> g = net.forward(pair, cache);
  net.zero_grad();
  net.backward(MapX<double>::Constant(g.rows(), g.cols(), 1.0), cache);

  for (const ParamRef<double>& p : net.params()) {
    CAPTURE(p.name);
    CHECK(p.grad_vec().cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("score net full gradient check on a toy architecture") {
  Rng rng(48);
  BackboneSpec spec;
  spec.in_ch = 1;
  spec.channels = {2};
  ScoreNet<double> net(spec, CombineMode::Subtract);
  net.init(rng);

  const ImagePairT<double> pair = testutil::random_pair<double>(1, 4, 4, rng);
  ScoreNet<double>::Cache cache;
  const MapX<double> g = net.forward(pair, cache);
  MapX<double> w = testutil::random_map<double>(static_cast<int>(g.rows()),
                                                static_cast<int>(g.cols()), rng);
  net.zero_grad();
  net.backward(w, cache);

  const ParamList<double> params = net.params();
  const auto loss = [&] { return (net.score(pair) * w).sum(); };
  // The bias-into-norm directions are exact zero-gradient directions; the
  // zero tolerance keeps finite-difference rounding noise out of the check.
  CHECK(testutil::max_relative_grad_error(params, loss, 1e-5, 1e-8) < 1e-5);
}

TEST_CASE("extract_features and head_project compose to the score") {
  Rng rng(49);
  BackboneSpec spec;
  spec.channels = {4};
  ScoreNet<double> net(spec, CombineMode::Subtract);
  net.init(rng);

  const ImagePairT<double> pair = testutil::random_pair<double>(3, 8, 8, rng);
  const Tensor<double> f1 = extract_features(net.backbone, pair.pre);
  const Tensor<double> f2 = extract_features(net.backbone, pair.post);
  const MapX<double> g = head_project(combine_features(f1, f2, net.combine), net.head);
  CHECK((g - net.score(pair)).abs().maxCoeff() == 0.0);
}
