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
#include "kdmsi/cam.hpp"
#include "kdmsi/losses.hpp"

using namespace kdmsi;

TEST_CASE("sigmoid is stable at extreme logits") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(1000.0) == doctest::Approx(1.0));
  CHECK(sigmoid(-1000.0) == doctest::Approx(0.0));
  CHECK(std::isfinite(sigmoid(-1000.0)));
  CHECK(sigmoid(2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
  // Symmetry: sigma(-z) = 1 - sigma(z).
  for (double z : {0.1, 1.0, 5.0, 30.0})
    CHECK(sigmoid(-z) == doctest::Approx(1.0 - sigmoid(z)).epsilon(1e-12));
}

TEST_CASE("sigmoid_map applies elementwise") {
  MapX<double> g(1, 3);
  g << -1.0, 0.0, 2.0;
  const MapX<double> p = sigmoid_map(g);
  CHECK(p(0, 0) == doctest::Approx(sigmoid(-1.0)));
  CHECK(p(0, 1) == 0.5);
  CHECK(p(0, 2) == doctest::Approx(sigmoid(2.0)));
}

TEST_CASE("binary cross entropy with logits: values, stability, gradient") {
  CHECK(bce_with_logit(0.0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_with_logit(0.0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_with_logit(100.0, 1) == doctest::Approx(0.0));
  CHECK(bce_with_logit(-100.0, 0) == doctest::Approx(0.0));
  CHECK(std::isfinite(bce_with_logit(1000.0, 0)));
  CHECK(bce_with_logit(1000.0, 0) == doctest::Approx(1000.0));
  CHECK_THROWS_AS(bce_with_logit(0.0, 2), std::invalid_argument);

  // Gradient vs central differences.
  for (const double z : {-3.0, -0.5, 0.0, 1.2, 8.0}) {
    for (const int y : {0, 1}) {
      const double h = 1e-6;
      const double fd = (bce_with_logit(z + h, y) - bce_with_logit(z - h, y)) / (2 * h);
      CHECK(bce_with_logit_grad(z, y) == doctest::Approx(fd).epsilon(1e-6));
      CHECK(bce_with_logit_grad(z, y) == doctest::Approx(sigmoid(z) - y).epsilon(1e-12));
    }
  }
}

TEST_CASE("mean squared map error and its gradient in the second argument") {
  Rng rng(51);
  const MapX<double> a = testutil::random_map<double>(4, 5, rng);
  MapX<double> b = testutil::random_map<double>(4, 5, rng);

  double acc = 0;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) acc += (a(y, x) - b(y, x)) * (a(y, x) - b(y, x));
  CHECK(mse_map(a, b) == doctest::Approx(acc / 20.0).epsilon(1e-12));
  CHECK(mse_map(a, a) == 0.0);

  const MapX<double> g = mse_map_grad(a, b);
  const double h = 1e-6;
  for (const auto [y, x] : {std::pair<int, int>{0, 0}, {2, 3}, {3, 4}}) {
    MapX<double> bp = b, bm = b;
    bp(y, x) += h;
    bm(y, x) -= h;
    const double fd = (mse_map(a, bp) - mse_map(a, bm)) / (2 * h);
    CHECK(g(y, x) == doctest::Approx(fd).epsilon(1e-6));
  }

  MapX<double> wrong(5, 4);
  CHECK_THROWS_AS(mse_map(a, wrong), std::invalid_argument);
}

TEST_CASE("total loss is the lambda-weighted sum") {
  CHECK(total_loss(0.7, 0.02, 10.0) == doctest::Approx(0.7 + 0.2).epsilon(1e-12));
  CHECK(total_loss(0.7, 0.02, 0.0) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK_THROWS_AS(total_loss(0.5, 0.1, -1.0), std::invalid_argument);
}

TEST_CASE("classification logit is the spatial mean of the score map") {
  MapX<double> g(2, 2);
  g << 1.0, 2.0, 3.0, 6.0;
  CHECK(classification_logit(g) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("cam normalization on a known map") {
  MapX<double> g(2, 3);
  g << -1.0, 0.0, 1.0, 2.0, 4.0, -3.0;
  const MapX<double> cam = cam_normalize(g);
  CHECK(cam(0, 0) == 0.0);
  CHECK(cam(0, 1) == 0.0);
  CHECK(cam(0, 2) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(cam(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cam(1, 1) == 1.0);
  CHECK(cam(1, 2) == 0.0);
}

TEST_CASE("cam normalization guards all-nonpositive and near-zero maps") {
  MapX<double> neg(2, 2);
  neg << -1.0, -2.0, -0.5, 0.0;
  CHECK(cam_normalize(neg).abs().maxCoeff() == 0.0);

  MapX<double> tiny = MapX<double>::Constant(3, 3, kCamZeroGuard / 2);
  CHECK(cam_normalize(tiny).abs().maxCoeff() == 0.0);

  MapX<double> ok = MapX<double>::Constant(3, 3, kCamZeroGuard * 3);
  CHECK(cam_normalize(ok).maxCoeff() == 1.0);
}

TEST_CASE("cam normalization properties over random maps") {
  Rng rng(52);
  for (int trial = 0; trial < 300; ++trial) {
    const int h = rng.uniform_int(1, 8), w = rng.uniform_int(1, 8);
    const MapX<double> g = testutil::random_map<double>(h, w, rng, -2.0, 2.0);
    const MapX<double> cam = cam_normalize(g);
    REQUIRE(cam.rows() == h);
    REQUIRE(cam.cols() == w);
    CHECK(cam.minCoeff() >= 0.0);
    CHECK(cam.maxCoeff() <= 1.0);
    if (g.maxCoeff() > kCamZeroGuard) CHECK(cam.maxCoeff() == 1.0);

    // Idempotence: renormalizing a normalized map changes nothing.
    const MapX<double> twice = cam_normalize(cam);
    CHECK((twice - cam).abs().maxCoeff() == 0.0);
  }
}
