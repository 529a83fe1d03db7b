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

#include <algorithm>
#include <cmath>

#include "fd_check.hpp"
#include "kdmsi/image.hpp"

using namespace kdmsi;

namespace {

/// Independent bilinear oracle: half-pixel centers, edge clamping.
double bilinear_oracle(const MapX<double>& src, int out_h, int out_w, int y, int x) {
  const auto sample_1d = [](int src_n, int dst_n, int i) {
    double pos = (i + 0.5) * static_cast<double>(src_n) / dst_n - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(src_n - 1));
    const int lo = static_cast<int>(pos);
    return std::tuple<int, int, double>{lo, std::min(lo + 1, src_n - 1), pos - lo};
  };
  const auto [y0, y1, fy] = sample_1d(static_cast<int>(src.rows()), out_h, y);
  const auto [x0, x1, fx] = sample_1d(static_cast<int>(src.cols()), out_w, x);
  return (1 - fy) * ((1 - fx) * src(y0, x0) + fx * src(y0, x1)) +
         fy * ((1 - fx) * src(y1, x0) + fx * src(y1, x1));
}

}  // namespace

TEST_CASE("bilinear resize matches the per-pixel oracle") {
  Rng rng(21);
  for (const auto [ih, iw, oh, ow] :
       {std::array<int, 4>{4, 4, 8, 8}, {8, 6, 3, 5}, {5, 7, 13, 2}, {1, 1, 4, 4}}) {
    const MapX<double> src = testutil::random_map<double>(ih, iw, rng);
    const MapX<double> dst = resize_bilinear(src, oh, ow);
    REQUIRE(dst.rows() == oh);
    REQUIRE(dst.cols() == ow);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        CHECK(dst(y, x) == doctest::Approx(bilinear_oracle(src, oh, ow, y, x)).epsilon(1e-12));
  }
}

TEST_CASE("bilinear resize to the same size returns the input unchanged") {
  Rng rng(22);
  const MapX<double> src = testutil::random_map<double>(6, 9, rng);
  const MapX<double> dst = resize_bilinear(src, 6, 9);
  CHECK((dst - src).abs().maxCoeff() == 0.0);

  const Tensor<double> t = testutil::random_tensor<double>(3, 6, 9, rng);
  const Tensor<double> t2 = resize_bilinear(t, 6, 9);
  CHECK((t2.data - t.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bilinear resize preserves constants and value bounds") {
  Rng rng(23);
  const MapX<double> flat = MapX<double>::Constant(5, 5, 3.25);
  const MapX<double> up = resize_bilinear(flat, 17, 11);
  CHECK(up.minCoeff() == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(up.maxCoeff() == doctest::Approx(3.25).epsilon(1e-12));

  const MapX<double> src = testutil::random_map<double>(7, 7, rng, 0.0, 1.0);
  const MapX<double> out = resize_bilinear(src, 19, 5);
  CHECK(out.minCoeff() >= src.minCoeff() - 1e-12);
  CHECK(out.maxCoeff() <= src.maxCoeff() + 1e-12);
}

TEST_CASE("resize commutes with horizontal flips") {
  Rng rng(24);
  const Tensor<double> t = testutil::random_tensor<double>(2, 6, 8, rng);
  const Tensor<double> a = resize_bilinear(flip_horizontal(t), 12, 20);
  const Tensor<double> b = flip_horizontal(resize_bilinear(t, 12, 20));
  CHECK((a.data - b.data).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("resize adjoint satisfies the dot-product identity") {
  // <resize(x), y> == <x, adjoint(y)> for any x, y: the defining property of
  // the transpose of a linear map.
  Rng rng(25);
  for (const auto [ih, iw, oh, ow] : {std::array<int, 4>{5, 4, 9, 11}, {8, 8, 3, 3}, {2, 7, 7, 2}}) {
    const Tensor<double> x = testutil::random_tensor<double>(3, ih, iw, rng);
    const Tensor<double> y = testutil::random_tensor<double>(3, oh, ow, rng);
    const Tensor<double> rx = resize_bilinear(x, oh, ow);
    const Tensor<double> ay = resize_bilinear_adjoint(y, ih, iw);
    const double lhs = (rx.data.array() * y.data.array()).sum();
    const double rhs = (x.data.array() * ay.data.array()).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("nearest resize of a mask keeps values binary and exact blocks") {
  Mask m(2, 2);
  m << 1, 0, 0, 1;
  const Mask up = resize_nearest(m, 4, 4);
  REQUIRE(up.rows() == 4);
  REQUIRE(up.cols() == 4);
  CHECK(static_cast<int>(up(0, 0)) == 1);
  CHECK(static_cast<int>(up(0, 1)) == 1);
  CHECK(static_cast<int>(up(0, 2)) == 0);
  CHECK(static_cast<int>(up(3, 3)) == 1);
  CHECK(static_cast<int>(up(3, 0)) == 0);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) CHECK((up(y, x) == 0 || up(y, x) == 1));
}

TEST_CASE("flip helper mirrors along the requested axis") {
  Rng rng(26);
  const Tensor<double> t = testutil::random_tensor<double>(1, 3, 5, rng);
  const Tensor<double> h = flip(t, FlipAxis::Horizontal);
  CHECK(h.at(0, 1, 0) == t.at(0, 1, 4));
  const Tensor<double> v = flip(t, FlipAxis::Vertical);
  CHECK(v.at(0, 0, 2) == t.at(0, 2, 2));

  const MapX<double> m = testutil::random_map<double>(3, 5, rng);
  CHECK(flip(m, FlipAxis::Horizontal)(0, 0) == m(0, 4));
  CHECK(flip(m, FlipAxis::Vertical)(0, 0) == m(2, 0));
}

TEST_CASE("scaled sizes snap up to the stride grid") {
  CHECK(scaled_size_snapped(64, 0.5, 16) == 32);
  CHECK(scaled_size_snapped(64, 1.0, 16) == 64);
  CHECK(scaled_size_snapped(64, 1.5, 16) == 96);
  CHECK(scaled_size_snapped(64, 2.0, 16) == 128);
  CHECK(scaled_size_snapped(50, 0.5, 16) == 32);   // 25 rounds up to 32
  CHECK(scaled_size_snapped(10, 0.1, 16) == 16);   // floor of one stride
  CHECK(scaled_size_snapped(64, 0.01, 16) == 16);  // never 0
  CHECK(scaled_size_snapped(6, 1.0, 2) == 6);
}
