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

#include "kdmsi/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_map>

namespace kdmsi {

std::string to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::Rectangle: return "rectangle";
    case ObjectKind::Ellipse: return "ellipse";
    default: return "l-shape";
  }
}

ObjectKind object_kind_from_string(const std::string& s) {
  if (s == "rectangle") return ObjectKind::Rectangle;
  if (s == "ellipse") return ObjectKind::Ellipse;
  if (s == "l-shape") return ObjectKind::LShape;
  throw std::invalid_argument("unknown object kind: " + s);
}

void SynthSpec::validate() const {
  if (height <= 0 || width <= 0) throw std::invalid_argument("SynthSpec: zero canvas");
  if (stride_multiple < 1) throw std::invalid_argument("SynthSpec: stride_multiple must be >= 1");
  if (height % stride_multiple != 0 || width % stride_multiple != 0)
    throw std::invalid_argument("SynthSpec: canvas dims must be divisible by stride_multiple");
  if (kinds.empty()) throw std::invalid_argument("SynthSpec: empty object kinds");
  if (min_objects < 1 || max_objects < min_objects)
    throw std::invalid_argument("SynthSpec: bad object count range");
  if (min_size < 2.0 || max_size < min_size)
    throw std::invalid_argument("SynthSpec: bad object size range");
  if (max_size > std::min(height, width))
    throw std::invalid_argument("SynthSpec: objects larger than canvas");
  if (no_change_fraction < 0.0 || no_change_fraction > 1.0)
    throw std::invalid_argument("SynthSpec: no_change_fraction outside [0,1]");
  if (max_static_objects < 0) throw std::invalid_argument("SynthSpec: negative static count");
  if (brightness_jitter < 0.0 || noise_stddev < 0.0)
    throw std::invalid_argument("SynthSpec: negative noise level");
}

void SplitRatios::validate() const {
  if (train <= 0.0 || val <= 0.0 || test <= 0.0)
    throw std::invalid_argument("SplitRatios: ratios must be positive");
  if (std::abs(train + val + test - 1.0) > 1e-9)
    throw std::invalid_argument("SplitRatios: ratios must sum to 1");
}

namespace {

struct ObjectShape {
  ObjectKind kind = ObjectKind::Rectangle;
  double cx = 0, cy = 0;  // center
  double rx = 1, ry = 1;  // half extents
  int cut_quadrant = 0;   // L-shape: which quadrant of the rectangle is removed
  float color[3] = {0, 0, 0};
};

bool shape_covers(const ObjectShape& o, int x, int y) {
  const double dx = x - o.cx, dy = y - o.cy;
  switch (o.kind) {
    case ObjectKind::Rectangle:
      return std::abs(dx) <= o.rx && std::abs(dy) <= o.ry;
    case ObjectKind::Ellipse: {
      const double u = dx / o.rx, v = dy / o.ry;
      return u * u + v * v <= 1.0;
    }
    default: {
      if (std::abs(dx) > o.rx || std::abs(dy) > o.ry) return false;
      const bool right = dx > 0, below = dy > 0;
      const int quadrant = (below ? 2 : 0) + (right ? 1 : 0);
      return quadrant != o.cut_quadrant;
    }
  }
}

void paint(Tensorf& img, const ObjectShape& o) {
  const int y0 = std::max(0, static_cast<int>(std::floor(o.cy - o.ry)) - 1);
  const int y1 = std::min(img.h - 1, static_cast<int>(std::ceil(o.cy + o.ry)) + 1);
  const int x0 = std::max(0, static_cast<int>(std::floor(o.cx - o.rx)) - 1);
  const int x1 = std::min(img.w - 1, static_cast<int>(std::ceil(o.cx + o.rx)) + 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (shape_covers(o, x, y))
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = o.color[c];
}

void stamp_mask(Mask& mask, const ObjectShape& o) {
  const int y0 = std::max(0, static_cast<int>(std::floor(o.cy - o.ry)) - 1);
  const int y1 = std::min(static_cast<int>(mask.rows()) - 1,
                          static_cast<int>(std::ceil(o.cy + o.ry)) + 1);
  const int x0 = std::max(0, static_cast<int>(std::floor(o.cx - o.rx)) - 1);
  const int x1 = std::min(static_cast<int>(mask.cols()) - 1,
                          static_cast<int>(std::ceil(o.cx + o.rx)) + 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (shape_covers(o, x, y)) mask(y, x) = 1;
}

ObjectShape random_shape(const SynthSpec& spec, Rng& rng, bool contrasting) {
  ObjectShape o;
  o.kind = spec.kinds[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<int>(spec.kinds.size()) - 1))];
  o.rx = 0.5 * rng.uniform(spec.min_size, spec.max_size);
  o.ry = 0.5 * rng.uniform(spec.min_size, spec.max_size);
  o.cut_quadrant = rng.uniform_int(0, 3);
  o.cx = rng.uniform(o.rx + 1.0, spec.width - 1.0 - o.rx - 1.0);
  o.cy = rng.uniform(o.ry + 1.0, spec.height - 1.0 - o.ry - 1.0);
  // Change objects take a clearly bright or dark tone; statics stay mid-range.
  double base;
  if (contrasting)
    base = rng.bernoulli(0.5) ? rng.uniform(0.78, 0.95) : rng.uniform(0.02, 0.16);
  else
    base = rng.uniform(0.35, 0.65);
  for (int c = 0; c < 3; ++c)
    o.color[c] = static_cast<float>(std::clamp(base + rng.uniform(-0.05, 0.05), 0.0, 1.0));
  return o;
}

Tensorf render_background(const SynthSpec& spec, Rng& rng) {
  Tensorf img(3, spec.height, spec.width);
  double base[3];
  for (double& b : base) b = rng.uniform(0.3, 0.55);
  const double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);
  const double g_amp = rng.uniform(0.0, 0.12);
  struct Blob {
    double cx, cy, sigma, amp;
  };
  std::vector<Blob> blobs;
  const int n_blobs = rng.uniform_int(2, 4);
  for (int i = 0; i < n_blobs; ++i)
    blobs.push_back({rng.uniform(0.0, spec.width - 1.0), rng.uniform(0.0, spec.height - 1.0),
                     rng.uniform(6.0, 14.0), rng.uniform(-0.08, 0.08)});
  const double diag = std::hypot(spec.width - 1.0, spec.height - 1.0);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      double v = g_amp * (gx * x + gy * y) / diag;
      for (const Blob& b : blobs) {
        const double d2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
        v += b.amp * std::exp(-d2 / (2.0 * b.sigma * b.sigma));
      }
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) = static_cast<float>(std::clamp(base[c] + v, 0.0, 1.0));
    }
  }
  return img;
}

void photometric_jitter(Tensorf& img, const SynthSpec& spec, Rng& rng) {
  const double gain = 1.0 + rng.uniform(-spec.brightness_jitter, spec.brightness_jitter);
  const double offset = rng.uniform(-spec.brightness_jitter, spec.brightness_jitter) * 0.5;
  for (Eigen::Index i = 0; i < img.data.size(); ++i) {
    double v = gain * img.data.data()[i] + offset;
    if (spec.noise_stddev > 0.0) v += rng.normal(0.0, spec.noise_stddev);
    img.data.data()[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
}

std::string sample_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth_%05d", index);
  return buf;
}

}  // namespace

std::vector<Sample> generate_synthetic_dataset(const SynthSpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("generate_synthetic_dataset: n must be >= 1");
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    Sample s;
    s.pair.id = sample_id(i);
    s.mask = Mask::Zero(spec.height, spec.width);

    Tensorf scene = render_background(spec, rng);
    const int n_static = rng.uniform_int(0, spec.max_static_objects);
    for (int j = 0; j < n_static; ++j) paint(scene, random_shape(spec, rng, false));

    s.pair.pre = scene;
    s.pair.post = scene;
    const bool no_change = rng.uniform() < spec.no_change_fraction;
    if (!no_change) {
      const int n_obj = rng.uniform_int(spec.min_objects, spec.max_objects);
      for (int j = 0; j < n_obj; ++j) {
        const ObjectShape o = random_shape(spec, rng, true);
        // Insert paints the object only in post; remove paints it only in pre.
        paint(rng.bernoulli(0.5) ? s.pair.post : s.pair.pre, o);
        stamp_mask(s.mask, o);
      }
    }
    photometric_jitter(s.pair.pre, spec, rng);
    photometric_jitter(s.pair.post, spec, rng);
    s.label = derive_image_label(s.mask, 0.0);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TilePatch> tile_scene(const ImagePair& pair, const Mask& mask, int tile) {
  pair.validate();
  if (tile < 1) throw std::invalid_argument("tile_scene: tile must be >= 1");
  if (mask.rows() != pair.pre.h || mask.cols() != pair.pre.w)
    throw std::invalid_argument("tile_scene: mask shape mismatch");
  const int rows = pair.pre.h / tile, cols = pair.pre.w / tile;
  std::vector<TilePatch> out;
  out.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(std::max(cols, 0)));
  const int ch = pair.pre.channels();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      TilePatch p;
      p.pair.id = pair.id + "_r" + std::to_string(r) + "_c" + std::to_string(c);
      p.pair.pre = Tensorf(ch, tile, tile);
      p.pair.post = Tensorf(ch, tile, tile);
      p.mask = Mask(tile, tile);
      for (int y = 0; y < tile; ++y) {
        const int sy = r * tile + y;
        for (int x = 0; x < tile; ++x) {
          const int sx = c * tile + x;
          for (int k = 0; k < ch; ++k) {
            p.pair.pre.at(k, y, x) = pair.pre.at(k, sy, sx);
            p.pair.post.at(k, y, x) = pair.post.at(k, sy, sx);
          }
          p.mask(y, x) = mask(sy, sx);
        }
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

int derive_image_label(const Mask& mask, double min_fraction) {
  if (min_fraction < 0.0 || min_fraction >= 1.0)
    throw std::invalid_argument("derive_image_label: min_fraction outside [0,1)");
  std::uint64_t count = 0;
  for (Eigen::Index i = 0; i < mask.size(); ++i) count += mask.data()[i] != 0;
  const double frac = static_cast<double>(count) / static_cast<double>(mask.size());
  return frac > min_fraction ? 1 : 0;
}

DatasetSplit split_dataset(const std::vector<std::string>& ids, const SplitRatios& ratios,
                           std::uint64_t seed) {
  ratios.validate();
  const auto n = ids.size();
  if (n < 3) throw std::invalid_argument("split_dataset: need at least 3 samples");
  std::vector<std::string> shuffled = ids;
  Rng rng(seed);
  shuffle(shuffled, rng);
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.val));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.test));
  const auto n_train = n - n_val - n_test;
  DatasetSplit split;
  split.seed = seed;
  split.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train),
                   shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                    shuffled.end());
  return split;
}

DatasetSplit split_dataset(const std::vector<Sample>& samples, const SplitRatios& ratios,
                           std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(samples.size());
  for (const Sample& s : samples) ids.push_back(s.pair.id);
  return split_dataset(ids, ratios, seed);
}

std::vector<Sample> select_samples(const std::vector<Sample>& samples,
                                   const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const Sample*> by_id;
  by_id.reserve(samples.size());
  for (const Sample& s : samples) by_id.emplace(s.pair.id, &s);
  std::vector<Sample> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw std::invalid_argument("select_samples: unknown id " + id);
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace kdmsi
