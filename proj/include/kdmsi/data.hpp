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

#include <cstdint>
#include <string>
#include <vector>

#include "kdmsi/rng.hpp"
#include "kdmsi/tensor.hpp"

namespace kdmsi {

enum class ObjectKind { Rectangle, Ellipse, LShape };

std::string to_string(ObjectKind k);
ObjectKind object_kind_from_string(const std::string& s);

/// Parameters of the synthetic change-pair generator. Canvas dims must be
/// divisible by stride_multiple so generated pairs feed any backbone whose
/// output stride divides it.
struct SynthSpec {
  int height = 64;
  int width = 64;
  int stride_multiple = 16;
  std::vector<ObjectKind> kinds = {ObjectKind::Rectangle, ObjectKind::Ellipse,
                                   ObjectKind::LShape};
  int min_objects = 1;
  int max_objects = 3;
  double min_size = 10.0;  // object extent in pixels
  double max_size = 26.0;
  int max_static_objects = 2;
  double no_change_fraction = 0.3;
  double brightness_jitter = 0.04;  // per-image gain/offset amplitude
  double noise_stddev = 0.02;       // per-pixel Gaussian noise

  void validate() const;
};

/// One dataset entry: image pair, pixel-level change mask, image-level label.
struct Sample {
  ImagePair pair;
  Mask mask;
  int label = 0;  // 1 iff the pair contains change
};

struct TilePatch {
  ImagePair pair;
  Mask mask;
};

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;

  void validate() const;
};

struct DatasetSplit {
  std::vector<std::string> train, val, test;
  std::uint64_t seed = 0;
};

/// Seeded synthetic corpus. A change pair renders one background scene twice
/// (independent photometric jitter and noise per image) and inserts or
/// removes contrasting objects in the post image exactly on the mask support;
/// a no-change pair has an all-zero mask. label = 1 iff the mask has any
/// change pixel. Deterministic in (spec, n, seed).
std::vector<Sample> generate_synthetic_dataset(const SynthSpec& spec, int n, std::uint64_t seed);

/// Non-overlapping row-major tiles from the top-left; trailing partial tiles
/// are dropped. A tile larger than either dimension yields an empty list.
/// Patch ids are "<id>_r<row>_c<col>".
std::vector<TilePatch> tile_scene(const ImagePair& pair, const Mask& mask, int tile);

/// Weak image label: 1 iff change-pixel fraction exceeds min_fraction.
int derive_image_label(const Mask& mask, double min_fraction = 0.0);

/// Seeded shuffle, then floor-allocated val/test counts with the remainder
/// assigned to train. Requires at least 3 samples.
DatasetSplit split_dataset(const std::vector<std::string>& ids, const SplitRatios& ratios,
                           std::uint64_t seed);
DatasetSplit split_dataset(const std::vector<Sample>& samples, const SplitRatios& ratios,
                           std::uint64_t seed);

/// Samples whose pair.id appears in `ids`, in the order of `ids`.
std::vector<Sample> select_samples(const std::vector<Sample>& samples,
                                   const std::vector<std::string>& ids);

}  // namespace kdmsi
