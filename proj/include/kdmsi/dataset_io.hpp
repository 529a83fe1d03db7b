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
#include <optional>
#include <string>
#include <vector>

#include "kdmsi/data.hpp"

namespace kdmsi {

/// Metadata persisted next to a generated dataset.
struct DatasetMeta {
  SynthSpec spec;
  std::uint64_t seed = 0;
  int count = 0;
};

/// On-disk layout: A/<id>.png (pre), B/<id>.png (post), label/<id>.png
/// (single-channel, 0 = background, 255 = change), plus meta.json when the
/// dataset was generated rather than ingested.
void save_dataset(const std::string& dir, const std::vector<Sample>& samples,
                  const std::optional<DatasetMeta>& meta = std::nullopt);

/// Loads every id found in A/ (sorted); requires matching files in B/ and
/// label/. Images are normalized to [0,1]; labels derive from the mask.
std::vector<Sample> load_dataset(const std::string& dir);

std::optional<DatasetMeta> load_dataset_meta(const std::string& dir);

void save_split(const std::string& path, const DatasetSplit& split);
DatasetSplit load_split(const std::string& path);

/// Probability maps as 16-bit grayscale PNGs, masks as 0/255 PNGs.
void save_map(const std::string& path, const Mapf& m);
Mapf load_map(const std::string& path);
void save_mask(const std::string& path, const Mask& m);
Mask load_mask(const std::string& path);

}  // namespace kdmsi
