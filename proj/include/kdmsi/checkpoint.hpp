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

#include "kdmsi/net.hpp"
#include "kdmsi/segnet.hpp"

namespace kdmsi {

/// Versioned binary checkpoint ("KDMS" magic, little-endian): architecture
/// header (backbone kind, stride, channel widths), the RNG seed used at
/// initialization, and named float32 parameter tensors.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_score_net(const std::string& path, ScoreNet<float>& net, std::uint64_t init_seed);
ScoreNet<float> load_score_net(const std::string& path, std::uint64_t* init_seed = nullptr);

void save_seg_net(const std::string& path, SegNet<float>& net, std::uint64_t init_seed);
SegNet<float> load_seg_net(const std::string& path, std::uint64_t* init_seed = nullptr);

/// "score" or "seg" without loading parameters.
std::string checkpoint_model_type(const std::string& path);

}  // namespace kdmsi
