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

#include "kdmsi/data.hpp"
#include "kdmsi/msi.hpp"
#include "kdmsi/net.hpp"
#include "kdmsi/segnet.hpp"
#include "kdmsi/train.hpp"

namespace kdmsi {

/// Full experiment description, read from an INI-style file with sections
/// [dataset], [model], [kd], [msi], [seg], [run]. Every field has a default;
/// an empty file is a valid experiment on the synthetic dataset.
struct ExperimentConfig {
  // [dataset] path empty -> generate synthetically from `synth`.
  std::string dataset_path;
  SynthSpec synth;
  int synth_count = 250;
  int tile = 0;  // 0 = no tiling
  SplitRatios ratios;
  double weak_label_min_fraction = 0.0;

  // [model]
  BackboneKind backbone = BackboneKind::TinyCnn;
  CombineMode combine = CombineMode::AbsSubtract;
  bool combine_sweep = false;  // "combine = sweep": pick by validation IoU

  // [kd]
  KDTrainConfig kd;

  // [msi]
  ScaleSet scales;
  double bg_threshold = 0.3;
  bool bg_threshold_sweep = false;  // sweep {0.1..0.9} by validation IoU

  // [seg]
  SegTrainConfig seg;
  std::vector<int> seg_dilations = {1, 2, 4};
  int seg_context_ch = 24;
  int seg_fuse_ch = 48;
  int seg_low_ch = 8;
  int seg_decoder_ch = 32;

  // [run]
  std::uint64_t seed = 42;
  std::string out_dir = "runs/experiment";

  BackboneSpec backbone_spec() const { return BackboneSpec::from_kind(backbone); }

  SegSpec seg_spec() const {
    SegSpec s;
    s.encoder = backbone_spec();
    s.dilations = seg_dilations;
    s.context_ch = seg_context_ch;
    s.fuse_ch = seg_fuse_ch;
    s.low_ch = seg_low_ch;
    s.decoder_ch = seg_decoder_ch;
    return s;
  }

  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// The config serialized back to INI text (all fields explicit).
std::string config_to_text(const ExperimentConfig& cfg);

}  // namespace kdmsi
