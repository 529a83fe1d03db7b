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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "kdmsi/image_io.hpp"
#include "kdmsi/tensor.hpp"

namespace kdmsi {

/// Maps v in [0,1] to RGB through a blue-cyan-yellow-red ramp. Values outside
/// [0,1] clamp.
std::array<std::uint8_t, 3> colormap_heat(float v);

/// Renders a probability map through colormap_heat.
ImageU8 render_map(const Mapf& m);

/// One qualitative row: pre | post | truth | teacher CAM | student map | MSI
/// map, separated by white gutters. All inputs must share the pair's size.
ImageU8 figure_row(const ImagePair& pair, const Mask& truth, const Mapf& teacher_cam,
                   const Mapf& student, const Mapf& msi, int gutter = 4);

/// Stacks same-width rows vertically with white gutters.
ImageU8 stack_rows(const std::vector<ImageU8>& rows, int gutter = 4);

/// Renders the figure for `ids` from the artifacts under `run_dir` and writes
/// it to `out_path`. Ids whose artifacts are missing are skipped with a
/// warning on stderr. Returns the number of rows rendered; 0 means nothing
/// was written.
int write_figure(const std::string& run_dir, const std::vector<std::string>& ids,
                 const std::string& out_path, int gutter = 4);

}  // namespace kdmsi
