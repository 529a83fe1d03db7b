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

#include "kdmsi/tensor.hpp"

namespace kdmsi {

/// Interleaved row-major 8-bit raster, 1 (gray) or 3 (RGB) channels.
struct ImageU8 {
  int h = 0, w = 0, ch = 0;
  std::vector<std::uint8_t> pix;

  std::uint8_t& at(int y, int x, int c) {
    return pix[(static_cast<std::size_t>(y) * w + x) * ch + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pix[(static_cast<std::size_t>(y) * w + x) * ch + c];
  }
};

/// Single-channel row-major 16-bit raster (probability-map export format).
struct ImageU16 {
  int h = 0, w = 0;
  std::vector<std::uint16_t> pix;
};

/// 8-bit PNG. Palette images expand to RGB, alpha is stripped, 16-bit files
/// are rejected.
ImageU8 read_png_u8(const std::string& path);
void write_png_u8(const std::string& path, const ImageU8& img);

/// 16-bit grayscale PNG only.
ImageU16 read_png_u16(const std::string& path);
void write_png_u16(const std::string& path, const ImageU16& img);

/// Raster conversions. u8 -> float divides by 255; float -> u8 clamps to
/// [0,1] then rounds to 255ths; maps use the 16-bit scale 65535.
Tensorf tensor_from_u8(const ImageU8& img);
ImageU8 u8_from_tensor(const Tensorf& t);
Mask mask_from_u8(const ImageU8& img);  // nonzero -> 1; requires 1 channel
ImageU8 u8_from_mask(const Mask& m);    // {0,1} -> {0,255}
Mapf map_from_u16(const ImageU16& img);
ImageU16 u16_from_map(const Mapf& m);

}  // namespace kdmsi
