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

#include "kdmsi/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace kdmsi {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + path);
  return f;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;

  PngReader() {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) {
      png_destroy_read_struct(&png, &info, nullptr);
      throw std::runtime_error("libpng: allocation failed");
    }
  }
  PngReader(const PngReader&) = delete;
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;

  PngWriter() {
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("libpng: allocation failed");
    }
  }
  PngWriter(const PngWriter&) = delete;
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

}  // namespace

ImageU8 read_png_u8(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  PngReader r;
  if (setjmp(png_jmpbuf(r.png))) throw std::runtime_error("libpng: failed reading " + path);
  png_init_io(r.png, f.get());
  png_read_info(r.png, r.info);

  const int bit_depth = png_get_bit_depth(r.png, r.info);
  if (bit_depth > 8) throw std::runtime_error(path + ": 16-bit PNG where 8-bit expected");
  const int color = png_get_color_type(r.png, r.info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png);
  png_read_update_info(r.png, r.info);

  ImageU8 img;
  img.h = static_cast<int>(png_get_image_height(r.png, r.info));
  img.w = static_cast<int>(png_get_image_width(r.png, r.info));
  img.ch = static_cast<int>(png_get_channels(r.png, r.info));
  if (img.ch != 1 && img.ch != 3)
    throw std::runtime_error(path + ": expected 1 or 3 channels, got " + std::to_string(img.ch));
  img.pix.resize(static_cast<std::size_t>(img.h) * img.w * img.ch);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.h));
  for (int y = 0; y < img.h; ++y)
    rows[static_cast<std::size_t>(y)] = img.pix.data() + static_cast<std::size_t>(y) * img.w * img.ch;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return img;
}

void write_png_u8(const std::string& path, const ImageU8& img) {
  if (img.h <= 0 || img.w <= 0 || (img.ch != 1 && img.ch != 3))
    throw std::invalid_argument("write_png_u8: bad image shape");
  if (img.pix.size() != static_cast<std::size_t>(img.h) * img.w * img.ch)
    throw std::invalid_argument("write_png_u8: pixel buffer size mismatch");
  FilePtr f = open_file(path, "wb");
  PngWriter w;
  if (setjmp(png_jmpbuf(w.png))) throw std::runtime_error("libpng: failed writing " + path);
  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(img.w), static_cast<png_uint_32>(img.h), 8,
               img.ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  for (int y = 0; y < img.h; ++y)
    png_write_row(w.png, const_cast<png_bytep>(img.pix.data() +
                                               static_cast<std::size_t>(y) * img.w * img.ch));
  png_write_end(w.png, nullptr);
}

ImageU16 read_png_u16(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  PngReader r;
  if (setjmp(png_jmpbuf(r.png))) throw std::runtime_error("libpng: failed reading " + path);
  png_init_io(r.png, f.get());
  png_read_info(r.png, r.info);
  if (png_get_bit_depth(r.png, r.info) != 16 ||
      png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_GRAY)
    throw std::runtime_error(path + ": expected 16-bit grayscale PNG");
  png_read_update_info(r.png, r.info);

  ImageU16 img;
  img.h = static_cast<int>(png_get_image_height(r.png, r.info));
  img.w = static_cast<int>(png_get_image_width(r.png, r.info));
  img.pix.resize(static_cast<std::size_t>(img.h) * img.w);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.w) * 2);
  for (int y = 0; y < img.h; ++y) {
    png_read_row(r.png, row.data(), nullptr);
    for (int x = 0; x < img.w; ++x)  // PNG is big-endian
      img.pix[static_cast<std::size_t>(y) * img.w + x] =
          static_cast<std::uint16_t>((row[2 * static_cast<std::size_t>(x)] << 8) |
                                     row[2 * static_cast<std::size_t>(x) + 1]);
  }
  png_read_end(r.png, nullptr);
  return img;
}

void write_png_u16(const std::string& path, const ImageU16& img) {
  if (img.h <= 0 || img.w <= 0 ||
      img.pix.size() != static_cast<std::size_t>(img.h) * img.w)
    throw std::invalid_argument("write_png_u16: bad image shape");
  FilePtr f = open_file(path, "wb");
  PngWriter w;
  if (setjmp(png_jmpbuf(w.png))) throw std::runtime_error("libpng: failed writing " + path);
  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(img.w), static_cast<png_uint_32>(img.h), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.w) * 2);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      const std::uint16_t v = img.pix[static_cast<std::size_t>(y) * img.w + x];
      row[2 * static_cast<std::size_t>(x)] = static_cast<std::uint8_t>(v >> 8);
      row[2 * static_cast<std::size_t>(x) + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    png_write_row(w.png, row.data());
  }
  png_write_end(w.png, nullptr);
}

Tensorf tensor_from_u8(const ImageU8& img) {
  Tensorf t(img.ch, img.h, img.w);
  constexpr float kInv = 1.0f / 255.0f;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < img.ch; ++c) t.at(c, y, x) = kInv * img.at(y, x, c);
  return t;
}

ImageU8 u8_from_tensor(const Tensorf& t) {
  if (t.channels() != 1 && t.channels() != 3)
    throw std::invalid_argument("u8_from_tensor: expected 1 or 3 channels");
  ImageU8 img;
  img.h = t.h;
  img.w = t.w;
  img.ch = t.channels();
  img.pix.resize(static_cast<std::size_t>(img.h) * img.w * img.ch);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < img.ch; ++c) {
        const float v = std::min(1.0f, std::max(0.0f, t.at(c, y, x)));
        img.at(y, x, c) = static_cast<std::uint8_t>(std::lround(255.0f * v));
      }
  return img;
}

Mask mask_from_u8(const ImageU8& img) {
  if (img.ch != 1) throw std::invalid_argument("mask_from_u8: expected single channel");
  Mask m(img.h, img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) m(y, x) = img.at(y, x, 0) != 0 ? 1 : 0;
  return m;
}

ImageU8 u8_from_mask(const Mask& m) {
  ImageU8 img;
  img.h = static_cast<int>(m.rows());
  img.w = static_cast<int>(m.cols());
  img.ch = 1;
  img.pix.resize(static_cast<std::size_t>(img.h) * img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) img.at(y, x, 0) = m(y, x) != 0 ? 255 : 0;
  return img;
}

Mapf map_from_u16(const ImageU16& img) {
  Mapf m(img.h, img.w);
  constexpr float kInv = 1.0f / 65535.0f;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) m(y, x) = kInv * img.pix[static_cast<std::size_t>(y) * img.w + x];
  return m;
}

ImageU16 u16_from_map(const Mapf& m) {
  ImageU16 img;
  img.h = static_cast<int>(m.rows());
  img.w = static_cast<int>(m.cols());
  img.pix.resize(static_cast<std::size_t>(img.h) * img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      const float v = std::min(1.0f, std::max(0.0f, m(y, x)));
      img.pix[static_cast<std::size_t>(y) * img.w + x] =
          static_cast<std::uint16_t>(std::lround(65535.0f * v));
    }
  return img;
}

}  // namespace kdmsi
