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

#include "kdmsi/figure.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kdmsi/dataset_io.hpp"

namespace fs = std::filesystem;

namespace kdmsi {

namespace {

float clamp01(float v) { return std::min(1.0f, std::max(0.0f, v)); }

std::uint8_t to_u8(float v) { return static_cast<std::uint8_t>(std::lround(255.0f * clamp01(v))); }

/// Copies src into dst with its top-left corner at (y0, x0). Gray sources
/// replicate into all three destination channels.
void blit(ImageU8& dst, const ImageU8& src, int y0, int x0) {
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < src.w; ++x)
      for (int c = 0; c < 3; ++c)
        dst.at(y0 + y, x0 + x, c) = src.ch == 3 ? src.at(y, x, c) : src.at(y, x, 0);
}

}  // namespace

std::array<std::uint8_t, 3> colormap_heat(float v) {
  v = clamp01(v);
  // Piecewise-linear ramp through blue, cyan, yellow, red.
  float r, g, b;
  if (v < 1.0f / 3) {
    const float t = v * 3;
    r = 0, g = t, b = 1;
  } else if (v < 2.0f / 3) {
    const float t = (v - 1.0f / 3) * 3;
    r = t, g = 1, b = 1 - t;
  } else {
    const float t = (v - 2.0f / 3) * 3;
    r = 1, g = 1 - t, b = 0;
  }
  return {to_u8(r), to_u8(g), to_u8(b)};
}

ImageU8 render_map(const Mapf& m) {
  ImageU8 img;
  img.h = static_cast<int>(m.rows());
  img.w = static_cast<int>(m.cols());
  img.ch = 3;
  img.pix.resize(static_cast<std::size_t>(img.h) * img.w * 3);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      const auto c = colormap_heat(m(y, x));
      for (int k = 0; k < 3; ++k) img.at(y, x, k) = c[k];
    }
  return img;
}

ImageU8 figure_row(const ImagePair& pair, const Mask& truth, const Mapf& teacher_cam,
                   const Mapf& student, const Mapf& msi, int gutter) {
  if (gutter < 0) throw std::invalid_argument("figure_row: negative gutter");
  const int h = pair.pre.h, w = pair.pre.w;
  auto check = [&](long rows, long cols, const char* what) {
    if (rows != h || cols != w)
      throw std::invalid_argument(std::string("figure_row: ") + what + " size mismatch");
  };
  check(truth.rows(), truth.cols(), "truth");
  check(teacher_cam.rows(), teacher_cam.cols(), "teacher cam");
  check(student.rows(), student.cols(), "student map");
  check(msi.rows(), msi.cols(), "msi map");

  const std::vector<ImageU8> panels = {u8_from_tensor(pair.pre), u8_from_tensor(pair.post),
                                       u8_from_mask(truth),      render_map(teacher_cam),
                                       render_map(student),      render_map(msi)};
  ImageU8 row;
  row.h = h;
  row.w = 6 * w + 5 * gutter;
  row.ch = 3;
  row.pix.assign(static_cast<std::size_t>(row.h) * row.w * 3, 255);
  for (std::size_t i = 0; i < panels.size(); ++i)
    blit(row, panels[i], 0, static_cast<int>(i) * (w + gutter));
  return row;
}

ImageU8 stack_rows(const std::vector<ImageU8>& rows, int gutter) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
  if (gutter < 0) throw std::invalid_argument("stack_rows: negative gutter");
  const int w = rows.front().w;
  int h = -gutter;
  for (const ImageU8& r : rows) {
    if (r.w != w) throw std::invalid_argument("stack_rows: row width mismatch");
    h += r.h + gutter;
  }
  ImageU8 grid;
  grid.h = h;
  grid.w = w;
  grid.ch = 3;
  grid.pix.assign(static_cast<std::size_t>(h) * w * 3, 255);
  int y = 0;
  for (const ImageU8& r : rows) {
    blit(grid, r, y, 0);
    y += r.h + gutter;
  }
  return grid;
}

int write_figure(const std::string& run_dir, const std::vector<std::string>& ids,
                 const std::string& out_path, int gutter) {
  std::string data_dir;
  {
    std::ifstream in(fs::path(run_dir) / "run.json");
    if (!in) throw std::runtime_error("cannot open " + run_dir + "/run.json");
    nlohmann::json j;
    in >> j;
    data_dir = j.at("dataset_dir").get<std::string>();
  }
  const std::vector<Sample> all = load_dataset(data_dir);

  std::vector<ImageU8> rows;
  for (const std::string& id : ids) {
    const auto it = std::find_if(all.begin(), all.end(),
                                 [&](const Sample& s) { return s.pair.id == id; });
    const fs::path maps = fs::path(run_dir) / "maps";
    const std::string cam_p = (maps / "teacher_cam" / (id + ".png")).string();
    const std::string stu_p = (maps / "student" / (id + ".png")).string();
    const std::string msi_p = (maps / "msi" / (id + ".png")).string();
    if (it == all.end() || !fs::exists(cam_p) || !fs::exists(stu_p) || !fs::exists(msi_p)) {
      std::fprintf(stderr, "figure: skipping %s (missing sample or maps)\n", id.c_str());
      continue;
    }
    rows.push_back(
        figure_row(it->pair, it->mask, load_map(cam_p), load_map(stu_p), load_map(msi_p), gutter));
  }
  if (rows.empty()) return 0;
  write_png_u8(out_path, stack_rows(rows, gutter));
  return static_cast<int>(rows.size());
}

}  // namespace kdmsi
