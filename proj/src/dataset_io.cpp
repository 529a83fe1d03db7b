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

#include "kdmsi/dataset_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kdmsi/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kdmsi {

namespace {

json spec_to_json(const SynthSpec& s) {
  json kinds = json::array();
  for (ObjectKind k : s.kinds) kinds.push_back(to_string(k));
  return {{"height", s.height},
          {"width", s.width},
          {"stride_multiple", s.stride_multiple},
          {"kinds", kinds},
          {"min_objects", s.min_objects},
          {"max_objects", s.max_objects},
          {"min_size", s.min_size},
          {"max_size", s.max_size},
          {"max_static_objects", s.max_static_objects},
          {"no_change_fraction", s.no_change_fraction},
          {"brightness_jitter", s.brightness_jitter},
          {"noise_stddev", s.noise_stddev}};
}

SynthSpec spec_from_json(const json& j) {
  SynthSpec s;
  s.height = j.at("height").get<int>();
  s.width = j.at("width").get<int>();
  s.stride_multiple = j.at("stride_multiple").get<int>();
  s.kinds.clear();
  for (const auto& k : j.at("kinds")) s.kinds.push_back(object_kind_from_string(k.get<std::string>()));
  s.min_objects = j.at("min_objects").get<int>();
  s.max_objects = j.at("max_objects").get<int>();
  s.min_size = j.at("min_size").get<double>();
  s.max_size = j.at("max_size").get<double>();
  s.max_static_objects = j.at("max_static_objects").get<int>();
  s.no_change_fraction = j.at("no_change_fraction").get<double>();
  s.brightness_jitter = j.at("brightness_jitter").get<double>();
  s.noise_stddev = j.at("noise_stddev").get<double>();
  return s;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

}  // namespace

void save_dataset(const std::string& dir, const std::vector<Sample>& samples,
                  const std::optional<DatasetMeta>& meta) {
  const fs::path root(dir);
  fs::create_directories(root / "A");
  fs::create_directories(root / "B");
  fs::create_directories(root / "label");
  for (const Sample& s : samples) {
    const std::string name = s.pair.id + ".png";
    write_png_u8((root / "A" / name).string(), u8_from_tensor(s.pair.pre));
    write_png_u8((root / "B" / name).string(), u8_from_tensor(s.pair.post));
    write_png_u8((root / "label" / name).string(), u8_from_mask(s.mask));
  }
  if (meta) {
    json j = {{"kind", "synthetic"},
              {"seed", meta->seed},
              {"count", meta->count},
              {"spec", spec_to_json(meta->spec)}};
    write_json_file((root / "meta.json").string(), j);
  }
}

std::vector<Sample> load_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root / "A"))
    throw std::runtime_error(dir + ": missing A/ directory (expected A/, B/, label/)");
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(root / "A"))
    if (e.path().extension() == ".png") ids.push_back(e.path().stem().string());
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw std::runtime_error(dir + ": no .png files under A/");

  std::vector<Sample> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    const std::string name = id + ".png";
    const fs::path b = root / "B" / name, l = root / "label" / name;
    if (!fs::exists(b)) throw std::runtime_error(b.string() + ": missing post image");
    if (!fs::exists(l)) throw std::runtime_error(l.string() + ": missing label mask");
    Sample s;
    s.pair.id = id;
    s.pair.pre = tensor_from_u8(read_png_u8((root / "A" / name).string()));
    s.pair.post = tensor_from_u8(read_png_u8(b.string()));
    s.pair.validate();
    s.mask = mask_from_u8(read_png_u8(l.string()));
    if (s.mask.rows() != s.pair.pre.h || s.mask.cols() != s.pair.pre.w)
      throw std::runtime_error(l.string() + ": mask shape differs from images");
    s.label = derive_image_label(s.mask, 0.0);
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<DatasetMeta> load_dataset_meta(const std::string& dir) {
  const fs::path p = fs::path(dir) / "meta.json";
  if (!fs::exists(p)) return std::nullopt;
  const json j = read_json_file(p.string());
  DatasetMeta m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.count = j.at("count").get<int>();
  m.spec = spec_from_json(j.at("spec"));
  return m;
}

void save_split(const std::string& path, const DatasetSplit& split) {
  const json j = {
      {"seed", split.seed}, {"train", split.train}, {"val", split.val}, {"test", split.test}};
  write_json_file(path, j);
}

DatasetSplit load_split(const std::string& path) {
  const json j = read_json_file(path);
  DatasetSplit s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train = j.at("train").get<std::vector<std::string>>();
  s.val = j.at("val").get<std::vector<std::string>>();
  s.test = j.at("test").get<std::vector<std::string>>();
  return s;
}

void save_map(const std::string& path, const Mapf& m) { write_png_u16(path, u16_from_map(m)); }

Mapf load_map(const std::string& path) { return map_from_u16(read_png_u16(path)); }

void save_mask(const std::string& path, const Mask& m) { write_png_u8(path, u8_from_mask(m)); }

Mask load_mask(const std::string& path) { return mask_from_u8(read_png_u8(path)); }

}  // namespace kdmsi
