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

#include "kdmsi/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kdmsi {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long n = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(n);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(n);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": '" + v + "'");
}

struct KeyHandler {
  ExperimentConfig* cfg;

  void apply(const std::string& section, const std::string& key, const std::string& value) {
    const std::string full = section + "." + key;
    if (section == "dataset")
      dataset(full, key, value);
    else if (section == "model")
      model(full, key, value);
    else if (section == "kd")
      kd(full, key, value);
    else if (section == "msi")
      msi(full, key, value);
    else if (section == "seg")
      seg(full, key, value);
    else if (section == "run")
      run(full, key, value);
    else
      throw std::invalid_argument("config: unknown section [" + section + "]");
  }

  void dataset(const std::string& full, const std::string& key, const std::string& v) {
    SynthSpec& s = cfg->synth;
    if (key == "path")
      cfg->dataset_path = v;
    else if (key == "count")
      cfg->synth_count = parse_int(full, v);
    else if (key == "height")
      s.height = parse_int(full, v);
    else if (key == "width")
      s.width = parse_int(full, v);
    else if (key == "stride_multiple")
      s.stride_multiple = parse_int(full, v);
    else if (key == "kinds") {
      s.kinds.clear();
      for (const auto& k : split_list(v)) s.kinds.push_back(object_kind_from_string(k));
    } else if (key == "min_objects")
      s.min_objects = parse_int(full, v);
    else if (key == "max_objects")
      s.max_objects = parse_int(full, v);
    else if (key == "min_size")
      s.min_size = parse_double(full, v);
    else if (key == "max_size")
      s.max_size = parse_double(full, v);
    else if (key == "max_static_objects")
      s.max_static_objects = parse_int(full, v);
    else if (key == "no_change_fraction")
      s.no_change_fraction = parse_double(full, v);
    else if (key == "brightness_jitter")
      s.brightness_jitter = parse_double(full, v);
    else if (key == "noise_stddev")
      s.noise_stddev = parse_double(full, v);
    else if (key == "tile")
      cfg->tile = parse_int(full, v);
    else if (key == "train_ratio")
      cfg->ratios.train = parse_double(full, v);
    else if (key == "val_ratio")
      cfg->ratios.val = parse_double(full, v);
    else if (key == "test_ratio")
      cfg->ratios.test = parse_double(full, v);
    else if (key == "weak_label_min_fraction")
      cfg->weak_label_min_fraction = parse_double(full, v);
    else
      throw std::invalid_argument("config: unknown key " + full);
  }

  void model(const std::string& full, const std::string& key, const std::string& v) {
    if (key == "backbone")
      cfg->backbone = backbone_kind_from_string(v);
    else if (key == "combine") {
      if (v == "sweep")
        cfg->combine_sweep = true;
      else
        cfg->combine = combine_mode_from_string(v);
    } else
      throw std::invalid_argument("config: unknown key " + full);
  }

  void kd(const std::string& full, const std::string& key, const std::string& v) {
    KDTrainConfig& k = cfg->kd;
    if (key == "lambda")
      k.lambda = parse_double(full, v);
    else if (key == "batch_size")
      k.batch_size = parse_int(full, v);
    else if (key == "epochs")
      k.epochs = parse_int(full, v);
    else if (key == "lr")
      k.lr = parse_double(full, v);
    else if (key == "poly_power")
      k.poly_power = parse_double(full, v);
    else if (key == "momentum")
      k.momentum = parse_double(full, v);
    else if (key == "patience")
      k.patience = parse_int(full, v);
    else if (key == "eval_split") {
      if (v != "train" && v != "val")
        throw std::invalid_argument("config: kd.eval_split must be train or val");
      k.eval_split = v;
    } else if (key == "eval_resize")
      k.eval_resize = eval_resize_from_string(v);
    else
      throw std::invalid_argument("config: unknown key " + full);
  }

  void msi(const std::string& full, const std::string& key, const std::string& v) {
    if (key == "scales") {
      cfg->scales.scales.clear();
      for (const auto& s : split_list(v)) cfg->scales.scales.push_back(parse_double(full, s));
    } else if (key == "flip")
      cfg->scales.flip = parse_bool(full, v);
    else if (key == "flip_axis") {
      if (v == "horizontal")
        cfg->scales.flip_axis = FlipAxis::Horizontal;
      else if (v == "vertical")
        cfg->scales.flip_axis = FlipAxis::Vertical;
      else
        throw std::invalid_argument("config: msi.flip_axis must be horizontal or vertical");
    } else if (key == "bg_threshold") {
      if (v == "sweep")
        cfg->bg_threshold_sweep = true;
      else
        cfg->bg_threshold = parse_double(full, v);
    } else
      throw std::invalid_argument("config: unknown key " + full);
  }

  void seg(const std::string& full, const std::string& key, const std::string& v) {
    SegTrainConfig& s = cfg->seg;
    if (key == "batch_size")
      s.batch_size = parse_int(full, v);
    else if (key == "epochs")
      s.epochs = parse_int(full, v);
    else if (key == "lr")
      s.lr = parse_double(full, v);
    else if (key == "poly_power")
      s.poly_power = parse_double(full, v);
    else if (key == "momentum")
      s.momentum = parse_double(full, v);
    else if (key == "patience")
      s.patience = parse_int(full, v);
    else if (key == "dilations") {
      cfg->seg_dilations.clear();
      for (const auto& d : split_list(v)) cfg->seg_dilations.push_back(parse_int(full, d));
    } else if (key == "context_ch")
      cfg->seg_context_ch = parse_int(full, v);
    else if (key == "fuse_ch")
      cfg->seg_fuse_ch = parse_int(full, v);
    else if (key == "low_ch")
      cfg->seg_low_ch = parse_int(full, v);
    else if (key == "decoder_ch")
      cfg->seg_decoder_ch = parse_int(full, v);
    else
      throw std::invalid_argument("config: unknown key " + full);
  }

  void run(const std::string& full, const std::string& key, const std::string& v) {
    if (key == "seed")
      cfg->seed = parse_u64(full, v);
    else if (key == "out")
      cfg->out_dir = v;
    else
      throw std::invalid_argument("config: unknown key " + full);
  }
};

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset_path.empty()) {
    synth.validate();
    if (synth_count < 3) throw std::invalid_argument("config: dataset.count must be >= 3");
  }
  if (tile < 0) throw std::invalid_argument("config: dataset.tile must be >= 0");
  ratios.validate();
  if (weak_label_min_fraction < 0.0 || weak_label_min_fraction >= 1.0)
    throw std::invalid_argument("config: weak_label_min_fraction outside [0,1)");
  kd.validate();
  scales.validate();
  if (!bg_threshold_sweep && (bg_threshold <= 0.0 || bg_threshold >= 1.0))
    throw std::invalid_argument("config: msi.bg_threshold outside (0,1)");
  seg.validate();
  seg_spec().validate();
  if (out_dir.empty()) throw std::invalid_argument("config: run.out must not be empty");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  KeyHandler handler{&cfg};
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw std::invalid_argument("config: key outside any section at line " +
                                  std::to_string(lineno));
    handler.apply(section, key, value);
  }
  // The distillation early-stop threshold follows the background threshold;
  // under a sweep the trainer keeps the default while the sweep itself runs
  // at pseudo-label time.
  if (!cfg.bg_threshold_sweep) cfg.kd.eval_threshold = cfg.bg_threshold;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  char buf[128];
  const auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  out << "[dataset]\n";
  out << "path = " << cfg.dataset_path << "\n";
  out << "count = " << cfg.synth_count << "\n";
  out << "height = " << cfg.synth.height << "\n";
  out << "width = " << cfg.synth.width << "\n";
  out << "stride_multiple = " << cfg.synth.stride_multiple << "\n";
  out << "kinds = ";
  for (std::size_t i = 0; i < cfg.synth.kinds.size(); ++i)
    out << (i ? "," : "") << to_string(cfg.synth.kinds[i]);
  out << "\n";
  out << "min_objects = " << cfg.synth.min_objects << "\n";
  out << "max_objects = " << cfg.synth.max_objects << "\n";
  out << "min_size = " << num(cfg.synth.min_size) << "\n";
  out << "max_size = " << num(cfg.synth.max_size) << "\n";
  out << "max_static_objects = " << cfg.synth.max_static_objects << "\n";
  out << "no_change_fraction = " << num(cfg.synth.no_change_fraction) << "\n";
  out << "brightness_jitter = " << num(cfg.synth.brightness_jitter) << "\n";
  out << "noise_stddev = " << num(cfg.synth.noise_stddev) << "\n";
  out << "tile = " << cfg.tile << "\n";
  out << "train_ratio = " << num(cfg.ratios.train) << "\n";
  out << "val_ratio = " << num(cfg.ratios.val) << "\n";
  out << "test_ratio = " << num(cfg.ratios.test) << "\n";
  out << "weak_label_min_fraction = " << num(cfg.weak_label_min_fraction) << "\n";
  out << "\n[model]\n";
  out << "backbone = " << to_string(cfg.backbone) << "\n";
  out << "combine = " << (cfg.combine_sweep ? std::string("sweep") : to_string(cfg.combine))
      << "\n";
  out << "\n[kd]\n";
  out << "lambda = " << num(cfg.kd.lambda) << "\n";
  out << "batch_size = " << cfg.kd.batch_size << "\n";
  out << "epochs = " << cfg.kd.epochs << "\n";
  out << "lr = " << num(cfg.kd.lr) << "\n";
  out << "poly_power = " << num(cfg.kd.poly_power) << "\n";
  out << "momentum = " << num(cfg.kd.momentum) << "\n";
  out << "patience = " << cfg.kd.patience << "\n";
  out << "eval_split = " << cfg.kd.eval_split << "\n";
  out << "eval_resize = " << to_string(cfg.kd.eval_resize) << "\n";
  out << "\n[msi]\n";
  out << "scales = ";
  for (std::size_t i = 0; i < cfg.scales.scales.size(); ++i)
    out << (i ? "," : "") << num(cfg.scales.scales[i]);
  out << "\n";
  out << "flip = " << (cfg.scales.flip ? "true" : "false") << "\n";
  out << "flip_axis = "
      << (cfg.scales.flip_axis == FlipAxis::Horizontal ? "horizontal" : "vertical") << "\n";
  out << "bg_threshold = "
      << (cfg.bg_threshold_sweep ? std::string("sweep") : num(cfg.bg_threshold)) << "\n";
  out << "\n[seg]\n";
  out << "batch_size = " << cfg.seg.batch_size << "\n";
  out << "epochs = " << cfg.seg.epochs << "\n";
  out << "lr = " << num(cfg.seg.lr) << "\n";
  out << "poly_power = " << num(cfg.seg.poly_power) << "\n";
  out << "momentum = " << num(cfg.seg.momentum) << "\n";
  out << "patience = " << cfg.seg.patience << "\n";
  out << "dilations = ";
  for (std::size_t i = 0; i < cfg.seg_dilations.size(); ++i)
    out << (i ? "," : "") << cfg.seg_dilations[i];
  out << "\n";
  out << "context_ch = " << cfg.seg_context_ch << "\n";
  out << "fuse_ch = " << cfg.seg_fuse_ch << "\n";
  out << "low_ch = " << cfg.seg_low_ch << "\n";
  out << "decoder_ch = " << cfg.seg_decoder_ch << "\n";
  out << "\n[run]\n";
  out << "seed = " << cfg.seed << "\n";
  out << "out = " << cfg.out_dir << "\n";
  return out.str();
}

}  // namespace kdmsi
