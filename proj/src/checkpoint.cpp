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

#include "kdmsi/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

namespace kdmsi {

namespace {

constexpr char kMagic[4] = {'K', 'D', 'M', 'S'};
constexpr std::uint8_t kTypeScore = 0;
constexpr std::uint8_t kTypeSeg = 1;

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void put(std::ostream& out, T v) {
  put_bytes(out, &v, sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  put_bytes(out, s.data(), s.size());
}

void get_bytes(std::istream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
}

template <typename T>
T get(std::istream& in) {
  T v;
  get_bytes(in, &v, sizeof v);
  return v;
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 20)) throw std::runtime_error("checkpoint: implausible string length");
  std::string s(n, '\0');
  get_bytes(in, s.data(), n);
  return s;
}

void put_backbone_spec(std::ostream& out, const BackboneSpec& s) {
  put_string(out, to_string(s.kind));
  put<std::int32_t>(out, s.in_ch);
  put<std::int32_t>(out, s.output_stride());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.channels.size()));
  for (int c : s.channels) put<std::int32_t>(out, c);
  put<std::uint8_t>(out, s.with_norm ? 1 : 0);
}

BackboneSpec get_backbone_spec(std::istream& in) {
  BackboneSpec s;
  s.kind = backbone_kind_from_string(get_string(in));
  s.in_ch = get<std::int32_t>(in);
  const auto stride = get<std::int32_t>(in);
  const auto n = get<std::uint32_t>(in);
  if (n == 0 || n > 16) throw std::runtime_error("checkpoint: implausible block count");
  s.channels.clear();
  for (std::uint32_t i = 0; i < n; ++i) s.channels.push_back(get<std::int32_t>(in));
  s.with_norm = get<std::uint8_t>(in) != 0;
  if (s.output_stride() != stride)
    throw std::runtime_error("checkpoint: stride inconsistent with block count");
  return s;
}

void put_params(std::ostream& out, const ParamList<float>& params) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_string(out, p.name);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.size));
    put_bytes(out, p.value, static_cast<std::size_t>(p.size) * sizeof(float));
  }
}

void get_params(std::istream& in, const ParamList<float>& params) {
  std::map<std::string, const ParamRef<float>*> by_name;
  for (const auto& p : params) by_name.emplace(p.name, &p);
  const auto n = get<std::uint32_t>(in);
  if (n != params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch (file " + std::to_string(n) +
                             ", model " + std::to_string(params.size()) + ")");
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = get_string(in);
    const auto count = get<std::uint64_t>(in);
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint: unknown parameter " + name);
    if (count != static_cast<std::uint64_t>(it->second->size))
      throw std::runtime_error("checkpoint: size mismatch for " + name);
    get_bytes(in, it->second->value, static_cast<std::size_t>(count) * sizeof(float));
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::uint8_t read_header(std::istream& in) {
  char magic[4];
  get_bytes(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  return get<std::uint8_t>(in);
}

}  // namespace

void save_score_net(const std::string& path, ScoreNet<float>& net, std::uint64_t init_seed) {
  std::ofstream out = open_out(path);
  put_bytes(out, kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint8_t>(out, kTypeScore);
  put<std::uint64_t>(out, init_seed);
  put_backbone_spec(out, net.backbone.spec);
  put_string(out, to_string(net.combine));
  put_params(out, net.params());
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

ScoreNet<float> load_score_net(const std::string& path, std::uint64_t* init_seed) {
  std::ifstream in = open_in(path);
  if (read_header(in) != kTypeScore)
    throw std::runtime_error(path + ": not a score-net checkpoint");
  const auto seed = get<std::uint64_t>(in);
  if (init_seed) *init_seed = seed;
  const BackboneSpec spec = get_backbone_spec(in);
  const CombineMode combine = combine_mode_from_string(get_string(in));
  ScoreNet<float> net(spec, combine);
  get_params(in, net.params());
  return net;
}

void save_seg_net(const std::string& path, SegNet<float>& net, std::uint64_t init_seed) {
  std::ofstream out = open_out(path);
  put_bytes(out, kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint8_t>(out, kTypeSeg);
  put<std::uint64_t>(out, init_seed);
  put_backbone_spec(out, net.spec.encoder);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.spec.dilations.size()));
  for (int d : net.spec.dilations) put<std::int32_t>(out, d);
  put<std::int32_t>(out, net.spec.context_ch);
  put<std::int32_t>(out, net.spec.fuse_ch);
  put<std::int32_t>(out, net.spec.low_ch);
  put<std::int32_t>(out, net.spec.decoder_ch);
  put<std::int32_t>(out, net.spec.tap_block);
  put_params(out, net.params());
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

SegNet<float> load_seg_net(const std::string& path, std::uint64_t* init_seed) {
  std::ifstream in = open_in(path);
  if (read_header(in) != kTypeSeg) throw std::runtime_error(path + ": not a seg-net checkpoint");
  const auto seed = get<std::uint64_t>(in);
  if (init_seed) *init_seed = seed;
  SegSpec spec;
  spec.encoder = get_backbone_spec(in);
  const auto nd = get<std::uint32_t>(in);
  if (nd == 0 || nd > 16) throw std::runtime_error("checkpoint: implausible dilation count");
  spec.dilations.clear();
  for (std::uint32_t i = 0; i < nd; ++i) spec.dilations.push_back(get<std::int32_t>(in));
  spec.context_ch = get<std::int32_t>(in);
  spec.fuse_ch = get<std::int32_t>(in);
  spec.low_ch = get<std::int32_t>(in);
  spec.decoder_ch = get<std::int32_t>(in);
  spec.tap_block = get<std::int32_t>(in);
  SegNet<float> net(spec);
  get_params(in, net.params());
  return net;
}

std::string checkpoint_model_type(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_header(in) == kTypeScore ? "score" : "seg";
}

}  // namespace kdmsi
