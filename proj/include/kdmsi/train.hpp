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

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdmsi/data.hpp"
#include "kdmsi/net.hpp"
#include "kdmsi/segnet.hpp"
#include "kdmsi/tensor.hpp"

namespace kdmsi {

enum class EvalResize { Bilinear, Nearest };

EvalResize eval_resize_from_string(const std::string& s);
std::string to_string(EvalResize r);

/// Joint distillation-training settings. The trade-off weight scales the
/// map-matching loss; the teacher learns from classification only, the
/// student from the scaled map loss only.
struct KDTrainConfig {
  double lambda = 10.0;
  int batch_size = 8;
  int epochs = 20;
  double lr = 0.001;
  double poly_power = 0.9;
  double momentum = 0.9;
  int patience = 0;  // epochs without IoU improvement before stopping; 0 = off
  double eval_threshold = 0.3;
  std::string eval_split = "train";  // split used for the per-epoch IoU
  EvalResize eval_resize = EvalResize::Bilinear;

  void validate() const {
    if (lambda < 0) throw std::invalid_argument("KDTrainConfig: lambda must be >= 0");
    if (batch_size < 1 || epochs < 1) throw std::invalid_argument("KDTrainConfig: bad batch/epochs");
    if (lr <= 0) throw std::invalid_argument("KDTrainConfig: lr must be > 0");
    if (poly_power < 0) throw std::invalid_argument("KDTrainConfig: bad poly power");
    if (momentum < 0 || momentum >= 1) throw std::invalid_argument("KDTrainConfig: bad momentum");
    if (eval_threshold <= 0 || eval_threshold >= 1)
      throw std::invalid_argument("KDTrainConfig: eval_threshold outside (0,1)");
    if (patience < 0) throw std::invalid_argument("KDTrainConfig: negative patience");
  }
};

struct SegTrainConfig {
  int batch_size = 16;
  int epochs = 50;
  double lr = 0.007;
  double poly_power = 0.9;
  double momentum = 0.9;
  int patience = 0;
  double eval_threshold = 0.3;  // unused by argmax prediction; kept for reports

  void validate() const {
    if (batch_size < 1 || epochs < 1) throw std::invalid_argument("SegTrainConfig: bad batch/epochs");
    if (lr <= 0) throw std::invalid_argument("SegTrainConfig: lr must be > 0");
    if (poly_power < 0) throw std::invalid_argument("SegTrainConfig: bad poly power");
    if (momentum < 0 || momentum >= 1) throw std::invalid_argument("SegTrainConfig: bad momentum");
    if (patience < 0) throw std::invalid_argument("SegTrainConfig: negative patience");
  }
};

/// Polynomial decay: lr0 · (1 − t/T)^p for step t of T.
inline double poly_lr(double lr0, std::int64_t step, std::int64_t total_steps, double power) {
  if (total_steps <= 0) throw std::invalid_argument("poly_lr: total_steps must be > 0");
  const double t = static_cast<double>(std::min(step, total_steps - 1));
  return lr0 * std::pow(1.0 - t / static_cast<double>(total_steps), power);
}

/// Classic momentum SGD: v ← μv + g, p ← p − lr·v. Velocity slots are keyed
/// by position in the parameter list, created lazily on the first step.
struct SgdMomentum {
  double momentum = 0.9;
  std::vector<VecX<float>> velocity;

  explicit SgdMomentum(double m = 0.9) : momentum(m) {}

  void step(const ParamList<float>& params, double lr) {
    if (velocity.empty()) {
      velocity.reserve(params.size());
      for (const auto& p : params) velocity.emplace_back(VecX<float>::Zero(p.size));
    }
    if (velocity.size() != params.size())
      throw std::invalid_argument("SgdMomentum: parameter list changed size");
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto v = params[i].value_vec();
      velocity[i] = static_cast<float>(momentum) * velocity[i] + params[i].grad_vec();
      v -= static_cast<float>(lr) * velocity[i];
    }
  }
};

/// σ(G_student) resized to the pair's input size (the training-time map).
Mapf student_probability_map(const ScoreNet<float>& student, const ImagePair& pair,
                             EvalResize mode = EvalResize::Bilinear);

/// cam-normalized teacher map resized to the pair's input size.
Mapf teacher_cam_map(const ScoreNet<float>& teacher, const ImagePair& pair,
                     EvalResize mode = EvalResize::Bilinear);

struct KDEpochRow {
  int epoch = 0;
  double l_cls = 0, l_kd = 0, l = 0;
  double student_ciou = 0, teacher_ciou = 0;
  double lr = 0;
};

struct KDTrainResult {
  ScoreNet<float> teacher, student;              // best student-IoU snapshot
  ScoreNet<float> teacher_final, student_final;  // last epoch
  std::vector<KDEpochRow> history;
  int best_epoch = -1;
  double best_student_ciou = 0.0;
  double best_teacher_ciou = 0.0;
  int epochs_run = 0;
};

/// Jointly trains teacher and student (same architecture, separate weights)
/// from image-level labels. Per step the teacher descends the classification
/// loss, the student descends λ× the map-matching loss against the detached
/// teacher map. After each epoch the student map is thresholded on
/// `eval_samples` and the best change-IoU snapshot kept; optional patience
/// stops early. Throws on NaN loss.
KDTrainResult train_kd(const std::vector<Sample>& train_samples,
                       const std::vector<Sample>& eval_samples, const BackboneSpec& arch,
                       CombineMode combine, const KDTrainConfig& cfg, std::uint64_t seed);

/// One pair + its training target (pseudo-label or ground truth).
struct SegSample {
  ImagePair pair;
  Mask target;
};

struct SegEpochRow {
  int epoch = 0;
  double loss = 0, val_ciou = 0, lr = 0;
};

struct SegTrainResult {
  SegNet<float> best;       // best validation change-IoU
  SegNet<float> final_net;  // last epoch
  std::vector<SegEpochRow> history;
  int best_epoch = -1;
  double best_val_ciou = 0.0;
  int epochs_run = 0;
};

/// Trains the segmentation net with per-pixel 2-class cross-entropy against
/// the provided targets. The best snapshot tracks validation change-IoU on
/// `val_samples` ground truth; with an empty validation set it tracks the
/// lowest training loss instead. Throws on NaN loss.
SegTrainResult train_segnet(const std::vector<SegSample>& train_samples,
                            const std::vector<Sample>& val_samples, const SegSpec& arch,
                            const SegTrainConfig& cfg, std::uint64_t seed);

/// History CSV emission (first columns: epoch,l_cls,l_kd,l,eval_ciou,lr).
void save_kd_history(const std::string& path, const std::vector<KDEpochRow>& rows);
void save_seg_history(const std::string& path, const std::vector<SegEpochRow>& rows);

}  // namespace kdmsi
