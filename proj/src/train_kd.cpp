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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "kdmsi/cam.hpp"
#include "kdmsi/image.hpp"
#include "kdmsi/losses.hpp"
#include "kdmsi/metrics.hpp"
#include "kdmsi/msi.hpp"
#include "kdmsi/train.hpp"

namespace kdmsi {

EvalResize eval_resize_from_string(const std::string& s) {
  if (s == "bilinear") return EvalResize::Bilinear;
  if (s == "nearest") return EvalResize::Nearest;
  throw std::invalid_argument("unknown eval resize mode: " + s);
}

std::string to_string(EvalResize r) { return r == EvalResize::Bilinear ? "bilinear" : "nearest"; }

namespace {

Mapf resize_eval(const Mapf& m, int h, int w, EvalResize mode) {
  if (mode == EvalResize::Bilinear) return resize_bilinear(m, h, w);
  if (m.rows() == h && m.cols() == w) return m;
  const auto ys = detail::nearest_samples(static_cast<int>(m.rows()), h);
  const auto xs = detail::nearest_samples(static_cast<int>(m.cols()), w);
  Mapf out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(y, x) = m(ys[static_cast<std::size_t>(y)], xs[static_cast<std::size_t>(x)]);
  return out;
}

}  // namespace

Mapf student_probability_map(const ScoreNet<float>& student, const ImagePair& pair,
                             EvalResize mode) {
  const Mapf prob = sigmoid_map(student.score(pair));
  return resize_eval(prob, pair.pre.h, pair.pre.w, mode);
}

Mapf teacher_cam_map(const ScoreNet<float>& teacher, const ImagePair& pair, EvalResize mode) {
  const Mapf cam = cam_normalize(teacher.score(pair));
  return resize_eval(cam, pair.pre.h, pair.pre.w, mode);
}

namespace {

struct EvalIous {
  double student = 0, teacher = 0;
};

EvalIous eval_epoch(const ScoreNet<float>& teacher, const ScoreNet<float>& student,
                    const std::vector<Sample>& samples, const KDTrainConfig& cfg) {
  ConfusionMatrix cm_s, cm_t;
  for (const Sample& s : samples) {
    const Mapf ps = student_probability_map(student, s.pair, cfg.eval_resize);
    const Mapf pt = teacher_cam_map(teacher, s.pair, cfg.eval_resize);
    cm_s += confusion(threshold_map(ps, cfg.eval_threshold), s.mask);
    cm_t += confusion(threshold_map(pt, cfg.eval_threshold), s.mask);
  }
  return {class_iou(cm_s, PixelClass::Change), class_iou(cm_t, PixelClass::Change)};
}

}  // namespace

KDTrainResult train_kd(const std::vector<Sample>& train_samples,
                       const std::vector<Sample>& eval_samples, const BackboneSpec& arch,
                       CombineMode combine, const KDTrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (train_samples.empty()) throw std::invalid_argument("train_kd: empty training set");
  if (eval_samples.empty()) throw std::invalid_argument("train_kd: empty evaluation set");

  ScoreNet<float> teacher(arch, combine);
  ScoreNet<float> student(arch, combine);
  {
    Rng rng_t(derive_seed(seed, 0));
    Rng rng_s(derive_seed(seed, 1));
    teacher.init(rng_t);
    student.init(rng_s);
  }
  const ParamList<float> teacher_params = teacher.params();
  const ParamList<float> student_params = student.params();
  SgdMomentum opt_t(cfg.momentum), opt_s(cfg.momentum);

  const auto n = static_cast<std::int64_t>(train_samples.size());
  const std::int64_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::int64_t total_steps = steps_per_epoch * cfg.epochs;

  KDTrainResult result;
  result.best_student_ciou = -1.0;
  std::int64_t global_step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(seed, 0x10000u + static_cast<std::uint64_t>(epoch)));
    const std::vector<int> order = permutation(static_cast<int>(train_samples.size()), shuffle_rng);
    const double lr_epoch = poly_lr(cfg.lr, global_step, total_steps, cfg.poly_power);

    double sum_cls = 0, sum_kd = 0;
    for (std::int64_t start = 0; start < n; start += cfg.batch_size) {
      const std::int64_t stop = std::min(n, start + cfg.batch_size);
      const float inv_batch = 1.0f / static_cast<float>(stop - start);
      teacher.zero_grad();
      student.zero_grad();

      for (std::int64_t b = start; b < stop; ++b) {
        const Sample& s = train_samples[order[static_cast<std::size_t>(b)]];
        ScoreNet<float>::Cache cache_t, cache_s;
        const Mapf g_t = teacher.forward(s.pair, cache_t);
        const Mapf g_s = student.forward(s.pair, cache_s);

        const float logit = classification_logit(g_t);
        const float l_cls = bce_with_logit(logit, s.label);
        const Mapf cam = cam_normalize(g_t);  // detached distillation target
        const Mapf prob = sigmoid_map(g_s);
        const float l_kd = mse_map(cam, prob);
        if (!std::isfinite(l_cls) || !std::isfinite(l_kd))
          throw std::runtime_error("train_kd: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", sample " + s.pair.id);
        sum_cls += l_cls;
        sum_kd += l_kd;

        // Teacher: classification loss only. d(mean)/dG is uniform.
        const float d_logit = bce_with_logit_grad(logit, s.label) * inv_batch;
        const Mapf d_g_t = Mapf::Constant(g_t.rows(), g_t.cols(),
                                          d_logit / static_cast<float>(g_t.size()));
        teacher.backward(d_g_t, cache_t);

        // Student: λ × map-matching loss only, through the sigmoid.
        if (cfg.lambda > 0) {
          const Mapf d_prob =
              mse_map_grad(cam, prob) * static_cast<float>(cfg.lambda) * inv_batch;
          const Mapf d_g_s = d_prob * prob * (1.0f - prob);
          student.backward(d_g_s, cache_s);
        }
      }
      const double lr_t = poly_lr(cfg.lr, global_step, total_steps, cfg.poly_power);
      opt_t.step(teacher_params, lr_t);
      opt_s.step(student_params, lr_t);
      ++global_step;
    }

    const EvalIous ious = eval_epoch(teacher, student, eval_samples, cfg);
    KDEpochRow row;
    row.epoch = epoch;
    row.l_cls = sum_cls / static_cast<double>(n);
    row.l_kd = sum_kd / static_cast<double>(n);
    row.l = row.l_cls + cfg.lambda * row.l_kd;
    row.student_ciou = ious.student;
    row.teacher_ciou = ious.teacher;
    row.lr = lr_epoch;
    result.history.push_back(row);
    result.epochs_run = epoch + 1;

    if (ious.student > result.best_student_ciou) {
      result.best_student_ciou = ious.student;
      result.best_teacher_ciou = ious.teacher;
      result.best_epoch = epoch;
      result.teacher = teacher;
      result.student = student;
    }
    if (cfg.patience > 0 && epoch - result.best_epoch >= cfg.patience) break;
  }

  result.teacher_final = teacher;
  result.student_final = student;
  return result;
}

void save_kd_history(const std::string& path, const std::vector<KDEpochRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "epoch,l_cls,l_kd,l,eval_ciou,lr,teacher_ciou\n";
  char buf[256];
  for (const KDEpochRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.l_cls, r.l_kd,
                  r.l, r.student_ciou, r.lr, r.teacher_ciou);
    out << buf;
  }
}

}  // namespace kdmsi
