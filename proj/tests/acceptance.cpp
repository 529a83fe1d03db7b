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

// Release gate for the library: seven timed checks covering gradients,
// map normalization, multiscale inference, metrics, the distillation
// ablation ordering, the end-to-end pipeline, and the summed-versus-averaged
// inference mismatch. Each prints one PASS/FAIL line; any failure makes the
// process exit nonzero.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fd_check.hpp"
#include "kdmsi/cam.hpp"
#include "kdmsi/config.hpp"
#include "kdmsi/data.hpp"
#include "kdmsi/losses.hpp"
#include "kdmsi/metrics.hpp"
#include "kdmsi/msi.hpp"
#include "kdmsi/net.hpp"
#include "kdmsi/pipeline.hpp"
#include "kdmsi/train.hpp"

using namespace kdmsi;
namespace fs = std::filesystem;

namespace {

using MapD = MapX<double>;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Loss and gradient suite on a tiny score network.

int param_count(const ParamList<double>& params) {
  int n = 0;
  for (const auto& p : params) n += static_cast<int>(p.size);
  return n;
}

std::vector<VecX<double>> snapshot_grads(const ParamList<double>& params) {
  std::vector<VecX<double>> out;
  for (const auto& p : params) out.push_back(p.grad_vec());
  return out;
}

bool criterion_gradients(std::string& detail) {
  BackboneSpec arch = BackboneSpec::tiny_cnn(1);
  arch.channels = {2};
  ScoreNet<double> teacher(arch, CombineMode::AbsSubtract);
  ScoreNet<double> student(arch, CombineMode::AbsSubtract);
  Rng rng(4242);
  teacher.init(rng);
  student.init(rng);

  ParamList<double> teacher_params = teacher.params();
  ParamList<double> student_params = student.params();
  const int n_params = param_count(teacher_params);
  if (n_params > 50) {
    detail = "toy network has " + std::to_string(n_params) + " parameters, wanted <= 50";
    return false;
  }

  const ImagePairT<double> pair = testutil::random_pair<double>(1, 8, 8, rng);
  const double lambda = 10.0;
  double worst = 0.0;

  for (int label = 0; label <= 1; ++label) {
    typename ScoreNet<double>::Cache cache_t, cache_s;
    const MapD g_t = teacher.forward(pair, cache_t);
    const MapD g_s = student.forward(pair, cache_s);
    const double logit = classification_logit(g_t);
    const MapD cam = cam_normalize(g_t);  // frozen distillation target
    const MapD prob = sigmoid_map(g_s);

    // Classification loss through the teacher.
    teacher.zero_grad();
    const double d_logit = bce_with_logit_grad(logit, label);
    const MapD d_g_t =
        MapD::Constant(g_t.rows(), g_t.cols(), d_logit / static_cast<double>(g_t.size()));
    teacher.backward(d_g_t, cache_t);
    const auto loss_cls = [&] {
      return static_cast<double>(bce_with_logit(classification_logit(teacher.score(pair)), label));
    };
    worst = std::max(worst, testutil::max_relative_grad_error(teacher_params, loss_cls, 1e-5, 1e-8));

    // Map-matching loss through the student, teacher map held fixed.
    student.zero_grad();
    const MapD d_prob = mse_map_grad(cam, prob);
    student.backward(MapD(d_prob * prob * (1.0 - prob)), cache_s);
    const auto loss_kd = [&] {
      return static_cast<double>(mse_map(cam, sigmoid_map(student.score(pair))));
    };
    worst = std::max(worst, testutil::max_relative_grad_error(student_params, loss_kd, 1e-5, 1e-8));

    // Combined objective: the teacher sees only the classification term, the
    // student only the scaled map term.
    teacher.zero_grad();
    student.zero_grad();
    teacher.backward(d_g_t, cache_t);
    const MapD d_prob_l = mse_map_grad(cam, prob) * lambda;
    student.backward(MapD(d_prob_l * prob * (1.0 - prob)), cache_s);
    ParamList<double> all = teacher_params;
    for (const auto& p : student_params) all.push_back(p);
    const auto loss_total_fn = [&] {
      const double cls = bce_with_logit(classification_logit(teacher.score(pair)), label);
      const double kd = mse_map(cam, sigmoid_map(student.score(pair)));
      return total_loss(cls, kd, lambda);
    };
    worst = std::max(worst, testutil::max_relative_grad_error(all, loss_total_fn, 1e-5, 1e-8));

    // Gradient isolation, exact: the teacher gradient is independent of the
    // trade-off weight, and a zero weight leaves the student gradient at
    // exactly zero.
    const std::vector<VecX<double>> t_at_lambda = snapshot_grads(teacher_params);
    const std::vector<VecX<double>> s_at_lambda = snapshot_grads(student_params);
    teacher.zero_grad();
    student.zero_grad();
    teacher.backward(d_g_t, cache_t);  // lambda = 0 step: no student update
    const std::vector<VecX<double>> t_at_zero = snapshot_grads(teacher_params);
    const std::vector<VecX<double>> s_at_zero = snapshot_grads(student_params);
    double s_mag = 0.0;
    for (std::size_t i = 0; i < t_at_zero.size(); ++i)
      if ((t_at_zero[i].array() != t_at_lambda[i].array()).any()) {
        detail = "teacher gradient depends on the trade-off weight";
        return false;
      }
    for (const auto& g : s_at_zero)
      if ((g.array() != 0.0).any()) {
        detail = "student gradient nonzero with a zero trade-off weight";
        return false;
      }
    for (const auto& g : s_at_lambda) s_mag = std::max(s_mag, double(g.cwiseAbs().maxCoeff()));
    if (s_mag == 0.0) {
      detail = "student gradient vanished under a positive trade-off weight";
      return false;
    }
  }

  detail = std::to_string(n_params) + " parameters, worst relative gradient error " + fmt(worst);
  return worst < 1e-3;
}

// ---------------------------------------------------------------------------
// 2. Map normalization properties.

bool criterion_cam_properties(std::string& detail) {
  Rng rng(909);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int h = static_cast<int>(rng.uniform_int(1, 12));
    const int w = static_cast<int>(rng.uniform_int(1, 12));
    Mapf g(h, w);
    switch (trial % 5) {
      case 0:
      case 1:
      case 2:
        for (Eigen::Index i = 0; i < g.size(); ++i)
          g.data()[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
        break;
      case 3:  // nonpositive everywhere
        for (Eigen::Index i = 0; i < g.size(); ++i)
          g.data()[i] = static_cast<float>(rng.uniform(-3.0, 0.0));
        break;
      case 4:  // positive but at or below the zero guard
        for (Eigen::Index i = 0; i < g.size(); ++i)
          g.data()[i] = static_cast<float>(rng.uniform(0.0, 1e-6));
        break;
    }
    const Mapf cam = cam_normalize(g);
    if (cam.minCoeff() < 0.0f || cam.maxCoeff() > 1.0f) {
      detail = "normalized map left [0,1]";
      return false;
    }
    if (g.maxCoeff() > static_cast<float>(kCamZeroGuard)) {
      if (cam.maxCoeff() != 1.0f) {
        detail = "maximum not mapped to exactly 1";
        return false;
      }
    } else if ((cam != 0.0f).any()) {
      detail = "zero guard failed to blank a non-activating map";
      return false;
    }
    const Mapf twice = cam_normalize(cam);
    if ((twice != cam).any()) {
      detail = "normalization is not idempotent";
      return false;
    }
    ++checked;
  }
  detail = std::to_string(checked) + " random maps";
  return true;
}

// ---------------------------------------------------------------------------
// 3. Multiscale sigmoid inference suite.

// Input-resolution score stub: per-pixel channel-mean difference. Commutes
// with flips, so inference over flipped variants must too.
Mapf diff_score(const ImagePair& p) {
  Mapf out(p.pre.h, p.pre.w);
  for (int y = 0; y < p.pre.h; ++y)
    for (int x = 0; x < p.pre.w; ++x) {
      float acc = 0;
      for (int c = 0; c < p.pre.channels(); ++c) acc += p.post.at(c, y, x) - p.pre.at(c, y, x);
      out(y, x) = acc / static_cast<float>(p.pre.channels());
    }
  return out;
}

bool criterion_msi(std::string& detail) {
  Rng rng(313);
  const ScaleSet full_set;  // {0.5, 1, 1.5, 2} with horizontal flips

  // Zero scores everywhere turn into probability one half everywhere.
  {
    const auto zero_fn = [](const ImagePair& p) { return Mapf::Zero(p.pre.h, p.pre.w); };
    const ImagePair pair = testutil::random_pair<float>(1, 12, 16, rng);
    const Mapf msi = multiscale_sigmoid_inference<float>(zero_fn, pair, full_set, 4);
    if ((msi - 0.5f).abs().maxCoeff() > 1e-6f) {
      detail = "zero scores did not average to one half";
      return false;
    }
  }

  // A single unit scale without flips reduces to the plain sigmoid map.
  {
    ScaleSet unit;
    unit.scales = {1.0};
    unit.flip = false;
    const ImagePair pair = testutil::random_pair<float>(2, 16, 16, rng);
    const Mapf msi = multiscale_sigmoid_inference<float>(diff_score, pair, unit, 4);
    const Mapf direct = sigmoid_map(diff_score(pair));
    if ((msi != direct).any()) {
      detail = "single-scale inference is not the sigmoid of the score";
      return false;
    }
  }

  // Flipping the input flips the output, across the full scale set.
  double worst_flip = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ImagePair pair = testutil::random_pair<float>(1, 16, 16, rng);
    ImagePair flipped;
    flipped.pre = flip_horizontal(pair.pre);
    flipped.post = flip_horizontal(pair.post);
    flipped.id = pair.id;
    const Mapf a = multiscale_sigmoid_inference<float>(diff_score, flipped, full_set, 4);
    const Mapf b = flip_horizontal(
        Mapf(multiscale_sigmoid_inference<float>(diff_score, pair, full_set, 4)));
    worst_flip = std::max<double>(worst_flip, (a - b).abs().maxCoeff());
  }
  if (worst_flip > 1e-5) {
    detail = "flip equivariance error " + fmt(worst_flip);
    return false;
  }

  // The average of sigmoids stays inside the range the variants span, and
  // strictly inside (0,1), at every pixel.
  for (int trial = 0; trial < 100; ++trial) {
    const ImagePair pair = testutil::random_pair<float>(1, 16, 16, rng, -2.0f, 2.0f);
    float lo = 1.0f, hi = 0.0f;
    const auto recording = [&](const ImagePair& p) {
      const Mapf raw = diff_score(p);
      lo = std::min(lo, sigmoid(raw.minCoeff()));
      hi = std::max(hi, sigmoid(raw.maxCoeff()));
      return raw;
    };
    const Mapf msi = multiscale_sigmoid_inference<float>(recording, pair, full_set, 4);
    if (msi.minCoeff() < lo - 1e-6f || msi.maxCoeff() > hi + 1e-6f) {
      detail = "averaged map left the envelope of its variants";
      return false;
    }
    if (msi.minCoeff() <= 0.0f || msi.maxCoeff() >= 1.0f) {
      detail = "averaged map left the open interval (0,1)";
      return false;
    }
  }

  detail = "flip error " + fmt(worst_flip) + ", envelope and reductions exact";
  return true;
}

// ---------------------------------------------------------------------------
// 4. Metric oracle.

struct LoopCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

LoopCounts loop_confusion(const Mask& pred, const Mask& gt) {
  LoopCounts c;
  for (Eigen::Index y = 0; y < gt.rows(); ++y)
    for (Eigen::Index x = 0; x < gt.cols(); ++x) {
      const bool p = pred(y, x) != 0, t = gt(y, x) != 0;
      if (p && t)
        ++c.tp;
      else if (p && !t)
        ++c.fp;
      else if (!p && t)
        ++c.fn;
      else
        ++c.tn;
    }
  return c;
}

double oracle_iou(std::uint64_t inter, std::uint64_t denom) {
  return denom == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(denom);
}

double oracle_f1(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  if (tp == 0) return (fp == 0 && fn == 0) ? 1.0 : 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

bool identity_holds(const ConfusionMatrix& cm) {
  const double f1c = f1(cm, F1Mode::Change);
  const double iou = class_iou(cm, PixelClass::Change);
  return std::abs(iou - f1c / (2.0 - f1c)) <= 1e-12;
}

bool criterion_metrics(std::string& detail) {
  Rng rng(626);
  for (int trial = 0; trial < 200; ++trial) {
    Mask pred(16, 16), gt(16, 16);
    const double p_pred = trial == 0 ? 0.0 : rng.uniform(0.0, 1.0);
    const double p_gt = trial == 1 ? 0.0 : rng.uniform(0.0, 1.0);
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
      pred.data()[i] = rng.bernoulli(p_pred) ? 1 : 0;
      gt.data()[i] = rng.bernoulli(p_gt) ? 1 : 0;
    }
    if (trial == 2) pred = gt;  // a perfect prediction must score perfectly

    const ConfusionMatrix cm = confusion(pred, gt);
    const LoopCounts c = loop_confusion(pred, gt);
    if (cm.tp != c.tp || cm.fp != c.fp || cm.fn != c.fn || cm.tn != c.tn) {
      detail = "confusion counts disagree with the pixel loop";
      return false;
    }

    const double total = static_cast<double>(c.tp + c.fp + c.fn + c.tn);
    const double oracle_oa = static_cast<double>(c.tp + c.tn) / total;
    const double ciou = oracle_iou(c.tp, c.tp + c.fp + c.fn);
    const double biou = oracle_iou(c.tn, c.tn + c.fp + c.fn);
    const double f1c = oracle_f1(c.tp, c.fp, c.fn);
    const double f1b = oracle_f1(c.tn, c.fn, c.fp);
    const double fpr = (c.fp + c.tp) == 0
                           ? 0.0
                           : static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tp);
    const double fnr = (c.fn + c.tp) == 0
                           ? 0.0
                           : static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp);

    const auto rates = error_rates(cm);
    const bool ok = std::abs(overall_accuracy(cm) - oracle_oa) <= 1e-12 &&
                    std::abs(class_iou(cm, PixelClass::Change) - ciou) <= 1e-12 &&
                    std::abs(class_iou(cm, PixelClass::Background) - biou) <= 1e-12 &&
                    std::abs(mean_iou(cm) - 0.5 * (ciou + biou)) <= 1e-12 &&
                    std::abs(f1(cm, F1Mode::Change) - f1c) <= 1e-12 &&
                    std::abs(f1(cm, F1Mode::Macro) - 0.5 * (f1c + f1b)) <= 1e-12 &&
                    std::abs(rates.first - fpr) <= 1e-12 && std::abs(rates.second - fnr) <= 1e-12;
    if (!ok) {
      detail = "a ratio metric disagrees with the loop oracle at trial " + std::to_string(trial);
      return false;
    }
    if (!identity_holds(cm)) {
      detail = "IoU and F1 identity broke on a mask pair";
      return false;
    }
  }

  // The identity also holds on raw confusion matrices, including degenerate
  // ones with empty rows or columns.
  for (int trial = 0; trial < 200; ++trial) {
    ConfusionMatrix cm;
    cm.tp = static_cast<std::uint64_t>(rng.uniform_int(0, 1000));
    cm.fp = static_cast<std::uint64_t>(rng.uniform_int(0, 1000));
    cm.fn = static_cast<std::uint64_t>(rng.uniform_int(0, 1000));
    cm.tn = static_cast<std::uint64_t>(rng.uniform_int(0, 1000));
    if (trial % 4 == 0) cm.tp = 0;
    if (trial % 8 == 1) cm.tp = cm.fp = cm.fn = 0;
    if (!identity_holds(cm)) {
      detail = "IoU and F1 identity broke on a raw confusion matrix";
      return false;
    }
  }

  detail = "200 mask pairs and 200 confusion matrices";
  return true;
}

// ---------------------------------------------------------------------------
// 5. Distillation ablation ordering.

struct AblationRow {
  std::uint64_t seed;
  double teacher = 0, student = 0, msi = 0;
};

double global_ciou(const std::vector<Sample>& samples,
                   const std::function<Mask(const Sample&)>& predict) {
  ConfusionMatrix cm;
  for (const Sample& s : samples) cm += confusion(predict(s), s.mask);
  return class_iou(cm, PixelClass::Change);
}

bool criterion_ablation(std::string& detail) {
  const SynthSpec spec;  // 64x64 three-channel pairs
  const std::vector<Sample> all = generate_synthetic_dataset(spec, 250, 97);
  const DatasetSplit split = split_dataset(all, SplitRatios{}, 1);
  const std::vector<Sample> train = select_samples(all, split.train);
  if (train.size() != 200) {
    detail = "expected 200 training pairs, got " + std::to_string(train.size());
    return false;
  }

  // Protocol: the trainer tracks teacher-CAM and plain-student change-IoU on
  // its eval split each epoch (the training split here, the default). The
  // ordering compares the best value each map family reaches across the run,
  // and multiscale sigmoid inference of the kept best student against the
  // plain best-student value.
  KDTrainConfig cfg;  // trade-off 10, batch 8, 20 epochs, lr 1e-3
  const double threshold = cfg.eval_threshold;
  const ScaleSet scales;

  int good = 0;
  std::ostringstream lines;
  for (const std::uint64_t seed : {101ull, 303ull, 404ull}) {
    const KDTrainResult r =
        train_kd(train, train, BackboneSpec::tiny_cnn(), CombineMode::AbsSubtract, cfg, seed);

    AblationRow row;
    row.seed = seed;
    for (const KDEpochRow& e : r.history) {
      row.teacher = std::max(row.teacher, e.teacher_ciou);
      row.student = std::max(row.student, e.student_ciou);
    }
    row.msi = global_ciou(train, [&](const Sample& s) {
      return threshold_map(Mapf(multiscale_sigmoid_inference(r.student, s.pair, scales)),
                           threshold);
    });

    const bool distill_ok = row.student >= row.teacher;
    const bool msi_ok = row.msi >= row.student - 0.01;
    good += (distill_ok && msi_ok) ? 1 : 0;
    lines << " [seed " << seed << ": teacher " << fmt(row.teacher) << ", student "
          << fmt(row.student) << ", msi " << fmt(row.msi) << (distill_ok && msi_ok ? "" : " *")
          << "]";
  }

  detail = std::to_string(good) + "/3 seeds ordered" + lines.str();
  return good >= 2;
}

// ---------------------------------------------------------------------------
// 6. End-to-end pipeline at desk scale.

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool criterion_pipeline(std::string& detail) {
  const fs::path out =
      fs::temp_directory_path() / ("kdmsi_accept_" + std::to_string(::getpid()));
  fs::remove_all(out);

  ExperimentConfig cfg = parse_config_text(
      "[dataset]\n"
      "count = 160\n"
      "[kd]\n"
      "epochs = 20\n"
      "[msi]\n"
      "bg_threshold = sweep\n"
      "[seg]\n"
      "epochs = 30\n"
      "batch_size = 8\n"
      "[run]\n"
      "seed = 42\n");
  cfg.out_dir = out.string();

  const PipelineResult first = run_pipeline(cfg);
  const std::string report_bytes = slurp(out / "report.json");

  const PipelineResult again = run_pipeline(cfg, Stage::Eval);
  const std::string report_again = slurp(out / "report.json");
  fs::remove_all(out);

  const bool quality = first.report.ciou >= 0.2;
  const bool stable = !report_bytes.empty() && report_bytes == report_again &&
                      first.report.ciou == again.report.ciou;
  detail = "test change-IoU " + fmt(first.report.ciou) + " (floor 0.2), teacher/student/msi " +
           fmt(first.stage_teacher_cam_ciou) + "/" + fmt(first.stage_student_ciou) + "/" +
           fmt(first.stage_student_msi_ciou) + (stable ? ", re-run bit-identical" : ", RE-RUN DIVERGED");
  return quality && stable;
}

// ---------------------------------------------------------------------------
// 7. Summed scores and averaged sigmoids binarize differently.

bool criterion_mismatch(std::string& detail) {
  // Scores keyed on the rendered width: the half-size variant sees moderate
  // left-half scores and zero right-half scores; the unit scale sees strong
  // scores on both halves, stronger on the right.
  const auto stub = [](const ImagePair& p) {
    Mapf m(p.pre.h, p.pre.w);
    const bool half = p.pre.w == 4;
    for (int x = 0; x < p.pre.w; ++x)
      m.col(x).setConstant(x < p.pre.w / 2 ? (half ? 2.0f : 5.0f) : (half ? 0.0f : 9.0f));
    return m;
  };

  ImagePair pair;
  pair.pre = Tensorf(1, 8, 8);
  pair.pre.data.setZero();
  pair.post = pair.pre;
  pair.id = "stub";

  ScaleSet set;
  set.scales = {0.5, 1.0};
  set.flip = false;

  const Mapf mi = multiscale_inference<float>(stub, pair, set, 1);
  const Mapf msi = multiscale_sigmoid_inference<float>(stub, pair, set, 1);
  const Mask mi_mask = threshold_map(mi, 0.8);
  const Mask msi_mask = threshold_map(msi, 0.8);

  // Summed raw scores peak on the right half; averaged sigmoids peak on the
  // left, where both variants respond.
  const bool differ = (mi_mask != msi_mask).any();
  Eigen::Index mi_y = 0, mi_x = 0, msi_y = 0, msi_x = 0;
  mi.maxCoeff(&mi_y, &mi_x);
  msi.maxCoeff(&msi_y, &msi_x);
  const bool sides_swap = (mi_x >= 4) && (msi_x < 4);

  detail = "left/right summed " + fmt(mi(0, 0)) + "/" + fmt(mi(0, 7)) + ", averaged " +
           fmt(msi(0, 0)) + "/" + fmt(msi(0, 7)) +
           (differ ? ", thresholded masks differ" : ", MASKS IDENTICAL");
  return differ && sides_swap;
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* what;
  double budget_s;
  bool (*run)(std::string&);
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "loss gradients match finite differences; teacher/student isolation", 30, criterion_gradients},
      {2, "map normalization: range, unit max, zero guard, idempotence", 10, criterion_cam_properties},
      {3, "multiscale sigmoid inference: reductions, flip equivariance, envelope", 60, criterion_msi},
      {4, "metrics equal the pixel-loop oracle; IoU/F1 identity", 30, criterion_metrics},
      {5, "distillation ablation ordering on the synthetic benchmark", 900, criterion_ablation},
      {6, "desk-scale pipeline: quality floor and bit-exact re-run", 900, criterion_pipeline},
      {7, "summed scores and averaged sigmoids binarize differently", 5, criterion_mismatch},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.budget_s) {
      ok = false;
      detail += " [over budget]";
    }
    std::printf("criterion %d: %s (%.1f s, budget %.0f s) %s — %s\n", c.id,
                ok ? "PASS" : "FAIL", seconds, c.budget_s, c.what, detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }

  std::printf("acceptance: %d/7 criteria passed\n", 7 - failures);
  return failures == 0 ? 0 : 1;
}
