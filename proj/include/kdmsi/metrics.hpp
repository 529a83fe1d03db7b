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
#include <stdexcept>
#include <string>
#include <vector>

#include "kdmsi/tensor.hpp"

namespace kdmsi {

enum class PixelClass { Background = 0, Change = 1 };
enum class F1Mode { Change, Macro };

/// Pixel counts with change as the positive class. Accumulation is an
/// elementwise sum, so per-sample matrices can be merged in any order.
struct ConfusionMatrix {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) { return a += b; }
};

inline ConfusionMatrix confusion(const Mask& pred, const Mask& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    throw std::invalid_argument("confusion: shape mismatch");
  ConfusionMatrix cm;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const bool p = pred.data()[i] != 0;
    const bool g = gt.data()[i] != 0;
    if (p && g)
      ++cm.tp;
    else if (p && !g)
      ++cm.fp;
    else if (!p && g)
      ++cm.fn;
    else
      ++cm.tn;
  }
  return cm;
}

inline double overall_accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t t = cm.total();
  if (t == 0) return 1.0;
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(t);
}

/// Per-class IoU. A class absent from both prediction and ground truth
/// (zero denominator) scores 1.
inline double class_iou(const ConfusionMatrix& cm, PixelClass cls) {
  const std::uint64_t inter = cls == PixelClass::Change ? cm.tp : cm.tn;
  const std::uint64_t uni = inter + cm.fp + cm.fn;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline double mean_iou(const ConfusionMatrix& cm) {
  return 0.5 * (class_iou(cm, PixelClass::Change) + class_iou(cm, PixelClass::Background));
}

namespace detail {

inline double f1_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  if (tp == 0) return (fp == 0 && fn == 0) ? 1.0 : 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * p * r / (p + r);
}

}  // namespace detail

/// F1 of the change class, or the unweighted mean over both classes
/// (background treats tn as its true positives).
inline double f1(const ConfusionMatrix& cm, F1Mode mode) {
  const double f_change = detail::f1_from_counts(cm.tp, cm.fp, cm.fn);
  if (mode == F1Mode::Change) return f_change;
  const double f_bg = detail::f1_from_counts(cm.tn, cm.fn, cm.fp);
  return 0.5 * (f_change + f_bg);
}

/// FP reported as false-discovery rate fp/(fp+tp), FN as miss rate
/// fn/(fn+tp); both 0 on an empty denominator.
inline std::pair<double, double> error_rates(const ConfusionMatrix& cm) {
  const double fpr =
      cm.fp + cm.tp == 0 ? 0.0 : static_cast<double>(cm.fp) / static_cast<double>(cm.fp + cm.tp);
  const double fnr =
      cm.fn + cm.tp == 0 ? 0.0 : static_cast<double>(cm.fn) / static_cast<double>(cm.fn + cm.tp);
  return {fpr, fnr};
}

struct MetricReport {
  ConfusionMatrix counts;
  double oa = 0.0;
  double f1_change = 0.0;
  double f1_macro = 0.0;
  double ciou = 0.0;
  double miou = 0.0;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  std::string aggregation = "global";
};

inline MetricReport make_report(const ConfusionMatrix& cm) {
  MetricReport r;
  r.counts = cm;
  r.oa = overall_accuracy(cm);
  r.f1_change = f1(cm, F1Mode::Change);
  r.f1_macro = f1(cm, F1Mode::Macro);
  r.ciou = class_iou(cm, PixelClass::Change);
  r.miou = mean_iou(cm);
  const auto [fpr, fnr] = error_rates(cm);
  r.fp_rate = fpr;
  r.fn_rate = fnr;
  return r;
}

struct PerSampleRow {
  std::string id;
  ConfusionMatrix cm;
  double ciou = 0.0;
};

/// Evaluate a predictor over samples: one global confusion matrix plus a
/// per-sample breakdown. `predict` maps a sample to a Mask, `truth` to the
/// ground-truth Mask, `ident` to its id.
template <typename SampleRange, typename PredictFn, typename TruthFn, typename IdFn>
MetricReport evaluate(const SampleRange& samples, const PredictFn& predict, const TruthFn& truth,
                      const IdFn& ident, std::vector<PerSampleRow>* per_sample = nullptr) {
  ConfusionMatrix global;
  std::size_t n = 0;
  for (const auto& s : samples) {
    const ConfusionMatrix cm = confusion(predict(s), truth(s));
    global += cm;
    if (per_sample) per_sample->push_back({ident(s), cm, class_iou(cm, PixelClass::Change)});
    ++n;
  }
  if (n == 0) throw std::invalid_argument("evaluate: empty sample list");
  return make_report(global);
}

}  // namespace kdmsi
