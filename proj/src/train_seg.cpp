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
#include <limits>
#include <stdexcept>

#include "kdmsi/metrics.hpp"
#include "kdmsi/train.hpp"

namespace kdmsi {

namespace {

double val_change_iou(const SegNet<float>& net, const std::vector<Sample>& val) {
  ConfusionMatrix cm;
  for (const Sample& s : val) cm += confusion(predict_change_mask(net, s.pair), s.mask);
  return class_iou(cm, PixelClass::Change);
}

}  // namespace

SegTrainResult train_segnet(const std::vector<SegSample>& train_samples,
                            const std::vector<Sample>& val_samples, const SegSpec& arch,
                            const SegTrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (train_samples.empty()) throw std::invalid_argument("train_segnet: empty training set");
  for (const SegSample& s : train_samples)
    if (s.target.rows() != s.pair.pre.h || s.target.cols() != s.pair.pre.w)
      throw std::invalid_argument("train_segnet: target shape mismatch for " + s.pair.id);

  SegNet<float> net(arch);
  {
    Rng rng(derive_seed(seed, 2));
    net.init(rng);
  }
  const ParamList<float> params = net.params();
  SgdMomentum opt(cfg.momentum);

  const auto n = static_cast<std::int64_t>(train_samples.size());
  const std::int64_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::int64_t total_steps = steps_per_epoch * cfg.epochs;

  SegTrainResult result;
  result.best_val_ciou = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::int64_t global_step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(seed, 0x20000u + static_cast<std::uint64_t>(epoch)));
    const std::vector<int> order = permutation(static_cast<int>(train_samples.size()), shuffle_rng);
    const double lr_epoch = poly_lr(cfg.lr, global_step, total_steps, cfg.poly_power);

    double sum_loss = 0;
    for (std::int64_t start = 0; start < n; start += cfg.batch_size) {
      const std::int64_t stop = std::min(n, start + cfg.batch_size);
      const float inv_batch = 1.0f / static_cast<float>(stop - start);
      net.zero_grad();
      for (std::int64_t b = start; b < stop; ++b) {
        const SegSample& s = train_samples[order[static_cast<std::size_t>(b)]];
        SegNet<float>::Cache cache;
        const Tensorf logits = net.forward(s.pair, cache);
        const float loss = softmax_cross_entropy(logits, s.target);
        if (!std::isfinite(loss))
          throw std::runtime_error("train_segnet: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", sample " + s.pair.id);
        sum_loss += loss;
        Tensorf d = softmax_cross_entropy_grad(logits, s.target);
        d.data *= inv_batch;
        net.backward(d, cache);
      }
      opt.step(params, poly_lr(cfg.lr, global_step, total_steps, cfg.poly_power));
      ++global_step;
    }

    SegEpochRow row;
    row.epoch = epoch;
    row.loss = sum_loss / static_cast<double>(n);
    row.val_ciou = val_samples.empty() ? 0.0 : val_change_iou(net, val_samples);
    row.lr = lr_epoch;
    result.history.push_back(row);
    result.epochs_run = epoch + 1;

    // Best epoch: validation change-IoU; training loss when no val set.
    bool improved;
    if (val_samples.empty()) {
      improved = row.loss < best_loss;
      if (improved) best_loss = row.loss;
    } else {
      improved = row.val_ciou > result.best_val_ciou;
    }
    if (improved) {
      result.best_val_ciou = row.val_ciou;
      result.best_epoch = epoch;
      result.best = net;
    }
    if (cfg.patience > 0 && epoch - result.best_epoch >= cfg.patience) break;
  }

  result.final_net = net;
  return result;
}

void save_seg_history(const std::string& path, const std::vector<SegEpochRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "epoch,loss,val_ciou,lr\n";
  char buf[160];
  for (const SegEpochRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", r.epoch, r.loss, r.val_ciou, r.lr);
    out << buf;
  }
}

}  // namespace kdmsi
