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

#include "kdmsi/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kdmsi/checkpoint.hpp"
#include "kdmsi/dataset_io.hpp"
#include "kdmsi/msi.hpp"
#include "kdmsi/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kdmsi {

Stage stage_from_string(const std::string& s) {
  if (s == "data") return Stage::Data;
  if (s == "kd") return Stage::Kd;
  if (s == "infer") return Stage::Infer;
  if (s == "pseudo") return Stage::Pseudo;
  if (s == "seg") return Stage::Seg;
  if (s == "eval") return Stage::Eval;
  throw std::invalid_argument("unknown stage: " + s +
                              " (expected data|kd|infer|pseudo|seg|eval)");
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Data: return "data";
    case Stage::Kd: return "kd";
    case Stage::Infer: return "infer";
    case Stage::Pseudo: return "pseudo";
    case Stage::Seg: return "seg";
    default: return "eval";
  }
}

int stage_exit_code(Stage s) { return 10 + static_cast<int>(s); }

namespace {

// Seed streams per stage, all derived from the run seed.
constexpr std::uint64_t kStreamDataset = 10;
constexpr std::uint64_t kStreamSplit = 11;
constexpr std::uint64_t kStreamKd = 12;
constexpr std::uint64_t kStreamSeg = 13;

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

std::string run_json_path(const ExperimentConfig& cfg) {
  return (fs::path(cfg.out_dir) / "run.json").string();
}

/// Dataset directory recorded by the data stage.
std::string dataset_dir(const ExperimentConfig& cfg) {
  const json j = read_json_file(run_json_path(cfg));
  return j.at("dataset_dir").get<std::string>();
}

std::vector<Sample> load_run_dataset(const ExperimentConfig& cfg) {
  return load_dataset(dataset_dir(cfg));
}

DatasetSplit load_run_split(const ExperimentConfig& cfg) {
  return load_split((fs::path(cfg.out_dir) / "splits.json").string());
}

std::vector<Sample> split_samples(const std::vector<Sample>& all,
                                  const std::vector<std::string>& ids) {
  return select_samples(all, ids);
}

struct MapKind {
  const char* dir;
};
constexpr MapKind kTeacherCam{"teacher_cam"};
constexpr MapKind kStudent{"student"};
constexpr MapKind kMi{"mi"};
constexpr MapKind kMsi{"msi"};

std::string map_path(const ExperimentConfig& cfg, const MapKind& kind, const std::string& id) {
  return (fs::path(cfg.out_dir) / "maps" / kind.dir / (id + ".png")).string();
}

std::string pseudo_dir(const ExperimentConfig& cfg) {
  return (fs::path(cfg.out_dir) / "pseudo").string();
}

/// Background threshold actually used (after an optional sweep), persisted by
/// the pseudo stage.
double resolved_bg_threshold(const ExperimentConfig& cfg) {
  const fs::path p = fs::path(pseudo_dir(cfg)) / "threshold.json";
  if (fs::exists(p)) return read_json_file(p.string()).at("threshold").get<double>();
  if (cfg.bg_threshold_sweep)
    throw std::runtime_error("bg_threshold sweep requested but pseudo stage has not run");
  return cfg.bg_threshold;
}

json report_to_json(const MetricReport& r) {
  return {{"aggregation", r.aggregation},
          {"counts",
           {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}}},
          {"oa", r.oa},
          {"f1_change", r.f1_change},
          {"f1_macro", r.f1_macro},
          {"ciou", r.ciou},
          {"miou", r.miou},
          {"fp_rate", r.fp_rate},
          {"fn_rate", r.fn_rate}};
}

void write_report_csv(const std::string& path, const MetricReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "aggregation,tp,fp,fn,tn,oa,f1_change,f1_macro,ciou,miou,fp_rate,fn_rate\n";
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%llu,%llu,%llu,%llu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                r.aggregation.c_str(), static_cast<unsigned long long>(r.counts.tp),
                static_cast<unsigned long long>(r.counts.fp),
                static_cast<unsigned long long>(r.counts.fn),
                static_cast<unsigned long long>(r.counts.tn), r.oa, r.f1_change, r.f1_macro,
                r.ciou, r.miou, r.fp_rate, r.fn_rate);
  out << buf;
}

void write_per_sample_csv(const std::string& path, const std::vector<PerSampleRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "id,tp,fp,fn,tn,ciou\n";
  char buf[256];
  for (const PerSampleRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%llu,%llu,%llu,%.9g\n", r.id.c_str(),
                  static_cast<unsigned long long>(r.cm.tp),
                  static_cast<unsigned long long>(r.cm.fp),
                  static_cast<unsigned long long>(r.cm.fn),
                  static_cast<unsigned long long>(r.cm.tn), r.ciou);
    out << buf;
  }
}

template <typename Fn>
auto guard(Stage stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

void run_stage_data(const ExperimentConfig& cfg) {
  guard(Stage::Data, [&] {
    fs::create_directories(cfg.out_dir);
    {
      std::ofstream out(fs::path(cfg.out_dir) / "config.ini");
      out << config_to_text(cfg);
    }
    std::vector<Sample> samples;
    std::string data_dir;
    if (cfg.dataset_path.empty()) {
      const std::uint64_t gen_seed = derive_seed(cfg.seed, kStreamDataset);
      samples = generate_synthetic_dataset(cfg.synth, cfg.synth_count, gen_seed);
      data_dir = (fs::path(cfg.out_dir) / "dataset").string();
      DatasetMeta meta{cfg.synth, gen_seed, cfg.synth_count};
      save_dataset(data_dir, samples, meta);
    } else {
      samples = load_dataset(cfg.dataset_path);
      if (cfg.tile > 0) {
        std::vector<Sample> tiled;
        for (const Sample& s : samples) {
          for (TilePatch& p : tile_scene(s.pair, s.mask, cfg.tile)) {
            Sample t;
            t.pair = std::move(p.pair);
            t.mask = std::move(p.mask);
            t.label = derive_image_label(t.mask, cfg.weak_label_min_fraction);
            tiled.push_back(std::move(t));
          }
        }
        if (tiled.empty()) throw std::runtime_error("tiling produced no patches");
        samples = std::move(tiled);
        data_dir = (fs::path(cfg.out_dir) / "dataset").string();
        save_dataset(data_dir, samples);
      } else {
        data_dir = cfg.dataset_path;
      }
    }
    const DatasetSplit split =
        split_dataset(samples, cfg.ratios, derive_seed(cfg.seed, kStreamSplit));
    save_split((fs::path(cfg.out_dir) / "splits.json").string(), split);
    write_json_file(run_json_path(cfg), json{{"dataset_dir", data_dir},
                                             {"seed", cfg.seed},
                                             {"samples", samples.size()},
                                             {"train", split.train.size()},
                                             {"val", split.val.size()},
                                             {"test", split.test.size()}});
  });
}

void run_stage_kd(const ExperimentConfig& cfg) {
  guard(Stage::Kd, [&] {
    const std::vector<Sample> all = load_run_dataset(cfg);
    const DatasetSplit split = load_run_split(cfg);
    const std::vector<Sample> train = split_samples(all, split.train);
    const std::vector<Sample> eval_set =
        cfg.kd.eval_split == "val" && !split.val.empty() ? split_samples(all, split.val) : train;

    const fs::path kd_dir = fs::path(cfg.out_dir) / "kd";
    fs::create_directories(kd_dir);
    const std::uint64_t kd_seed = derive_seed(cfg.seed, kStreamKd);

    std::vector<CombineMode> modes;
    if (cfg.combine_sweep)
      modes = {CombineMode::Subtract, CombineMode::AbsSubtract, CombineMode::Concat};
    else
      modes = {cfg.combine};

    // Sweep selection: student change-IoU on the validation split (falls back
    // to the training split when the validation split is empty).
    const std::vector<Sample>& select_set =
        !split.val.empty() ? split_samples(all, split.val) : train;
    KDTrainResult best_result;
    CombineMode best_mode = modes.front();
    double best_select_iou = -1.0;
    json sweep_rows = json::array();
    for (CombineMode mode : modes) {
      KDTrainResult r = train_kd(train, eval_set, cfg.backbone_spec(), mode, cfg.kd, kd_seed);
      double select_iou = r.best_student_ciou;
      if (cfg.combine_sweep) {
        ConfusionMatrix cm;
        for (const Sample& s : select_set) {
          const Mapf p = student_probability_map(r.student, s.pair, cfg.kd.eval_resize);
          cm += confusion(threshold_map(p, cfg.kd.eval_threshold), s.mask);
        }
        select_iou = class_iou(cm, PixelClass::Change);
        sweep_rows.push_back({{"combine", to_string(mode)}, {"val_ciou", select_iou}});
      }
      if (select_iou > best_select_iou) {
        best_select_iou = select_iou;
        best_mode = mode;
        best_result = std::move(r);
      }
    }
    if (cfg.combine_sweep)
      write_json_file((kd_dir / "sweep.json").string(),
                      json{{"selected", to_string(best_mode)}, {"rows", sweep_rows}});

    KDTrainResult& r = best_result;
    save_score_net((kd_dir / "teacher.kdms").string(), r.teacher, kd_seed);
    save_score_net((kd_dir / "student.kdms").string(), r.student, kd_seed);
    save_score_net((kd_dir / "teacher_final.kdms").string(), r.teacher_final, kd_seed);
    save_score_net((kd_dir / "student_final.kdms").string(), r.student_final, kd_seed);
    save_kd_history((kd_dir / "history.csv").string(), r.history);
    write_json_file((kd_dir / "summary.json").string(),
                    json{{"combine", to_string(best_mode)},
                         {"best_epoch", r.best_epoch},
                         {"best_student_ciou", r.best_student_ciou},
                         {"best_teacher_ciou", r.best_teacher_ciou},
                         {"epochs_run", r.epochs_run}});
  });
}

void run_stage_infer(const ExperimentConfig& cfg) {
  guard(Stage::Infer, [&] {
    const std::vector<Sample> all = load_run_dataset(cfg);
    const fs::path kd_dir = fs::path(cfg.out_dir) / "kd";
    ScoreNet<float> teacher = load_score_net((kd_dir / "teacher.kdms").string());
    ScoreNet<float> student = load_score_net((kd_dir / "student.kdms").string());

    for (const MapKind* kind : {&kTeacherCam, &kStudent, &kMi, &kMsi})
      fs::create_directories(fs::path(cfg.out_dir) / "maps" / kind->dir);

    for (const Sample& s : all) {
      save_map(map_path(cfg, kTeacherCam, s.pair.id),
               teacher_cam_map(teacher, s.pair, cfg.kd.eval_resize));
      save_map(map_path(cfg, kStudent, s.pair.id),
               student_probability_map(student, s.pair, cfg.kd.eval_resize));
      save_map(map_path(cfg, kMi, s.pair.id), multiscale_inference(student, s.pair, cfg.scales));
      save_map(map_path(cfg, kMsi, s.pair.id),
               multiscale_sigmoid_inference(student, s.pair, cfg.scales));
    }
  });
}

void run_stage_pseudo(const ExperimentConfig& cfg) {
  guard(Stage::Pseudo, [&] {
    const std::vector<Sample> all = load_run_dataset(cfg);
    const DatasetSplit split = load_run_split(cfg);
    fs::create_directories(pseudo_dir(cfg));

    double threshold = cfg.bg_threshold;
    json sweep_rows = json::array();
    if (cfg.bg_threshold_sweep) {
      // Pick the threshold maximizing change-IoU of thresholded MSI maps
      // against ground truth on the validation split.
      const std::vector<Sample> val =
          !split.val.empty() ? split_samples(all, split.val) : split_samples(all, split.train);
      double best_iou = -1.0;
      for (int i = 1; i <= 9; ++i) {
        const double t = 0.1 * i;
        ConfusionMatrix cm;
        for (const Sample& s : val)
          cm += confusion(pseudo_label(load_map(map_path(cfg, kMsi, s.pair.id)), t).labels,
                          s.mask);
        const double iou = class_iou(cm, PixelClass::Change);
        sweep_rows.push_back({{"threshold", t}, {"val_ciou", iou}});
        if (iou > best_iou) {
          best_iou = iou;
          threshold = t;
        }
      }
    }

    for (const std::string& id : split.train) {
      const PseudoLabelMap pl = pseudo_label(load_map(map_path(cfg, kMsi, id)), threshold);
      save_mask((fs::path(pseudo_dir(cfg)) / (id + ".png")).string(), pl.labels);
    }
    write_json_file((fs::path(pseudo_dir(cfg)) / "threshold.json").string(),
                    json{{"threshold", threshold},
                         {"sweep", cfg.bg_threshold_sweep},
                         {"rows", sweep_rows}});
  });
}

void run_stage_seg(const ExperimentConfig& cfg) {
  guard(Stage::Seg, [&] {
    const std::vector<Sample> all = load_run_dataset(cfg);
    const DatasetSplit split = load_run_split(cfg);
    std::vector<SegSample> train;
    train.reserve(split.train.size());
    for (const Sample& s : split_samples(all, split.train)) {
      SegSample t;
      t.pair = s.pair;
      t.target = load_mask((fs::path(pseudo_dir(cfg)) / (s.pair.id + ".png")).string());
      train.push_back(std::move(t));
    }
    const std::vector<Sample> val = split_samples(all, split.val);

    SegTrainResult r =
        train_segnet(train, val, cfg.seg_spec(), cfg.seg, derive_seed(cfg.seed, kStreamSeg));
    const fs::path seg_dir = fs::path(cfg.out_dir) / "seg";
    fs::create_directories(seg_dir);
    save_seg_net((seg_dir / "segnet.kdms").string(), r.best, derive_seed(cfg.seed, kStreamSeg));
    save_seg_net((seg_dir / "segnet_final.kdms").string(), r.final_net,
                 derive_seed(cfg.seed, kStreamSeg));
    save_seg_history((seg_dir / "history.csv").string(), r.history);
    write_json_file((seg_dir / "summary.json").string(),
                    json{{"best_epoch", r.best_epoch},
                         {"best_val_ciou", r.best_val_ciou},
                         {"epochs_run", r.epochs_run}});
  });
}

PipelineResult run_stage_eval(const ExperimentConfig& cfg) {
  return guard(Stage::Eval, [&] {
    const std::vector<Sample> all = load_run_dataset(cfg);
    const DatasetSplit split = load_run_split(cfg);
    const std::vector<Sample> test = split_samples(all, split.test);
    if (test.empty()) throw std::runtime_error("empty test split");
    SegNet<float> net =
        load_seg_net((fs::path(cfg.out_dir) / "seg" / "segnet.kdms").string());

    std::vector<PerSampleRow> rows;
    const MetricReport report = evaluate(
        test, [&](const Sample& s) { return predict_change_mask(net, s.pair); },
        [&](const Sample& s) { return s.mask; }, [&](const Sample& s) { return s.pair.id; },
        &rows);

    PipelineResult result;
    result.report = report;
    result.report_path = (fs::path(cfg.out_dir) / "report.json").string();
    json rep = report_to_json(report);
    rep["split"] = "test";
    rep["model"] = "seg/segnet.kdms";
    write_json_file(result.report_path, rep);
    write_report_csv((fs::path(cfg.out_dir) / "report.csv").string(), report);
    write_per_sample_csv((fs::path(cfg.out_dir) / "per_sample.csv").string(), rows);

    // Stage comparison on the training split from the persisted maps, all
    // binarized at the resolved background threshold.
    const double threshold = resolved_bg_threshold(cfg);
    ConfusionMatrix cm_cam, cm_student, cm_mi, cm_msi;
    for (const Sample& s : split_samples(all, split.train)) {
      cm_cam += confusion(
          threshold_map(load_map(map_path(cfg, kTeacherCam, s.pair.id)), threshold), s.mask);
      cm_student += confusion(
          threshold_map(load_map(map_path(cfg, kStudent, s.pair.id)), threshold), s.mask);
      cm_mi +=
          confusion(threshold_map(load_map(map_path(cfg, kMi, s.pair.id)), threshold), s.mask);
      cm_msi +=
          confusion(threshold_map(load_map(map_path(cfg, kMsi, s.pair.id)), threshold), s.mask);
    }
    result.stage_teacher_cam_ciou = class_iou(cm_cam, PixelClass::Change);
    result.stage_student_ciou = class_iou(cm_student, PixelClass::Change);
    result.stage_student_mi_ciou = class_iou(cm_mi, PixelClass::Change);
    result.stage_student_msi_ciou = class_iou(cm_msi, PixelClass::Change);
    {
      std::ofstream out(fs::path(cfg.out_dir) / "stage_table.csv");
      if (!out) throw std::runtime_error("cannot write stage_table.csv");
      char buf[256];
      out << "teacher_cam_ciou,student_ciou,student_mi_ciou,student_msi_ciou\n";
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g\n", result.stage_teacher_cam_ciou,
                    result.stage_student_ciou, result.stage_student_mi_ciou,
                    result.stage_student_msi_ciou);
      out << buf;
    }
    return result;
  });
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, Stage from) {
  if (from <= Stage::Data) run_stage_data(cfg);
  if (from <= Stage::Kd) run_stage_kd(cfg);
  if (from <= Stage::Infer) run_stage_infer(cfg);
  if (from <= Stage::Pseudo) run_stage_pseudo(cfg);
  if (from <= Stage::Seg) run_stage_seg(cfg);
  return run_stage_eval(cfg);
}

}  // namespace kdmsi
