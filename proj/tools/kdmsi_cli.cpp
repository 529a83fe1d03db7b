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

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kdmsi/dataset_io.hpp"
#include "kdmsi/figure.hpp"
#include "kdmsi/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool out_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Experiment config file (INI)");
  cmd->add_option("--seed", f.seed, "Override the run seed")->each([&](const std::string&) {
    f.seed_set = true;
  });
  cmd->add_option("--out", f.out_dir, "Override the output directory")
      ->each([&](const std::string&) { f.out_set = true; });
}

kdmsi::ExperimentConfig resolve_config(const CommonFlags& f) {
  kdmsi::ExperimentConfig cfg =
      f.config_path.empty() ? kdmsi::ExperimentConfig{} : kdmsi::load_config(f.config_path);
  if (f.seed_set) cfg.seed = f.seed;
  if (f.out_set) cfg.out_dir = f.out_dir;
  cfg.validate();
  return cfg;
}

void print_report(const kdmsi::PipelineResult& r) {
  const kdmsi::MetricReport& m = r.report;
  std::printf("report: %s\n", r.report_path.c_str());
  std::printf("test  oa=%.4f f1_change=%.4f f1_macro=%.4f ciou=%.4f miou=%.4f fp_rate=%.4f "
              "fn_rate=%.4f\n",
              m.oa, m.f1_change, m.f1_macro, m.ciou, m.miou, m.fp_rate, m.fn_rate);
  std::printf("train stage cious: teacher_cam=%.4f student=%.4f student+mi=%.4f "
              "student+msi=%.4f\n",
              r.stage_teacher_cam_ciou, r.stage_student_ciou, r.stage_student_mi_ciou,
              r.stage_student_msi_ciou);
}

int run_figure(const CommonFlags& flags, const std::vector<std::string>& ids_flag, int count,
               std::string file, int gutter) {
  const kdmsi::ExperimentConfig cfg = resolve_config(flags);
  std::vector<std::string> ids = ids_flag;
  if (ids.empty()) {
    const kdmsi::DatasetSplit split =
        kdmsi::load_split((fs::path(cfg.out_dir) / "splits.json").string());
    const std::vector<std::string>& pool = !split.test.empty() ? split.test : split.train;
    for (int i = 0; i < count && i < static_cast<int>(pool.size()); ++i)
      ids.push_back(pool[i]);
  }
  if (file.empty()) file = (fs::path(cfg.out_dir) / "figure.png").string();
  const int rows = kdmsi::write_figure(cfg.out_dir, ids, file, gutter);
  if (rows == 0) {
    std::fprintf(stderr, "figure: no renderable sample ids\n");
    return 1;
  }
  std::printf("figure: wrote %d row(s) to %s\n", rows, file.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised change detection: distilled score maps, multiscale sigmoid "
               "inference, pseudo-label segmentation"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string stage_from = "data";
  std::vector<std::string> figure_ids;
  int figure_count = 4;
  int figure_gutter = 4;
  std::string figure_file;

  CLI::App* c_synth = app.add_subcommand("synth", "Materialize the dataset and splits");
  CLI::App* c_kd = app.add_subcommand("train-kd", "Train teacher and student score networks");
  CLI::App* c_infer = app.add_subcommand("infer", "Export probability maps for every sample");
  CLI::App* c_pseudo = app.add_subcommand("pseudo", "Generate pseudo-labels from MSI maps");
  CLI::App* c_seg = app.add_subcommand("train-seg", "Train the segmentation network");
  CLI::App* c_eval = app.add_subcommand("eval", "Evaluate on the test split and write reports");
  CLI::App* c_pipe = app.add_subcommand("pipeline", "Run all stages in order");
  CLI::App* c_fig = app.add_subcommand("figure", "Render qualitative 6-panel rows");

  for (CLI::App* c : {c_synth, c_kd, c_infer, c_pseudo, c_seg, c_eval, c_pipe, c_fig})
    add_common(c, flags);
  c_pipe->add_option("--stage-from", stage_from,
                     "First stage to run (data|kd|infer|pseudo|seg|eval); earlier stages must "
                     "already have artifacts in the output directory");
  c_fig->add_option("--ids", figure_ids, "Sample ids to render (default: first test samples)")
      ->delimiter(',');
  c_fig->add_option("--count", figure_count, "Number of test samples when --ids is absent");
  c_fig->add_option("--file", figure_file, "Output image path (default: <out>/figure.png)");
  c_fig->add_option("--gutter", figure_gutter, "Pixels between panels");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_fig->parsed()) return run_figure(flags, figure_ids, figure_count, figure_file,
                                           figure_gutter);

    const kdmsi::ExperimentConfig cfg = resolve_config(flags);
    if (c_synth->parsed()) {
      kdmsi::run_stage_data(cfg);
      std::printf("synth: dataset and splits ready under %s\n", cfg.out_dir.c_str());
    } else if (c_kd->parsed()) {
      kdmsi::run_stage_kd(cfg);
      std::printf("train-kd: checkpoints under %s/kd\n", cfg.out_dir.c_str());
    } else if (c_infer->parsed()) {
      kdmsi::run_stage_infer(cfg);
      std::printf("infer: maps under %s/maps\n", cfg.out_dir.c_str());
    } else if (c_pseudo->parsed()) {
      kdmsi::run_stage_pseudo(cfg);
      std::printf("pseudo: labels under %s/pseudo\n", cfg.out_dir.c_str());
    } else if (c_seg->parsed()) {
      kdmsi::run_stage_seg(cfg);
      std::printf("train-seg: checkpoints under %s/seg\n", cfg.out_dir.c_str());
    } else if (c_eval->parsed()) {
      print_report(kdmsi::run_stage_eval(cfg));
    } else if (c_pipe->parsed()) {
      print_report(kdmsi::run_pipeline(cfg, kdmsi::stage_from_string(stage_from)));
    }
    return 0;
  } catch (const kdmsi::StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kdmsi::stage_exit_code(e.stage);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
