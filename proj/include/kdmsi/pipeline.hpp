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

#include <stdexcept>
#include <string>
#include <vector>

#include "kdmsi/config.hpp"
#include "kdmsi/metrics.hpp"

namespace kdmsi {

/// Pipeline stages in execution order. Each stage persists its outputs under
/// the run directory and later stages read only those artifacts, so any
/// suffix of the pipeline can be re-run from disk.
enum class Stage { Data, Kd, Infer, Pseudo, Seg, Eval };

Stage stage_from_string(const std::string& s);
std::string to_string(Stage s);

/// Distinct process exit code for a failure in each stage (config/setup
/// failures use exit code 1).
int stage_exit_code(Stage s);

struct StageError : std::runtime_error {
  Stage stage;
  StageError(Stage s, const std::string& msg)
      : std::runtime_error("stage " + to_string(s) + " failed: " + msg), stage(s) {}
};

struct PipelineResult {
  MetricReport report;        // test-split metrics of the final model
  std::string report_path;    // run_dir/report.json
  double stage_teacher_cam_ciou = 0;
  double stage_student_ciou = 0;
  double stage_student_mi_ciou = 0;
  double stage_student_msi_ciou = 0;
};

/// Runs stages `from`..Eval against cfg.out_dir. Stages before `from` must
/// already have their artifacts on disk. Failures raise StageError.
PipelineResult run_pipeline(const ExperimentConfig& cfg, Stage from = Stage::Data);

/// Individual stages (the pipeline subcommands call these directly).
void run_stage_data(const ExperimentConfig& cfg);
void run_stage_kd(const ExperimentConfig& cfg);
void run_stage_infer(const ExperimentConfig& cfg);
void run_stage_pseudo(const ExperimentConfig& cfg);
void run_stage_seg(const ExperimentConfig& cfg);
PipelineResult run_stage_eval(const ExperimentConfig& cfg);

}  // namespace kdmsi
