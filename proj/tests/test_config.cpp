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

#include <doctest.h>

#include <stdexcept>
#include <string>

#include "kdmsi/config.hpp"

using namespace kdmsi;

TEST_CASE("an empty config yields the default experiment") {
  const ExperimentConfig cfg = parse_config_text("");

  CHECK(cfg.dataset_path.empty());
  CHECK(cfg.synth_count == 250);
  CHECK(cfg.synth.height == 64);
  CHECK(cfg.synth.width == 64);
  CHECK(cfg.tile == 0);
  CHECK(cfg.ratios.train == 0.8);
  CHECK(cfg.ratios.val == 0.1);
  CHECK(cfg.ratios.test == 0.1);
  CHECK(cfg.weak_label_min_fraction == 0.0);

  CHECK(cfg.backbone == BackboneKind::TinyCnn);
  CHECK(cfg.combine == CombineMode::AbsSubtract);
  CHECK(!cfg.combine_sweep);

  CHECK(cfg.kd.lambda == 10.0);
  CHECK(cfg.kd.batch_size == 8);
  CHECK(cfg.kd.epochs == 20);
  CHECK(cfg.kd.lr == 0.001);
  CHECK(cfg.kd.poly_power == 0.9);
  CHECK(cfg.kd.momentum == 0.9);
  CHECK(cfg.kd.eval_threshold == 0.3);

  REQUIRE(cfg.scales.scales.size() == 4);
  CHECK(cfg.scales.scales[0] == 0.5);
  CHECK(cfg.scales.scales[3] == 2.0);
  CHECK(cfg.scales.flip);
  CHECK(cfg.scales.flip_axis == FlipAxis::Horizontal);
  CHECK(cfg.bg_threshold == 0.3);
  CHECK(!cfg.bg_threshold_sweep);

  CHECK(cfg.seg.batch_size == 16);
  CHECK(cfg.seg.epochs == 50);
  CHECK(cfg.seg.lr == 0.007);
  REQUIRE(cfg.seg_dilations.size() == 3);
  CHECK(cfg.seg_dilations[2] == 4);
  CHECK(cfg.seg_context_ch == 24);
  CHECK(cfg.seg_fuse_ch == 48);
  CHECK(cfg.seg_low_ch == 8);
  CHECK(cfg.seg_decoder_ch == 32);

  CHECK(cfg.seed == 42);
  CHECK(cfg.out_dir == "runs/experiment");
}

TEST_CASE("keys land in their sections and tolerate comments and spacing") {
  const std::string text =
      "# experiment\n"
      "[dataset]\n"
      "count = 24          ; inline comment\n"
      "height=32\n"
      "  width =  32\n"
      "kinds = rectangle, ellipse\n"
      "\n"
      "[model]\n"
      "backbone = tiny-cnn\n"
      "combine = concat\n"
      "[kd]\n"
      "lambda = 2.5\n"
      "epochs = 3\n"
      "eval_split = val\n"
      "eval_resize = nearest\n"
      "[msi]\n"
      "scales = 1.0, 2.0\n"
      "flip = false\n"
      "flip_axis = vertical\n"
      "bg_threshold = 0.45\n"
      "[seg]\n"
      "dilations = 1,3\n"
      "epochs = 5\n"
      "[run]\n"
      "seed = 7\n"
      "out = runs/t\n";

  const ExperimentConfig cfg = parse_config_text(text);
  CHECK(cfg.synth_count == 24);
  CHECK(cfg.synth.height == 32);
  CHECK(cfg.synth.width == 32);
  REQUIRE(cfg.synth.kinds.size() == 2);
  CHECK(cfg.synth.kinds[1] == ObjectKind::Ellipse);
  CHECK(cfg.combine == CombineMode::Concat);
  CHECK(cfg.kd.lambda == 2.5);
  CHECK(cfg.kd.epochs == 3);
  CHECK(cfg.kd.eval_split == "val");
  CHECK(cfg.kd.eval_resize == EvalResize::Nearest);
  REQUIRE(cfg.scales.scales.size() == 2);
  CHECK(cfg.scales.scales[1] == 2.0);
  CHECK(!cfg.scales.flip);
  CHECK(cfg.scales.flip_axis == FlipAxis::Vertical);
  CHECK(cfg.bg_threshold == 0.45);
  REQUIRE(cfg.seg_dilations.size() == 2);
  CHECK(cfg.seg_dilations[1] == 3);
  CHECK(cfg.seg.epochs == 5);
  CHECK(cfg.seed == 7);
  CHECK(cfg.out_dir == "runs/t");
}

TEST_CASE("the distillation eval threshold follows the background threshold") {
  CHECK(parse_config_text("[msi]\nbg_threshold = 0.45\n").kd.eval_threshold == 0.45);
  // Under a threshold sweep the trainer keeps the default; the sweep itself
  // runs later, when pseudo-labels are produced.
  const ExperimentConfig swept = parse_config_text("[msi]\nbg_threshold = sweep\n");
  CHECK(swept.bg_threshold_sweep);
  CHECK(swept.kd.eval_threshold == 0.3);
}

TEST_CASE("sweep settings parse as flags") {
  const ExperimentConfig cfg = parse_config_text("[model]\ncombine = sweep\n");
  CHECK(cfg.combine_sweep);
  CHECK(cfg.combine == CombineMode::AbsSubtract);  // untouched default

  const ExperimentConfig plain = parse_config_text("[model]\ncombine = subtract\n");
  CHECK(!plain.combine_sweep);
  CHECK(plain.combine == CombineMode::Subtract);
}

TEST_CASE("parse errors carry the offending key or line") {
  CHECK_THROWS_WITH_AS(parse_config_text("[nope]\nx = 1\n"),
                       doctest::Contains("unknown section"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text("[kd]\nlambada = 1\n"),
                       doctest::Contains("kd.lambada"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text("[kd]\nlambda = abc\n"),
                       doctest::Contains("kd.lambda"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text("[kd]\nepochs = 2.5\n"),
                       doctest::Contains("bad integer"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text("\n\n[broken\n"), doctest::Contains("line 3"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text("[kd]\nno equals sign here\n"),
                       doctest::Contains("line 2"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text("lambda = 1\n"),
                       doctest::Contains("outside any section"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text("[msi]\nflip = maybe\n"),
                       doctest::Contains("bad boolean"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("[kd]\neval_split = test\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("[msi]\nflip_axis = diagonal\n"), std::invalid_argument);
}

TEST_CASE("validation rejects inconsistent experiments") {
  CHECK_THROWS_AS(parse_config_text("[dataset]\ncount = 2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("[dataset]\nheight = 30\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("[msi]\nbg_threshold = 1.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("[msi]\nscales = 1.0,-2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("[kd]\nlambda = -3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("[run]\nout =\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("[seg]\ndilations = 0\n"), std::invalid_argument);
  // A dataset path skips synthetic-generator validation entirely.
  CHECK_NOTHROW(parse_config_text("[dataset]\npath = /some/dir\nheight = 30\n"));
}

TEST_CASE("serialised configs parse back to the same experiment") {
  ExperimentConfig cfg = parse_config_text("");
  cfg.synth_count = 36;
  cfg.synth.height = 32;
  cfg.synth.width = 48;
  cfg.synth.no_change_fraction = 0.25;
  cfg.combine = CombineMode::Concat;
  cfg.kd.lambda = 3.5;
  cfg.kd.epochs = 4;
  cfg.kd.eval_split = "val";
  cfg.scales.scales = {1.0, 1.5};
  cfg.scales.flip = false;
  cfg.bg_threshold = 0.4;
  cfg.kd.eval_threshold = 0.4;
  cfg.seg.epochs = 6;
  cfg.seg_decoder_ch = 16;
  cfg.seed = 1234;
  cfg.out_dir = "runs/echo";

  const std::string text = config_to_text(cfg);
  const ExperimentConfig again = parse_config_text(text);

  CHECK(again.synth_count == cfg.synth_count);
  CHECK(again.synth.width == 48);
  CHECK(again.synth.no_change_fraction == 0.25);
  CHECK(again.combine == CombineMode::Concat);
  CHECK(again.kd.lambda == 3.5);
  CHECK(again.kd.eval_split == "val");
  CHECK(again.scales.scales == cfg.scales.scales);
  CHECK(again.scales.flip == false);
  CHECK(again.bg_threshold == 0.4);
  CHECK(again.kd.eval_threshold == 0.4);
  CHECK(again.seg.epochs == 6);
  CHECK(again.seg_decoder_ch == 16);
  CHECK(again.seed == 1234);
  CHECK(again.out_dir == "runs/echo");

  // Serialising the reparsed config reproduces the text exactly.
  CHECK(config_to_text(again) == text);

  // Sweep flags survive the round trip too.
  ExperimentConfig sweeps = parse_config_text("[model]\ncombine = sweep\n[msi]\nbg_threshold = sweep\n");
  const ExperimentConfig sweeps2 = parse_config_text(config_to_text(sweeps));
  CHECK(sweeps2.combine_sweep);
  CHECK(sweeps2.bg_threshold_sweep);
}

TEST_CASE("loading a missing config file fails loudly") {
  CHECK_THROWS_AS(load_config("/nonexistent/kdmsi.ini"), std::runtime_error);
}
