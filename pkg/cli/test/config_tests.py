# =============================================================================
# Copyright (c) 2024 by the lc-intent authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# =============================================================================
import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from lcintent.cli.commands import scrub_timings
from lcintent.cli.config import load_run_config, parse_override, apply_overrides
from lcintent.core.commons.parameters import ConfigValidationError
from lcintent.core.specs.dtos import LaneChangeClass


class RunConfigTest(unittest.TestCase):

    def test_load_without_file_expect_defaults_with_seed(self):
        config = load_run_config(None, [], {"seed": 3, "model": None})

        self.assertEqual(3, config.get_dataset_config().rng_seed)
        self.assertEqual(3, config.get_synth_config().rng_seed)
        self.assertEqual(150, config.get_dataset_config().window_frames)
        self.assertIsNone(config.model)

    def test_load_yaml_file_with_env_template_expect_resolved_path(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "run.yaml"
            path.write_text("seed: 5\npaths:\n  out: $(env:LC_INTENT_TEST_OUT)/run\n"
                            "dataset:\n  window_frames: 90\n", encoding="utf-8")

            with mock.patch.dict(os.environ, {"LC_INTENT_TEST_OUT": "/tmp/results"}):
                config = load_run_config(path)

        self.assertEqual(Path("/tmp/results/run"), config.get_path("out"))
        self.assertEqual(90, config.get_dataset_config().window_frames)
        self.assertEqual(Path("elsewhere"), config.get_path("out", "elsewhere"))

    def test_load_json_file_expect_same_as_yaml(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "run.json"
            path.write_text('{"seed": 2, "models": {"gbdt": {"num_trees_per_class": 10}}}', encoding="utf-8")

            config = load_run_config(path)

        self.assertEqual({"num_trees_per_class": 10, "rng_seed": 2}, config.get_model_config("gbdt-exact"))

    def test_overrides_and_flags_expect_flags_take_precedence(self):
        config = load_run_config(None, ["seed=1", "dataset.folds=5", "models.svm.c=0.5"], {"seed": 2})

        self.assertEqual(2, config.seed)
        self.assertEqual(5, config.get_dataset_config().folds)
        self.assertEqual({"c": 0.5, "rng_seed": 2}, config.get_model_config("svm"))

    def test_invalid_section_value_expect_qualified_key(self):
        with self.assertRaises(ConfigValidationError) as context:
            load_run_config(None, ["dataset.window_frames=0"])

        self.assertEqual("dataset.window_frames", context.exception.key)

        with self.assertRaises(ConfigValidationError) as context:
            load_run_config(None, ["models.forest.trees=3"])

        self.assertEqual("models.forest", context.exception.key)

    def test_missing_or_invalid_file_expect_errors(self):
        with self.assertRaises(FileNotFoundError):
            load_run_config("/surely/not/existing.yaml")

        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "run.yaml"
            path.write_text("- 1\n- 2\n", encoding="utf-8")

            with self.assertRaises(ConfigValidationError):
                load_run_config(path)

    def test_unknown_model_expect_validation_error(self):
        with self.assertRaises(ConfigValidationError) as context:
            load_run_config().get_model_config("gbm")

        self.assertEqual("model: unknown model 'gbm'", str(context.exception))

    def test_require_seed_without_seed_expect_validation_error(self):
        with self.assertRaises(ConfigValidationError) as context:
            load_run_config().require_seed()

        self.assertEqual("seed", context.exception.key)

    def test_balance_target_expect_lane_keeping_only(self):
        self.assertIsNone(load_run_config().get_balance_target())
        self.assertEqual({LaneChangeClass.LK: 100},
                         load_run_config(None, ["dataset.balance_target=100"]).get_balance_target())


class OverrideTest(unittest.TestCase):

    def test_parse_override_expect_path_and_yaml_value(self):
        self.assertEqual((["dataset", "window_frames"], 90), parse_override("dataset.window_frames=90"))
        self.assertEqual((["synth", "lc_duration_s"], [3.0, 4.0]), parse_override("synth.lc_duration_s=[3.0, 4.0]"))
        self.assertEqual((["paths", "out"], "a=b"), parse_override("paths.out=a=b"))

    def test_parse_invalid_override_expect_error(self):
        for assignment in ("dataset.window_frames", "=3", "dataset.x=[1,"):
            with self.assertRaises(ConfigValidationError):
                parse_override(assignment)

    def test_apply_overrides_expect_source_untouched(self):
        source = {"dataset": {"folds": 4}}

        result = apply_overrides(source, ["dataset.stride=2"])

        self.assertEqual({"dataset": {"folds": 4, "stride": 2}}, result)
        self.assertEqual({"dataset": {"folds": 4}}, source)

    def test_apply_override_below_scalar_expect_error(self):
        with self.assertRaises(ConfigValidationError):
            apply_overrides({"seed": 3}, ["seed.value=1"])


class ScrubTimingsTest(unittest.TestCase):

    def test_scrub_timings_expect_zeroed_timing_values(self):
        result = {"created": "2024-01-01T00:00:00+00:00", "accuracy": 0.5,
                  "models": [{"training_seconds": 1.25, "runs": [0.5, 0.7]}], "ratio": None}

        self.assertEqual({"created": 0, "accuracy": 0.5, "models": [{"training_seconds": 0, "runs": [0.0, 0.0]}],
                          "ratio": None}, scrub_timings(result))
