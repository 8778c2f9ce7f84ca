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
import time
import unittest
from unittest import mock

import numpy as np

from lcintent.core.specs.classifier import ModelRegistry
from lcintent.core.specs.configs import DatasetConfig
from lcintent.core.specs.dtos import LaneChangeClass
from lcintent.evaluation.metrics import crossval_summary
from lcintent.evaluation.runners import CrossvalResult, crossval, fit_and_evaluate, benchmark_training, \
    sweep_trees, sweep_window, synthetic_matrix
from lcintent.executors.pool import WorkerPool
from .resources import ConstantClassifier, ConstantRegistry, create_sample_set, create_report, create_random_series


class CrossvalTest(unittest.TestCase):

    def test_crossval_constant_classifier_on_balanced_folds_expect_third_accuracy(self):
        samples = create_sample_set([0, 1, 2] * 10)
        folds = [(np.setdiff1d(np.arange(30), np.arange(3 * i, 3 * i + 3)), np.arange(3 * i, 3 * i + 3))
                 for i in range(10)]

        result = crossval(ConstantClassifier, samples, folds, pool=WorkerPool(max_workers=4))

        self.assertEqual("constant", result.model)
        np.testing.assert_allclose(np.full(10, 1.0 / 3.0), result.get_accuracies())
        self.assertEqual(0.0, result.std_accuracy)

    def test_crossval_leave_one_out_expect_single_sample_reports(self):
        samples = create_sample_set([0, 1, 2, 0, 1, 2, 0, 1, 2, 0])

        result = crossval(ConstantClassifier, samples, 10, rng_seed=1)

        self.assertEqual(10, len(result.reports))
        self.assertTrue(all(1 == report.confusion.total() for report in result.reports))
        self.assertAlmostEqual(0.4, result.mean_accuracy, places=12)

    def test_crossval_result_of_two_folds_expect_sample_stddev(self):
        reports = [create_report([[3, 1, 0], [0, 3, 0], [0, 0, 3]]), create_report([[4, 0, 0], [0, 3, 0], [0, 0, 3]])]

        result = CrossvalResult("constant", reports, [])

        self.assertAlmostEqual(0.95, result.mean_accuracy, places=12)
        self.assertAlmostEqual(0.0707107, result.std_accuracy, places=6)

    def test_crossval_summary_expect_fold_columns(self):
        reports = [create_report([[3, 1, 0], [0, 3, 0], [0, 0, 3]]), create_report([[4, 0, 0], [0, 3, 0], [0, 0, 3]])]

        summary = crossval_summary([CrossvalResult("constant", reports, [])])

        self.assertEqual(["model", "mean", "stddev", "fold0", "fold1"], list(summary.columns))
        self.assertAlmostEqual(0.9, summary["fold0"].iloc[0], places=12)

    def test_fit_and_evaluate_expect_fresh_classifier_and_timing(self):
        train_set, test_set = create_sample_set([0, 1, 2, 2]), create_sample_set([0, 0, 1])

        classifier, report = fit_and_evaluate(ConstantClassifier, train_set, test_set)

        self.assertEqual(4, classifier.fitted_samples)
        self.assertAlmostEqual(2.0 / 3.0, report.accuracy, places=12)
        self.assertGreaterEqual(report.training_seconds, 0.0)


class BenchmarkTest(unittest.TestCase):

    def test_benchmark_three_repeats_expect_median_of_runs(self):
        result = benchmark_training(lambda: time.sleep(0.002), repeats=3)

        self.assertEqual(3, len(result.runs))
        self.assertTrue(all(0.0 < run for run in result.runs))
        self.assertEqual(sorted(result.runs)[1], result.median_seconds)
        self.assertIn("python", result.to_dict()["machine"])

    def test_benchmark_no_op_trainer_expect_negligible_overhead(self):
        self.assertLess(benchmark_training(lambda: None, repeats=1).median_seconds, 0.01)

    def test_benchmark_without_repeats_expect_error(self):
        with self.assertRaises(ValueError):
            benchmark_training(lambda: None, repeats=0)

    def test_synthetic_matrix_expect_deterministic_three_class_set(self):
        features, labels = synthetic_matrix(n=2000, d=20, rng_seed=3)
        features_again, labels_again = synthetic_matrix(n=2000, d=20, rng_seed=3)

        self.assertEqual((2000, 20), features.shape)
        np.testing.assert_array_equal(features, features_again)
        np.testing.assert_array_equal(labels, labels_again)
        self.assertEqual([0, 1, 2], np.unique(labels).tolist())

        with self.assertRaises(ValueError):
            synthetic_matrix(n=0)


class SweepTest(unittest.TestCase):

    def test_sweep_trees_with_unknown_strategy_expect_error(self):
        samples = create_sample_set([0, 1, 2])

        with self.assertRaises(ValueError):
            sweep_trees(samples, samples, (20,), strategies=("random",))

    def test_sweep_window_expect_row_per_length_and_model(self):
        features = {ego_id: create_random_series(ego_id, 60, seed=ego_id) for ego_id in range(1, 7)}
        labels = {1: (LaneChangeClass.LK, None), 2: (LaneChangeClass.LK, None), 3: (LaneChangeClass.LK, None),
                  4: (LaneChangeClass.RLC, 50), 5: (LaneChangeClass.RLC, 50), 6: (LaneChangeClass.LLC, 55)}
        models = {"constant": None, "shifted": {"label": 1}}
        registry = dict(ConstantRegistry, shifted=ConstantRegistry["constant"])

        with mock.patch.dict(ModelRegistry, registry):
            first = sweep_window(features, labels, DatasetConfig(rng_seed=2), (10, 20, 30), models)
            second = sweep_window(features, labels, DatasetConfig(rng_seed=2), (10, 20, 30), models)

        self.assertEqual(6, len(first))
        self.assertEqual([10, 10, 20, 20, 30, 30], first["window"].tolist())
        self.assertEqual(["constant", "shifted"] * 3, first["model"].tolist())
        self.assertTrue(first.equals(second))
