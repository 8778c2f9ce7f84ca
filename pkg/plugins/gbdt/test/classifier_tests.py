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
import tempfile
import unittest
from pathlib import Path

import numpy as np

from lcintent.core.specs.classifier import create_classifier, load_classifier
from lcintent.core.specs.dtos import FeatureCount
from lcintent.evaluation.runners import sweep_trees
from lcintent.plugins.gbdt.classifier import GbdtExactClassifier, GbdtHistogramClassifier
from lcintent.plugins.gbdt.ensemble import GbdtConfig, ExactStrategy, HistogramStrategy
from .resources import create_window_samples


class GbdtClassifierTest(unittest.TestCase):

    def test_create_by_tag_expect_fixed_strategy(self):
        exact = create_classifier("gbdt-exact", {"strategy": HistogramStrategy, "num_trees_per_class": 3})
        histogram = create_classifier("gbdt-hist", {"num_trees_per_class": 3})

        self.assertIsInstance(exact, GbdtExactClassifier)
        self.assertEqual(ExactStrategy, exact.get_config().strategy)
        self.assertIsInstance(histogram, GbdtHistogramClassifier)
        self.assertEqual(HistogramStrategy, histogram.get_config().strategy)

    def test_fit_on_windows_expect_training_samples_recognized(self):
        samples = create_window_samples()

        classifier = GbdtHistogramClassifier(GbdtConfig(num_trees_per_class=10)).fit(samples)

        self.assertTrue(classifier.is_fitted())
        self.assertGreaterEqual(np.mean(classifier.predict(samples) == samples.labels), 0.95)

    def test_predict_before_fit_expect_error(self):
        with self.assertRaises(AttributeError):
            GbdtExactClassifier().predict(create_window_samples())

    def test_indicator_importance_expect_ego_velocity_first(self):
        samples = create_window_samples()
        classifier = GbdtExactClassifier(GbdtConfig(num_trees_per_class=5)).fit(samples)

        importance = classifier.indicator_importance(samples.get_window_frames())

        self.assertEqual((FeatureCount,), importance.shape)
        self.assertEqual(0, int(np.argmax(importance)))

        with self.assertRaises(ValueError):
            classifier.indicator_importance(5)

    def test_indicator_importance_with_frame_step_expect_kept_frames_only(self):
        samples = create_window_samples(window_frames=5)
        classifier = GbdtHistogramClassifier(GbdtConfig(num_trees_per_class=3, frame_step=2)).fit(samples)

        self.assertEqual(3 * FeatureCount, classifier.get_model().num_features)
        self.assertEqual((FeatureCount,), classifier.indicator_importance(5).shape)

    def test_save_and_load_expect_equal_predictions(self):
        samples = create_window_samples(seed=1)
        classifier = GbdtExactClassifier(GbdtConfig(num_trees_per_class=3)).fit(samples)

        with tempfile.TemporaryDirectory() as directory:
            loaded = load_classifier(classifier.save(Path(directory) / "model.json"))

        self.assertIsInstance(loaded, GbdtExactClassifier)
        np.testing.assert_array_equal(classifier.predict_scores(samples), loaded.predict_scores(samples))


class TreeSweepTest(unittest.TestCase):

    def test_sweep_trees_expect_row_per_strategy_and_count(self):
        train_set, test_set = create_window_samples(seed=1), create_window_samples(n=30, seed=2)

        table = sweep_trees(train_set, test_set, (2, 6), gbdt_config={"max_depth": 2})

        self.assertEqual(["strategy", "trees", "accuracy", "seconds"], list(table.columns))
        self.assertEqual(["exact", "exact", "histogram", "histogram"], table["strategy"].tolist())
        self.assertEqual([2, 6, 2, 6], table["trees"].tolist())
        self.assertTrue(((0.0 <= table["accuracy"]) & (table["accuracy"] <= 1.0)).all())
        self.assertTrue((0.0 < table["seconds"]).all())
        self.assertEqual(table["accuracy"].iloc[1], table["accuracy"].iloc[3])
