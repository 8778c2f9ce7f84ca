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
from lcintent.plugins.lstm.classifier import LstmClassifier
from .resources import create_window_samples


class LstmClassifierTest(unittest.TestCase):

    def test_fit_with_sequence_step_expect_probabilities_per_sample(self):
        samples = create_window_samples()

        classifier = create_classifier("lstm", {"hidden_size": 4, "epochs": 2, "batch_size": 8,
                                                "sequence_step": 2})
        scores = classifier.fit(samples).predict_scores(samples)

        self.assertIsInstance(classifier, LstmClassifier)
        self.assertEqual(FeatureCount, classifier.get_params().get_input_size())
        self.assertEqual((24, 3), scores.shape)
        np.testing.assert_allclose(np.ones(24), scores.sum(axis=1))

    def test_predict_before_fit_expect_error(self):
        with self.assertRaises(AttributeError):
            LstmClassifier().predict(create_window_samples())

    def test_save_and_load_expect_equal_scores(self):
        samples = create_window_samples(seed=1)
        classifier = create_classifier("lstm", {"hidden_size": 3, "epochs": 1}).fit(samples)

        with tempfile.TemporaryDirectory() as directory:
            loaded = load_classifier(classifier.save(Path(directory) / "model.json"))

        self.assertIsInstance(loaded, LstmClassifier)
        self.assertEqual(classifier.get_params(), loaded.get_params())
        np.testing.assert_array_equal(classifier.predict_scores(samples), loaded.predict_scores(samples))
