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
import numpy as np

from lcintent.core.specs.dtos import FeatureCount
from lcintent.datasets.dataset import SampleSet


def create_blobs(n: int = 200, d: int = 5, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """
    Two well separated gaussian blobs, labels 0 and 1 alternate.
    """

    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    centers = np.where(labels[:, None] == 1, 4.0, -4.0)
    return centers + rng.standard_normal((n, d)), labels


def create_discrete_set(n: int = 120, d: int = 4, values: int = 10, classes: int = 3,
                        seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """
    Integer valued features with few distinct values, the label counts the first two above the middle.
    """

    rng = np.random.default_rng(seed)
    features = rng.integers(0, values, (n, d)).astype(np.float64)
    labels = np.minimum((features[:, :2] >= values // 2).sum(axis=1), classes - 1).astype(np.int64)
    return features, labels


def create_window_samples(n: int = 90, window_frames: int = 2, seed: int = 0) -> SampleSet:
    """
    Windows whose class is encoded in the ego longitudinal velocity of the last frame.
    """

    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 3
    windows = rng.standard_normal((n, window_frames, FeatureCount))
    windows[:, -1, 0] += 5.0 * labels
    return SampleSet(windows, labels, np.arange(n), np.arange(n))
