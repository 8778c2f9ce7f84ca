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


def create_sequences(n: int = 60, frames: int = 5, inputs: int = 3, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """
    Sequences whose class shifts the first input of every frame.
    """

    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 3
    windows = rng.standard_normal((n, frames, inputs))
    windows[:, :, 0] += 2.0 * labels[:, None]
    return windows, labels


def create_window_samples(n: int = 24, window_frames: int = 6, seed: int = 0) -> SampleSet:
    rng = np.random.default_rng(seed)
    return SampleSet(rng.standard_normal((n, window_frames, FeatureCount)), np.arange(n) % 3,
                     np.arange(n), np.arange(n))
