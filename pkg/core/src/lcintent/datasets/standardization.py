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
from typing import Any

import numpy as np


class Standardizer:
    """
    Per-feature standardization. It is fitted on the training split only and
    stored with the model, so evaluation data never influences it. Constant
    features get scale 1.

    :param mean: per-feature mean
    :param scale: per-feature standard deviation, strictly positive
    """

    def __init__(self, mean: np.ndarray, scale: np.ndarray):
        self.mean: np.ndarray = np.asarray(mean, dtype=np.float64)
        self.scale: np.ndarray = np.asarray(scale, dtype=np.float64)

        if self.mean.shape != self.scale.shape:
            raise ValueError(f"Shape mismatch of mean {self.mean.shape} and scale {self.scale.shape}")

        if np.any(self.scale <= 0):
            raise ValueError("Standardization scales must be positive")

    def get_num_features(self) -> int:
        return self.mean.shape[0]

    @staticmethod
    def fit(features: np.ndarray) -> 'Standardizer':
        """
        :param features: matrix of shape (n, d), statistics are taken along the rows
        """

        features = np.asarray(features, dtype=np.float64)
        if 0 == features.shape[0]:
            raise ValueError("Cannot fit standardization on empty data")

        scale = np.std(features, axis=0)
        return Standardizer(np.mean(features, axis=0), np.where(scale > 0, scale, 1.0))

    def transform(self, features: np.ndarray) -> np.ndarray:
        """
        Standardizes along the last axis, so windows of shape (..., d) are accepted too.
        """

        return (np.asarray(features, dtype=np.float64) - self.mean) / self.scale

    def to_dict(self) -> dict[str, Any]:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @staticmethod
    def from_dict(source: dict[str, Any]) -> 'Standardizer':
        return Standardizer(np.asarray(source["mean"]), np.asarray(source["scale"]))

    def __eq__(self, other):
        return isinstance(other, Standardizer) and \
            np.array_equal(self.mean, other.mean) and np.array_equal(self.scale, other.scale)
