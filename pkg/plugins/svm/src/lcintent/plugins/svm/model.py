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
from typing import Optional, Any

import numpy as np

from lcintent.core.commons.loggers import ContextLogger, create_logger
from lcintent.core.commons.parameters import OptionalParameter
from lcintent.core.specs.configs import Config
from lcintent.datasets.standardization import Standardizer
from lcintent.executors.pool import WorkerPool


class SvmConfig(Config):

    Section = "svm"

    c = OptionalParameter(float, default=1.0, validator=lambda v: v > 0,
                          description="Weight of the hinge loss against the margin term")
    epochs = OptionalParameter(int, default=30, validator=lambda v: v >= 1)
    eta0 = OptionalParameter(float, default=0.01, validator=lambda v: v > 0,
                             description="Initial step size of the schedule eta0 / (1 + decay * t)")
    decay = OptionalParameter(float, default=1e-4, validator=lambda v: v >= 0)
    batch_size = OptionalParameter(int, default=1, validator=lambda v: v >= 1)
    frame_step = OptionalParameter(int, default=1, validator=lambda v: v >= 1,
                                   description="Every frame_step-th window frame is flattened into the input")
    rng_seed = OptionalParameter(int, default=0)


class SvmModel:
    """
    One-vs-rest linear model. Inputs are standardized before scoring.

    :param weights: weight vectors, shape (K, d)
    :param biases: biases, shape (K,)
    """

    def __init__(self, weights: np.ndarray, biases: np.ndarray, standardizer: Standardizer, config: SvmConfig):
        self.weights: np.ndarray = np.asarray(weights, dtype=np.float64)
        self.biases: np.ndarray = np.asarray(biases, dtype=np.float64)
        self.standardizer: Standardizer = standardizer
        self.config: SvmConfig = config

        if (2 != self.weights.ndim) or (self.weights.shape[0] != self.biases.shape[0]) or \
                (self.weights.shape[1] != self.standardizer.mean.shape[0]):
            raise ValueError("Inconsistent model dimensions")

    def get_num_features(self) -> int:
        return self.weights.shape[1]

    def scores(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if 1 == features.ndim:
            features = features.reshape(1, -1)

        if self.get_num_features() != features.shape[1]:
            raise ValueError(f"Expected {self.get_num_features()} features, got {features.shape[1]}")

        return self.standardizer.transform(features) @ self.weights.T + self.biases

    def to_dict(self) -> dict[str, Any]:
        return {
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
            "standardization": self.standardizer.to_dict(),
            "config": self.config.to_dict()
        }

    @staticmethod
    def from_dict(source: dict[str, Any]) -> 'SvmModel':
        return SvmModel(np.asarray(source["weights"]), np.asarray(source["biases"]),
                        Standardizer.from_dict(source["standardization"]), SvmConfig.from_dict(source["config"]))


def hinge_objective(weights: np.ndarray, bias: float, features: np.ndarray, targets: np.ndarray, c: float) -> float:
    """
    1/2 |w|^2 + c * sum(max(0, 1 - y (w x + b))) with targets y in {-1, +1}.
    """

    margins = targets * (features @ weights + bias)
    return float(0.5 * np.dot(weights, weights) + c * np.sum(np.maximum(0.0, 1.0 - margins)))


def _train_binary(features: np.ndarray, targets: np.ndarray, config: SvmConfig, seed: list[int],
                  logger: ContextLogger) -> tuple[np.ndarray, float]:
    """
    Stochastic subgradient descent on the hinge objective divided by c * n, which has
    the same minimizer. The returned iterate is the epoch end with the lowest objective,
    the zero model included.
    """

    n, d = features.shape
    rng = np.random.default_rng(seed)

    weights = np.zeros(d, dtype=np.float64)
    bias = 0.0

    best_weights, best_bias = weights.copy(), bias
    best_objective = hinge_objective(weights, bias, features, targets, config.c)

    step = 0
    regularization = 1.0 / (config.c * n)

    for epoch in range(config.epochs):
        order = rng.permutation(n)

        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            batch_features = features[batch]
            batch_targets = targets[batch]

            violating = batch_targets * (batch_features @ weights + bias) < 1.0
            coefficients = np.where(violating, batch_targets, 0.0) / batch.size

            eta = config.eta0 / (1.0 + config.decay * step)
            weights = weights - eta * (regularization * weights - coefficients @ batch_features)
            bias = bias + eta * float(np.sum(coefficients))
            step += 1

        objective = hinge_objective(weights, bias, features, targets, config.c)
        logger.debug("Epoch %d/%d, objective %.6f", epoch + 1, config.epochs, objective)

        if objective < best_objective:
            best_weights, best_bias, best_objective = weights.copy(), bias, objective

    return best_weights, best_bias


def train(features: np.ndarray,
          labels: np.ndarray,
          config: Optional[SvmConfig] = None,
          num_classes: Optional[int] = None,
          logger: Optional[ContextLogger] = None,
          pool: Optional[WorkerPool] = None) -> SvmModel:
    """
    Trains one linear soft-margin classifier per class against the rest. The
    standardization is computed on the provided training data. The per-class
    trainings use their own seeded sample order, so they can run in parallel.

    :raises ValueError: on empty or single class datasets
    """

    config = config if config is not None else SvmConfig()
    logger = create_logger("svm", logger)
    pool = pool if pool is not None else WorkerPool(single_thread=True)

    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)

    if (0 == features.shape[0]) or (features.shape[0] != labels.shape[0]):
        raise ValueError(f"Invalid training set: {features.shape[0]} rows, {labels.shape[0]} labels")

    if 2 > np.unique(labels).size:
        raise ValueError("Training set must contain at least 2 classes")

    num_classes = num_classes if num_classes is not None else int(labels.max()) + 1

    standardizer = Standardizer.fit(features)
    standardized = standardizer.transform(features)

    def train_class(cls: int) -> tuple[np.ndarray, float]:
        targets = np.where(labels == cls, 1.0, -1.0)
        return _train_binary(standardized, targets, config, [config.rng_seed, cls], logger.child(f"class {cls}"))

    results = pool.map(train_class, range(num_classes))

    logger.info("Trained %d one-vs-rest classifiers on %d rows with %d features",
                num_classes, features.shape[0], features.shape[1])

    return SvmModel(np.array([weights for weights, _ in results]), np.array([bias for _, bias in results]),
                    standardizer, config)


def predict(model: SvmModel, features: np.ndarray) -> tuple[int, np.ndarray]:
    """
    Class and scores of a single flattened vector. Ties resolve to the lowest class.
    """

    scores = model.scores(features)[0]
    return int(np.argmax(scores)), scores
