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
from typing import Optional

import numpy as np

from lcintent.core.commons.loggers import ContextLogger, create_logger
from lcintent.core.commons.parameters import OptionalParameter
from lcintent.core.specs.configs import Config
from lcintent.datasets.standardization import Standardizer
from lcintent.executors.pool import WorkerPool
from lcintent.plugins.lstm.network import LstmParams, forward, backward, cross_entropy

PredictionBatchSize = 256


class LstmConfig(Config):

    Section = "lstm"

    hidden_size = OptionalParameter(int, default=64, validator=lambda v: v >= 1)
    epochs = OptionalParameter(int, default=20, validator=lambda v: v >= 0)
    batch_size = OptionalParameter(int, default=64, validator=lambda v: v >= 1)
    learning_rate = OptionalParameter(float, default=1e-3, validator=lambda v: v > 0)
    grad_clip_norm = OptionalParameter(float, default=5.0, validator=lambda v: v > 0,
                                       description="Global norm, above which the gradients are rescaled")
    sequence_step = OptionalParameter(int, default=1, validator=lambda v: v >= 1,
                                      description="Every sequence_step-th window frame is fed to the recurrence")
    rng_seed = OptionalParameter(int, default=0)


class AdamOptimizer:
    """
    Adam moment update with bias correction.
    """

    def __init__(self, template: LstmParams, learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.__learning_rate: float = learning_rate
        self.__beta1: float = beta1
        self.__beta2: float = beta2
        self.__epsilon: float = epsilon

        self.__first: LstmParams = template.map(np.zeros_like)
        self.__second: LstmParams = template.map(np.zeros_like)
        self.__steps: int = 0

    def get_steps(self) -> int:
        return self.__steps

    def update(self, params: LstmParams, gradients: LstmParams) -> LstmParams:
        self.__steps += 1
        beta1, beta2 = self.__beta1, self.__beta2

        self.__first = self.__first.map(lambda m, g: beta1 * m + (1.0 - beta1) * g, gradients)
        self.__second = self.__second.map(lambda v, g: beta2 * v + (1.0 - beta2) * np.square(g), gradients)

        first_correction = 1.0 - beta1 ** self.__steps
        second_correction = 1.0 - beta2 ** self.__steps

        return params.map(lambda p, m, v: p - self.__learning_rate * (m / first_correction) /
                          (np.sqrt(v / second_correction) + self.__epsilon),
                          self.__first, self.__second)


def clip_gradients(gradients: LstmParams, max_norm: float) -> LstmParams:
    norm = gradients.global_norm()
    if norm <= max_norm:
        return gradients

    factor = max_norm / norm
    return gradients.map(lambda g: g * factor)


def batch_gradients(params: LstmParams, windows: np.ndarray, labels: np.ndarray,
                    pool: WorkerPool) -> tuple[float, LstmParams]:
    """
    Mean loss and gradients of a batch of standardized windows. With a multithreaded
    pool the batch is split into contiguous chunks, whose gradients are summed in
    chunk order.
    """

    size = windows.shape[0]
    chunks = np.array_split(np.arange(size), min(size, pool.get_max_workers()))

    def chunk_gradients(rows: np.ndarray) -> tuple[float, LstmParams]:
        probabilities, cache = forward(params, windows[rows])
        return cross_entropy(probabilities, labels[rows]) * rows.size, \
            backward(params, windows[rows], labels[rows], cache).map(lambda g: g * rows.size)

    results = pool.map(chunk_gradients, chunks)

    loss = sum(chunk_loss for chunk_loss, _ in results) / size
    gradients = results[0][1]
    for _, chunk in results[1:]:
        gradients = gradients.map(np.add, chunk)

    return loss, gradients.map(lambda g: g / size)


def train(windows: np.ndarray,
          labels: np.ndarray,
          config: Optional[LstmConfig] = None,
          num_classes: Optional[int] = None,
          logger: Optional[ContextLogger] = None,
          pool: Optional[WorkerPool] = None,
          history: Optional[list[float]] = None) -> LstmParams:
    """
    Trains the network by mini-batch backpropagation through time with Adam updates
    and global norm clipping. The standardization is fitted on the given windows and
    stored in the returned parameters. One seeded generator drives the initialization
    and the batch order.

    :param windows: raw training windows, shape (N, T, d)
    :param labels: class indices, shape (N,)
    :param history: if provided, the mean training loss of every epoch is appended
    :raises ValueError: on empty datasets
    """

    config = config if config is not None else LstmConfig()
    logger = create_logger("lstm", logger)
    pool = pool if pool is not None else WorkerPool(single_thread=True)

    windows = np.asarray(windows, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)

    if (3 != windows.ndim) or (0 == windows.shape[0]) or (windows.shape[0] != labels.shape[0]):
        raise ValueError(f"Invalid training set: windows {windows.shape}, {labels.shape[0]} labels")

    num_classes = num_classes if num_classes is not None else int(labels.max()) + 1
    size, _, input_size = windows.shape

    standardizer = Standardizer.fit(windows.reshape(-1, input_size))
    standardized = standardizer.transform(windows)

    rng = np.random.default_rng(config.rng_seed)
    params = LstmParams.initialize(input_size, config.hidden_size, num_classes, rng)
    params.standardizer = standardizer

    optimizer = AdamOptimizer(params, config.learning_rate)

    for epoch in range(config.epochs):
        order = rng.permutation(size)
        epoch_loss = 0.0

        for start in range(0, size, config.batch_size):
            rows = order[start:start + config.batch_size]

            loss, gradients = batch_gradients(params, standardized[rows], labels[rows], pool)
            params = optimizer.update(params, clip_gradients(gradients, config.grad_clip_norm))
            epoch_loss += loss * rows.size

        epoch_loss /= size
        if history is not None:
            history.append(epoch_loss)

        logger.debug("Epoch %d/%d, training loss %.6f", epoch + 1, config.epochs, epoch_loss)

    if not params.is_finite():
        raise ArithmeticError("Training diverged, parameters are not finite")

    logger.info("Trained hidden size %d for %d epochs on %d windows of %d frames",
                config.hidden_size, config.epochs, size, windows.shape[1])

    return params


def predict_proba(params: LstmParams, windows: np.ndarray) -> np.ndarray:
    """
    Class probabilities of raw windows, standardized with the stored statistics.

    :param windows: shape (N, T, d)
    :return: shape (N, K)
    """

    windows = np.asarray(windows, dtype=np.float64)
    if params.standardizer is not None:
        windows = params.standardizer.transform(windows)

    if 0 == windows.shape[0]:
        return np.zeros((0, params.get_num_classes()))

    return np.concatenate([forward(params, windows[start:start + PredictionBatchSize], keep_records=False)[0]
                           for start in range(0, windows.shape[0], PredictionBatchSize)])


def predict(params: LstmParams, window: np.ndarray) -> tuple[int, np.ndarray]:
    """
    Class and probabilities of a single raw window. Ties resolve to the lowest class.
    """

    probabilities = predict_proba(params, np.asarray(window)[None, :, :])[0]
    return int(np.argmax(probabilities)), probabilities
