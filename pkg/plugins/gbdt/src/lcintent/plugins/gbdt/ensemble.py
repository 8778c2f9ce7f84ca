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
from lcintent.core.specs.dtos import FeatureCount
from lcintent.datasets.dataset import frame_indices
from lcintent.executors.pool import WorkerPool
from lcintent.plugins.gbdt.objective import softmax, softmax_grad_hess, log_loss
from lcintent.plugins.gbdt.splits import build_bins, bin_matrix, bin_offsets
from lcintent.plugins.gbdt.tree import Tree, ExactTreeGrower, HistogramTreeGrower

ExactStrategy = "exact"
HistogramStrategy = "histogram"


class GbdtConfig(Config):

    Section = "gbdt"

    num_trees_per_class = OptionalParameter(int, default=120, validator=lambda v: v >= 1,
                                            description="Boosting rounds, each fits one tree per class")
    learning_rate = OptionalParameter(float, default=0.1, validator=lambda v: v > 0)
    max_depth = OptionalParameter(int, default=6, validator=lambda v: v >= 0)
    reg_lambda = OptionalParameter(float, default=1.0, alt_name="lambda", validator=lambda v: v >= 0,
                                   description="L2 regularization of the leaf weights")
    gamma = OptionalParameter(float, default=0.0, validator=lambda v: v >= 0,
                              description="Complexity penalty per split")
    min_child_hessian = OptionalParameter(float, default=1.0, validator=lambda v: v >= 0)
    strategy = OptionalParameter(str, default=HistogramStrategy,
                                 validator=lambda v: v in (ExactStrategy, HistogramStrategy))
    num_bins = OptionalParameter(int, default=255, validator=lambda v: 2 <= v <= 65536,
                                 description="Maximal number of bins per feature, histogram strategy only")
    frame_step = OptionalParameter(int, default=1, validator=lambda v: v >= 1,
                                   description="Every frame_step-th window frame is flattened into the input")
    rng_seed = OptionalParameter(int, default=0)


class GbdtEnsemble:
    """
    Trained multiclass ensemble. The logits of a row are the learning rate times the
    sum of the outputs of the trees of each class, starting from zero.

    :param trees: trees[round][class]
    :param num_classes: number of classes K
    :param num_features: length of the input vectors
    :param config: configuration echo
    :param boundaries: bin boundaries of the histogram strategy, None otherwise
    """

    def __init__(self,
                 trees: list[list[Tree]],
                 num_classes: int,
                 num_features: int,
                 config: GbdtConfig,
                 boundaries: Optional[list[np.ndarray]] = None):
        self.trees: list[list[Tree]] = trees
        self.num_classes: int = num_classes
        self.num_features: int = num_features
        self.config: GbdtConfig = config
        self.boundaries: Optional[list[np.ndarray]] = boundaries

    def _check_features(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if 1 == features.ndim:
            features = features.reshape(1, -1)

        if self.num_features != features.shape[1]:
            raise ValueError(f"Expected {self.num_features} features, got {features.shape[1]}")

        return features

    def predict_logits(self, features: np.ndarray, rounds: Optional[int] = None) -> np.ndarray:
        features = self._check_features(features)
        logits = np.zeros((features.shape[0], self.num_classes), dtype=np.float64)

        for round_trees in self.trees[:rounds]:
            for cls, tree in enumerate(round_trees):
                logits[:, cls] += self.config.learning_rate * tree.predict(features)

        return logits

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return softmax(self.predict_logits(features))

    def feature_importance(self) -> np.ndarray:
        """
        Total gain of the splits on every feature.
        """

        importance = np.zeros(self.num_features, dtype=np.float64)
        for round_trees in self.trees:
            for tree in round_trees:
                internal = tree.feature >= 0
                np.add.at(importance, tree.feature[internal], tree.gain[internal])

        return importance

    def to_dict(self) -> dict[str, Any]:
        return {
            "num_classes": self.num_classes,
            "num_features": self.num_features,
            "config": self.config.to_dict(),
            "boundaries": None if self.boundaries is None else [b.tolist() for b in self.boundaries],
            "trees": [[tree.to_dict() for tree in round_trees] for round_trees in self.trees]
        }

    @staticmethod
    def from_dict(source: dict[str, Any]) -> 'GbdtEnsemble':
        boundaries = source.get("boundaries")
        return GbdtEnsemble([[Tree.from_dict(tree) for tree in round_trees] for round_trees in source["trees"]],
                            int(source["num_classes"]), int(source["num_features"]),
                            GbdtConfig.from_dict(source["config"]),
                            None if boundaries is None else [np.asarray(b, dtype=np.float64) for b in boundaries])


def train(features: np.ndarray,
          labels: np.ndarray,
          config: Optional[GbdtConfig] = None,
          num_classes: Optional[int] = None,
          logger: Optional[ContextLogger] = None,
          pool: Optional[WorkerPool] = None) -> GbdtEnsemble:
    """
    Fits the boosted ensemble. Every round computes the softmax gradients of the
    current logits and fits one tree per class with the configured split strategy.
    The trees of a round are independent and may be grown on the worker pool.

    :param features: training matrix, shape (n, d)
    :param labels: class indices, shape (n,)
    :param num_classes: K, derived from the labels if None
    :raises ValueError: on empty or single class datasets
    """

    config = config if config is not None else GbdtConfig()
    logger = create_logger(f"gbdt-{config.strategy}", logger)
    pool = pool if pool is not None else WorkerPool(single_thread=True)

    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)

    if (0 == features.shape[0]) or (features.shape[0] != labels.shape[0]):
        raise ValueError(f"Invalid training set: {features.shape[0]} rows, {labels.shape[0]} labels")

    if 2 > np.unique(labels).size:
        raise ValueError("Training set must contain at least 2 classes")

    num_classes = num_classes if num_classes is not None else int(labels.max()) + 1
    grower_args = dict(max_depth=config.max_depth, reg_lambda=config.reg_lambda, gamma=config.gamma,
                       min_child_hessian=config.min_child_hessian)

    boundaries = None
    if ExactStrategy == config.strategy:
        features_t = np.ascontiguousarray(features.T)
        presorted = np.argsort(features_t, axis=1, kind="stable")

        def grow(g: np.ndarray, h: np.ndarray) -> tuple[Tree, np.ndarray]:
            return ExactTreeGrower(features_t, presorted, g, h, **grower_args).grow()
    else:
        boundaries = build_bins(features, config.num_bins)
        binned = bin_matrix(features, boundaries, config.num_bins)
        offsets = bin_offsets(binned, config.num_bins)

        def grow(g: np.ndarray, h: np.ndarray) -> tuple[Tree, np.ndarray]:
            return HistogramTreeGrower(features, binned, offsets, boundaries, config.num_bins, g, h,
                                       **grower_args).grow()

    logits = np.zeros((features.shape[0], num_classes), dtype=np.float64)
    trees: list[list[Tree]] = []

    for round_index in range(config.num_trees_per_class):
        gradients, hessians = softmax_grad_hess(logits, labels)

        grown = pool.map(lambda cls: grow(np.ascontiguousarray(gradients[:, cls]),
                                          np.ascontiguousarray(hessians[:, cls])), range(num_classes))

        trees.append([tree for tree, _ in grown])
        for cls, (_, output) in enumerate(grown):
            logits[:, cls] += config.learning_rate * output

        logger.debug("Round %d/%d, training log-loss %.6f",
                     round_index + 1, config.num_trees_per_class, log_loss(logits, labels))

    logger.info("Trained %d trees per class on %d rows with %d features",
                config.num_trees_per_class, features.shape[0], features.shape[1])

    return GbdtEnsemble(trees, num_classes, features.shape[1], config, boundaries)


def predict(model: GbdtEnsemble, features: np.ndarray) -> tuple[int, np.ndarray]:
    """
    Class and probabilities of a single flattened vector. Ties resolve to the lowest class.

    :raises ValueError: on dimension mismatch
    """

    features = np.asarray(features, dtype=np.float64)
    if 1 != features.ndim:
        raise ValueError(f"Expected a single vector, got shape {features.shape}")

    probabilities = model.predict_proba(features)[0]
    return int(np.argmax(probabilities)), probabilities


def feature_importance(model: GbdtEnsemble) -> np.ndarray:
    return model.feature_importance()


def indicator_importance(model: GbdtEnsemble, window_frames: int, frame_step: int = 1) -> np.ndarray:
    """
    Split gain summed over the window frames for each of the canonical indicators.
    """

    kept_frames = frame_indices(window_frames, frame_step).size
    if kept_frames * FeatureCount != model.num_features:
        raise ValueError(f"Model has {model.num_features} features, window of {window_frames} frames "
                         f"with step {frame_step} has {kept_frames * FeatureCount}")

    return model.feature_importance().reshape(kept_frames, FeatureCount).sum(axis=0)
