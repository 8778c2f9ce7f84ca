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
import platform
import time
from typing import Callable, Optional, Any, TypeVar, Sequence

import numpy as np
import pandas as pd

from lcintent.core.commons.loggers import ContextLogger, create_logger
from lcintent.core.specs.classifier import Classifier, create_classifier
from lcintent.core.specs.configs import DatasetConfig
from lcintent.core.specs.dtos import LaneChangeClass, FeatureSeries
from lcintent.datasets.dataset import SampleSet, build_samples, balance, split, kfold
from lcintent.evaluation.metrics import EvalReport, evaluate
from lcintent.executors.pool import WorkerPool

ResultType = TypeVar("ResultType")

ClassifierFactory = Callable[[], Classifier]
"""
Creates a fresh, untrained classifier of a fixed model family and configuration
"""

StrategyTags = {"exact": "gbdt-exact", "histogram": "gbdt-hist"}

DefaultWindowGrid = tuple(range(30, 181, 15))


class CrossvalResult:

    def __init__(self, model: str, reports: list[EvalReport], folds: list[tuple[np.ndarray, np.ndarray]]):
        self.model: str = model
        self.reports: list[EvalReport] = reports
        self.folds: list[tuple[np.ndarray, np.ndarray]] = folds

        accuracies = self.get_accuracies()
        self.mean_accuracy: float = float(np.mean(accuracies))
        self.std_accuracy: float = float(np.std(accuracies, ddof=1)) if 1 < accuracies.size else 0.0

    def get_accuracies(self) -> np.ndarray:
        return np.array([report.accuracy for report in self.reports])

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "folds": [report.to_dict() for report in self.reports]
        }


def timed(function: Callable[[], ResultType]) -> tuple[ResultType, float]:
    start = time.perf_counter()
    result = function()
    return result, time.perf_counter() - start


def fit_and_evaluate(factory: ClassifierFactory, train_set: SampleSet,
                     test_set: SampleSet) -> tuple[Classifier, EvalReport]:
    """
    Fits a fresh classifier, the report carries the wall-clock time of the fit.
    """

    classifier, seconds = timed(lambda: factory().fit(train_set))
    return classifier, evaluate(classifier, test_set, seconds)


def crossval(factory: ClassifierFactory,
             samples: SampleSet,
             folds: int | list[tuple[np.ndarray, np.ndarray]],
             rng_seed: int = 0,
             pool: Optional[WorkerPool] = None,
             logger: Optional[ContextLogger] = None) -> CrossvalResult:
    """
    Trains on the training indices of every fold and evaluates on its validation
    indices. The folds may run in parallel on the pool, reports keep fold order.

    :param folds: number of folds partitioned by :func:`kfold`, or explicit folds
    """

    logger = create_logger("crossval", logger)
    pool = pool if pool is not None else WorkerPool(single_thread=True)

    fold_indices = kfold(samples, folds, rng_seed) if isinstance(folds, int) else folds

    def run_fold(fold: tuple[int, tuple[np.ndarray, np.ndarray]]) -> EvalReport:
        index, (train_idx, val_idx) = fold
        _, report = fit_and_evaluate(factory, samples.subset(train_idx), samples.subset(val_idx))
        logger.debug("Fold %d/%d accuracy %.4f", index + 1, len(fold_indices), report.accuracy)
        return report

    reports = pool.map(run_fold, enumerate(fold_indices))
    result = CrossvalResult(reports[0].model, reports, fold_indices)

    logger.info("Model %s, %d folds, accuracy %.4f +- %.4f",
                result.model, len(reports), result.mean_accuracy, result.std_accuracy)

    return result


def machine_descriptor() -> dict[str, Any]:
    return {
        "platform": platform.platform(),
        "processor": platform.processor(),
        "machine": platform.machine(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "cpu_count": os.cpu_count()
    }


class BenchmarkResult:

    def __init__(self, runs: list[float], results: list[Any]):
        self.runs: list[float] = runs
        self.results: list[Any] = results
        self.median_seconds: float = float(np.median(runs))
        self.machine: dict[str, Any] = machine_descriptor()

    def to_dict(self) -> dict[str, Any]:
        return {"median_seconds": self.median_seconds, "runs": self.runs, "machine": self.machine}


def benchmark_training(trainer: Callable[[], ResultType], repeats: int = 3) -> BenchmarkResult:
    """
    Wall-clock time of the trainer, repeated and summarized by the median. Only the
    call is timed, so the data must be resident before. The trainer is expected to
    run single threaded.

    :raises ValueError: if repeats < 1
    """

    if 1 > repeats:
        raise ValueError(f"At least 1 repeat required, got {repeats}")

    runs, results = [], []
    for _ in range(repeats):
        result, seconds = timed(trainer)
        runs.append(seconds)
        results.append(result)

    return BenchmarkResult(runs, results)


def sweep_trees(train_set: SampleSet,
                test_set: SampleSet,
                tree_counts: Sequence[int],
                strategies: Sequence[str] = ("exact", "histogram"),
                gbdt_config: Optional[dict[str, Any]] = None,
                logger: Optional[ContextLogger] = None) -> pd.DataFrame:
    """
    Trains both boosted tree strategies with varying number of trees on a fixed split.
    Training runs single threaded, so the timings are comparable.

    :return: table of (strategy, trees, accuracy, seconds)
    """

    logger = create_logger("sweep-trees", logger)
    rows = []

    for strategy in strategies:
        if strategy not in StrategyTags:
            raise ValueError(f"Unknown strategy '{strategy}'")

        for trees in tree_counts:
            config = dict(gbdt_config or {}, num_trees_per_class=int(trees))
            _, report = fit_and_evaluate(
                lambda: create_classifier(StrategyTags[strategy], config, logger, WorkerPool(single_thread=True)),
                train_set, test_set)

            logger.info("Strategy %s, %d trees: accuracy %.4f in %.2f s",
                        strategy, trees, report.accuracy, report.training_seconds)
            rows.append((strategy, int(trees), report.accuracy, report.training_seconds))

    return pd.DataFrame(rows, columns=["strategy", "trees", "accuracy", "seconds"])


def sweep_window(features_by_ego: dict[int, FeatureSeries],
                 labels_by_ego: dict[int, tuple[LaneChangeClass, Optional[int]]],
                 dataset_config: DatasetConfig,
                 window_lengths: Sequence[int] = DefaultWindowGrid,
                 models: Optional[dict[str, Optional[dict[str, Any]]]] = None,
                 balance_target: Optional[Any] = None,
                 pool: Optional[WorkerPool] = None,
                 logger: Optional[ContextLogger] = None) -> pd.DataFrame:
    """
    Re-extracts the windows for every length, balances, splits and evaluates every
    model family on the held-out part.

    :param models: model tags mapped to their configuration
    :return: table of (model, window, accuracy, samples)
    """

    logger = create_logger("sweep-window", logger)
    pool = pool if pool is not None else WorkerPool(single_thread=True)
    models = models if models is not None else {tag: None for tag in ("gbdt-exact", "gbdt-hist", "svm", "lstm")}

    rows = []
    for window in window_lengths:
        config = dataset_config.replace(window_frames=int(window))
        samples = balance(build_samples(features_by_ego, labels_by_ego, config, pool, logger),
                          balance_target, config.rng_seed)
        train_set, test_set = split(samples, config)

        for tag, model_config in models.items():
            _, report = fit_and_evaluate(lambda: create_classifier(tag, model_config, logger, pool),
                                         train_set, test_set)
            logger.info("Model %s, window %d: accuracy %.4f", tag, window, report.accuracy)
            rows.append((tag, int(window), report.accuracy, len(samples)))

    return pd.DataFrame(rows, columns=["model", "window", "accuracy", "samples"])


def synthetic_matrix(n: int = 50000, d: int = 100, classes: int = 3,
                     rng_seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """
    Fixed synthetic classification set for timing the boosted tree strategies. The
    classes depend non-linearly on the first ten features, the rest is noise, and all
    features are continuous, so the exact strategy faces n distinct values each.
    """

    if (1 > n) or (1 > d) or (2 > classes):
        raise ValueError(f"Invalid synthetic set dimensions: n={n}, d={d}, classes={classes}")

    rng = np.random.default_rng(rng_seed)
    features = rng.standard_normal((n, d))

    informative = features[:, :min(d, 10)]
    weights = rng.standard_normal((informative.shape[1], classes))
    logits = informative @ weights + np.sin(2.0 * informative) @ rng.standard_normal((informative.shape[1], classes))
    logits += 0.5 * rng.gumbel(size=(n, classes))

    return features, np.argmax(logits, axis=1).astype(np.int64)
