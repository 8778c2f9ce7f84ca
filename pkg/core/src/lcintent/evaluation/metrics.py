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
import pandas as pd

from lcintent.core.specs.dtos import LaneChangeClass

ReportColumns = ("model", "type", "precision", "recall", "accuracy", "training_time")
"""
Columns of the flat report table, one row per model and class
"""


class ConfusionMatrix:
    """
    Counts of (true class, predicted class) pairs. Rows are the true classes, columns
    the predicted ones, both in the order of :class:`LaneChangeClass`.
    """

    def __init__(self, counts: np.ndarray):
        self.counts: np.ndarray = np.asarray(counts, dtype=np.int64)

        if (2 != self.counts.ndim) or (self.counts.shape[0] != self.counts.shape[1]):
            raise ValueError(f"Confusion matrix must be square, got shape {self.counts.shape}")

        if np.any(self.counts < 0):
            raise ValueError("Confusion counts must not be negative")

    def get_num_classes(self) -> int:
        return self.counts.shape[0]

    def total(self) -> int:
        return int(np.sum(self.counts))

    def trace(self) -> int:
        return int(np.trace(self.counts))

    def to_frame(self) -> pd.DataFrame:
        names = [LaneChangeClass(k).name for k in range(self.get_num_classes())]
        return pd.DataFrame(self.counts, index=pd.Index(names, name="true"), columns=names)

    def to_dict(self) -> dict[str, Any]:
        return {"counts": self.counts.tolist()}

    @staticmethod
    def from_dict(source: dict[str, Any]) -> 'ConfusionMatrix':
        return ConfusionMatrix(np.asarray(source["counts"]))

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def __repr__(self):
        return f"ConfusionMatrix({self.counts.tolist()})"


def confusion(truths: np.ndarray, predictions: np.ndarray, num_classes: int = len(LaneChangeClass)) -> ConfusionMatrix:
    """
    :raises ValueError: on length mismatch or labels out of range
    """

    truths = np.asarray(truths, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)

    if truths.shape != predictions.shape:
        raise ValueError(f"Length mismatch: {truths.shape[0]} truths, {predictions.shape[0]} predictions")

    for name, labels in (("truth", truths), ("prediction", predictions)):
        if (0 < labels.size) and ((labels.min() < 0) or (labels.max() >= num_classes)):
            raise ValueError(f"{name.capitalize()} label out of range [0, {num_classes})")

    counts = np.bincount(truths * num_classes + predictions, minlength=num_classes * num_classes)
    return ConfusionMatrix(counts.reshape(num_classes, num_classes))


class ClassMetrics:
    """
    Accuracy and per-class precision and recall. A precision or recall with zero
    denominator is undefined and held as None, which is distinct from 0.
    """

    def __init__(self, accuracy: float, precision: list[Optional[float]], recall: list[Optional[float]]):
        self.accuracy: float = accuracy
        self.precision: list[Optional[float]] = precision
        self.recall: list[Optional[float]] = recall


def _ratios(numerators: np.ndarray, denominators: np.ndarray) -> list[Optional[float]]:
    return [None if 0 == denominator else float(numerator) / float(denominator)
            for numerator, denominator in zip(numerators, denominators)]


def metrics(cm: ConfusionMatrix) -> ClassMetrics:
    """
    :raises ValueError: on an empty matrix
    """

    if 0 == cm.total():
        raise ValueError("Metrics of an empty confusion matrix are undefined")

    diagonal = np.diag(cm.counts)
    return ClassMetrics(cm.trace() / cm.total(),
                        _ratios(diagonal, cm.counts.sum(axis=0)),
                        _ratios(diagonal, cm.counts.sum(axis=1)))


def error_taxonomy(cm: ConfusionMatrix) -> tuple[int, int, int]:
    """
    Decomposition of the errors: lane keeping taken for a lane change (type 1),
    lane change taken for lane keeping (type 2) and confusion of the two lane
    change directions (type 3).
    """

    if len(LaneChangeClass) != cm.get_num_classes():
        raise ValueError(f"Error taxonomy requires {len(LaneChangeClass)} classes, got {cm.get_num_classes()}")

    lk, rlc, llc = LaneChangeClass.LK, LaneChangeClass.RLC, LaneChangeClass.LLC
    counts = cm.counts

    return (int(counts[lk, rlc] + counts[lk, llc]),
            int(counts[rlc, lk] + counts[llc, lk]),
            int(counts[rlc, llc] + counts[llc, rlc]))


class EvalReport:
    """
    Evaluation of one trained model on one sample set.

    :param training_seconds: wall-clock time of a single fit
    """

    def __init__(self,
                 model: str,
                 confusion_matrix: ConfusionMatrix,
                 training_seconds: float = 0.0,
                 config: Optional[dict] = None):
        self.model: str = model
        self.confusion: ConfusionMatrix = confusion_matrix
        self.training_seconds: float = training_seconds
        self.config: dict = config if config is not None else {}

        class_metrics = metrics(confusion_matrix)
        self.accuracy: float = class_metrics.accuracy
        self.precision: list[Optional[float]] = class_metrics.precision
        self.recall: list[Optional[float]] = class_metrics.recall

        self.type1, self.type2, self.type3 = error_taxonomy(confusion_matrix)

    def to_dict(self) -> dict[str, Any]:
        names = [cls.name for cls in LaneChangeClass]
        return {
            "model": self.model,
            "config": self.config,
            "samples": self.confusion.total(),
            "confusion": self.confusion.to_dict(),
            "accuracy": self.accuracy,
            "precision": dict(zip(names, self.precision)),
            "recall": dict(zip(names, self.recall)),
            "errors": {"type1": self.type1, "type2": self.type2, "type3": self.type3},
            "training_seconds": self.training_seconds,
            "timing_scope": "single fit"
        }

    @staticmethod
    def from_dict(source: dict[str, Any]) -> 'EvalReport':
        return EvalReport(source["model"], ConfusionMatrix.from_dict(source["confusion"]),
                          float(source.get("training_seconds", 0.0)), source.get("config"))

    def __repr__(self):
        return f"EvalReport(model={self.model}, accuracy={self.accuracy:.4f}, " \
               f"errors=({self.type1}, {self.type2}, {self.type3}))"


def evaluate(classifier, samples, training_seconds: float = 0.0) -> EvalReport:
    """
    Scores a fitted classifier on the samples.

    :param classifier: a fitted :class:`Classifier <lcintent.core.specs.classifier.Classifier>`
    :param samples: the evaluation :class:`SampleSet <lcintent.datasets.dataset.SampleSet>`
    """

    if 0 == len(samples):
        raise ValueError("Cannot evaluate on an empty sample set")

    return EvalReport(classifier.tag, confusion(samples.labels, classifier.predict(samples)),
                      training_seconds, classifier.get_config().to_dict())


def report_table(reports: list[EvalReport]) -> pd.DataFrame:
    """
    Flat table with one row per model and class. Undefined precision or recall
    is left empty.
    """

    rows = [(report.model, cls.name, report.precision[cls], report.recall[cls], report.accuracy,
             report.training_seconds)
            for report in reports for cls in LaneChangeClass]

    return pd.DataFrame(rows, columns=list(ReportColumns))


def crossval_summary(results: list) -> pd.DataFrame:
    """
    One row per cross-validated model: mean and sample standard deviation of the fold
    accuracies, followed by the fold accuracies themselves.

    :param results: list of :class:`CrossvalResult <lcintent.evaluation.runners.CrossvalResult>`
    """

    rows = []
    for result in results:
        row: dict[str, Any] = {"model": result.model, "mean": result.mean_accuracy, "stddev": result.std_accuracy}
        row.update({f"fold{index}": report.accuracy for index, report in enumerate(result.reports)})
        rows.append(row)

    return pd.DataFrame(rows)
