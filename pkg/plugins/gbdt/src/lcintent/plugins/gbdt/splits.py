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

TieTolerance = 1e-10
"""
Relative tolerance, within which two split gains are considered equal
"""


class SplitInfo:
    """
    Result of a split search. Rows with ``x[feature] <= threshold`` go to the left child.

    :param feature: index of the split feature
    :param threshold: split value
    :param gain: loss reduction of the split
    :param bin_threshold: last bin of the left child, histogram strategy only
    """

    def __init__(self, feature: int, threshold: float, gain: float, bin_threshold: Optional[int] = None):
        self.feature: int = feature
        self.threshold: float = threshold
        self.gain: float = gain
        self.bin_threshold: Optional[int] = bin_threshold

    def __repr__(self):
        return f"SplitInfo(feature={self.feature}, threshold={self.threshold}, gain={self.gain}, " \
               f"bin_threshold={self.bin_threshold})"


def split_gain(left_g, left_h, right_g, right_h, total_g, total_h, reg_lambda: float, gamma: float):
    """
    Loss reduction of the second order boosting objective:
    1/2 [G_L^2 / (H_L + lambda) + G_R^2 / (H_R + lambda) - G^2 / (H + lambda)] - gamma
    """

    return 0.5 * (np.square(left_g) / (left_h + reg_lambda) +
                  np.square(right_g) / (right_h + reg_lambda) -
                  np.square(total_g) / (total_h + reg_lambda)) - gamma


def select_best(gains: np.ndarray, valid: np.ndarray) -> Optional[tuple[int, int, float]]:
    """
    Selects the best candidate of a (features, candidates) gain matrix, where the
    candidates of a feature are ordered by increasing threshold. Among gains equal to
    the maximum within :data:`TieTolerance` the lowest feature, then the lowest
    threshold wins.

    :return: (feature, candidate, gain) or None, if no valid candidate has positive gain
    """

    if 0 == gains.size:
        return None

    masked = np.where(valid, gains, -np.inf)
    best = float(np.max(masked))

    if (not np.isfinite(best)) or (0.0 >= best):
        return None

    winners = masked >= best - TieTolerance * max(1.0, abs(best))
    feature, candidate = np.unravel_index(int(np.argmax(winners)), masked.shape)

    return int(feature), int(candidate), float(masked[feature, candidate])


def midpoint(lower: float, upper: float) -> float:
    """
    Threshold strictly separating two consecutive distinct values.
    """

    value = lower + (upper - lower) / 2.0
    return value if value < upper else lower


def split_from_sorted(sorted_rows: np.ndarray,
                      features_t: np.ndarray,
                      g: np.ndarray,
                      h: np.ndarray,
                      total_g: float,
                      total_h: float,
                      reg_lambda: float,
                      gamma: float,
                      min_child_hessian: float) -> Optional[SplitInfo]:
    """
    Exact greedy search on presorted rows. Every midpoint between consecutive distinct
    values of a feature is a candidate.

    :param sorted_rows: row indices of the node sorted by each feature, shape (d, m)
    :param features_t: transposed feature matrix, shape (d, n)
    """

    if 2 > sorted_rows.shape[1]:
        return None

    left_g = np.cumsum(g[sorted_rows], axis=1)[:, :-1]
    left_h = np.cumsum(h[sorted_rows], axis=1)[:, :-1]
    right_g = total_g - left_g
    right_h = total_h - left_h

    values = np.take_along_axis(features_t, sorted_rows, axis=1)
    valid = (values[:, :-1] < values[:, 1:]) & (left_h >= min_child_hessian) & (right_h >= min_child_hessian)

    best = select_best(split_gain(left_g, left_h, right_g, right_h, total_g, total_h, reg_lambda, gamma), valid)
    if best is None:
        return None

    feature, candidate, gain = best
    return SplitInfo(feature, midpoint(float(values[feature, candidate]), float(values[feature, candidate + 1])), gain)


def best_split_exact(node_rows: np.ndarray,
                     features: np.ndarray,
                     g: np.ndarray,
                     h: np.ndarray,
                     reg_lambda: float = 1.0,
                     gamma: float = 0.0,
                     min_child_hessian: float = 1.0) -> Optional[SplitInfo]:
    """
    Best split of a node evaluating all midpoints between consecutive distinct sorted
    values of every feature.

    :param node_rows: rows of the node
    :param features: feature matrix, shape (n, d)
    :param g: gradients of all rows
    :param h: hessians of all rows
    :return: the best split or None, if no split has positive gain
    """

    node_rows = np.asarray(node_rows, dtype=np.int64)
    if 0 == node_rows.size:
        raise ValueError("Node must not be empty")

    features_t = np.ascontiguousarray(np.asarray(features, dtype=np.float64).T)
    sorted_rows = node_rows[np.argsort(features_t[:, node_rows], axis=1, kind="stable")]

    return split_from_sorted(sorted_rows, features_t, g, h, float(np.sum(g[node_rows])), float(np.sum(h[node_rows])),
                             reg_lambda, gamma, min_child_hessian)


def build_bins(features: np.ndarray, num_bins: int) -> list[np.ndarray]:
    """
    Bin boundaries per feature. A feature with at most ``num_bins`` distinct values
    gets one bin per value, otherwise ``num_bins - 1`` boundaries are placed at
    evenly spaced positions of its sorted distinct values. Boundaries are midpoints
    between consecutive distinct values.

    :param features: training matrix, shape (n, d)
    :return: increasing boundaries of every feature
    """

    features = np.asarray(features, dtype=np.float64)
    if 0 == features.shape[0]:
        raise ValueError("Cannot build bins on an empty matrix")

    if 2 > num_bins:
        raise ValueError(f"At least 2 bins required, got {num_bins}")

    boundaries = []
    for column in features.T:
        distinct = np.unique(column)

        if distinct.size <= num_bins:
            upper_positions = np.arange(1, distinct.size)
        else:
            upper_positions = (np.arange(1, num_bins) * distinct.size) // num_bins

        boundaries.append(np.array([midpoint(distinct[p - 1], distinct[p]) for p in upper_positions],
                                   dtype=np.float64))

    return boundaries


def bin_dtype(num_bins: int) -> type:
    return np.uint8 if num_bins <= 256 else np.uint16


def bin_matrix(features: np.ndarray, boundaries: list[np.ndarray], num_bins: int) -> np.ndarray:
    """
    Maps values to bins, bin b holds the values in (boundary[b-1], boundary[b]].
    """

    features = np.asarray(features, dtype=np.float64)
    binned = np.empty(features.shape, dtype=bin_dtype(num_bins))

    for index, feature_boundaries in enumerate(boundaries):
        binned[:, index] = np.searchsorted(feature_boundaries, features[:, index], side="left")

    return binned


def bin_offsets(binned: np.ndarray, num_bins: int) -> np.ndarray:
    """
    Bins shifted by ``feature * num_bins``, so the histograms of all features
    can be accumulated by one ``bincount``.
    """

    return binned.astype(np.int32) + (np.arange(binned.shape[1], dtype=np.int32) * num_bins)[None, :]


class Histograms:
    """
    Gradient, hessian and row count sums per (feature, bin) of a node.
    """

    def __init__(self, g: np.ndarray, h: np.ndarray, counts: np.ndarray):
        self.g: np.ndarray = g
        self.h: np.ndarray = h
        self.counts: np.ndarray = counts

    @staticmethod
    def accumulate(rows: np.ndarray, offsets: np.ndarray, g: np.ndarray, h: np.ndarray,
                   num_features: int, num_bins: int) -> 'Histograms':
        flat = offsets[rows].ravel()
        size = num_features * num_bins
        shape = (num_features, num_bins)

        return Histograms(np.bincount(flat, weights=np.repeat(g[rows], num_features), minlength=size).reshape(shape),
                          np.bincount(flat, weights=np.repeat(h[rows], num_features), minlength=size).reshape(shape),
                          np.bincount(flat, minlength=size).reshape(shape))

    def __sub__(self, other: 'Histograms') -> 'Histograms':
        return Histograms(self.g - other.g, self.h - other.h, self.counts - other.counts)


def split_from_histograms(histograms: Histograms,
                          boundaries: list[np.ndarray],
                          total_g: float,
                          total_h: float,
                          reg_lambda: float,
                          gamma: float,
                          min_child_hessian: float) -> Optional[SplitInfo]:
    """
    Histogram search, the candidates are the bin boundaries.
    """

    left_g = np.cumsum(histograms.g, axis=1)[:, :-1]
    left_h = np.cumsum(histograms.h, axis=1)[:, :-1]
    left_counts = np.cumsum(histograms.counts, axis=1)[:, :-1]
    total_counts = histograms.counts.sum(axis=1, keepdims=True)

    right_g = total_g - left_g
    right_h = total_h - left_h

    valid = (0 < left_counts) & (left_counts < total_counts) & \
            (left_h >= min_child_hessian) & (right_h >= min_child_hessian)

    best = select_best(split_gain(left_g, left_h, right_g, right_h, total_g, total_h, reg_lambda, gamma), valid)
    if best is None:
        return None

    feature, candidate, gain = best
    return SplitInfo(feature, float(boundaries[feature][candidate]), gain, candidate)


def best_split_histogram(node_rows: np.ndarray,
                         binned: np.ndarray,
                         boundaries: list[np.ndarray],
                         g: np.ndarray,
                         h: np.ndarray,
                         num_bins: int,
                         reg_lambda: float = 1.0,
                         gamma: float = 0.0,
                         min_child_hessian: float = 1.0) -> Optional[SplitInfo]:
    """
    Best split of a node over the bin boundaries of every feature.

    :param node_rows: rows of the node
    :param binned: binned training matrix, shape (n, d)
    :param boundaries: bin boundaries the matrix was binned with
    :return: the best split or None, if no split has positive gain
    """

    node_rows = np.asarray(node_rows, dtype=np.int64)
    if 0 == node_rows.size:
        raise ValueError("Node must not be empty")

    histograms = Histograms.accumulate(node_rows, bin_offsets(binned, num_bins), g, h, binned.shape[1], num_bins)

    return split_from_histograms(histograms, boundaries, float(np.sum(g[node_rows])), float(np.sum(h[node_rows])),
                                 reg_lambda, gamma, min_child_hessian)
