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
from abc import ABC, abstractmethod
from typing import Optional, Any

import numpy as np

from lcintent.plugins.gbdt.splits import SplitInfo, split_from_sorted, split_from_histograms, Histograms, \
    midpoint

LeafFeature = -1


class Tree:
    """
    Binary regression tree in flat array form. Node 0 is the root, internal nodes
    send rows with ``x[feature] <= threshold`` to ``left``. Leaves are marked by
    feature -1 and carry the unscaled leaf weight in ``value``.
    """

    def __init__(self,
                 feature: np.ndarray,
                 threshold: np.ndarray,
                 left: np.ndarray,
                 right: np.ndarray,
                 value: np.ndarray,
                 gain: np.ndarray):
        self.feature: np.ndarray = np.asarray(feature, dtype=np.int64)
        self.threshold: np.ndarray = np.asarray(threshold, dtype=np.float64)
        self.left: np.ndarray = np.asarray(left, dtype=np.int64)
        self.right: np.ndarray = np.asarray(right, dtype=np.int64)
        self.value: np.ndarray = np.asarray(value, dtype=np.float64)
        self.gain: np.ndarray = np.asarray(gain, dtype=np.float64)

    def __len__(self) -> int:
        return self.feature.shape[0]

    def is_leaf(self, node: int) -> bool:
        return LeafFeature == self.feature[node]

    def depth(self, node: int = 0) -> int:
        if self.is_leaf(node):
            return 0

        return 1 + max(self.depth(int(self.left[node])), self.depth(int(self.right[node])))

    def apply(self, features: np.ndarray) -> np.ndarray:
        """
        :return: leaf node of every row
        """

        nodes = np.zeros(features.shape[0], dtype=np.int64)
        rows = np.arange(features.shape[0])

        while True:
            internal = self.feature[nodes] != LeafFeature
            if not np.any(internal):
                return nodes

            active = rows[internal]
            active_nodes = nodes[internal]
            goes_left = features[active, self.feature[active_nodes]] <= self.threshold[active_nodes]
            nodes[active] = np.where(goes_left, self.left[active_nodes], self.right[active_nodes])

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.value[self.apply(features)]

    def to_dict(self, node: int = 0) -> dict[str, Any]:
        """
        Nested representation of the subtree rooted at the node.
        """

        if self.is_leaf(node):
            return {"leaf": float(self.value[node])}

        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "gain": float(self.gain[node]),
            "value": float(self.value[node]),
            "left": self.to_dict(int(self.left[node])),
            "right": self.to_dict(int(self.right[node]))
        }

    @staticmethod
    def from_dict(source: dict[str, Any]) -> 'Tree':
        def value_of(node_source: dict[str, Any]) -> float:
            return float(node_source["leaf"] if "leaf" in node_source else node_source.get("value", 0.0))

        # Breadth first, which restores the node numbering of the grower
        builder = _TreeBuilder()
        queue = [(source, builder.add(value_of(source)))]

        while queue:
            node_source, node = queue.pop(0)

            if "leaf" not in node_source:
                left = builder.add(value_of(node_source["left"]))
                right = builder.add(value_of(node_source["right"]))
                builder.split(node, SplitInfo(int(node_source["feature"]), float(node_source["threshold"]),
                                              float(node_source["gain"])), left, right)
                queue.extend(((node_source["left"], left), (node_source["right"], right)))

        return builder.build()

    def __eq__(self, other):
        return isinstance(other, Tree) and \
            all(np.array_equal(a, b) for a, b in zip(
                (self.feature, self.threshold, self.left, self.right, self.value, self.gain),
                (other.feature, other.threshold, other.left, other.right, other.value, other.gain)))


class _TreeBuilder:

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.gain: list[float] = []

    def add(self, value: float) -> int:
        self.feature.append(LeafFeature)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.gain.append(0.0)
        return len(self.feature) - 1

    def split(self, node: int, split: SplitInfo, left: int, right: int) -> None:
        self.feature[node] = split.feature
        self.threshold[node] = split.threshold
        self.gain[node] = split.gain
        self.left[node] = left
        self.right[node] = right

    def build(self) -> Tree:
        return Tree(np.array(self.feature, dtype=np.int64), np.array(self.threshold, dtype=np.float64),
                    np.array(self.left, dtype=np.int64), np.array(self.right, dtype=np.int64),
                    np.array(self.value, dtype=np.float64), np.array(self.gain, dtype=np.float64))


class _GrowingNode:

    def __init__(self, node_id: int, depth: int, rows: np.ndarray, total_g: float, total_h: float,
                 payload: Any = None):
        self.node_id: int = node_id
        self.depth: int = depth
        self.rows: np.ndarray = rows
        self.total_g: float = total_g
        self.total_h: float = total_h
        self.payload: Any = payload


class TreeGrower(ABC):
    """
    Depth-wise tree growth on the gradients and hessians of one class. Nodes are
    expanded in breadth first order until ``max_depth`` or until no split has
    positive gain. Leaf weights are -G / (H + lambda) computed from the row sums of
    the leaf, so the strategies differ only in split finding.

    :param g: gradients of all training rows
    :param h: hessians of all training rows
    """

    def __init__(self,
                 g: np.ndarray,
                 h: np.ndarray,
                 max_depth: int,
                 reg_lambda: float,
                 gamma: float,
                 min_child_hessian: float):
        self._g: np.ndarray = g
        self._h: np.ndarray = h
        self._max_depth: int = max_depth
        self._reg_lambda: float = reg_lambda
        self._gamma: float = gamma
        self._min_child_hessian: float = min_child_hessian

        self.__builder: _TreeBuilder = _TreeBuilder()
        self.__output: np.ndarray = np.zeros(g.shape[0], dtype=np.float64)

    @abstractmethod
    def _root_payload(self, rows: np.ndarray) -> Any:
        pass

    @abstractmethod
    def _find_split(self, node: _GrowingNode) -> Optional[SplitInfo]:
        pass

    @abstractmethod
    def _goes_left(self, rows: np.ndarray, split: SplitInfo) -> np.ndarray:
        pass

    def _placed_split(self, split: SplitInfo, left_rows: np.ndarray, right_rows: np.ndarray) -> SplitInfo:
        return split

    @abstractmethod
    def _child_payloads(self, node: _GrowingNode, split: SplitInfo, left_rows: np.ndarray,
                        right_rows: np.ndarray, expand: bool) -> tuple[Any, Any]:
        pass

    def _create_node(self, depth: int, rows: np.ndarray, payload: Any) -> _GrowingNode:
        total_g = float(np.sum(self._g[rows]))
        total_h = float(np.sum(self._h[rows]))
        node_id = self.__builder.add(-total_g / (total_h + self._reg_lambda))

        return _GrowingNode(node_id, depth, rows, total_g, total_h, payload)

    def grow(self) -> tuple[Tree, np.ndarray]:
        """
        :return: (tree, leaf weight of every training row)
        """

        rows = np.arange(self._g.shape[0])
        queue = [self._create_node(0, rows, self._root_payload(rows))]

        while queue:
            node = queue.pop(0)
            split = None

            if (node.depth < self._max_depth) and (2 <= node.rows.size) and \
                    (2 * self._min_child_hessian <= node.total_h):
                split = self._find_split(node)

            if split is None:
                self.__output[node.rows] = self.__builder.value[node.node_id]
                continue

            goes_left = self._goes_left(node.rows, split)
            left_rows, right_rows = node.rows[goes_left], node.rows[~goes_left]
            split = self._placed_split(split, left_rows, right_rows)

            left_payload, right_payload = self._child_payloads(node, split, left_rows, right_rows,
                                                               node.depth + 1 < self._max_depth)
            node.payload = None

            left = self._create_node(node.depth + 1, left_rows, left_payload)
            right = self._create_node(node.depth + 1, right_rows, right_payload)
            self.__builder.split(node.node_id, split, left.node_id, right.node_id)

            queue.extend((left, right))

        return self.__builder.build(), self.__output


class ExactTreeGrower(TreeGrower):
    """
    Exact greedy growth. Every node holds its rows sorted by each feature, obtained
    by stable partitioning of the parent order, so the features are sorted once per
    training.

    :param features_t: transposed training matrix, shape (d, n)
    :param presorted: row indices sorted by each feature, shape (d, n)
    """

    def __init__(self, features_t: np.ndarray, presorted: np.ndarray, g: np.ndarray, h: np.ndarray, **kwargs):
        super().__init__(g, h, **kwargs)
        self.__features_t: np.ndarray = features_t
        self.__presorted: np.ndarray = presorted
        self.__left_mask: np.ndarray = np.zeros(g.shape[0], dtype=bool)

    def _root_payload(self, rows: np.ndarray) -> Any:
        return self.__presorted

    def _find_split(self, node: _GrowingNode) -> Optional[SplitInfo]:
        return split_from_sorted(node.payload, self.__features_t, self._g, self._h, node.total_g, node.total_h,
                                 self._reg_lambda, self._gamma, self._min_child_hessian)

    def _goes_left(self, rows: np.ndarray, split: SplitInfo) -> np.ndarray:
        return self.__features_t[split.feature, rows] <= split.threshold

    def _child_payloads(self, node: _GrowingNode, split: SplitInfo, left_rows: np.ndarray,
                        right_rows: np.ndarray, expand: bool) -> tuple[Any, Any]:
        if not expand:
            return None, None

        # Only the entries of the node rows are read, stale entries of other rows are irrelevant
        self.__left_mask[node.rows] = False
        self.__left_mask[left_rows] = True

        sorted_rows = node.payload
        selector = self.__left_mask[sorted_rows]
        dimensions = sorted_rows.shape[0]

        return sorted_rows[selector].reshape(dimensions, -1), sorted_rows[~selector].reshape(dimensions, -1)


class HistogramTreeGrower(TreeGrower):
    """
    Histogram based growth. The histograms of the smaller child are accumulated,
    the ones of the larger child are derived as parent minus sibling. The stored
    threshold is the midpoint between the largest left and the smallest right value
    of the node rows, which routes the training rows like the chosen bin boundary.

    :param features: training matrix, shape (n, d)
    :param binned: binned training matrix, shape (n, d)
    :param offsets: bins shifted by feature, see :func:`bin_offsets <lcintent.plugins.gbdt.splits.bin_offsets>`
    :param boundaries: bin boundaries of every feature
    """

    def __init__(self, features: np.ndarray, binned: np.ndarray, offsets: np.ndarray, boundaries: list[np.ndarray],
                 num_bins: int, g: np.ndarray, h: np.ndarray, **kwargs):
        super().__init__(g, h, **kwargs)
        self.__features: np.ndarray = features
        self.__binned: np.ndarray = binned
        self.__offsets: np.ndarray = offsets
        self.__boundaries: list[np.ndarray] = boundaries
        self.__num_bins: int = num_bins

    def __accumulate(self, rows: np.ndarray) -> Histograms:
        return Histograms.accumulate(rows, self.__offsets, self._g, self._h, self.__binned.shape[1], self.__num_bins)

    def _root_payload(self, rows: np.ndarray) -> Any:
        return self.__accumulate(rows) if 0 < self._max_depth else None

    def _find_split(self, node: _GrowingNode) -> Optional[SplitInfo]:
        return split_from_histograms(node.payload, self.__boundaries, node.total_g, node.total_h,
                                     self._reg_lambda, self._gamma, self._min_child_hessian)

    def _goes_left(self, rows: np.ndarray, split: SplitInfo) -> np.ndarray:
        return self.__binned[rows, split.feature] <= split.bin_threshold

    def _placed_split(self, split: SplitInfo, left_rows: np.ndarray, right_rows: np.ndarray) -> SplitInfo:
        lower = float(np.max(self.__features[left_rows, split.feature]))
        upper = float(np.min(self.__features[right_rows, split.feature]))
        return SplitInfo(split.feature, midpoint(lower, upper), split.gain, split.bin_threshold)

    def _child_payloads(self, node: _GrowingNode, split: SplitInfo, left_rows: np.ndarray,
                        right_rows: np.ndarray, expand: bool) -> tuple[Any, Any]:
        if not expand:
            return None, None

        if left_rows.size <= right_rows.size:
            left = self.__accumulate(left_rows)
            return left, node.payload - left

        right = self.__accumulate(right_rows)
        return node.payload - right, right
