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
from pathlib import Path
from typing import Optional, Mapping

import numpy as np
import pandas as pd

from lcintent.core.commons.loggers import ContextLogger, create_logger
from lcintent.core.commons.utils import write_json, sha256_digest
from lcintent.core.specs.configs import SceneConfig, DatasetConfig
from lcintent.core.specs.dtos import Trajectory, LaneChangeClass, FeatureFrame, FeatureSeries, SequenceSample, \
    FeatureCount
from lcintent.executors.pool import WorkerPool

SampleColumns = ("label", "ego_id", "end_frame")


class SampleSet:
    """
    Columnar store of sequence samples.

    :param windows: windows of shape (N, W, 54), time-major
    :param labels: class indices, shape (N,)
    :param ego_ids: ego of each sample, shape (N,)
    :param end_frames: frame index of the last window row, shape (N,)
    """

    def __init__(self, windows: np.ndarray, labels: np.ndarray, ego_ids: np.ndarray, end_frames: np.ndarray):
        self.windows: np.ndarray = np.asarray(windows, dtype=np.float64)
        self.labels: np.ndarray = np.asarray(labels, dtype=np.int64)
        self.ego_ids: np.ndarray = np.asarray(ego_ids, dtype=np.int64)
        self.end_frames: np.ndarray = np.asarray(end_frames, dtype=np.int64)

        if (3 != self.windows.ndim) or (FeatureCount != self.windows.shape[2]):
            raise ValueError(f"Windows must have shape (N, W, {FeatureCount}), got {self.windows.shape}")

        if not (self.windows.shape[0] == self.labels.shape[0] == self.ego_ids.shape[0] == self.end_frames.shape[0]):
            raise ValueError("Sample columns must have equal lengths")

        if (0 < self.labels.size) and ((self.labels.min() < 0) or (self.labels.max() >= len(LaneChangeClass))):
            raise ValueError("Invalid label in sample set")

    def __len__(self) -> int:
        return self.labels.shape[0]

    def get_window_frames(self) -> int:
        return self.windows.shape[1]

    @staticmethod
    def empty(window_frames: int) -> 'SampleSet':
        return SampleSet(np.zeros((0, window_frames, FeatureCount)), np.zeros(0), np.zeros(0), np.zeros(0))

    @staticmethod
    def from_samples(samples: list[SequenceSample], window_frames: Optional[int] = None) -> 'SampleSet':
        if 0 == len(samples):
            if window_frames is None:
                raise ValueError("Window length required for an empty sample set")
            return SampleSet.empty(window_frames)

        return SampleSet(np.stack([sample.window for sample in samples]),
                         np.array([int(sample.label) for sample in samples]),
                         np.array([sample.ego_id for sample in samples]),
                         np.array([sample.end_frame for sample in samples]))

    @staticmethod
    def concatenate(sample_sets: list['SampleSet'], window_frames: int) -> 'SampleSet':
        sample_sets = [sample_set for sample_set in sample_sets if 0 < len(sample_set)]
        if 0 == len(sample_sets):
            return SampleSet.empty(window_frames)

        return SampleSet(np.concatenate([s.windows for s in sample_sets]),
                         np.concatenate([s.labels for s in sample_sets]),
                         np.concatenate([s.ego_ids for s in sample_sets]),
                         np.concatenate([s.end_frames for s in sample_sets]))

    def to_samples(self) -> list[SequenceSample]:
        return [SequenceSample(self.windows[i], LaneChangeClass(int(self.labels[i])),
                               int(self.ego_ids[i]), int(self.end_frames[i])) for i in range(len(self))]

    def subset(self, indices: np.ndarray) -> 'SampleSet':
        indices = np.asarray(indices, dtype=np.int64)
        return SampleSet(self.windows[indices], self.labels[indices], self.ego_ids[indices], self.end_frames[indices])

    def class_counts(self) -> dict[str, int]:
        counts = np.bincount(self.labels, minlength=len(LaneChangeClass))
        return {cls.name: int(counts[cls]) for cls in LaneChangeClass}

    def flatten(self, frame_step: int = 1) -> np.ndarray:
        """
        Time-major flattened windows for the non-recurrent models. Every
        ``frame_step``-th frame is kept counting back from the window end, so the
        last frame is always part of the vector.

        :return: matrix of shape (N, ceil(W / frame_step) * 54)
        """

        return self.windows[:, frame_indices(self.get_window_frames(), frame_step), :].reshape(len(self), -1)


def frame_indices(window_frames: int, frame_step: int) -> np.ndarray:
    """
    Indices of the kept window rows in ascending time order, counted back from the last row.
    """

    if 1 > frame_step:
        raise ValueError(f"Frame step must be positive, got {frame_step}")

    return np.arange(window_frames - 1, -1, -frame_step)[::-1]


def label_trajectory(trajectory: Trajectory, config: SceneConfig) -> tuple[LaneChangeClass, Optional[int]]:
    """
    Derives the class of a trajectory from its lane ids.

    :return: (class, first frame in the new lane or None for lane keeping)
    :raises ValueError: if the lane changes more than once
    """

    transitions = np.flatnonzero(np.diff(trajectory.lane_ids) != 0)

    if 0 == transitions.size:
        return LaneChangeClass.LK, None

    if 1 < transitions.size:
        raise ValueError(f"Vehicle {trajectory.vehicle_id}: multi-lane-change trajectory")

    index = int(transitions[0]) + 1
    delta = int(trajectory.lane_ids[index] - trajectory.lane_ids[index - 1])

    if delta == config.left_lane_delta:
        cls = LaneChangeClass.LLC
    elif delta == -config.left_lane_delta:
        cls = LaneChangeClass.RLC
    else:
        raise ValueError(f"Vehicle {trajectory.vehicle_id}: lane id jumps by {delta}")

    return cls, int(trajectory.frames[index])


def _window_bounds(frames: np.ndarray, cls: LaneChangeClass, cross_frame: Optional[int],
                   config: DatasetConfig) -> np.ndarray:
    """
    Start positions of the admissible windows.
    """

    window = config.window_frames
    if len(frames) < window:
        return np.zeros(0, dtype=np.int64)

    if np.any(np.diff(frames) != 1):
        raise ValueError("Feature frames must be contiguous")

    starts = np.arange(0, len(frames) - window + 1, config.stride)

    if LaneChangeClass.LK != cls:
        if cross_frame is None:
            raise ValueError("Lane change windows require a crossing frame")

        ends = frames[starts + window - 1]
        starts = starts[(ends >= cross_frame - config.label_horizon) & (ends <= cross_frame)]

    return starts


def _extract(series: FeatureSeries, cls: LaneChangeClass, cross_frame: Optional[int],
             config: DatasetConfig) -> SampleSet:
    starts = _window_bounds(series.frames, cls, cross_frame, config)
    window = config.window_frames

    if 0 == starts.size:
        return SampleSet.empty(window)

    rows = starts[:, None] + np.arange(window)[None, :]

    return SampleSet(series.values[rows],
                     np.full(starts.size, int(cls)),
                     np.full(starts.size, series.ego_id),
                     series.frames[starts + window - 1])


def extract_windows(features: list[FeatureFrame] | FeatureSeries,
                    cls: LaneChangeClass,
                    cross_frame: Optional[int],
                    config: DatasetConfig,
                    ego_id: int = -1) -> list[SequenceSample]:
    """
    Sliding windows of ``window_frames`` feature frames. Every window of a lane
    keeping trajectory is kept, windows of a lane change trajectory only if they end
    within ``label_horizon`` frames before the crossing (inclusive).
    """

    series = features if isinstance(features, FeatureSeries) else FeatureSeries.from_frames(ego_id, features)
    return _extract(series, cls, cross_frame, config).to_samples()


def build_samples(features_by_ego: dict[int, FeatureSeries],
                  labels_by_ego: dict[int, tuple[LaneChangeClass, Optional[int]]],
                  config: DatasetConfig,
                  pool: Optional[WorkerPool] = None,
                  logger: Optional[ContextLogger] = None) -> SampleSet:
    """
    Extracts the windows of every labeled ego in ascending ego id order.
    Egos without features are skipped.
    """

    logger = create_logger("dataset", logger)
    pool = pool if pool is not None else WorkerPool()

    ego_ids = sorted(ego_id for ego_id in labels_by_ego if ego_id in features_by_ego)
    parts = pool.map(lambda ego_id: _extract(features_by_ego[ego_id], *labels_by_ego[ego_id], config), ego_ids)

    samples = SampleSet.concatenate(parts, config.window_frames)
    logger.info("Extracted %d windows of %d frames from %d egos: %s",
                len(samples), config.window_frames, len(ego_ids), samples.class_counts())

    return samples


def _resolve_targets(counts: np.ndarray,
                     target_per_class: Optional[int | Mapping[LaneChangeClass | str, int]]) -> dict[int, int]:
    if target_per_class is None:
        lane_changes = [cls for cls in LaneChangeClass if LaneChangeClass.LK != cls]
        missing = [cls.name for cls in lane_changes if 0 == counts[cls]]

        if 0 < len(missing):
            raise ValueError(f"Default balance target undefined, no samples of {', '.join(missing)}")

        target = int(min(counts[cls] for cls in lane_changes))
        return {int(cls): target for cls in LaneChangeClass if target < counts[cls]}

    if isinstance(target_per_class, int):
        return {int(cls): target_per_class for cls in LaneChangeClass}

    return {int(LaneChangeClass.from_name(cls) if isinstance(cls, str) else LaneChangeClass(cls)): int(target)
            for cls, target in target_per_class.items()}


def balance(samples: SampleSet,
            target_per_class: Optional[int | Mapping[LaneChangeClass | str, int]] = None,
            rng_seed: int = 0) -> SampleSet:
    """
    Uniformly subsamples classes exceeding their target and shuffles the result.
    Without explicit target every class larger than the smallest lane change class
    is reduced to its size. An integer target applies to every class, a mapping to the
    listed classes.

    :raises ValueError: if a target exceeds the available samples of its class
    :raises ValueError: without explicit target, if a lane change class has no samples
    """

    rng = np.random.default_rng(rng_seed)
    counts = np.bincount(samples.labels, minlength=len(LaneChangeClass))
    targets = _resolve_targets(counts, target_per_class)

    selected = []
    for cls in LaneChangeClass:
        indices = np.flatnonzero(samples.labels == cls)
        target = targets.get(int(cls))

        if target is not None:
            if target > indices.size:
                raise ValueError(f"Balance target {target} exceeds the {indices.size} available {cls.name} samples")

            if target < indices.size:
                indices = np.sort(rng.choice(indices, size=target, replace=False))

        selected.append(indices)

    chosen = np.concatenate(selected)
    return samples.subset(chosen[rng.permutation(chosen.size)])


def split(samples: SampleSet, config: DatasetConfig) -> tuple[SampleSet, SampleSet]:
    """
    Seeded uniform shuffle, the first floor(train_fraction * n) samples form the training set.
    """

    if 2 > len(samples):
        raise ValueError(f"At least 2 samples required for splitting, got {len(samples)}")

    permutation = np.random.default_rng(config.rng_seed).permutation(len(samples))
    train_size = int(np.floor(config.train_fraction * len(samples) + 1e-9))

    return samples.subset(permutation[:train_size]), samples.subset(permutation[train_size:])


def kfold(train_samples: SampleSet | int, folds: int, rng_seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """
    Partitions a seeded permutation into ``folds`` groups, sizes differ by at most one.

    :return: list of (train indices, validation indices), validation of fold i is group i
    """

    n = train_samples if isinstance(train_samples, int) else len(train_samples)

    if folds > n:
        raise ValueError(f"Cannot create {folds} folds from {n} samples")

    if 2 > folds:
        raise ValueError(f"At least 2 folds required, got {folds}")

    groups = np.array_split(np.random.default_rng(rng_seed).permutation(n), folds)

    return [(np.sort(np.concatenate(groups[:i] + groups[i + 1:])), np.sort(group)) for i, group in enumerate(groups)]


def fold_assignment(n: int, folds: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    assignment = np.full(n, -1, dtype=np.int64)
    for index, (_, validation) in enumerate(folds):
        assignment[validation] = index

    return assignment


def save_samples(samples: SampleSet, path: str | Path) -> Path:
    """
    Persists the samples either as ``.npz`` or as ``.csv`` with the columns
    ``label, ego_id, end_frame, f(0,0)..f(W-1,53)``, row-major over time then feature.
    """

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)

    if ".npz" == target.suffix:
        np.savez(target, windows=samples.windows, labels=samples.labels,
                 ego_ids=samples.ego_ids, end_frames=samples.end_frames)
    elif ".csv" == target.suffix:
        window = samples.get_window_frames()
        value_columns = [f"f({t},{f})" for t in range(window) for f in range(FeatureCount)]
        table = pd.DataFrame(samples.windows.reshape(len(samples), -1), columns=value_columns)
        table.insert(0, "end_frame", samples.end_frames)
        table.insert(0, "ego_id", samples.ego_ids)
        table.insert(0, "label", samples.labels)
        table.to_csv(target, index=False, float_format="%.17g", encoding="utf-8")
    else:
        raise ValueError(f"Unsupported sample file format: {target.suffix}")

    return target


def load_samples(path: str | Path) -> SampleSet:
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"Sample file not found: {source}")

    if ".npz" == source.suffix:
        with np.load(source) as archive:
            return SampleSet(archive["windows"], archive["labels"], archive["ego_ids"], archive["end_frames"])
    elif ".csv" == source.suffix:
        table = pd.read_csv(source, encoding="utf-8", float_precision="round_trip")
        if list(table.columns[:3]) != list(SampleColumns):
            raise ValueError(f"Invalid sample file header in {source}")

        values = table.iloc[:, 3:].to_numpy(dtype=np.float64)
        if 0 != values.shape[1] % FeatureCount:
            raise ValueError(f"Sample width {values.shape[1]} is not a multiple of {FeatureCount}")

        return SampleSet(values.reshape(len(table), -1, FeatureCount), table["label"].to_numpy(),
                         table["ego_id"].to_numpy(), table["end_frame"].to_numpy())

    raise ValueError(f"Unsupported sample file format: {source.suffix}")


def write_manifest(path: str | Path,
                   config: DatasetConfig,
                   samples: SampleSet,
                   folds: Optional[list[tuple[np.ndarray, np.ndarray]]] = None,
                   extra: Optional[dict] = None) -> Path:
    """
    Writes the dataset manifest: configuration echo, class counts, seed and the
    checksum of the fold assignment.
    """

    manifest = {
        "config": config.to_dict(),
        "seed": config.rng_seed,
        "samples": len(samples),
        "counts": samples.class_counts(),
        "window_frames": samples.get_window_frames(),
        "fold_checksum": None if folds is None else sha256_digest(fold_assignment(len(samples), folds)),
        "sample_checksum": sha256_digest(samples.labels, samples.ego_ids, samples.end_frames)
    }

    if extra is not None:
        manifest.update(extra)

    return write_json(manifest, path)
