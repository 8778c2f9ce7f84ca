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
import re
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from lcintent.core.commons.loggers import ContextLogger, create_logger
from lcintent.core.commons.utils import read_json
from lcintent.core.specs.configs import SceneConfig
from lcintent.core.specs.dtos import Trajectory, LaneChangeClass

TrajectoryColumns = ("frame", "vehicle_id", "center_x", "center_y", "head_x", "head_y", "tail_x", "tail_y", "lane_id")
"""
The fixed input schema
"""

_IntegerColumns = ("frame", "vehicle_id", "lane_id")
_CoordinateColumns = ("center_x", "center_y", "head_x", "head_y", "tail_x", "tail_y")
_NanLiterals = ("nan", "+nan", "-nan")


class TrajectoryFormatError(ValueError):
    """
    Raised on malformed trajectory files. The offending line of the file (1-based,
    header being line 1) is available via ``line_number``, if known.
    """

    def __init__(self, message: str, line_number: Optional[int] = None):
        super().__init__(message if line_number is None else f"line {line_number}: {message}")
        self.line_number: Optional[int] = line_number


def _line_of(position: int) -> int:
    return position + 2


def _parse_integers(raw: pd.Series, name: str) -> np.ndarray:
    try:
        return raw.map(lambda value: int(value.strip())).to_numpy(dtype=np.int64)
    except (ValueError, AttributeError):
        for position, value in enumerate(raw):
            try:
                int(value.strip())
            except (ValueError, AttributeError):
                raise TrajectoryFormatError(f"invalid integer in column '{name}': {value!r}", _line_of(position))
        raise


def _parse_coordinates(raw: pd.Series, name: str) -> np.ndarray:
    # float() parses the shortest repr exactly, which keeps write and re-parse bit-identical
    try:
        parsed = raw.map(lambda value: float(value.strip())).to_numpy(dtype=np.float64)
    except (ValueError, AttributeError):
        for position, value in enumerate(raw):
            try:
                float(value.strip())
            except (ValueError, AttributeError):
                raise TrajectoryFormatError(f"invalid number in column '{name}': {value!r}", _line_of(position))
        raise

    non_finite = np.flatnonzero(~np.isfinite(parsed))
    if 0 < non_finite.size:
        position = int(non_finite[0])
        raise TrajectoryFormatError(f"non-finite coordinate in column '{name}': {raw.iloc[position]!r}",
                                    _line_of(position))

    return parsed


def _read_table(path: Path) -> pd.DataFrame:
    try:
        table = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise TrajectoryFormatError("missing header", 1)
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise TrajectoryFormatError(f"malformed row ({e})", int(match.group(1)) if match else None)

    if tuple(table.columns) != TrajectoryColumns:
        raise TrajectoryFormatError(f"header must be '{','.join(TrajectoryColumns)}', "
                                    f"got '{','.join(map(str, table.columns))}'", 1)

    return table


def parse_trajectories(path: str | Path,
                       config: Optional[SceneConfig] = None,
                       logger: Optional[ContextLogger] = None) -> list[Trajectory]:
    """
    Parses a trajectory file of the fixed 9 column schema into one trajectory per
    vehicle, ordered by vehicle id. Rows may appear in any order, they are sorted by
    frame index. If the longitudinal axis of the scene is ``y``, the coordinate pairs
    are swapped, so that x is always longitudinal in memory.

    :param path: path to the csv file
    :param config: scene configuration, defaults are used, if None
    :param logger: logger of the calling context
    :return: list of trajectories
    :raises FileNotFoundError: if the file does not exist
    :raises TrajectoryFormatError: on malformed rows, non-finite coordinates or duplicate records
    """

    config = config if config is not None else SceneConfig()
    logger = create_logger("ingest", logger)

    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"Trajectory file not found: {source}")

    table = _read_table(source)
    if 0 == len(table):
        logger.warning("No records found in %s", source)
        return []

    for name in TrajectoryColumns:
        missing = np.flatnonzero(table[name].map(lambda value: 0 == len(value.strip())).to_numpy())
        if 0 < missing.size:
            raise TrajectoryFormatError(f"missing value in column '{name}'", _line_of(int(missing[0])))

    integers = {name: _parse_integers(table[name], name) for name in _IntegerColumns}
    coordinates = {name: _parse_coordinates(table[name], name) for name in _CoordinateColumns}

    # Stable sort keeps the line order of duplicates, so the reported line is deterministic
    order = np.lexsort((integers["frame"], integers["vehicle_id"]))
    vehicle_ids = integers["vehicle_id"][order]
    frames = integers["frame"][order]

    duplicates = np.flatnonzero((np.diff(vehicle_ids) == 0) & (np.diff(frames) == 0))
    if 0 < duplicates.size:
        position = int(order[duplicates[0] + 1])
        raise TrajectoryFormatError(f"duplicate record of vehicle {vehicle_ids[duplicates[0]]} "
                                    f"at frame {frames[duplicates[0]]}", _line_of(position))

    def points(first: str, second: str) -> np.ndarray:
        stacked = np.column_stack((coordinates[first][order], coordinates[second][order]))
        return stacked if "x" == config.longitudinal_axis else stacked[:, ::-1]

    center = points("center_x", "center_y")
    head = points("head_x", "head_y")
    tail = points("tail_x", "tail_y")
    lane_ids = integers["lane_id"][order]

    boundaries = np.flatnonzero(np.diff(vehicle_ids)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [len(vehicle_ids)]))

    trajectories = []
    for start, end in zip(starts, ends):
        try:
            trajectories.append(Trajectory(int(vehicle_ids[start]), frames[start:end], center[start:end],
                                           head[start:end], tail[start:end], lane_ids[start:end]))
        except ValueError as e:
            raise TrajectoryFormatError(str(e))

    logger.info("Parsed %d trajectories with %d records from %s", len(trajectories), len(table), source)

    return trajectories


def write_trajectories(trajectories: list[Trajectory], path: str | Path, config: Optional[SceneConfig] = None) -> Path:
    """
    Writes trajectories in the input schema applying the inverse axis mapping.
    Coordinates are written in their shortest round-tripping representation.
    """

    config = config if config is not None else SceneConfig()
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)

    columns: dict[str, list] = {name: [] for name in TrajectoryColumns}
    for trajectory in trajectories:
        swap = "y" == config.longitudinal_axis
        for prefix, points in (("center", trajectory.center), ("head", trajectory.head), ("tail", trajectory.tail)):
            first, second = (points[:, 1], points[:, 0]) if swap else (points[:, 0], points[:, 1])
            columns[f"{prefix}_x"].extend(repr(float(value)) for value in first)
            columns[f"{prefix}_y"].extend(repr(float(value)) for value in second)

        columns["frame"].extend(str(int(frame)) for frame in trajectory.frames)
        columns["vehicle_id"].extend([str(trajectory.vehicle_id)] * len(trajectory))
        columns["lane_id"].extend(str(int(lane)) for lane in trajectory.lane_ids)

    pd.DataFrame(columns, columns=list(TrajectoryColumns)).to_csv(target, index=False, encoding="utf-8")

    return target


def load_manifest(path: str | Path) -> dict[int, tuple[LaneChangeClass, Optional[int]]]:
    """
    Reads the per-vehicle ground truth of a corpus manifest.

    :param path: path to ``manifest.json``
    :return: vehicle id to (class, crossing frame)
    """

    manifest = read_json(path)

    if ("vehicles" not in manifest) or (not isinstance(manifest["vehicles"], list)):
        raise ValueError(f"Invalid manifest, 'vehicles' list expected: {path}")

    hints: dict[int, tuple[LaneChangeClass, Optional[int]]] = dict()
    for entry in manifest["vehicles"]:
        cross_frame = entry.get("cross_frame")
        hints[int(entry["vehicle_id"])] = (LaneChangeClass.from_name(entry["class"]),
                                           None if cross_frame is None else int(cross_frame))

    return hints


def attach_class_hints(trajectories: list[Trajectory],
                       hints: dict[int, tuple[LaneChangeClass, Optional[int]]]) -> list[Trajectory]:
    return [trajectory.with_hints(*hints[trajectory.vehicle_id]) if trajectory.vehicle_id in hints else trajectory
            for trajectory in trajectories]
