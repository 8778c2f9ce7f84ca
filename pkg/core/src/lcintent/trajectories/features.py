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
from typing import Optional, Iterable

import numpy as np
import pandas as pd

from lcintent.core.commons.loggers import ContextLogger, create_logger
from lcintent.core.specs.configs import SceneConfig, KinematicsConfig
from lcintent.core.specs.dtos import Trajectory, KinematicSeries, KinematicFrame, NeighborSet, FeatureFrame, \
    FeatureSeries, KinematicColumns, NeighborSlots, FeatureCount
from lcintent.executors.pool import WorkerPool
from lcintent.trajectories.kinematics import compute_all_kinematics

_IndicatorShortNames = ("vx", "vy", "ax", "ay", "theta", "yaw")

FEATURE_NAMES: tuple[str, ...] = \
    tuple(f"{vehicle}_{indicator}" for vehicle in ("E",) + NeighborSlots for indicator in _IndicatorShortNames) + \
    tuple(f"dw{index}" for index in range(len(NeighborSlots))) + \
    tuple(f"{slot}_val" for slot in NeighborSlots)
"""
Human readable names of the canonical feature slots
"""

FeatureColumns: tuple[str, ...] = tuple(f"f{index:02d}" for index in range(FeatureCount))
"""
Column names of the feature values in exported files
"""

HeadwayOffset = (1 + len(NeighborSlots)) * len(KinematicColumns)
FlagOffset = HeadwayOffset + len(NeighborSlots)

_Ahead, _Behind = 0, 1


class Scene:
    """
    Immutable frame index over preprocessed trajectories together with the
    kinematics of every vehicle, computed once per vehicle. A scene is read-only
    after construction, so features of different egos can be extracted in parallel.

    :param trajectories: preprocessed trajectories of the recording
    :param config: scene configuration
    :param kinematics: kinematic series by vehicle id, vehicles without an entry are
        treated as missing whenever they would occupy a neighbor slot
    """

    def __init__(self, trajectories: list[Trajectory], config: SceneConfig, kinematics: dict[int, KinematicSeries]):
        self.__config: SceneConfig = config
        self.__trajectories: dict[int, Trajectory] = {trajectory.vehicle_id: trajectory for trajectory in trajectories}
        self.__kinematics: dict[int, KinematicSeries] = kinematics

        if len(self.__trajectories) != len(trajectories):
            raise ValueError("Vehicle ids of a scene must be unique")

        def column(getter) -> np.ndarray:
            arrays = [getter(trajectory) for trajectory in trajectories]
            return np.concatenate(arrays) if arrays else np.empty(0)

        records = pd.DataFrame({
            "frame": column(lambda t: t.frames).astype(np.int64),
            "vehicle_id": column(lambda t: np.full(len(t), t.vehicle_id)).astype(np.int64),
            "x": column(lambda t: t.center[:, 0]).astype(np.float64),
            "lane_id": column(lambda t: t.lane_ids).astype(np.int64)
        })

        self.__records: pd.DataFrame = records.sort_values(["frame", "vehicle_id"], kind="stable") \
            .reset_index(drop=True)
        self.__record_frames: np.ndarray = self.__records["frame"].to_numpy()

        kinematic_tables = [pd.DataFrame(series.values, columns=list(KinematicColumns))
                            .assign(vehicle_id=vehicle_id, frame=series.frames)
                            for vehicle_id, series in sorted(kinematics.items())]

        kinematic_table = pd.concat(kinematic_tables, ignore_index=True) if kinematic_tables else \
            pd.DataFrame(columns=list(KinematicColumns) + ["vehicle_id", "frame"])

        self.__kinematic_table: pd.DataFrame = kinematic_table.set_index(["vehicle_id", "frame"]).sort_index()

    @staticmethod
    def build(trajectories: list[Trajectory],
              config: SceneConfig,
              kinematics_config: Optional[KinematicsConfig] = None,
              logger: Optional[ContextLogger] = None) -> 'Scene':
        """
        Creates a scene computing the kinematics of every vehicle. The frame rate of
        the kinematics is taken over from the scene configuration.
        """

        kinematics_config = (kinematics_config if kinematics_config is not None else KinematicsConfig()) \
            .replace(fps=config.fps)

        return Scene(trajectories, config, compute_all_kinematics(trajectories, kinematics_config, logger))

    def get_config(self) -> SceneConfig:
        return self.__config

    def get_vehicle_ids(self) -> list[int]:
        return sorted(self.__trajectories.keys())

    def get_trajectory(self, vehicle_id: int) -> Trajectory:
        if vehicle_id not in self.__trajectories:
            raise LookupError(f"Vehicle {vehicle_id} not in scene")

        return self.__trajectories[vehicle_id]

    def get_kinematics(self, vehicle_id: int) -> Optional[KinematicSeries]:
        return self.__kinematics.get(vehicle_id)

    def records_between(self, first_frame: int, last_frame: int) -> pd.DataFrame:
        """
        :return: records (frame, vehicle_id, x, lane_id) of all vehicles in the inclusive frame range
        """

        lower = np.searchsorted(self.__record_frames, first_frame, side="left")
        upper = np.searchsorted(self.__record_frames, last_frame, side="right")

        return self.__records.iloc[lower:upper]

    def kinematics_at(self, vehicle_ids: np.ndarray, frames: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Looks up the kinematic indicators of the given (vehicle, frame) pairs.

        :return: (values of shape (k, 6) with zeros for unavailable pairs, availability mask)
        """

        if 0 == len(vehicle_ids):
            return np.zeros((0, len(KinematicColumns))), np.zeros(0, dtype=bool)

        keys = pd.MultiIndex.from_arrays([np.asarray(vehicle_ids, dtype=np.int64),
                                          np.asarray(frames, dtype=np.int64)])
        values = self.__kinematic_table.reindex(keys).to_numpy(dtype=np.float64)
        available = ~np.isnan(values).any(axis=1)

        return np.where(available[:, None], values, 0.0), available


def find_neighbors(scene: Scene, ego_id: int, frame: int) -> NeighborSet:
    """
    Finds the closest preceding and following vehicles of the ego in its own and in
    the adjacent lanes. A vehicle level with the ego counts as preceding, equal
    distances are resolved in favor of the smaller vehicle id.

    :raises LookupError: if the ego is not present at the frame
    """

    records = scene.records_between(frame, frame)
    ego = records[records["vehicle_id"] == ego_id]

    if 0 == len(ego):
        raise LookupError(f"Vehicle {ego_id} is not present at frame {frame}")

    ego_x = float(ego["x"].iloc[0])
    ego_lane = int(ego["lane_id"].iloc[0])
    left_delta = scene.get_config().left_lane_delta

    others = records[records["vehicle_id"] != ego_id]
    slots: list[Optional[int]] = []

    for lane in (ego_lane, ego_lane + left_delta, ego_lane - left_delta):
        candidates = others[others["lane_id"] == lane]
        dx = candidates["x"].to_numpy() - ego_x
        ids = candidates["vehicle_id"].to_numpy()

        for mask in (dx >= 0, dx < 0):
            if not np.any(mask):
                slots.append(None)
            else:
                order = np.lexsort((ids[mask], np.abs(dx[mask])))
                slots.append(int(ids[mask][order[0]]))

    return NeighborSet(*slots)


def headways(scene: Scene, ego_id: int, neighbors: NeighborSet, frame: int) -> np.ndarray:
    """
    Longitudinal center-to-center distances to the neighbors in slot order, 0 for empty slots.
    """

    records = scene.records_between(frame, frame).set_index("vehicle_id")["x"]
    ego_x = records.get(ego_id)

    if ego_x is None:
        raise LookupError(f"Vehicle {ego_id} is not present at frame {frame}")

    return np.array([0.0 if vehicle_id is None else abs(float(records[vehicle_id]) - float(ego_x))
                     for vehicle_id in neighbors.slots()], dtype=np.float64)


def assemble_frame(ego_kinematics: KinematicFrame,
                   neighbor_kinematics: Iterable[Optional[KinematicFrame]],
                   dws: np.ndarray,
                   frame: int) -> FeatureFrame:
    """
    Composes the canonical feature vector: the indicators of the ego and the six
    neighbors, the six headways and the six validity flags. A missing neighbor gets
    zero indicators, zero headway and flag 1.
    """

    neighbor_kinematics = list(neighbor_kinematics)
    dws = np.asarray(dws, dtype=np.float64)

    if (len(NeighborSlots) != len(neighbor_kinematics)) or ((len(NeighborSlots),) != dws.shape):
        raise ValueError(f"Expected {len(NeighborSlots)} neighbor slots and headways")

    values = np.zeros(FeatureCount, dtype=np.float64)
    values[0:len(KinematicColumns)] = ego_kinematics.to_vector()

    for slot, kinematics in enumerate(neighbor_kinematics):
        if kinematics is None:
            values[FlagOffset + slot] = 1.0
        else:
            start = (slot + 1) * len(KinematicColumns)
            values[start:start + len(KinematicColumns)] = kinematics.to_vector()
            values[HeadwayOffset + slot] = dws[slot]

    if not np.all(np.isfinite(values)):
        raise ValueError(f"Non-finite indicator at frame {frame}")

    return FeatureFrame(frame, values)


def compute_features(scene: Scene, ego_id: int) -> FeatureSeries:
    """
    Feature rows of the ego on every frame, where its own kinematics exist.
    The neighbor search runs on all frames at once; a neighbor without kinematics
    at a frame is reported as missing.

    :raises LookupError: if the ego has no kinematics
    """

    ego_kinematics = scene.get_kinematics(ego_id)
    if (ego_kinematics is None) or (0 == len(ego_kinematics)):
        raise LookupError(f"Vehicle {ego_id} has no computable kinematics")

    frames = ego_kinematics.frames
    records = scene.records_between(int(frames[0]), int(frames[-1]))

    ego = records[records["vehicle_id"] == ego_id][["frame", "x", "lane_id"]]
    ego = ego[ego["frame"].isin(frames)]

    pairs = ego.merge(records, on="frame", suffixes=("_ego", ""))
    pairs = pairs[pairs["vehicle_id"] != ego_id]

    dx = (pairs["x"] - pairs["x_ego"]).to_numpy()
    lane_offset = (pairs["lane_id"] - pairs["lane_id_ego"]).to_numpy()
    left_delta = scene.get_config().left_lane_delta

    lane_block = np.select([lane_offset == 0, lane_offset == left_delta, lane_offset == -left_delta],
                           [0, 1, 2], default=-1)
    slot = 2 * lane_block + np.where(dx >= 0, _Ahead, _Behind)

    candidates = pd.DataFrame({
        "frame": pairs["frame"].to_numpy(),
        "slot": slot,
        "distance": np.abs(dx),
        "vehicle_id": pairs["vehicle_id"].to_numpy()
    })[lane_block >= 0]

    closest = candidates.sort_values(["frame", "slot", "distance", "vehicle_id"], kind="stable") \
        .drop_duplicates(["frame", "slot"], keep="first")

    values = np.zeros((len(frames), FeatureCount), dtype=np.float64)
    values[:, 0:len(KinematicColumns)] = ego_kinematics.values
    values[:, FlagOffset:] = 1.0

    if 0 < len(closest):
        rows = np.searchsorted(frames, closest["frame"].to_numpy())
        slots = closest["slot"].to_numpy()
        neighbor_values, available = scene.kinematics_at(closest["vehicle_id"].to_numpy(),
                                                         closest["frame"].to_numpy())

        rows, slots = rows[available], slots[available]
        for column in range(len(KinematicColumns)):
            values[rows, (slots + 1) * len(KinematicColumns) + column] = neighbor_values[available, column]

        values[rows, HeadwayOffset + slots] = closest["distance"].to_numpy()[available]
        values[rows, FlagOffset + slots] = 0.0

    if not np.all(np.isfinite(values)):
        raise ValueError(f"Vehicle {ego_id}: non-finite feature value")

    return FeatureSeries(ego_id, frames, values)


def feature_series(scene: Scene, ego_id: int) -> list[FeatureFrame]:
    return compute_features(scene, ego_id).get_frames()


def feature_matrix(frames: list[FeatureFrame]) -> np.ndarray:
    return np.array([frame.values for frame in frames], dtype=np.float64).reshape(-1, FeatureCount)


def extract_all_features(scene: Scene,
                         ego_ids: Optional[Iterable[int]] = None,
                         pool: Optional[WorkerPool] = None,
                         logger: Optional[ContextLogger] = None) -> dict[int, FeatureSeries]:
    """
    Features of the given egos (every vehicle with kinematics by default) in
    ascending ego id order.
    """

    logger = create_logger("features", logger)
    pool = pool if pool is not None else WorkerPool()

    if ego_ids is None:
        ego_ids = [vehicle_id for vehicle_id in scene.get_vehicle_ids() if scene.get_kinematics(vehicle_id) is not None]

    ego_ids = sorted(ego_ids)
    logger.info("Extracting features of %d egos on %d workers", len(ego_ids), pool.get_max_workers())

    series = pool.map(lambda ego_id: compute_features(scene, ego_id), ego_ids)

    return {ego_id: result for ego_id, result in zip(ego_ids, series)}


def export_features(series_by_ego: dict[int, FeatureSeries], path: str | Path) -> Path:
    """
    Writes the features as csv with the columns ``frame, ego_id, f00..f53``.
    """

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)

    tables = [pd.DataFrame(series.values, columns=list(FeatureColumns))
              .assign(frame=series.frames, ego_id=ego_id)
              for ego_id, series in sorted(series_by_ego.items())]

    table = pd.concat(tables, ignore_index=True) if tables else pd.DataFrame(columns=list(FeatureColumns))
    table = table.reindex(columns=["frame", "ego_id", *FeatureColumns])
    table.to_csv(target, index=False, float_format="%.17g", encoding="utf-8")

    return target


def load_features(path: str | Path) -> dict[int, FeatureSeries]:
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"Feature file not found: {source}")

    table = pd.read_csv(source, encoding="utf-8", float_precision="round_trip")
    expected = ["frame", "ego_id", *FeatureColumns]

    if list(table.columns) != expected:
        raise ValueError(f"Invalid feature file header in {source}")

    result: dict[int, FeatureSeries] = dict()
    for ego_id, group in table.groupby("ego_id", sort=True):
        group = group.sort_values("frame", kind="stable")
        result[int(ego_id)] = FeatureSeries(int(ego_id), group["frame"].to_numpy(dtype=np.int64),
                                            group[list(FeatureColumns)].to_numpy(dtype=np.float64))

    return result
