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
import pandas as pd

from lcintent.core.commons.loggers import ContextLogger, create_logger
from lcintent.core.specs.configs import PreprocessConfig
from lcintent.core.specs.dtos import Trajectory


def filter_frame_gaps(trajectories: list[Trajectory],
                      config: PreprocessConfig) -> tuple[list[Trajectory], list[tuple[int, str]]]:
    """
    Drops every trajectory having adjacent frame indices further apart than
    ``max_frame_gap``.

    :return: (kept trajectories, list of (vehicle id, reason) of the dropped ones)
    """

    kept: list[Trajectory] = []
    dropped: list[tuple[int, str]] = []

    for trajectory in trajectories:
        gaps = np.diff(trajectory.frames)
        violations = np.flatnonzero(gaps > config.max_frame_gap)

        if 0 < violations.size:
            index = int(violations[0]) + 1
            dropped.append((trajectory.vehicle_id, f"frame gap {int(gaps[index - 1])} at index {index}"))
        else:
            kept.append(trajectory)

    return kept, dropped


def moving_average(values: np.ndarray, window_length: int) -> np.ndarray:
    """
    Centered moving average along the first axis. Near the ends the window is cut
    at the recording boundary, i.e. row i averages the rows
    [max(0, i-h), min(n-1, i+h)] with h = (window_length-1)/2. These end windows are
    asymmetric, they are not shrunk to the symmetric half width min(i, n-1-i, h).
    """

    n = values.shape[0]
    half = (window_length - 1) // 2

    index = np.arange(n)
    lower = np.maximum(index - half, 0)
    upper = np.minimum(index + half, n - 1)

    smoothed = np.empty_like(values, dtype=np.float64)
    interior = (index - half >= 0) & (index + half <= n - 1)

    if np.any(interior):
        # Interior rows average full windows directly
        windows = np.lib.stride_tricks.sliding_window_view(values, window_length, axis=0)
        smoothed[interior] = windows.mean(axis=-1)

    for i in np.flatnonzero(~interior):
        smoothed[i] = values[lower[i]:upper[i] + 1].mean(axis=0)

    return smoothed


def smooth(trajectory: Trajectory, config: PreprocessConfig, fps: float) -> Trajectory:
    """
    Smooths center, head and tail coordinates with a centered moving average of
    ``ma_window_seconds``. Frame indices and lane ids are kept.

    :raises ValueError: if the trajectory has less than 3 frames
    """

    if 3 > len(trajectory):
        raise ValueError(f"Vehicle {trajectory.vehicle_id}: too short to smooth")

    window_length = config.window_length(fps)
    positions = np.concatenate((trajectory.center, trajectory.head, trajectory.tail), axis=1)
    smoothed = moving_average(positions, window_length)

    return trajectory.with_positions(smoothed[:, 0:2], smoothed[:, 2:4], smoothed[:, 4:6])


def preprocess(trajectories: list[Trajectory],
               config: PreprocessConfig,
               fps: float,
               logger: Optional[ContextLogger] = None) -> tuple[list[Trajectory], list[tuple[int, str]]]:
    """
    Gap filtering followed by smoothing. Trajectories too short to smooth are dropped
    instead of failing the batch.

    :return: (smoothed trajectories, list of (vehicle id, reason) of the dropped ones)
    """

    logger = create_logger("preprocess", logger)

    kept, dropped = filter_frame_gaps(trajectories, config)

    smoothed: list[Trajectory] = []
    for trajectory in kept:
        if 3 > len(trajectory):
            dropped.append((trajectory.vehicle_id, "too short to smooth"))
        else:
            smoothed.append(smooth(trajectory, config, fps))

    for vehicle_id, reason in dropped:
        logger.debug("Dropped vehicle %d: %s", vehicle_id, reason)

    logger.info("Kept %d of %d trajectories (window %d frames)",
                len(smoothed), len(trajectories), config.window_length(fps))

    return smoothed, dropped


def smoothing_report(raw: list[Trajectory], smoothed: list[Trajectory]) -> pd.DataFrame:
    """
    RMS displacement of the center point introduced by smoothing per vehicle.

    :return: table with the columns vehicle_id, frames, rms_dx, rms_dy
    """

    raw_by_id = {trajectory.vehicle_id: trajectory for trajectory in raw}

    rows = []
    for trajectory in smoothed:
        original = raw_by_id.get(trajectory.vehicle_id)
        if original is None:
            raise LookupError(f"Vehicle {trajectory.vehicle_id} has no raw counterpart")

        delta = trajectory.center - original.center
        rms = np.sqrt(np.mean(delta ** 2, axis=0))
        rows.append((trajectory.vehicle_id, len(trajectory), float(rms[0]), float(rms[1])))

    return pd.DataFrame(rows, columns=["vehicle_id", "frames", "rms_dx", "rms_dy"])
