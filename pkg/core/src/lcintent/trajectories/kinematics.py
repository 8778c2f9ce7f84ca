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
import warnings
from typing import Optional

import numpy as np

from lcintent.core.commons.loggers import ContextLogger, create_logger
from lcintent.core.specs.configs import KinematicsConfig
from lcintent.core.specs.dtos import Trajectory, KinematicFrame, KinematicSeries

MinimumLength = 5
"""
Shortest trajectory with at least one frame, where all six indicators are computable
"""


def wrap_degrees(angles: np.ndarray | float) -> np.ndarray:
    """
    Maps angles to (-180, 180].
    """

    wrapped = np.mod(np.asarray(angles, dtype=np.float64) + 180.0, 360.0) - 180.0
    return np.where(wrapped <= -180.0, wrapped + 360.0, wrapped)


def _median_of_steps(per_step: np.ndarray) -> np.ndarray:
    """
    Median over the step axis ignoring unavailable steps. Columns without any
    available step stay NaN.
    """

    result = np.full(per_step.shape[1], np.nan)
    available = ~np.all(np.isnan(per_step), axis=0)

    if np.any(available):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            result[available] = np.nanmedian(per_step[:, available], axis=0)

    return result


def velocity_series(positions: np.ndarray, config: KinematicsConfig) -> np.ndarray:
    """
    Median of central difference velocities over the steps n = 1..n_eff for every
    frame, where n_eff = min(n_max, t, last - t). Boundary frames are NaN.

    :param positions: scalar position series in feet
    :return: velocities in ft/s
    """

    positions = np.asarray(positions, dtype=np.float64)
    length = positions.shape[0]

    per_step = np.full((config.n_max, length), np.nan)
    for n in range(1, config.n_max + 1):
        if length > 2 * n:
            per_step[n - 1, n:length - n] = (positions[2 * n:] - positions[:length - 2 * n]) * config.fps / (2 * n)

    return _median_of_steps(per_step)


def heading_series(head: np.ndarray, tail: np.ndarray, config: KinematicsConfig) -> np.ndarray:
    """
    Heading in degrees from the longitudinal axis, the median over n of the direction
    of the vector from the tail point at t-n to the head point at t+n.

    :param head: head points, shape (n, 2)
    :param tail: tail points, shape (n, 2)
    :raises ValueError: if a displacement vector is zero
    """

    length = head.shape[0]

    per_step = np.full((config.n_max, length), np.nan)
    for n in range(1, config.n_max + 1):
        if length > 2 * n:
            delta = head[2 * n:] - tail[:length - 2 * n]
            degenerate = np.flatnonzero(np.all(delta == 0.0, axis=1))
            if 0 < degenerate.size:
                raise ValueError(f"degenerate heading at index {int(degenerate[0]) + n} with step {n}")

            per_step[n - 1, n:length - n] = wrap_degrees(np.degrees(np.arctan2(delta[:, 1], delta[:, 0])))

    # Median of the offsets from the single step heading, wrapped back to (-180, 180]
    reference = per_step[0]
    return wrap_degrees(reference + _median_of_steps(wrap_degrees(per_step - reference[None, :])))


def central_rate(series: np.ndarray, fps: float, wrap: bool = False) -> np.ndarray:
    """
    (x(t+1) - x(t-1)) / 2T for every frame, NaN where a neighbour is missing.

    :param wrap: if True, the difference is taken as the shortest signed angle in degrees
    """

    series = np.asarray(series, dtype=np.float64)
    result = np.full(series.shape[0], np.nan)

    if 2 < series.shape[0]:
        difference = series[2:] - series[:-2]
        result[1:-1] = (wrap_degrees(difference) if wrap else difference) * fps / 2.0

    return result


def _check_interior(length: int, t: int, reach: int) -> None:
    if (t - reach < 0) or (t + reach > length - 1):
        raise ValueError(f"no central difference available at index {t}")


def median_velocity(positions: np.ndarray, t: int, config: KinematicsConfig) -> float:
    positions = np.asarray(positions, dtype=np.float64)
    _check_interior(positions.shape[0], t, 1)

    return float(velocity_series(positions, config)[t])


def accel(velocities: np.ndarray, t: int, fps: float) -> float:
    velocities = np.asarray(velocities, dtype=np.float64)
    _check_interior(velocities.shape[0], t, 1)

    return float((velocities[t + 1] - velocities[t - 1]) * fps / 2.0)


def heading(trajectory: Trajectory, t: int, config: KinematicsConfig) -> float:
    _check_interior(len(trajectory), t, 1)

    n_eff = min(config.n_max, t, len(trajectory) - 1 - t)
    window = slice(t - n_eff, t + n_eff + 1)

    return float(heading_series(trajectory.head[window], trajectory.tail[window], config)[n_eff])


def yaw_rate(thetas: np.ndarray, t: int, fps: float) -> float:
    thetas = np.asarray(thetas, dtype=np.float64)
    _check_interior(thetas.shape[0], t, 1)

    return float(wrap_degrees(thetas[t + 1] - thetas[t - 1]) * fps / 2.0)


def compute_kinematics(trajectory: Trajectory, config: KinematicsConfig) -> KinematicSeries:
    """
    Computes the six indicators of a smoothed, gap-free trajectory on every frame,
    where all of them are defined. Velocity and heading need one frame on both
    sides, acceleration and yaw rate another one, hence a trajectory of n frames
    yields the frames at the indices 2..n-3.

    :raises ValueError: if the trajectory has less than 5 frames
    """

    length = len(trajectory)
    if MinimumLength > length:
        raise ValueError(f"Vehicle {trajectory.vehicle_id}: at least {MinimumLength} frames "
                         f"required for kinematics, got {length}")

    v_x = velocity_series(trajectory.center[:, 0], config)
    v_y = velocity_series(trajectory.center[:, 1], config)
    theta = heading_series(trajectory.head, trajectory.tail, config)

    values = np.column_stack((v_x, v_y,
                              central_rate(v_x, config.fps), central_rate(v_y, config.fps),
                              theta, central_rate(theta, config.fps, wrap=True)))[2:length - 2]

    if not np.all(np.isfinite(values)):
        raise ValueError(f"Vehicle {trajectory.vehicle_id}: non-finite kinematic indicator")

    return KinematicSeries(trajectory.vehicle_id, trajectory.frames[2:length - 2], values)


def kinematic_series(trajectory: Trajectory, config: KinematicsConfig) -> list[KinematicFrame]:
    return compute_kinematics(trajectory, config).get_frames()


def compute_all_kinematics(trajectories: list[Trajectory],
                           config: KinematicsConfig,
                           logger: Optional[ContextLogger] = None) -> dict[int, KinematicSeries]:
    """
    Kinematics of every trajectory long enough for the computation. Shorter
    trajectories are skipped, they can still appear as surrounding vehicles,
    but are treated as missing.
    """

    logger = create_logger("kinematics", logger)

    result: dict[int, KinematicSeries] = dict()
    for trajectory in trajectories:
        if MinimumLength > len(trajectory):
            logger.debug("Vehicle %d skipped, only %d frames", trajectory.vehicle_id, len(trajectory))
            continue

        result[trajectory.vehicle_id] = compute_kinematics(trajectory, config)

    return result
