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
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import Optional, Any

import numpy as np

from lcintent.core.commons.loggers import ContextLogger, create_logger
from lcintent.core.commons.utils import write_json
from lcintent.core.specs.configs import SynthConfig, SceneConfig
from lcintent.core.specs.dtos import Trajectory, LaneChangeClass, NeighborSlots
from lcintent.executors.pool import WorkerPool
from lcintent.trajectories.ingest import write_trajectories

ReferenceCounts = {LaneChangeClass.LK: 478, LaneChangeClass.LLC: 240, LaneChangeClass.RLC: 305}
"""
Class composition of the reference freeway corpus
"""

LeftLaneDelta = -1
"""
Generated corpora number the lanes from left to right, matching the default scene
"""

EpisodeGapFrames = 30
VehicleIdStride = 10
TrajectoryFileName = "trajectories.csv"
ManifestFileName = "manifest.json"

# Car following
StandstillGap = 15.0
GapGain = 0.08
SpeedGain = 0.5
AccelerationBounds = (-15.0, 10.0)

TruncationProbability = 0.25


def smoothstep(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def round_half_up(value: float | Decimal) -> int:
    return int(Decimal(value).quantize(Decimal(1), rounding=ROUND_HALF_UP))


class SynthCorpus:
    """
    Generated trajectories with their ground truth. Only the egos of the episodes
    are listed in the manifest, the surrounding vehicles are context.
    """

    def __init__(self, trajectories: list[Trajectory], manifest: dict[str, Any]):
        self.trajectories: list[Trajectory] = trajectories
        self.manifest: dict[str, Any] = manifest

    def get_ego_ids(self) -> list[int]:
        return [entry["vehicle_id"] for entry in self.manifest["vehicles"]]

    def get_counts(self) -> dict[str, int]:
        return self.manifest["counts"]


class _EpisodePlan:

    def __init__(self, index: int, cls: LaneChangeClass, lane: int, first_frame: int, frame_count: int,
                 timings: tuple[float, float, float], rng: np.random.Generator):
        self.index: int = index
        self.cls: LaneChangeClass = cls
        self.lane: int = lane
        self.first_frame: int = first_frame
        self.frame_count: int = frame_count
        self.timings: tuple[float, float, float] = timings
        """
        Lead-in, drift and transition durations of a lane change, zeros for lane keeping
        """
        self.rng: np.random.Generator = rng


class _Motion:
    """
    Noise free motion of one vehicle on the frames of its episode.
    """

    def __init__(self, x: np.ndarray, v: np.ndarray, y: np.ndarray):
        self.x: np.ndarray = x
        self.v: np.ndarray = v
        self.y: np.ndarray = y


def _uniform(rng: np.random.Generator, bounds: list) -> float:
    return float(rng.uniform(bounds[0], bounds[1]))


def _lane_center(lane: int, config: SynthConfig) -> float:
    return (lane - 0.5) * config.lane_width


def _valid_lanes(cls: LaneChangeClass, lanes: int) -> np.ndarray:
    # Left decreases the lane id
    if LaneChangeClass.LLC == cls:
        return np.arange(2, lanes + 1)
    if LaneChangeClass.RLC == cls:
        return np.arange(1, lanes)
    return np.arange(1, lanes + 1)


def _plan_episodes(config: SynthConfig) -> list[_EpisodePlan]:
    classes = np.array([LaneChangeClass.LK] * config.n_lk + [LaneChangeClass.LLC] * config.n_llc +
                       [LaneChangeClass.RLC] * config.n_rlc, dtype=np.int64)
    classes = classes[np.random.default_rng(config.rng_seed).permutation(classes.size)]

    plans = []
    first_frame = 0
    for index, cls_value in enumerate(classes):
        cls = LaneChangeClass(int(cls_value))
        rng = np.random.default_rng([config.rng_seed, index])

        lane = int(rng.choice(_valid_lanes(cls, config.lanes)))

        if LaneChangeClass.LK == cls:
            timings = (0.0, 0.0, 0.0)
            duration = _uniform(rng, config.lk_duration_s)
        else:
            timings = (_uniform(rng, config.lead_in_s), _uniform(rng, config.prep_duration_s),
                       _uniform(rng, config.lc_duration_s))
            duration = sum(timings) + config.tail_s

        frame_count = int(round(duration * config.fps)) + 1
        plans.append(_EpisodePlan(index, cls, lane, first_frame, frame_count, timings, rng))
        first_frame += frame_count + EpisodeGapFrames

    return plans


def _free_flow(rng: np.random.Generator, t: np.ndarray, x0: float,
               config: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    v0 = max(0.6 * config.speed_mean, float(rng.normal(config.speed_mean, config.speed_std)))
    amplitude = float(rng.uniform(0.0, 3.0))
    period = float(rng.uniform(8.0, 20.0))
    phase = float(rng.uniform(0.0, 2.0 * np.pi))

    omega = 2.0 * np.pi / period
    v = v0 + amplitude * np.sin(omega * t + phase)
    x = x0 + v0 * t - amplitude / omega * (np.cos(omega * t + phase) - np.cos(phase))

    return x, v


def _follow(rng: np.random.Generator, leader: _Motion, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Constant time headway car following behind the leader.
    """

    headway = float(rng.uniform(1.2, 2.0))
    v = max(1.0, float(leader.v[0] + rng.uniform(-3.0, 3.0)))
    x = float(leader.x[0]) - (StandstillGap + headway * v + float(rng.uniform(0.0, 40.0)))

    xs = np.empty_like(leader.x)
    vs = np.empty_like(leader.v)
    for k in range(leader.x.shape[0]):
        xs[k], vs[k] = x, v

        gap = float(leader.x[k]) - x
        acceleration = GapGain * (gap - StandstillGap - headway * v) + SpeedGain * (float(leader.v[k]) - v)
        v = max(0.0, v + float(np.clip(acceleration, *AccelerationBounds)) * dt)
        x += v * dt

    return xs, vs


def _wander(rng: np.random.Generator, t: np.ndarray, config: SynthConfig) -> np.ndarray:
    period = float(rng.uniform(10.0, 20.0))
    phase = float(rng.uniform(0.0, 2.0 * np.pi))
    return config.lk_wander_ft * np.sin(2.0 * np.pi * t / period + phase)


def _ego_lateral(plan: _EpisodePlan, t: np.ndarray, config: SynthConfig) -> np.ndarray:
    center = _lane_center(plan.lane, config)

    if LaneChangeClass.LK == plan.cls:
        return center + _wander(plan.rng, t, config)

    lead_in, drift, transition = plan.timings
    direction = -1.0 if LaneChangeClass.LLC == plan.cls else 1.0

    offset = config.prep_offset * smoothstep((t - lead_in) / drift) + \
        (config.lane_width - config.prep_offset) * smoothstep((t - lead_in - drift) / transition)

    return center + direction * offset


def _lane_ids(y: np.ndarray, config: SynthConfig) -> np.ndarray:
    return np.clip(np.floor(y / config.lane_width).astype(np.int64) + 1, 1, config.lanes)


def _trajectory(vehicle_id: int, frames: np.ndarray, motion: _Motion, rng: np.random.Generator,
                config: SynthConfig) -> Trajectory:
    length = float(rng.uniform(14.0, 18.0))
    heading = np.arctan2(np.gradient(motion.y), np.gradient(motion.x))
    half = 0.5 * length * np.stack([np.cos(heading), np.sin(heading)], axis=1)

    center = np.stack([motion.x, motion.y], axis=1)
    # Rigid jitter of the whole box
    noise = rng.normal(0.0, config.position_noise_std, size=center.shape)

    return Trajectory(vehicle_id, frames, center + noise, center + half + noise, center - half + noise,
                      _lane_ids(motion.y, config))


def _truncate(trajectory: Trajectory, rng: np.random.Generator) -> Trajectory:
    """
    Shortens the recording of a surrounding vehicle at one end, as if it entered or
    left the field of view during the episode.
    """

    n = len(trajectory)
    keep = max(5, int(float(rng.uniform(0.5, 1.0)) * n))
    start = 0 if rng.random() < 0.5 else n - keep
    rows = slice(start, start + keep)

    return Trajectory(trajectory.vehicle_id, trajectory.frames[rows], trajectory.center[rows],
                      trajectory.head[rows], trajectory.tail[rows], trajectory.lane_ids[rows])


def _simulate(plan: _EpisodePlan, config: SynthConfig) -> tuple[list[Trajectory], dict[str, Any]]:
    rng = plan.rng
    dt = 1.0 / config.fps
    t = np.arange(plan.frame_count) * dt
    frames = plan.first_frame + np.arange(plan.frame_count)

    x0 = float(rng.uniform(0.0, max(1.0, config.segment_length - config.speed_mean * t[-1])))
    ego_x, ego_v = _free_flow(rng, t, x0, config)
    ego = _Motion(ego_x, ego_v, _ego_lateral(plan, t, config))

    ego_id = plan.index * VehicleIdStride
    trajectories = [_trajectory(ego_id, frames, ego, rng, config)]

    lanes = {"": plan.lane, "L": plan.lane + LeftLaneDelta, "R": plan.lane - LeftLaneDelta}
    for slot_index, slot in enumerate(NeighborSlots):
        lane = lanes[slot[:-1]]
        present = rng.random() < config.neighbor_probability

        if (not present) or (not 1 <= lane <= config.lanes):
            continue

        if "P" == slot[-1]:
            x, v = _free_flow(rng, t, float(ego.x[0] + rng.uniform(60.0, 250.0)), config)
        else:
            x, v = _follow(rng, ego, dt)

        motion = _Motion(x, v, _lane_center(lane, config) + _wander(rng, t, config))
        neighbor = _trajectory(ego_id + slot_index + 1, frames, motion, rng, config)

        if rng.random() < TruncationProbability:
            neighbor = _truncate(neighbor, rng)

        trajectories.append(neighbor)

    cross_frame = None
    if LaneChangeClass.LK != plan.cls:
        changed = np.flatnonzero(trajectories[0].lane_ids != plan.lane)
        cross_frame = int(frames[changed[0]])

    entry = {
        "vehicle_id": ego_id,
        "episode": plan.index,
        "class": plan.cls.name,
        "lane": plan.lane,
        "cross_frame": cross_frame,
        "transition_frame": None if cross_frame is None else
        int(frames[0] + round((plan.timings[0] + plan.timings[1]) * config.fps)),
        "first_frame": int(frames[0]),
        "last_frame": int(frames[-1])
    }

    return trajectories, entry


def generate(config: Optional[SynthConfig] = None,
             pool: Optional[WorkerPool] = None,
             logger: Optional[ContextLogger] = None) -> SynthCorpus:
    """
    Generates a corpus of independent episodes in disjoint frame blocks. Every
    episode has one ego of the planned class and up to six surrounding vehicles.
    Lane changing egos drift toward the target lane, then cross it on a smoothstep
    profile, so the total lateral displacement is one lane width. The lane id of a
    vehicle follows its noise free lateral position, so it switches exactly once
    at the lane boundary.

    Each episode draws from its own generator seeded by (seed, episode), so the
    result does not depend on the parallelism of the pool.
    """

    config = config if config is not None else SynthConfig()
    pool = pool if pool is not None else WorkerPool(single_thread=True)
    logger = create_logger("synth", logger)

    plans = _plan_episodes(config)
    episodes = pool.map(lambda plan: _simulate(plan, config), plans)

    trajectories = sorted((trajectory for episode, _ in episodes for trajectory in episode),
                          key=lambda trajectory: trajectory.vehicle_id)
    entries = [entry for _, entry in episodes]

    manifest = {
        "seed": config.rng_seed,
        "config": config.to_dict(),
        "scene": SceneConfig(fps=config.fps, lane_width=config.lane_width, left_lane_delta=LeftLaneDelta).to_dict(),
        "counts": {cls.name: sum(1 for entry in entries if cls.name == entry["class"]) for cls in LaneChangeClass},
        "vehicles": entries
    }

    logger.info("Generated %d episodes with %d trajectories: %s", len(entries), len(trajectories), manifest["counts"])

    return SynthCorpus(trajectories, manifest)


def reference_config(rng_seed: int = 0, scale: float = 1.0, **overrides: Any) -> SynthConfig:
    """
    Configuration with the reference class composition scaled by rounding half up.
    """

    if 0 >= scale:
        raise ValueError(f"Scale must be positive, got {scale}")

    factor = Decimal(str(scale))
    counts = {cls: round_half_up(factor * count) for cls, count in ReferenceCounts.items()}

    return SynthConfig(n_lk=counts[LaneChangeClass.LK], n_llc=counts[LaneChangeClass.LLC],
                       n_rlc=counts[LaneChangeClass.RLC], rng_seed=rng_seed, **overrides)


def generate_reference(rng_seed: int = 0,
                       scale: float = 1.0,
                       pool: Optional[WorkerPool] = None,
                       logger: Optional[ContextLogger] = None) -> SynthCorpus:
    return generate(reference_config(rng_seed, scale), pool, logger)


def write_corpus(corpus: SynthCorpus, directory: str | Path) -> tuple[Path, Path]:
    """
    Writes the trajectories in the input schema and the manifest next to them.

    :return: (trajectory file, manifest file)
    """

    target = Path(directory)
    scene = SceneConfig.from_dict(corpus.manifest["scene"])

    return write_trajectories(corpus.trajectories, target / TrajectoryFileName, scene), \
        write_json(corpus.manifest, target / ManifestFileName)
