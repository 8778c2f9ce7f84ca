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
import unittest

import numpy as np

from lcintent.core.specs.configs import PreprocessConfig
from lcintent.core.specs.dtos import Trajectory
from lcintent.trajectories.preprocess import filter_frame_gaps, moving_average, smooth, preprocess, \
    smoothing_report
from .resources import create_trajectory


class PreprocessTest(unittest.TestCase):

    def test_filter_contiguous_frames_expect_kept(self):
        trajectory = create_trajectory(1, 4, start_frame=1)

        kept, dropped = filter_frame_gaps([trajectory], PreprocessConfig())

        self.assertEqual([trajectory], kept)
        self.assertEqual([], dropped)

    def test_filter_frame_gap_expect_dropped_with_reason(self):
        center = np.column_stack((np.arange(3.0), np.zeros(3)))
        trajectory = Trajectory(5, np.array([1, 2, 4]), center, center + [7.5, 0.0], center - [7.5, 0.0],
                                np.ones(3))

        kept, dropped = filter_frame_gaps([trajectory], PreprocessConfig())

        self.assertEqual([], kept)
        self.assertEqual([(5, "frame gap 2 at index 2")], dropped)

    def test_filter_gap_within_tolerance_expect_kept(self):
        center = np.column_stack((np.arange(3.0), np.zeros(3)))
        trajectory = Trajectory(5, np.array([1, 2, 4]), center, center + [7.5, 0.0], center - [7.5, 0.0],
                                np.ones(3))

        kept, _ = filter_frame_gaps([trajectory], PreprocessConfig(max_frame_gap=2))

        self.assertEqual(1, len(kept))

    def test_moving_average_expect_truncated_windows_at_the_ends(self):
        smoothed = moving_average(np.array([0.0, 3.0, 6.0, 9.0, 12.0]), 3)

        np.testing.assert_allclose([1.5, 3.0, 6.0, 9.0, 10.5], smoothed)

    def test_moving_average_near_the_ends_expect_asymmetric_windows(self):
        smoothed = moving_average(np.array([0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0]), 5)

        np.testing.assert_allclose([3.0, 4.5, 6.0, 9.0, 12.0, 13.5, 15.0], smoothed)

    def test_moving_average_of_constant_expect_identity(self):
        values = np.full((40, 2), 17.25)

        np.testing.assert_array_equal(values, moving_average(values, 15))

    def test_moving_average_of_alternating_noise_expect_attenuation(self):
        noise = np.where(np.arange(200) % 2 == 0, 1.0, -1.0)

        smoothed = moving_average(noise, 15)

        self.assertTrue(np.all(np.abs(smoothed[7:-7]) <= 1.0 / 15 + 1e-12))

    def test_moving_average_of_linear_series_expect_unchanged_interior(self):
        values = 3.0 + 0.75 * np.arange(100)

        smoothed = moving_average(values, 15)

        np.testing.assert_allclose(values[7:-7], smoothed[7:-7], rtol=0.0, atol=1e-9)

    def test_smooth_expect_frames_and_lanes_kept(self):
        rng = np.random.default_rng(1)
        trajectory = create_trajectory(2, 60, lateral=6.0 + rng.normal(0.0, 0.3, 60))

        smoothed = smooth(trajectory, PreprocessConfig(), 30.0)

        np.testing.assert_array_equal(trajectory.frames, smoothed.frames)
        np.testing.assert_array_equal(trajectory.lane_ids, smoothed.lane_ids)
        self.assertLess(np.std(np.diff(smoothed.center[:, 1])), np.std(np.diff(trajectory.center[:, 1])))

    def test_smooth_too_short_trajectory_expect_error(self):
        with self.assertRaises(ValueError):
            smooth(create_trajectory(1, 2), PreprocessConfig(), 30.0)

    def test_preprocess_expect_short_and_gapped_trajectories_dropped(self):
        center = np.column_stack((np.arange(10.0), np.zeros(10)))
        frames = np.concatenate((np.arange(5), np.arange(8, 13)))
        gapped = Trajectory(3, frames, center, center + [7.5, 0.0], center - [7.5, 0.0], np.ones(10))

        smoothed, dropped = preprocess([create_trajectory(1, 30), create_trajectory(2, 2), gapped],
                                       PreprocessConfig(), 30.0)

        self.assertEqual([1], [trajectory.vehicle_id for trajectory in smoothed])
        self.assertEqual({2, 3}, {vehicle_id for vehicle_id, _ in dropped})

    def test_smoothing_report_of_straight_motion_expect_zero_interior_displacement(self):
        raw = [create_trajectory(1, 50)]
        smoothed, _ = preprocess(raw, PreprocessConfig(), 30.0)

        report = smoothing_report(raw, smoothed)

        self.assertEqual(["vehicle_id", "frames", "rms_dx", "rms_dy"], list(report.columns))
        self.assertEqual(50, int(report["frames"].iloc[0]))
        self.assertEqual(0.0, float(report["rms_dy"].iloc[0]))
        self.assertGreater(float(report["rms_dx"].iloc[0]), 0.0)
