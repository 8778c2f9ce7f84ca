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
import json
import random
import tempfile
import unittest
from pathlib import Path

import numpy as np

from lcintent.core.specs.configs import SceneConfig
from lcintent.core.specs.dtos import Trajectory, LaneChangeClass
from lcintent.trajectories.ingest import parse_trajectories, write_trajectories, TrajectoryFormatError, \
    load_manifest, attach_class_hints, TrajectoryColumns
from .resources import write_rows, straight_rows


class IngestTest(unittest.TestCase):

    def setUp(self) -> None:
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name) / "trajectories.csv"

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_parse_header_only_expect_no_trajectories(self):
        write_rows(self.path, [])

        self.assertEqual([], parse_trajectories(self.path))

    def test_parse_two_vehicles_in_random_row_order_expect_sorted_trajectories(self):
        rows = straight_rows(7, 100) + straight_rows(3, 100, lane_id=2)
        random.Random(0).shuffle(rows)
        write_rows(self.path, rows)

        trajectories = parse_trajectories(self.path)

        self.assertEqual([3, 7], [trajectory.vehicle_id for trajectory in trajectories])
        for trajectory in trajectories:
            self.assertEqual(100, len(trajectory))
            np.testing.assert_array_equal(np.arange(100), trajectory.frames)
            np.testing.assert_array_equal(np.arange(100, dtype=np.float64), trajectory.center[:, 0])

        np.testing.assert_array_equal(np.full(100, 2), trajectories[0].lane_ids)

    def test_parse_with_longitudinal_y_axis_expect_swapped_coordinates(self):
        rows = [(frame, 1, 6.0, float(frame), 6.0, frame + 7.5, 6.0, frame - 7.5, 1) for frame in range(10)]
        write_rows(self.path, rows)

        trajectory = parse_trajectories(self.path, SceneConfig(longitudinal_axis="y"))[0]

        np.testing.assert_array_equal(np.arange(10, dtype=np.float64), trajectory.center[:, 0])
        np.testing.assert_array_equal(np.full(10, 6.0), trajectory.center[:, 1])
        np.testing.assert_array_equal(np.arange(10) + 7.5, trajectory.head[:, 0])

    def test_write_and_parse_expect_bit_identical_trajectories(self):
        rng = np.random.default_rng(5)
        center = rng.uniform(-1000.0, 1000.0, (50, 2))
        original = [Trajectory(4, np.arange(50), center, center + rng.uniform(1.0, 5.0, (50, 2)),
                               center - rng.uniform(1.0, 5.0, (50, 2)), rng.integers(1, 4, 50))]

        for axis in ("x", "y"):
            config = SceneConfig(longitudinal_axis=axis)
            parsed = parse_trajectories(write_trajectories(original, self.path, config), config)

            self.assertEqual(original, parsed)
            self.assertEqual(original[0].center.tobytes(), parsed[0].center.tobytes())

    def test_parse_invalid_number_expect_error_with_line(self):
        rows = straight_rows(1, 5)
        rows[2] = (2, 1, "abc", 6.0, 9.5, 6.0, -5.5, 6.0, 1)
        write_rows(self.path, rows)

        with self.assertRaises(TrajectoryFormatError) as context:
            parse_trajectories(self.path)

        self.assertEqual(4, context.exception.line_number)
        self.assertIn("center_x", str(context.exception))

    def test_parse_non_finite_coordinate_expect_error(self):
        for literal in ("nan", "inf", "-inf"):
            rows = straight_rows(1, 5)
            rows[1] = (1, 1, 1.0, literal, 8.5, 6.0, -6.5, 6.0, 1)
            write_rows(self.path, rows)

            with self.assertRaises(TrajectoryFormatError) as context:
                parse_trajectories(self.path)

            self.assertEqual(3, context.exception.line_number)

    def test_parse_missing_value_expect_error(self):
        rows = straight_rows(1, 5)
        rows[4] = (4, 1, 4.0, 6.0, 11.5, 6.0, -3.5, 6.0, "")
        write_rows(self.path, rows)

        with self.assertRaises(TrajectoryFormatError) as context:
            parse_trajectories(self.path)

        self.assertEqual(6, context.exception.line_number)

    def test_parse_duplicate_record_expect_error(self):
        rows = straight_rows(1, 5)
        write_rows(self.path, rows + [rows[3]])

        with self.assertRaises(TrajectoryFormatError) as context:
            parse_trajectories(self.path)

        self.assertEqual(7, context.exception.line_number)

    def test_parse_wrong_header_expect_error_on_first_line(self):
        write_rows(self.path, straight_rows(1, 3), header=("frame", "id", *TrajectoryColumns[2:]))

        with self.assertRaises(TrajectoryFormatError) as context:
            parse_trajectories(self.path)

        self.assertEqual(1, context.exception.line_number)

    def test_parse_missing_file_expect_error(self):
        with self.assertRaises(FileNotFoundError):
            parse_trajectories(Path(self.directory.name) / "missing.csv")

    def test_attach_class_hints_expect_manifest_classes(self):
        write_rows(self.path, straight_rows(1, 5) + straight_rows(2, 5))
        manifest = Path(self.directory.name) / "manifest.json"
        manifest.write_text(json.dumps({"vehicles": [{"vehicle_id": 1, "class": "RLC", "cross_frame": 3},
                                                     {"vehicle_id": 2, "class": "LK", "cross_frame": None}]}))

        hints = load_manifest(manifest)
        trajectories = attach_class_hints(parse_trajectories(self.path), hints)

        self.assertEqual(LaneChangeClass.RLC, trajectories[0].class_hint)
        self.assertEqual(3, trajectories[0].cross_frame)
        self.assertEqual(LaneChangeClass.LK, trajectories[1].class_hint)
        self.assertIsNone(trajectories[1].cross_frame)
