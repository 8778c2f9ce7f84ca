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
import tempfile
import unittest
from pathlib import Path

import numpy as np

from lcintent.core.commons.utils import dump_json, write_json, read_json, sha256_digest, load_class_by_name, \
    convert_to_dict
from lcintent.core.specs.dtos import LaneChangeClass


class UtilsTest(unittest.TestCase):

    def test_dump_json_with_numpy_values_expect_plain_json(self):
        dumped = dump_json({"b": np.int64(3), "a": np.arange(3, dtype=np.float64), "c": np.bool_(True)})

        self.assertEqual({"a": [0.0, 1.0, 2.0], "b": 3, "c": True}, json.loads(dumped))
        self.assertLess(dumped.index('"a"'), dumped.index('"b"'))
        self.assertTrue(dumped.endswith("\n"))

    def test_dump_json_with_nan_expect_error(self):
        with self.assertRaises(ValueError):
            dump_json({"a": float("nan")})

    def test_convert_to_dict_with_enum_and_path_expect_values(self):
        self.assertEqual({"cls": 2, "path": "a/b"}, convert_to_dict({"cls": LaneChangeClass.LLC, "path": Path("a/b")}))

    def test_write_and_read_json_expect_identical_bytes(self):
        with tempfile.TemporaryDirectory() as directory:
            first = write_json({"x": 1.5, "y": [1, 2]}, Path(directory) / "nested" / "a.json")
            second = write_json(read_json(first), Path(directory) / "b.json")

            self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_read_json_with_missing_file_expect_error(self):
        with self.assertRaises(FileNotFoundError):
            read_json("/surely/not/existing.json")

    def test_sha256_digest_expect_content_and_shape_sensitivity(self):
        a = np.arange(6, dtype=np.int64)

        self.assertEqual(sha256_digest(a), sha256_digest(a.copy()))
        self.assertNotEqual(sha256_digest(a), sha256_digest(a.reshape(2, 3)))
        self.assertNotEqual(sha256_digest(a), sha256_digest(a[::-1]))
        self.assertNotEqual(sha256_digest(a), sha256_digest(a.astype(np.int32)))

    def test_load_class_by_name_expect_class(self):
        self.assertIs(LaneChangeClass, load_class_by_name("lcintent.core.specs.dtos.LaneChangeClass"))

    def test_load_class_by_name_with_invalid_name_expect_error(self):
        with self.assertRaises(ValueError):
            load_class_by_name("LaneChangeClass")

        with self.assertRaises(Exception):
            load_class_by_name("lcintent.core.specs.dtos.NotExisting")
