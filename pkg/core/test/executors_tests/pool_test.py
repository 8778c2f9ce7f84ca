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
import os
import threading
import time
import unittest
from unittest import mock

from lcintent.executors.commons import ThreadsEnvVar, NativeThreadEnvVars
from lcintent.executors.pool import WorkerPool, resolve_worker_count, pin_native_threads


class WorkerPoolTest(unittest.TestCase):

    def test_map_with_uneven_task_durations_expect_input_order(self):
        pool = WorkerPool(max_workers=4)

        def task(value: int) -> int:
            time.sleep(0.001 * (10 - value))
            return value * value

        self.assertEqual([value * value for value in range(10)], pool.map(task, range(10)))

    def test_map_in_single_thread_mode_expect_calling_thread(self):
        pool = WorkerPool(single_thread=True, max_workers=8)

        threads = pool.map(lambda _: threading.get_ident(), range(5))

        self.assertTrue(pool.is_single_thread())
        self.assertEqual(1, pool.get_max_workers())
        self.assertEqual({threading.get_ident()}, set(threads))

    def test_map_with_failing_task_expect_error_raised(self):
        def task(value: int) -> int:
            if 3 == value:
                raise ValueError("failed")
            return value

        with self.assertRaises(ValueError):
            WorkerPool(max_workers=2).map(task, range(6))

    def test_resolve_worker_count_with_cap_expect_capped(self):
        with mock.patch.dict(os.environ, {ThreadsEnvVar: "1"}):
            self.assertEqual(1, resolve_worker_count())

        self.assertEqual(1, resolve_worker_count(single_thread=True))

    def test_resolve_worker_count_with_invalid_cap_expect_error(self):
        with mock.patch.dict(os.environ, {ThreadsEnvVar: "many"}):
            with self.assertRaises(ValueError):
                resolve_worker_count()

    def test_pin_native_threads_expect_single_thread_variables(self):
        with mock.patch.dict(os.environ, dict()):
            pin_native_threads()

            for name in NativeThreadEnvVars:
                self.assertEqual("1", os.environ[name])
