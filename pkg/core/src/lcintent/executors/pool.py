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
import concurrent.futures
import os
from typing import Callable, Iterable, Optional, TypeVar

from lcintent.executors.commons import ThreadsEnvVar, NativeThreadEnvVars

InputType = TypeVar("InputType")
ResultType = TypeVar("ResultType")


def resolve_worker_count(single_thread: bool = False) -> int:
    """
    Determines the number of workers. The count is the number of available cpus capped
    by the value of ``LC_INTENT_THREADS``, if set.

    :param single_thread: if True, the result is always 1
    :return: number of workers
    """

    if single_thread:
        return 1

    count = os.cpu_count() or 1
    cap = os.getenv(ThreadsEnvVar)

    if cap is not None:
        try:
            count = min(count, int(cap))
        except ValueError:
            raise ValueError(f"Invalid value of {ThreadsEnvVar}: '{cap}'")

    return max(1, count)


def pin_native_threads() -> None:
    """
    Pins the thread pools of the native linear algebra libraries to a single thread.
    It has effect only, if called before numpy is imported, which is why the command
    line calls it before loading any command module.
    """

    for name in NativeThreadEnvVars:
        os.environ[name] = "1"


class WorkerPool:
    """
    This class executes independent tasks (trajectories, egos, folds) on a
    ``ThreadPoolExecutor``. Results are always returned in input order, hence
    the outcome never depends on the scheduling or on the number of workers.
    In single thread mode the tasks are executed inline, which is the mode
    mandatory for timing measurements.

    :param single_thread: if True, tasks are executed sequentially in the calling thread
    :param max_workers: explicit worker count, if None it is resolved by :func:`resolve_worker_count`
    """

    def __init__(self, single_thread: bool = False, max_workers: Optional[int] = None):
        self.__single_thread: bool = single_thread

        self.__max_workers: int = 1 if single_thread else \
            (max_workers if max_workers is not None else resolve_worker_count())

    def is_single_thread(self) -> bool:
        return self.__single_thread or (1 == self.__max_workers)

    def get_max_workers(self) -> int:
        return self.__max_workers

    def map(self, task: Callable[[InputType], ResultType], inputs: Iterable[InputType]) -> list[ResultType]:
        """
        Executes the task on every input.

        :param task: callable to be executed on each input
        :param inputs: the inputs
        :return: list of results in input order
        """

        items = list(inputs)

        if self.is_single_thread() or (1 >= len(items)):
            return [task(item) for item in items]

        with concurrent.futures.ThreadPoolExecutor(max_workers=self.__max_workers,
                                                   thread_name_prefix=self.__class__.__name__) as executor:
            # Executor.map preserves the input order and re-raises the first error
            return list(executor.map(task, items))
