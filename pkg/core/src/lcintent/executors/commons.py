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
from enum import Enum


class ExitCodes(Enum):

    NoError = 0
    ValidationError = 1
    """
    Invalid configuration, unknown model tag, missing input file or invalid arguments
    """

    RuntimeError = 2
    """
    Any error raised while the command was running
    """


ThreadsEnvVar = "LC_INTENT_THREADS"
"""
Environment variable capping the number of workers of every
:class:`WorkerPool <lcintent.executors.pool.WorkerPool>`
"""

NativeThreadEnvVars = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")
"""
Environment variables read by the native linear algebra libraries at load time
"""
