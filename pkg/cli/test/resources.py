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
import contextlib
import io

from lcintent.cli.__main__ import main

SmallCorpus = ["--set", "synth.n_lk=3", "--set", "synth.n_llc=2", "--set", "synth.n_rlc=2"]

ShortWindows = ["--set", "dataset.window_frames=30", "--set", "dataset.label_horizon=30"]


def run_cli(*argv: str) -> tuple[int, str]:
    """
    Runs the command line and returns the exit code and the captured error output.
    """

    errors = io.StringIO()
    with contextlib.redirect_stderr(errors), contextlib.redirect_stdout(io.StringIO()):
        code = main(list(argv))

    return code, errors.getvalue()
