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
import argparse
import sys
import traceback
from typing import Optional, NoReturn

from lcintent.executors.commons import ExitCodes
from lcintent.executors.pool import pin_native_threads

CommandHelp = {
    "synth": "generate the synthetic corpus",
    "features": "parse, smooth and extract the feature series of a corpus",
    "dataset": "extract, balance and split the sequence samples",
    "train": "train a model and evaluate it on the held-out samples",
    "evaluate": "evaluate a saved model on the held-out samples",
    "crossval": "cross-validate models on the training samples",
    "bench": "time the boosted tree strategies single threaded",
    "sweep": "sweep the number of trees or the window length"
}

ModelChoices = "gbdt-exact, gbdt-hist, svm, lstm"


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """
    Invalid arguments are validation errors, reported by the exit code 1 instead of
    the usual exit of argparse.
    """

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _positive_float(value: str) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number: '{value}'")

    if 0 >= parsed:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")

    return parsed


def create_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)

    common.add_argument("--config", metavar="PATH", help="run configuration, YAML or JSON")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides",
                        help="overrides a configuration value, e.g. dataset.window_frames=90 (repeatable)")
    common.add_argument("--seed", type=int, help="seed of every seeded stage")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--model", metavar="NAME", help=f"model tag, one of {ModelChoices}")
    common.add_argument("--scale", type=_positive_float, help="scale of the reference class composition (synth)")
    common.add_argument("--corpus", metavar="DIR", help="corpus directory (features)")
    common.add_argument("--features", metavar="DIR", help="feature directory (dataset, sweep window)")
    common.add_argument("--dataset", metavar="DIR", help="dataset directory (train, evaluate, crossval, bench, sweep)")
    common.add_argument("--model-file", metavar="PATH", help="saved model (evaluate)")
    common.add_argument("--repeats", type=int, help="number of timed repeats (bench)")
    common.add_argument("--synthetic", action="store_true", help="time on the fixed synthetic matrix (bench)")
    common.add_argument("--single-thread", action="store_true", help="disable every internal parallelism")
    common.add_argument("--reproducible", action="store_true", help="zero timings and timestamps in the results")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = ArgumentParser(prog="lc-intent", description="Lane change intention toolkit")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=ArgumentParser)
    subparsers.required = True

    for command, description in CommandHelp.items():
        subparser = subparsers.add_parser(command, parents=[common], help=description, description=description,
                                          formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        if "sweep" == command:
            subparser.add_argument("kind", choices=["trees", "window"], help="swept quantity")

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    """
    Runs a command and returns its exit code: 0 on success, 1 on validation errors
    (invalid arguments or configuration, unknown model, missing input) and 2 on any
    other error.
    """

    argv = list(sys.argv[1:] if argv is None else argv)

    # Native thread pools are sized on import of numpy
    if ("--single-thread" in argv) or (argv[:1] == ["bench"]):
        pin_native_threads()

    from lcintent.cli.commands import Commands, CommandRun
    from lcintent.cli.config import load_run_config
    from lcintent.core.commons.loggers import create_logger
    from lcintent.core.commons.parameters import ConfigValidationError
    from lcintent.executors.pool import WorkerPool

    logger = create_logger("lc-intent")

    try:
        args = create_parser().parse_args(argv)
        logger.set_log_level(args.log_level)

        config = load_run_config(args.config, args.overrides, {"seed": args.seed, "model": args.model})
        pool = WorkerPool(single_thread=args.single_thread)

        Commands[args.command](CommandRun(args.command, args, config, logger, pool))
    except (UsageError, ConfigValidationError, FileNotFoundError) as e:
        logger.debug(traceback.format_exc())
        logger.error("%s", e)
        print(f"lc-intent: error: {e}", file=sys.stderr)
        return ExitCodes.ValidationError.value
    except Exception as e:
        logger.debug(traceback.format_exc())
        logger.error("%s: %s", type(e).__name__, e)
        print(f"lc-intent: error: {type(e).__name__}: {e}", file=sys.stderr)
        return ExitCodes.RuntimeError.value

    return ExitCodes.NoError.value


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
