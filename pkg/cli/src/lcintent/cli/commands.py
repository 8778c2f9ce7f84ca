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
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import pandas as pd

from lcintent.cli.config import RunConfig
from lcintent.core.commons.loggers import ContextLogger
from lcintent.core.commons.parameters import ConfigValidationError
from lcintent.core.commons.utils import write_json, read_json, sha256_digest
from lcintent.core.specs.classifier import Classifier, create_classifier, load_classifier
from lcintent.core.specs.configs import SceneConfig
from lcintent.core.specs.dtos import LaneChangeClass, Trajectory
from lcintent.datasets.dataset import build_samples, balance, split, kfold, fold_assignment, \
    save_samples, load_samples, write_manifest, label_trajectory
from lcintent.evaluation.metrics import EvalReport, evaluate, report_table, crossval_summary
from lcintent.evaluation.runners import crossval, fit_and_evaluate, benchmark_training, sweep_trees, sweep_window, \
    synthetic_matrix, StrategyTags, DefaultWindowGrid
from lcintent.executors.pool import WorkerPool
from lcintent.synth.generator import generate, reference_config, write_corpus, TrajectoryFileName, ManifestFileName
from lcintent.trajectories.features import Scene, extract_all_features, export_features, load_features, \
    FEATURE_NAMES
from lcintent.trajectories.ingest import parse_trajectories, load_manifest, attach_class_hints
from lcintent.trajectories.preprocess import preprocess, smoothing_report
from lcintent.version import PROJECT_VERSION

ModelTags = ("gbdt-exact", "gbdt-hist", "svm", "lstm")

FeatureFileName = "features.csv"
LabelFileName = "labels.json"
SmoothingReportFileName = "smoothing_report.csv"
DatasetManifestFileName = "dataset_manifest.json"
TrainSamplesStem = "samples_train"
TestSamplesStem = "samples_test"
ModelFileName = "model.json"

DefaultTreeCounts = tuple(range(20, 201, 20))

TimingKeys = frozenset({"created", "training_seconds", "median_seconds", "runs", "seconds", "ratio",
                        "training_time"})
"""
Keys of measured wall-clock values and timestamps, zeroed by ``--reproducible``
"""


def scrub_timings(obj: Any) -> Any:
    """
    Copy of the object with every timing value set to zero, lists of timings are
    kept with their length.
    """

    if isinstance(obj, dict):
        return {key: (_zeroed(value) if key in TimingKeys else scrub_timings(value)) for key, value in obj.items()}

    if isinstance(obj, list):
        return [scrub_timings(item) for item in obj]

    return obj


def _zeroed(value: Any) -> Any:
    if isinstance(value, list):
        return [0.0] * len(value)

    return None if value is None else 0


class CommandRun:
    """
    State of a single command invocation: the parsed arguments, the validated run
    configuration, the output directory and the bookkeeping of written files. Every
    command ends with :meth:`finish`, which writes ``<command>_result.json`` and
    ``<command>_summary.txt``.
    """

    def __init__(self,
                 command: str,
                 args: argparse.Namespace,
                 config: RunConfig,
                 logger: ContextLogger,
                 pool: WorkerPool):
        self.command: str = command
        self.args: argparse.Namespace = args
        self.config: RunConfig = config
        self.logger: ContextLogger = logger.child(command)
        self.pool: WorkerPool = pool

        self.reproducible: bool = bool(getattr(args, "reproducible", False))

        self.out_dir: Path = config.get_path("out", getattr(args, "out", None)) or Path(".")

        self.__outputs: dict[str, str] = dict()

    def output_path(self, file_name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / file_name

    def record(self, name: str, path: Path) -> Path:
        self.__outputs[name] = path.name
        return path

    def write_json(self, name: str, obj: Any, file_name: str) -> Path:
        obj = scrub_timings(obj) if self.reproducible else obj
        return self.record(name, write_json(obj, self.output_path(file_name)))

    def write_table(self, name: str, table: pd.DataFrame, file_name: str, index: bool = False) -> Path:
        if self.reproducible:
            table = table.copy()
            for column in table.columns:
                if column in TimingKeys:
                    table[column] = 0.0

        path = self.output_path(file_name)
        table.to_csv(path, index=index, float_format="%.17g", encoding="utf-8")
        return self.record(name, path)

    def input_dir(self, name: str, flag: str) -> Path:
        """
        Input directory either given by the flag or by ``paths.<name>``.

        :raises ConfigValidationError: if neither is set
        :raises FileNotFoundError: if the directory does not exist
        """

        directory = self.config.get_path(name, getattr(self.args, name, None))
        if directory is None:
            raise ConfigValidationError(f"paths.{name}", f"Missing input directory, set it in the config file "
                                                         f"or via {flag}")

        if not directory.is_dir():
            raise FileNotFoundError(f"Input directory not found: {directory}")

        return directory

    def sample_file(self, directory: Path, stem: str) -> Path:
        """
        Sample table of the configured format, falling back to the other format.
        """

        formats = [self.config.sample_format] + [f for f in ("npz", "csv") if f != self.config.sample_format]
        for suffix in formats:
            candidate = directory / f"{stem}.{suffix}"
            if candidate.exists():
                return candidate

        raise FileNotFoundError(f"Sample file not found: {directory / stem}.{self.config.sample_format}")

    def finish(self, payload: dict[str, Any], summary: list[str]) -> dict[str, Any]:
        result = {
            "command": self.command,
            "version": PROJECT_VERSION,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config": self.config.to_dict(),
            "outputs": dict(sorted(self.__outputs.items())),
            **payload
        }

        if self.reproducible:
            result = scrub_timings(result)

        write_json(result, self.output_path(f"{self.command}_result.json"))

        lines = [f"lc-intent {self.command} ({PROJECT_VERSION})", *summary, "", "outputs:"]
        lines.extend(f"  {name}: {file_name}" for name, file_name in result["outputs"].items())

        with open(self.output_path(f"{self.command}_summary.txt"), "w", encoding="utf-8") as stream:
            stream.write("\n".join(lines) + "\n")

        self.logger.info("Results written to %s", self.out_dir)

        return result


def _seconds(run: CommandRun, value: float) -> str:
    return "n/a" if run.reproducible else f"{value:.2f} s"


def _report_lines(report: EvalReport, run: CommandRun) -> list[str]:
    lines = [f"model {report.model}: accuracy {report.accuracy:.4f} on {report.confusion.total()} samples, "
             f"training {_seconds(run, report.training_seconds)}",
             f"  errors: type1 {report.type1}, type2 {report.type2}, type3 {report.type3}"]

    for cls in LaneChangeClass:
        precision, recall = report.precision[cls], report.recall[cls]
        lines.append(f"  {cls.name}: precision {'n/a' if precision is None else f'{precision:.4f}'}, "
                     f"recall {'n/a' if recall is None else f'{recall:.4f}'}")

    return lines


def _derive_labels(trajectories: list[Trajectory], scene_config: SceneConfig,
                   logger: ContextLogger) -> dict[int, tuple[LaneChangeClass, Optional[int]]]:
    labels = dict()
    for trajectory in trajectories:
        try:
            labels[trajectory.vehicle_id] = label_trajectory(trajectory, scene_config)
        except ValueError as e:
            logger.warning("Vehicle %d skipped: %s", trajectory.vehicle_id, e)

    return labels


def _labels_document(labels: dict[int, tuple[LaneChangeClass, Optional[int]]]) -> dict[str, Any]:
    return {"vehicles": [{"vehicle_id": ego_id, "class": cls.name, "cross_frame": cross_frame}
                         for ego_id, (cls, cross_frame) in sorted(labels.items())]}


def _require_model(run: CommandRun) -> str:
    if run.config.model is None:
        raise ConfigValidationError("model", "Missing model, set it in the config file or via --model")

    run.config.get_model_config(run.config.model)
    return run.config.model


def _create(run: CommandRun, tag: str, pool: Optional[WorkerPool] = None) -> Classifier:
    return create_classifier(tag, run.config.get_model_config(tag), run.logger, pool if pool is not None else run.pool)


def cmd_synth(run: CommandRun) -> dict[str, Any]:
    """
    Generates the synthetic corpus. With ``--scale`` the reference class composition
    is scaled, the remaining synth parameters apply as configured.
    """

    synth_config = run.config.get_synth_config()

    if run.args.scale is not None:
        overrides = {key: value for key, value in synth_config.to_dict().items()
                     if key not in ("n_lk", "n_llc", "n_rlc", "rng_seed")}
        synth_config = reference_config(synth_config.rng_seed, run.args.scale, **overrides)

    corpus = generate(synth_config, run.pool, run.logger)

    trajectory_file, manifest_file = write_corpus(corpus, run.out_dir)
    run.record("trajectories", trajectory_file)
    run.record("manifest", manifest_file)

    counts = corpus.get_counts()
    return run.finish({"seed": synth_config.rng_seed, "counts": counts, "trajectories": len(corpus.trajectories)},
                      [f"seed {synth_config.rng_seed}, {len(corpus.trajectories)} trajectories",
                       "egos: " + ", ".join(f"{name} {count}" for name, count in counts.items())])


def cmd_features(run: CommandRun) -> dict[str, Any]:
    """
    Parses the corpus, smooths it and extracts the feature series of every labeled
    ego. Labels are taken over from the corpus manifest if present, otherwise they
    are derived from the lane ids.
    """

    corpus_dir = run.input_dir("corpus", "--corpus")
    manifest_file = corpus_dir / ManifestFileName

    scene_values = dict(read_json(manifest_file).get("scene") or {}) if manifest_file.exists() else dict()
    scene_values.update(run.config.scene or {})
    scene_config = SceneConfig.from_dict(scene_values)

    raw = parse_trajectories(corpus_dir / TrajectoryFileName, scene_config, run.logger)

    if manifest_file.exists():
        labels = load_manifest(manifest_file)
        raw = attach_class_hints(raw, labels)
    else:
        labels = _derive_labels(raw, scene_config, run.logger)

    smoothed, dropped = preprocess(raw, run.config.get_preprocess_config(), scene_config.fps, run.logger)
    scene = Scene.build(smoothed, scene_config, run.config.get_kinematics_config(), run.logger)

    kept = {trajectory.vehicle_id for trajectory in smoothed}
    ego_ids = [ego_id for ego_id in sorted(labels) if (ego_id in kept) and (scene.get_kinematics(ego_id) is not None)]

    features = extract_all_features(scene, ego_ids, run.pool, run.logger)
    ego_labels = {ego_id: labels[ego_id] for ego_id in features}

    run.record("features", export_features(features, run.output_path(FeatureFileName)))
    run.record("labels", write_json(_labels_document(ego_labels), run.output_path(LabelFileName)))
    run.write_table("smoothing_report", smoothing_report(raw, smoothed), SmoothingReportFileName)

    counts = {cls.name: sum(1 for cls_, _ in ego_labels.values() if cls_ == cls) for cls in LaneChangeClass}
    return run.finish({"scene": scene_config.to_dict(), "egos": len(features), "counts": counts,
                       "frames": int(sum(len(series.frames) for series in features.values())),
                       "dropped": [{"vehicle_id": vehicle_id, "reason": reason} for vehicle_id, reason in dropped]},
                      [f"{len(features)} egos with features, {len(dropped)} trajectories dropped",
                       "egos: " + ", ".join(f"{name} {count}" for name, count in counts.items())])


def _load_feature_dir(run: CommandRun):
    features_dir = run.input_dir("features", "--features")
    return load_features(features_dir / FeatureFileName), load_manifest(features_dir / LabelFileName)


def cmd_dataset(run: CommandRun) -> dict[str, Any]:
    """
    Extracts the windows, balances, splits and partitions the training part into the
    cross-validation folds, whose assignment checksum goes to the manifest.
    """

    run.config.require_seed()
    config = run.config.get_dataset_config()

    features, labels = _load_feature_dir(run)

    extracted = build_samples(features, labels, config, run.pool, run.logger)
    balanced = balance(extracted, run.config.get_balance_target(), config.rng_seed)
    train_set, test_set = split(balanced, config)
    folds = kfold(train_set, config.folds, config.rng_seed)

    suffix = run.config.sample_format
    run.record("train_samples", save_samples(train_set, run.output_path(f"{TrainSamplesStem}.{suffix}")))
    run.record("test_samples", save_samples(test_set, run.output_path(f"{TestSamplesStem}.{suffix}")))

    manifest_path = write_manifest(run.output_path(DatasetManifestFileName), config, train_set, folds, extra={
        "extracted_counts": extracted.class_counts(),
        "test_samples": len(test_set),
        "test_counts": test_set.class_counts(),
        "test_checksum": sha256_digest(test_set.labels, test_set.ego_ids, test_set.end_frames)
    })
    run.record("manifest", manifest_path)

    manifest = read_json(manifest_path)
    return run.finish({"seed": config.rng_seed, "extracted": extracted.class_counts(),
                       "train": train_set.class_counts(), "test": test_set.class_counts(),
                       "fold_checksum": manifest["fold_checksum"]},
                      [f"seed {config.rng_seed}, windows of {config.window_frames} frames",
                       f"extracted {len(extracted)}, balanced {len(balanced)}, "
                       f"train {len(train_set)}, test {len(test_set)}",
                       f"folds {config.folds}, checksum {manifest['fold_checksum']}"])


def _write_report(run: CommandRun, report: EvalReport, prefix: str = "") -> None:
    run.write_json(f"{prefix}report", report.to_dict(), f"{prefix}report.json")
    run.write_table(f"{prefix}report_table", report_table([report]), f"{prefix}report.csv")
    run.write_table(f"{prefix}confusion", report.confusion.to_frame(), f"{prefix}confusion.csv", index=True)


def cmd_train(run: CommandRun) -> dict[str, Any]:
    """
    Fits one model on the training samples and evaluates it on the held-out ones.
    """

    tag = _require_model(run)
    run.config.require_seed()
    classifier = _create(run, tag)

    dataset_dir = run.input_dir("dataset", "--dataset")
    train_set = load_samples(run.sample_file(dataset_dir, TrainSamplesStem))
    test_set = load_samples(run.sample_file(dataset_dir, TestSamplesStem))

    classifier, report = fit_and_evaluate(lambda: classifier, train_set, test_set)

    run.record("model", classifier.save(run.output_path(ModelFileName)))
    _write_report(run, report)

    if hasattr(classifier, "indicator_importance"):
        importance = classifier.indicator_importance(train_set.get_window_frames())
        run.write_table("importance", pd.DataFrame({"indicator": list(FEATURE_NAMES), "gain": importance}),
                        "importance.csv")

    return run.finish({"model": tag, "report": report.to_dict()}, _report_lines(report, run))


def cmd_evaluate(run: CommandRun) -> dict[str, Any]:
    """
    Scores a saved model on the held-out samples of a dataset directory.
    """

    model_file = run.config.get_path("model_file", run.args.model_file)
    if model_file is None:
        raise ConfigValidationError("paths.model_file", "Missing model file, set it in the config file "
                                                        "or via --model-file")

    classifier = load_classifier(model_file, run.logger)

    dataset_dir = run.input_dir("dataset", "--dataset")
    test_set = load_samples(run.sample_file(dataset_dir, TestSamplesStem))

    report = evaluate(classifier, test_set)
    _write_report(run, report, "evaluation_")

    return run.finish({"model": classifier.tag, "model_file": model_file.name, "report": report.to_dict()},
                      _report_lines(report, run))


def cmd_crossval(run: CommandRun) -> dict[str, Any]:
    """
    Cross-validates the selected model, or every model, on the folds of the
    training samples. The folds are the ones recorded by the dataset manifest.
    """

    tags = [_require_model(run)] if run.config.model is not None else list(ModelTags)
    run.config.require_seed()
    config = run.config.get_dataset_config()

    # Fails early on invalid model configurations
    for tag in tags:
        _create(run, tag)

    dataset_dir = run.input_dir("dataset", "--dataset")
    train_set = load_samples(run.sample_file(dataset_dir, TrainSamplesStem))
    folds = kfold(train_set, config.folds, config.rng_seed)

    single = WorkerPool(single_thread=True)
    results = [crossval(lambda tag=tag: _create(run, tag, single), train_set, folds, config.rng_seed,
                        run.pool, run.logger)
               for tag in tags]

    run.write_table("summary", crossval_summary(results), "crossval_summary.csv")
    run.write_json("folds", {"models": [result.to_dict() for result in results]}, "crossval.json")

    return run.finish({"folds": len(folds),
                       "fold_checksum": sha256_digest(fold_assignment(len(train_set), folds)),
                       "models": {result.model: {"mean_accuracy": result.mean_accuracy,
                                                 "std_accuracy": result.std_accuracy} for result in results}},
                      [f"{result.model}: accuracy {result.mean_accuracy:.4f} +- {result.std_accuracy:.4f} "
                       f"over {len(folds)} folds" for result in results])


def _bench_synthetic(run: CommandRun, repeats: int, pool: WorkerPool) -> dict[str, dict[str, Any]]:
    from lcintent.plugins.gbdt.ensemble import GbdtConfig, train

    n = int(run.config.get_bench_option("n", 50000))
    d = int(run.config.get_bench_option("d", 100))
    seed = run.config.seed if run.config.seed is not None else 0

    features, labels = synthetic_matrix(n, d, len(LaneChangeClass), seed)
    cut = int(0.8 * n)

    base = run.config.get_model_config("gbdt-hist")
    base.setdefault("num_trees_per_class", int(run.config.get_bench_option("trees", 120)))
    base.setdefault("max_depth", int(run.config.get_bench_option("depth", 6)))

    results = dict()
    for strategy, tag in StrategyTags.items():
        config = GbdtConfig.from_dict({**base, "strategy": strategy})
        run.logger.info("Timing %s strategy on %d x %d, %d repeats", strategy, cut, d, repeats)

        benchmark = benchmark_training(lambda: train(features[:cut], labels[:cut], config, len(LaneChangeClass),
                                                     run.logger, pool), repeats)
        predictions = np.argmax(benchmark.results[-1].predict_proba(features[cut:]), axis=1)

        results[tag] = {**benchmark.to_dict(), "accuracy": float(np.mean(predictions == labels[cut:])),
                        "rows": cut, "features": d}

    return results


def _bench_dataset(run: CommandRun, repeats: int, pool: WorkerPool) -> dict[str, dict[str, Any]]:
    dataset_dir = run.input_dir("dataset", "--dataset")
    train_set = load_samples(run.sample_file(dataset_dir, TrainSamplesStem))
    test_set = load_samples(run.sample_file(dataset_dir, TestSamplesStem))

    results = dict()
    for tag in StrategyTags.values():
        run.logger.info("Timing %s on %d samples, %d repeats", tag, len(train_set), repeats)

        benchmark = benchmark_training(lambda: _create(run, tag, pool).fit(train_set), repeats)
        report = evaluate(benchmark.results[-1], test_set, benchmark.median_seconds)

        results[tag] = {**benchmark.to_dict(), "accuracy": report.accuracy, "rows": len(train_set),
                        "features": int(np.prod(train_set.windows.shape[1:]))}

    return results


def cmd_bench(run: CommandRun) -> dict[str, Any]:
    """
    Median single threaded training time of both boosted tree strategies, either on
    the fixed synthetic matrix or on the samples of a dataset directory.
    """

    repeats = run.args.repeats if run.args.repeats is not None else int(run.config.get_bench_option("repeats", 3))
    if 1 > repeats:
        raise ConfigValidationError("bench.repeats", "At least 1 repeat required")

    synthetic = run.args.synthetic or bool(run.config.get_bench_option("synthetic", False))
    pool = WorkerPool(single_thread=True)

    results = _bench_synthetic(run, repeats, pool) if synthetic else _bench_dataset(run, repeats, pool)

    exact, histogram = results[StrategyTags["exact"]], results[StrategyTags["histogram"]]
    ratio = exact["median_seconds"] / histogram["median_seconds"] if 0 < histogram["median_seconds"] else None
    gap = abs(exact["accuracy"] - histogram["accuracy"])

    run.write_table("table", pd.DataFrame(
        [(tag, result["median_seconds"], result["accuracy"]) for tag, result in results.items()],
        columns=["model", "median_seconds", "accuracy"]), "bench.csv")

    ratio_text = "n/a" if (ratio is None) or run.reproducible else f"{ratio:.2f}"
    return run.finish({"source": "synthetic" if synthetic else "dataset", "repeats": repeats,
                       "strategies": results, "ratio": ratio, "accuracy_gap": gap},
                      [f"{tag}: median {_seconds(run, result['median_seconds'])}, accuracy {result['accuracy']:.4f}"
                       for tag, result in results.items()] +
                      [f"exact / histogram training time ratio: {ratio_text}",
                       f"accuracy gap: {100.0 * gap:.2f} points"])


def cmd_sweep(run: CommandRun) -> dict[str, Any]:
    """
    Either varies the number of trees of both boosted tree strategies on a fixed
    split, or the window length of every model family.
    """

    if "trees" == run.args.kind:
        tree_counts = [int(count) for count in run.config.get_sweep_option("trees", DefaultTreeCounts)]
        strategies = list(run.config.get_sweep_option("strategies", list(StrategyTags)))

        dataset_dir = run.input_dir("dataset", "--dataset")
        train_set = load_samples(run.sample_file(dataset_dir, TrainSamplesStem))
        test_set = load_samples(run.sample_file(dataset_dir, TestSamplesStem))

        table = sweep_trees(train_set, test_set, tree_counts, strategies, run.config.get_model_config("gbdt-hist"),
                            run.logger)
    else:
        windows = [int(window) for window in run.config.get_sweep_option("windows", DefaultWindowGrid)]
        tags = list(run.config.get_sweep_option("models", ModelTags))

        models = {tag: run.config.get_model_config(tag) for tag in tags}
        for tag in tags:
            _create(run, tag)

        features, labels = _load_feature_dir(run)
        table = sweep_window(features, labels, run.config.get_dataset_config(), windows, models,
                             run.config.get_balance_target(), run.pool, run.logger)

    run.write_table("table", table, f"sweep_{run.args.kind}.csv")

    rows = scrub_timings(table.to_dict(orient="records")) if run.reproducible else table.to_dict(orient="records")
    return run.finish({"kind": run.args.kind, "rows": rows},
                      [f"sweep over {run.args.kind}, {len(table)} runs"] +
                      [", ".join(f"{key} {value:.4f}" if isinstance(value, float) else f"{key} {value}"
                                 for key, value in row.items()) for row in rows])


Commands: dict[str, Callable[[CommandRun], dict[str, Any]]] = {
    "synth": cmd_synth,
    "features": cmd_features,
    "dataset": cmd_dataset,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "crossval": cmd_crossval,
    "bench": cmd_bench,
    "sweep": cmd_sweep
}
