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
from pathlib import Path
from typing import Optional, Any, Type

import yaml

from lcintent.core.commons.parameters import OptionalParameter, ConfigValidationError
from lcintent.core.commons.utils import TemplateResolver
from lcintent.core.specs.configs import Config, SceneConfig, PreprocessConfig, KinematicsConfig, DatasetConfig, \
    SynthConfig
from lcintent.core.specs.dtos import LaneChangeClass

ModelSections = {"gbdt-exact": "gbdt", "gbdt-hist": "gbdt", "svm": "svm", "lstm": "lstm"}
"""
Model tags mapped to the section of ``models`` holding their configuration
"""


class RunConfig(Config):
    """
    Configuration of a command line run. Every stage has its own section, which is
    validated by the config type of the stage. Example:

    .. code-block:: yaml

       seed: 7
       paths:
         corpus: corpus/
         out: $(env:LC_INTENT_OUT)/run1
       dataset:
         window_frames: 150
       models:
         gbdt:
           num_trees_per_class: 120

    The seed, if given, is the default ``rng_seed`` of every seeded section.
    """

    seed = OptionalParameter(int, default=None, description="Seed of every seeded stage")
    model = OptionalParameter(str, default=None, description="Model tag")
    sample_format = OptionalParameter(str, default="npz", validator=lambda v: v in ("npz", "csv"))

    paths = OptionalParameter(dict, default=None)
    scene = OptionalParameter(dict, default=None)
    preprocess = OptionalParameter(dict, default=None)
    kinematics = OptionalParameter(dict, default=None)
    dataset = OptionalParameter(dict, default=None)
    synth = OptionalParameter(dict, default=None)
    models = OptionalParameter(dict, default=None)
    bench = OptionalParameter(dict, default=None)
    sweep = OptionalParameter(dict, default=None)

    def _on_validate(self) -> None:
        # Constructing the sections validates them
        self.get_scene_config()
        self.get_preprocess_config()
        self.get_kinematics_config()
        self.get_dataset_config()
        self.get_synth_config()

        for section in (self.models or {}):
            if section not in ModelSections.values():
                raise ConfigValidationError(f"models.{section}", "Unknown model section")

    def _section(self, config_type: Type[Config], values: Optional[dict]) -> Any:
        values = dict(values or {})
        if (self.seed is not None) and ("rng_seed" in config_type().get_parameters()) and ("rng_seed" not in values):
            values["rng_seed"] = self.seed

        return config_type.from_dict(values)

    def get_scene_config(self) -> SceneConfig:
        return self._section(SceneConfig, self.scene)

    def get_preprocess_config(self) -> PreprocessConfig:
        return self._section(PreprocessConfig, self.preprocess)

    def get_kinematics_config(self) -> KinematicsConfig:
        return self._section(KinematicsConfig, self.kinematics)

    def get_dataset_config(self) -> DatasetConfig:
        return self._section(DatasetConfig, self.dataset)

    def get_synth_config(self) -> SynthConfig:
        return self._section(SynthConfig, self.synth)

    def get_model_config(self, tag: str) -> dict[str, Any]:
        """
        Configuration values of the model, the seed applied. Validation happens
        when the model is created.
        """

        if tag not in ModelSections:
            raise ConfigValidationError("model", f"unknown model '{tag}'")

        values = dict((self.models or {}).get(ModelSections[tag]) or {})
        if (self.seed is not None) and ("rng_seed" not in values):
            values["rng_seed"] = self.seed

        return values

    def get_balance_target(self) -> Optional[dict[LaneChangeClass, int]]:
        """
        The explicit lane keeping sample count of the dataset section as balancing target.
        """

        target = self.get_dataset_config().balance_target
        return None if target is None else {LaneChangeClass.LK: target}

    def get_path(self, name: str, override: Optional[str] = None) -> Optional[Path]:
        value = override if override is not None else (self.paths or {}).get(name)
        return None if value is None else Path(value)

    def get_bench_option(self, name: str, default: Any) -> Any:
        return (self.bench or {}).get(name, default)

    def get_sweep_option(self, name: str, default: Any) -> Any:
        return (self.sweep or {}).get(name, default)

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigValidationError("seed", "Missing required seed, set it in the config file or via --seed")

        return self.seed


def parse_override(assignment: str) -> tuple[list[str], Any]:
    """
    Parses ``section.key=value``, the value is read as YAML scalar or collection.
    """

    if "=" not in assignment:
        raise ConfigValidationError(assignment, "Override must have the form KEY=VALUE")

    key, raw = assignment.split("=", 1)
    path = [segment for segment in key.strip().split(".") if segment]
    if 0 == len(path):
        raise ConfigValidationError(assignment, "Empty override key")

    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        raise ConfigValidationError(key, f"Unparsable value '{raw}'")

    return path, value


def apply_overrides(source: dict[str, Any], assignments: list[str]) -> dict[str, Any]:
    result = dict(source)

    for assignment in assignments:
        path, value = parse_override(assignment)

        target = result
        for segment in path[:-1]:
            nested = target.get(segment)
            if nested is None:
                nested = dict()
            elif not isinstance(nested, dict):
                raise ConfigValidationError(".".join(path), f"'{segment}' is not a section")
            else:
                nested = dict(nested)

            target[segment] = nested
            target = nested

        target[path[-1]] = value

    return result


def load_run_config(path: Optional[str | Path] = None,
                    overrides: Optional[list[str]] = None,
                    flags: Optional[dict[str, Any]] = None) -> RunConfig:
    """
    Loads the run configuration from YAML or JSON, resolves environment templates and
    applies the overrides, then the flags, which take precedence over both.

    :param flags: flag values by top level key, None values are ignored
    :raises FileNotFoundError: if the file does not exist
    :raises ConfigValidationError: on invalid content
    """

    source: dict[str, Any] = dict()

    if path is not None:
        config_file = Path(path)
        if not config_file.exists():
            raise FileNotFoundError(f"Config file not found: {config_file}")

        with open(config_file, encoding="utf-8") as stream:
            try:
                loaded = yaml.safe_load(stream)
            except yaml.YAMLError as e:
                raise ConfigValidationError(str(config_file), f"Unparsable config file: {e}")

        if loaded is not None:
            if not isinstance(loaded, dict):
                raise ConfigValidationError(str(config_file), "Config file must hold a mapping")
            source = TemplateResolver().resolve(loaded)

    source = apply_overrides(source, overrides or [])

    source.update({key: value for key, value in (flags or {}).items() if value is not None})

    return RunConfig.from_dict(source)
