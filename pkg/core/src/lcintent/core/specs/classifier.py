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
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional, Any, Type, TypeVar

import numpy as np

from lcintent.core.commons.loggers import ContextLogger, create_logger
from lcintent.core.commons.parameters import ConfigValidationError
from lcintent.core.commons.utils import load_class_by_name, read_json, write_json
from lcintent.core.specs.configs import Config
from lcintent.datasets.dataset import SampleSet
from lcintent.executors.pool import WorkerPool

ClassifierType = TypeVar("ClassifierType", bound="Classifier")

ModelRegistry: dict[str, str] = {
    "gbdt-exact": "lcintent.plugins.gbdt.classifier.GbdtExactClassifier",
    "gbdt-hist": "lcintent.plugins.gbdt.classifier.GbdtHistogramClassifier",
    "svm": "lcintent.plugins.svm.classifier.SvmClassifier",
    "lstm": "lcintent.plugins.lstm.classifier.LstmClassifier"
}
"""
Model tags mapped to the implementing classes. The classes are loaded only
when requested, so a model family needs to be installed only if it is used.
"""


class Classifier(ABC):
    """
    This class is the base of every model family. A classifier is configured by
    its config type, trained by :meth:`fit` on a :class:`SampleSet` and serialized
    into a self-describing dict, which contains the model tag, the configuration
    and the learned state.

    :param config: configuration of the model, defaults are used, if None
    :param logger: logger of the calling context
    :param pool: worker pool for internal parallelism, single threaded if None
    """

    tag: str = ""
    """
    Tag of the model family as used in the registry
    """

    config_type: Type[Config] = Config

    def __init__(self,
                 config: Optional[Config] = None,
                 logger: Optional[ContextLogger] = None,
                 pool: Optional[WorkerPool] = None):
        self._config: Config = config if config is not None else self.config_type()
        self._logger: ContextLogger = create_logger(self.tag, logger)
        self._pool: WorkerPool = pool if pool is not None else WorkerPool(single_thread=True)

        if not isinstance(self._config, self.config_type):
            raise TypeError(f"Invalid config type for {self.tag}: {type(self._config)}")

    def get_config(self) -> Config:
        return self._config

    def get_logger(self) -> ContextLogger:
        return self._logger

    @abstractmethod
    def fit(self: ClassifierType, samples: SampleSet) -> ClassifierType:
        pass

    @abstractmethod
    def predict_scores(self, samples: SampleSet) -> np.ndarray:
        """
        :return: class scores of shape (N, K), higher is more likely
        """
        pass

    @abstractmethod
    def _state_to_dict(self) -> dict:
        pass

    @abstractmethod
    def _state_from_dict(self, state: dict) -> None:
        pass

    def is_fitted(self) -> bool:
        return True

    def predict(self, samples: SampleSet) -> np.ndarray:
        # argmax returns the first maximum, so ties resolve to the lowest class index
        return np.argmax(self.predict_scores(samples), axis=1)

    def to_dict(self) -> dict:
        return {
            "model": self.tag,
            "config": self._config.to_dict(),
            "state": self._state_to_dict()
        }

    @classmethod
    def from_dict(cls: Type[ClassifierType], source: dict, logger: Optional[ContextLogger] = None) -> ClassifierType:
        if cls.tag != source.get("model"):
            raise ValueError(f"Model tag mismatch, expected '{cls.tag}' got '{source.get('model')}'")

        classifier = cls(cls.config_type.from_dict(source.get("config")), logger)
        classifier._state_from_dict(source["state"])

        return classifier

    def save(self, path: str | Path) -> Path:
        return write_json(self.to_dict(), path)


def resolve_classifier_class(tag: str) -> Type[Classifier]:
    if tag not in ModelRegistry:
        raise ConfigValidationError("model", f"unknown model '{tag}'")

    loaded = load_class_by_name(ModelRegistry[tag])
    if not issubclass(loaded, Classifier):
        raise TypeError(f"Registered class of '{tag}' is not a Classifier: {loaded}")

    return loaded


def create_classifier(tag: str,
                      config: Optional[dict[str, Any]] = None,
                      logger: Optional[ContextLogger] = None,
                      pool: Optional[WorkerPool] = None) -> Classifier:
    """
    Creates a classifier by its tag.

    :param tag: one of the keys of :data:`ModelRegistry`
    :param config: configuration values of the model
    :raises ConfigValidationError: on unknown tag or invalid configuration
    """

    classifier_class = resolve_classifier_class(tag)
    return classifier_class(classifier_class.config_type.from_dict(config), logger, pool)


def load_classifier(path: str | Path, logger: Optional[ContextLogger] = None) -> Classifier:
    source = read_json(path)

    if "model" not in source:
        raise ValueError(f"Not a model file: {path}")

    return resolve_classifier_class(source["model"]).from_dict(source, logger)
