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
from typing import Optional

import numpy as np

from lcintent.core.commons.loggers import ContextLogger
from lcintent.core.specs.classifier import Classifier
from lcintent.core.specs.dtos import LaneChangeClass
from lcintent.datasets.dataset import SampleSet
from lcintent.executors.pool import WorkerPool
from lcintent.plugins.gbdt.ensemble import GbdtConfig, GbdtEnsemble, train, indicator_importance, \
    ExactStrategy, HistogramStrategy


class GbdtClassifier(Classifier):
    """
    Boosted trees on flattened windows. The split strategy is fixed by the
    subclass, a configured strategy is overridden accordingly.
    """

    config_type = GbdtConfig

    Strategy: str = HistogramStrategy

    def __init__(self,
                 config: Optional[GbdtConfig] = None,
                 logger: Optional[ContextLogger] = None,
                 pool: Optional[WorkerPool] = None):
        config = config if config is not None else GbdtConfig()
        super().__init__(config.replace(strategy=self.Strategy), logger, pool)

        self.__model: Optional[GbdtEnsemble] = None

    def get_model(self) -> GbdtEnsemble:
        if self.__model is None:
            raise AttributeError(f"Model '{self.tag}' is not trained")

        return self.__model

    def is_fitted(self) -> bool:
        return self.__model is not None

    def fit(self, samples: SampleSet) -> 'GbdtClassifier':
        self.__model = train(samples.flatten(self._config.frame_step), samples.labels, self._config,
                             len(LaneChangeClass), self._logger, self._pool)
        return self

    def predict_scores(self, samples: SampleSet) -> np.ndarray:
        return self.get_model().predict_proba(samples.flatten(self._config.frame_step))

    def indicator_importance(self, window_frames: int) -> np.ndarray:
        return indicator_importance(self.get_model(), window_frames, self._config.frame_step)

    def _state_to_dict(self) -> dict:
        return self.get_model().to_dict()

    def _state_from_dict(self, state: dict) -> None:
        self.__model = GbdtEnsemble.from_dict(state)


class GbdtExactClassifier(GbdtClassifier):

    tag = "gbdt-exact"

    Strategy = ExactStrategy


class GbdtHistogramClassifier(GbdtClassifier):

    tag = "gbdt-hist"

    Strategy = HistogramStrategy
