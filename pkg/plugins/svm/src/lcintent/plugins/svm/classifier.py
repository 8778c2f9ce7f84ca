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
from lcintent.plugins.svm.model import SvmConfig, SvmModel, train


class SvmClassifier(Classifier):

    tag = "svm"

    config_type = SvmConfig

    def __init__(self,
                 config: Optional[SvmConfig] = None,
                 logger: Optional[ContextLogger] = None,
                 pool: Optional[WorkerPool] = None):
        super().__init__(config if config is not None else SvmConfig(), logger, pool)

        self.__model: Optional[SvmModel] = None

    def get_model(self) -> SvmModel:
        if self.__model is None:
            raise AttributeError(f"Model '{self.tag}' is not trained")

        return self.__model

    def is_fitted(self) -> bool:
        return self.__model is not None

    def fit(self, samples: SampleSet) -> 'SvmClassifier':
        self.__model = train(samples.flatten(self._config.frame_step), samples.labels, self._config,
                             len(LaneChangeClass), self._logger, self._pool)
        return self

    def predict_scores(self, samples: SampleSet) -> np.ndarray:
        return self.get_model().scores(samples.flatten(self._config.frame_step))

    def _state_to_dict(self) -> dict:
        return self.get_model().to_dict()

    def _state_from_dict(self, state: dict) -> None:
        self.__model = SvmModel.from_dict(state)
