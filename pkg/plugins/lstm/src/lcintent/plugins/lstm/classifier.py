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
from lcintent.datasets.dataset import SampleSet, frame_indices
from lcintent.executors.pool import WorkerPool
from lcintent.plugins.lstm.network import LstmParams
from lcintent.plugins.lstm.training import LstmConfig, train, predict_proba


class LstmClassifier(Classifier):
    """
    Recurrent model on the window sequences, sub-sampled by ``sequence_step``.
    """

    tag = "lstm"

    config_type = LstmConfig

    def __init__(self,
                 config: Optional[LstmConfig] = None,
                 logger: Optional[ContextLogger] = None,
                 pool: Optional[WorkerPool] = None):
        super().__init__(config if config is not None else LstmConfig(), logger, pool)

        self.__params: Optional[LstmParams] = None

    def get_params(self) -> LstmParams:
        if self.__params is None:
            raise AttributeError(f"Model '{self.tag}' is not trained")

        return self.__params

    def is_fitted(self) -> bool:
        return self.__params is not None

    def _sequences(self, samples: SampleSet) -> np.ndarray:
        return samples.windows[:, frame_indices(samples.get_window_frames(), self._config.sequence_step), :]

    def fit(self, samples: SampleSet) -> 'LstmClassifier':
        self.__params = train(self._sequences(samples), samples.labels, self._config,
                              len(LaneChangeClass), self._logger, self._pool)
        return self

    def predict_scores(self, samples: SampleSet) -> np.ndarray:
        return predict_proba(self.get_params(), self._sequences(samples))

    def _state_to_dict(self) -> dict:
        return self.get_params().to_dict()

    def _state_from_dict(self, state: dict) -> None:
        self.__params = LstmParams.from_dict(state)
