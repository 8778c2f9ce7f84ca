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
from typing import Optional, Any, Iterator

import numpy as np

from lcintent.datasets.standardization import Standardizer

GateNames = ("i", "f", "o", "c")
"""
Input, forget and output gate, followed by the cell candidate
"""

ParameterNames = tuple([f"W_{gate}" for gate in GateNames] +
                       [f"U_{gate}" for gate in GateNames] +
                       [f"b_{gate}" for gate in GateNames] +
                       ["W_y", "b_y"])


def sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign, so exp never overflows
    positive = x >= 0
    z = np.exp(-np.abs(x))
    return np.where(positive, 1.0 / (1.0 + z), z / (1.0 + z))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - np.max(logits, axis=-1, keepdims=True))
    return shifted / np.sum(shifted, axis=-1, keepdims=True)


class LstmParams:
    """
    Parameters of a single layer LSTM with softmax readout. Input weights ``W_*``
    have shape (hidden, input), recurrent weights ``U_*`` (hidden, hidden), biases
    ``b_*`` (hidden,), the readout ``W_y`` (classes, hidden) and ``b_y`` (classes,).
    The same container holds gradients and optimizer moments.

    :param arrays: the arrays by name, see :data:`ParameterNames`
    :param standardizer: standardization of the input features, if any
    """

    def __init__(self, arrays: dict[str, np.ndarray], standardizer: Optional[Standardizer] = None):
        missing = [name for name in ParameterNames if name not in arrays]
        if 0 < len(missing):
            raise ValueError(f"Missing parameters: {missing}")

        self.arrays: dict[str, np.ndarray] = {name: np.asarray(arrays[name], dtype=np.float64)
                                              for name in ParameterNames}
        self.standardizer: Optional[Standardizer] = standardizer

        hidden, inputs = self.arrays["W_i"].shape
        classes = self.arrays["W_y"].shape[0]
        expected = {"W": (hidden, inputs), "U": (hidden, hidden), "b": (hidden,)}

        for name, array in self.arrays.items():
            shape = expected.get(name[0]) if name not in ("W_y", "b_y") else \
                ((classes, hidden) if "W_y" == name else (classes,))
            if array.shape != shape:
                raise ValueError(f"Invalid shape of {name}: {array.shape}, expected {shape}")

        if (standardizer is not None) and (standardizer.get_num_features() != inputs):
            raise ValueError(f"Standardization has {standardizer.get_num_features()} features, "
                             f"network input is {inputs}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(ParameterNames)

    def get_hidden_size(self) -> int:
        return self.arrays["W_i"].shape[0]

    def get_input_size(self) -> int:
        return self.arrays["W_i"].shape[1]

    def get_num_classes(self) -> int:
        return self.arrays["W_y"].shape[0]

    @staticmethod
    def zeros(input_size: int, hidden_size: int, num_classes: int) -> 'LstmParams':
        shapes = {"W": (hidden_size, input_size), "U": (hidden_size, hidden_size), "b": (hidden_size,)}
        arrays = {name: np.zeros(shapes[name[0]]) for name in ParameterNames[:-2]}
        arrays["W_y"] = np.zeros((num_classes, hidden_size))
        arrays["b_y"] = np.zeros(num_classes)
        return LstmParams(arrays)

    @staticmethod
    def initialize(input_size: int, hidden_size: int, num_classes: int, rng: np.random.Generator) -> 'LstmParams':
        """
        Uniform initialization in [-1/sqrt(hidden), 1/sqrt(hidden)] in the order of
        :data:`ParameterNames`, followed by setting the forget gate bias to 1.
        """

        bound = 1.0 / np.sqrt(hidden_size)
        template = LstmParams.zeros(input_size, hidden_size, num_classes)
        params = template.map(lambda array: rng.uniform(-bound, bound, size=array.shape))
        params.arrays["b_f"][:] = 1.0

        return params

    def map(self, function, *others: 'LstmParams') -> 'LstmParams':
        """
        Applies the function to the arrays of the same name of this and the other containers.
        """

        return LstmParams({name: function(self.arrays[name], *[other.arrays[name] for other in others])
                           for name in ParameterNames}, self.standardizer)

    def copy(self) -> 'LstmParams':
        return self.map(np.copy)

    def global_norm(self) -> float:
        return float(np.sqrt(sum(np.sum(np.square(array)) for array in self.arrays.values())))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(array)) for array in self.arrays.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "shapes": {name: list(array.shape) for name, array in self.arrays.items()},
            "arrays": {name: array.ravel().tolist() for name, array in self.arrays.items()},
            "standardization": None if self.standardizer is None else self.standardizer.to_dict()
        }

    @staticmethod
    def from_dict(source: dict[str, Any]) -> 'LstmParams':
        standardization = source.get("standardization")
        return LstmParams({name: np.asarray(source["arrays"][name], dtype=np.float64).reshape(source["shapes"][name])
                           for name in ParameterNames},
                          None if standardization is None else Standardizer.from_dict(standardization))

    def __eq__(self, other):
        return isinstance(other, LstmParams) and \
            all(np.array_equal(self.arrays[name], other.arrays[name]) for name in ParameterNames) and \
            (self.standardizer == other.standardizer)


class GateRecord:
    """
    State of one recurrence step, kept for backpropagation.
    """

    def __init__(self, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray, i: np.ndarray, f: np.ndarray,
                 o: np.ndarray, c_tilde: np.ndarray, c: np.ndarray, h: np.ndarray):
        self.x: np.ndarray = x
        self.h_prev: np.ndarray = h_prev
        self.c_prev: np.ndarray = c_prev
        self.i: np.ndarray = i
        self.f: np.ndarray = f
        self.o: np.ndarray = o
        self.c_tilde: np.ndarray = c_tilde
        self.c: np.ndarray = c
        self.h: np.ndarray = h


class ForwardCache:

    def __init__(self, records: list[GateRecord], probabilities: np.ndarray):
        self.records: list[GateRecord] = records
        self.probabilities: np.ndarray = probabilities


def _gates(params: LstmParams, projected: dict[str, np.ndarray], h_prev: np.ndarray, c_prev: np.ndarray,
           x: np.ndarray) -> GateRecord:
    i = sigmoid(projected["i"] + h_prev @ params["U_i"].T + params["b_i"])
    f = sigmoid(projected["f"] + h_prev @ params["U_f"].T + params["b_f"])
    o = sigmoid(projected["o"] + h_prev @ params["U_o"].T + params["b_o"])
    c_tilde = np.tanh(projected["c"] + h_prev @ params["U_c"].T + params["b_c"])

    c = f * c_prev + i * c_tilde
    h = o * np.tanh(c)

    return GateRecord(x, h_prev, c_prev, i, f, o, c_tilde, c, h)


def step(params: LstmParams, x_t: np.ndarray, h_prev: np.ndarray,
         c_prev: np.ndarray) -> tuple[np.ndarray, np.ndarray, GateRecord]:
    """
    One recurrence step. Vectors may be single rows of shape (d,) or batches of shape (B, d).

    :return: (h_t, c_t, gate record)
    :raises ValueError: on shape mismatch
    """

    x_t, h_prev, c_prev = (np.asarray(a, dtype=np.float64) for a in (x_t, h_prev, c_prev))

    if (x_t.shape[-1] != params.get_input_size()) or (h_prev.shape[-1] != params.get_hidden_size()) or \
            (h_prev.shape != c_prev.shape):
        raise ValueError(f"Shape mismatch: input {x_t.shape}, hidden {h_prev.shape}, cell {c_prev.shape} for "
                         f"network ({params.get_input_size()}, {params.get_hidden_size()})")

    record = _gates(params, {gate: x_t @ params[f"W_{gate}"].T for gate in GateNames}, h_prev, c_prev, x_t)
    return record.h, record.c, record


def _check_windows(params: LstmParams, window: np.ndarray) -> np.ndarray:
    window = np.asarray(window, dtype=np.float64)
    if 2 == window.ndim:
        window = window[None, :, :]

    if (3 != window.ndim) or (window.shape[2] != params.get_input_size()) or (0 == window.shape[1]):
        raise ValueError(f"Expected window(s) of shape ([B,] T, {params.get_input_size()}), got {window.shape}")

    return window


def forward(params: LstmParams, window: np.ndarray, keep_records: bool = True) -> tuple[np.ndarray, ForwardCache]:
    """
    Runs the recurrence over the window from zero hidden and cell states and applies
    the softmax readout to the final hidden state. The window is expected to be
    standardized already.

    :param window: shape (T, d) or a batch (B, T, d)
    :param keep_records: if False, the step records are not kept, as for prediction
    :return: (probabilities, cache), probabilities have shape (K,) for a single
             window and (B, K) for a batch
    """

    single = 2 == np.ndim(window)
    windows = _check_windows(params, window)
    batch, frames, _ = windows.shape

    # Input projections of all steps at once
    projected = {gate: windows @ params[f"W_{gate}"].T for gate in GateNames}

    h = np.zeros((batch, params.get_hidden_size()))
    c = np.zeros((batch, params.get_hidden_size()))
    records = []

    for t in range(frames):
        record = _gates(params, {gate: projected[gate][:, t, :] for gate in GateNames}, h, c, windows[:, t, :])
        h, c = record.h, record.c
        if keep_records:
            records.append(record)

    probabilities = softmax(h @ params["W_y"].T + params["b_y"])
    cache = ForwardCache(records, probabilities)

    return (probabilities[0] if single else probabilities), cache


def cross_entropy(probabilities: np.ndarray, labels: np.ndarray) -> float:
    """
    Mean negative log-likelihood of the true classes.
    """

    probabilities = np.atleast_2d(probabilities)
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    picked = probabilities[np.arange(labels.size), labels]

    return float(-np.mean(np.log(np.maximum(picked, np.finfo(np.float64).tiny))))


def backward(params: LstmParams, window: np.ndarray, true_class, cache: ForwardCache) -> LstmParams:
    """
    Backpropagation through time of the mean cross-entropy of the batch.

    :param window: the window(s) the cache was computed on
    :param true_class: class index, or one index per window of a batch
    :param cache: result of :func:`forward` with records kept
    :return: gradients by parameter name
    """

    windows = _check_windows(params, window)
    labels = np.atleast_1d(np.asarray(true_class, dtype=np.int64))
    batch = windows.shape[0]

    if (labels.size != batch) or (len(cache.records) != windows.shape[1]):
        raise ValueError("Cache, windows and labels are inconsistent")

    gradients = {name: np.zeros_like(params[name]) for name in ParameterNames}

    d_logits = cache.probabilities.copy()
    d_logits[np.arange(batch), labels] -= 1.0
    d_logits /= batch

    final = cache.records[-1].h
    gradients["W_y"] = d_logits.T @ final
    gradients["b_y"] = np.sum(d_logits, axis=0)

    d_h = d_logits @ params["W_y"]
    d_c = np.zeros_like(d_h)

    for record in reversed(cache.records):
        tanh_c = np.tanh(record.c)
        d_c = d_c + d_h * record.o * (1.0 - np.square(tanh_c))

        d_z = {
            "i": d_c * record.c_tilde * record.i * (1.0 - record.i),
            "f": d_c * record.c_prev * record.f * (1.0 - record.f),
            "o": d_h * tanh_c * record.o * (1.0 - record.o),
            "c": d_c * record.i * (1.0 - np.square(record.c_tilde))
        }

        d_h = np.zeros_like(d_h)
        for gate, d_gate in d_z.items():
            gradients[f"W_{gate}"] += d_gate.T @ record.x
            gradients[f"U_{gate}"] += d_gate.T @ record.h_prev
            gradients[f"b_{gate}"] += np.sum(d_gate, axis=0)
            d_h += d_gate @ params[f"U_{gate}"]

        d_c = d_c * record.f

    return LstmParams(gradients)
