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
import numpy as np

HessianFloor = 1e-16


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exponentials = np.exp(shifted)
    return exponentials / np.sum(exponentials, axis=-1, keepdims=True)


def softmax_grad_hess(logits: np.ndarray, true_class: int | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    First and second order derivatives of the multiclass log-loss with respect to
    the logits, using the diagonal of the hessian. Works on a single K-vector with a
    class index or on a (N, K) matrix with a label vector.

    :return: (gradients, hessians) shaped like the logits
    """

    logits = np.asarray(logits, dtype=np.float64)
    probabilities = softmax(logits)

    one_hot = np.zeros_like(probabilities)
    if 1 == logits.ndim:
        one_hot[int(true_class)] = 1.0
    else:
        one_hot[np.arange(logits.shape[0]), np.asarray(true_class, dtype=np.int64)] = 1.0

    gradients = probabilities - one_hot
    hessians = np.maximum(probabilities * (1.0 - probabilities), HessianFloor)

    return gradients, hessians


def log_loss(logits: np.ndarray, labels: np.ndarray) -> float:
    shifted = logits - np.max(logits, axis=1, keepdims=True)
    log_normalizer = np.log(np.sum(np.exp(shifted), axis=1))
    return float(np.mean(log_normalizer - shifted[np.arange(logits.shape[0]), labels]))
