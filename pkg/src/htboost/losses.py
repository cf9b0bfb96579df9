"""Loss functions and their first/second derivatives.

The boosting loop works on raw (pre-link) scores. For each supported loss
we provide the per-row gradient ``g = dl/d(raw)`` and Hessian
``h = d2l/d(raw)^2``, the mean loss value, and the constant base score used
before the first tree.

Sign convention: ``g`` is the derivative of the loss with respect to the
prediction, so for squared error ``g = raw - y`` and the optimal leaf
weight is ``-G/H``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Keeps Hessian sums strictly positive under sigmoid saturation.
HESSIAN_FLOOR = 1e-16

_CLAMP = 1e-12


class LossKind(Enum):
    SQUARED_ERROR = "squared_error"
    LOGISTIC = "logistic"

    @property
    def link(self) -> str:
        return "sigmoid" if self is LossKind.LOGISTIC else "identity"


@dataclass
class GradHess:
    """Paired per-row gradient and Hessian vectors for one boosting step."""

    g: np.ndarray
    h: np.ndarray

    def __post_init__(self) -> None:
        self.g = np.asarray(self.g, dtype=np.float64)
        self.h = np.asarray(self.h, dtype=np.float64)
        if self.g.shape != self.h.shape:
            raise ValueError("gradient and Hessian must have the same length")

    @property
    def n(self) -> int:
        return self.g.shape[0]


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _check_pair(kind: LossKind, y: np.ndarray, raw_score: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    raw = np.asarray(raw_score, dtype=np.float64)
    if y.shape != raw.shape:
        raise ValueError(f"target and score lengths differ: {y.shape} vs {raw.shape}")
    if kind is LossKind.LOGISTIC and not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("logistic loss requires targets in {0, 1}")
    return y, raw


def grad_hess(kind: LossKind, y, raw_score) -> GradHess:
    """Per-row gradient and Hessian of the loss at the current raw scores."""
    y, raw = _check_pair(kind, y, raw_score)
    if kind is LossKind.SQUARED_ERROR:
        return GradHess(raw - y, np.ones_like(raw))
    p = sigmoid(raw)
    return GradHess(p - y, np.maximum(p * (1.0 - p), HESSIAN_FLOOR))


def loss_value(kind: LossKind, y, raw_score) -> float:
    """Mean per-row loss at the given raw scores."""
    y, raw = _check_pair(kind, y, raw_score)
    if y.size == 0:
        raise ValueError("empty target")
    if kind is LossKind.SQUARED_ERROR:
        return float(np.mean(0.5 * (y - raw) ** 2))
    # log(1 + exp(raw)) - y*raw, evaluated stably for large |raw|
    softplus = np.maximum(raw, 0.0) + np.log1p(np.exp(-np.abs(raw)))
    return float(np.mean(softplus - y * raw))


def base_score(kind: LossKind, y) -> float:
    """Constant raw prediction used before the first tree."""
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise ValueError("empty target")
    if kind is LossKind.SQUARED_ERROR:
        return float(np.mean(y))
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("logistic loss requires targets in {0, 1}")
    p = float(np.clip(np.mean(y), _CLAMP, 1.0 - _CLAMP))
    return float(np.log(p / (1.0 - p)))
