"""Training objectives on predicted probabilities.

``nll_loss`` is summed over the batch; ``bce_loss`` is averaged over every
example-class term. Probabilities are clamped to ``[1e-7, 1 - 1e-7]`` before
the log.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .errors import ContractError
from .numerics import Tensor

EPS = 1e-7


@dataclass
class LossValue:
    value: Tensor
    n_terms: int

    def __float__(self):
        return self.value.item()


def _binary_terms(p, y):
    p = nx.clip(p, EPS, 1.0 - EPS)
    y = Tensor(y)
    return y * nx.log(p) + (1.0 - y) * nx.log(1.0 - p)


def _check_binary(y, where):
    if not np.isin(y, (0, 1)).all():
        raise ContractError(f"{where}: targets must be 0 or 1")


def nll_loss(pred, targets, normalize=False):
    """Negative log-likelihood.

    Binary form when ``pred`` holds one probability per example (shape (N,)
    or (N, 1)) and ``targets`` are 0/1; categorical form ``-sum log p[y]``
    when ``pred`` is (N, C) with C > 1 and ``targets`` are class indices.
    ``normalize`` divides by N.
    """
    pred = nx.as_tensor(pred)
    y = np.asarray(targets)
    n = pred.shape[0] if pred.ndim else 1
    if y.reshape(-1).shape[0] != n:
        raise ContractError(f"nll_loss: {n} predictions but {y.size} targets")
    if pred.ndim == 2 and pred.shape[1] > 1:
        idx = y.astype(np.int64).reshape(-1)
        if idx.min() < 0 or idx.max() >= pred.shape[1]:
            raise ContractError("nll_loss: class index out of range")
        picked = nx.clip(pred[np.arange(n), idx], EPS, 1.0 - EPS)
        total = -nx.log(picked).sum()
    else:
        _check_binary(y, "nll_loss")
        p = pred.reshape((n,))
        total = -_binary_terms(p, y.reshape(n).astype(p.data.dtype)).sum()
    if normalize:
        total = total * (1.0 / n)
    return LossValue(total, n)


def bce_loss(pred, targets):
    """Mean binary cross-entropy over all example-class terms of a multi-hot target."""
    pred = nx.as_tensor(pred)
    y = np.asarray(targets, dtype=pred.data.dtype)
    if y.shape != pred.shape:
        raise ContractError(f"bce_loss: prediction shape {pred.shape} != target shape {y.shape}")
    _check_binary(y, "bce_loss")
    return LossValue(-_binary_terms(pred, y).mean(), int(y.size))
