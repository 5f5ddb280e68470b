"""Binary F1 on the positive (hateful) class."""

import numpy as np

from ..errors import ContractError


def confusion(predictions, gold):
    """Return (tp, fp, fn, tn) for binary vectors."""
    p = np.asarray(predictions).astype(int).reshape(-1)
    g = np.asarray(gold).astype(int).reshape(-1)
    if p.shape != g.shape:
        raise ContractError(f"binary_f1: {p.size} predictions vs {g.size} gold labels")
    if p.size and (not np.isin(p, (0, 1)).all() or not np.isin(g, (0, 1)).all()):
        raise ContractError("binary_f1: values must be 0 or 1")
    tp = int(np.sum((p == 1) & (g == 1)))
    fp = int(np.sum((p == 1) & (g == 0)))
    fn = int(np.sum((p == 0) & (g == 1)))
    tn = int(np.sum((p == 0) & (g == 0)))
    return tp, fp, fn, tn


def binary_f1(predictions, gold):
    """2PR/(P+R); 0.0 whenever precision or recall is undefined or both are zero."""
    tp, fp, fn, _ = confusion(predictions, gold)
    if tp + fp == 0 or tp + fn == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)
