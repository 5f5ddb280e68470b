"""Adam with bias correction, operating in place on named parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError


@dataclass
class AdamState:
    """Optimizer state.

    ``step_count`` counts calls to :func:`adam_step`. Bias correction uses a
    per-parameter update count (``t``) so that parameters which only receive
    gradients on some steps (task heads under alternating schedules) are
    corrected by how often *they* were updated.
    """

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: dict = field(default_factory=dict)


def adam_step(state, params, grads):
    """Apply one Adam update to every tensor in ``params``.

    ``params`` maps names to tensors (updated in place); ``grads`` maps the
    same names to gradient arrays. Parameters absent from ``params`` keep
    their moments untouched.
    """
    missing = [k for k in params if k not in grads or grads[k] is None]
    if missing:
        raise ContractError(f"adam_step: no gradient for {missing[:5]}")
    state.step_count += 1
    b1, b2 = state.beta1, state.beta2
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=p.data.dtype)
        if g.shape != p.data.shape:
            raise ContractError(f"adam_step: gradient shape {g.shape} != parameter shape {p.data.shape} for {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
            state.t[name] = 0
        state.t[name] += 1
        t = state.t[name]
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        p.data -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.data.dtype, copy=False)
    return state
