"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from .tensor import backward, default_dtype, no_grad


def _named(params):
    if isinstance(params, dict):
        return dict(params)
    return {str(i): p for i, p in enumerate(params)}


def grad_errors(f, params, step=1e-5, floor=1e-4):
    """Per-parameter relative error between autodiff and central differences.

    The error for one parameter tensor is
    ``||analytic - numeric|| / max(floor, ||numeric||)``. The floor keeps
    gradients that are exactly zero (a key bias under softmax, say) from
    dividing rounding noise by rounding noise; below it the error is absolute.
    """
    if default_dtype() != np.float64:
        raise ContractError("grad_check requires 64-bit mode (wrap in numerics.float64())")
    params = _named(params)
    for p in params.values():
        if p.data.dtype != np.float64:
            raise ContractError("grad_check parameters must be 64-bit tensors")
        p.grad = None
    backward(f())
    errors = {}
    for name, p in params.items():
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        numeric = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            with no_grad():
                flat[i] = orig + step
                up = f().item()
                flat[i] = orig - step
                down = f().item()
            flat[i] = orig
            numeric.flat[i] = (up - down) / (2.0 * step)
        errors[name] = float(np.linalg.norm(analytic - numeric) / max(floor, np.linalg.norm(numeric)))
        p.grad = None
    return errors


def grad_check(f, params, step=1e-5, floor=1e-4):
    """Maximum relative gradient error over ``params`` (see :func:`grad_errors`)."""
    errs = grad_errors(f, params, step, floor)
    return max(errs.values()) if errs else 0.0
