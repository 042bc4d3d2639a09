"""Adam with bias correction, operating on named parameter dicts."""

from __future__ import annotations

import numpy as np


class AdamState:
    def __init__(self, params: dict):
        self.m = {k: np.zeros_like(p) for k, p in params.items()}
        self.v = {k: np.zeros_like(p) for k, p in params.items()}
        self.t = 0


def adam_step(params: dict, grads: dict, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8
              ) -> dict:
    """One in-place-free update; returns the new parameter dict."""
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    out = {}
    for k, p in params.items():
        g = grads[k]
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g
        out[k] = p - lr * (state.m[k] / bc1) / (np.sqrt(state.v[k] / bc2) + eps)
    return out
