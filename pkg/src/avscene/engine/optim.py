"""Adam optimizer with per-parameter freezing.

Hyperparameter defaults follow the toolkit convention this project
standardizes on: alpha=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-7.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ParamSet


class MissingGradientError(RuntimeError):
    pass


@dataclass
class AdamState:
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: ParamSet, grads: dict[str, np.ndarray],
              state: AdamState) -> tuple[ParamSet, AdamState]:
    """One bias-corrected Adam update over the trainable entries.

    ``grads`` must hold an array per trainable path; frozen parameters are
    left bit-identical. Updates happen in place; the pair is returned for
    call-site symmetry.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for path, tensor in params.trainable_items():
        g = grads.get(path)
        if g is None:
            raise MissingGradientError(f"no gradient for trainable parameter {path!r}")
        g = g.astype(tensor.dtype, copy=False)
        m = state.m.get(path)
        if m is None:
            m = state.m[path] = np.zeros_like(tensor.data)
            state.v[path] = np.zeros_like(tensor.data)
        v = state.v[path]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        mhat = m / bc1
        vhat = v / bc2
        tensor.data = tensor.data - state.alpha * mhat / (np.sqrt(vhat) + state.epsilon)
    return params, state


class Adam:
    """Loop-friendly wrapper: reads gradients off the tensors themselves."""

    def __init__(self, params: ParamSet, alpha: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-7):
        self.params = params
        self.state = AdamState(alpha=alpha, beta1=beta1, beta2=beta2, epsilon=epsilon)

    @property
    def alpha(self) -> float:
        return self.state.alpha

    @alpha.setter
    def alpha(self, value: float) -> None:
        self.state.alpha = value

    def step(self) -> None:
        grads = {}
        for path, tensor in self.params.trainable_items():
            if tensor.grad is None:
                raise MissingGradientError(f"no gradient for trainable parameter {path!r}")
            grads[path] = tensor.grad
        adam_step(self.params, grads, self.state)

    def zero_grad(self) -> None:
        self.params.zero_grad()
