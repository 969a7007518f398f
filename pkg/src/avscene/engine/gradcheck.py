"""Central finite-difference verification of reverse-mode gradients.

The harness demands float64 parameters: single precision leaves too little
headroom between truncation error (O(h^2)) and rounding error (O(eps/h))
for a meaningful comparison.

Error metric per scalar: ``|analytic - numeric| / max(|analytic|, |numeric|,
1e-3)``. The absolute floor keeps near-zero gradients from turning
finite-difference noise into huge relative errors.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .params import ParamSet
from .tensor import Tensor

REL_FLOOR = 1e-3


def grad_check(f: Callable[[ParamSet], Tensor], params: ParamSet,
               h: float = 1e-4) -> float:
    """Max relative error between reverse-mode and central differences.

    ``f`` must be a deterministic scalar function of the trainable entries
    of ``params`` (fix dropout masks and batch-norm mode before calling).
    """
    for path, t in params.trainable_items():
        if t.dtype != np.float64:
            raise TypeError(f"grad_check needs float64 parameters, {path!r} is {t.dtype}")

    params.zero_grad()
    loss = f(params)
    if loss.size != 1:
        raise ValueError(f"grad_check target must be scalar, got shape {loss.shape}")
    base = loss.item()
    if not np.isfinite(base):
        raise FloatingPointError("non-finite objective at the evaluation point")
    loss.backward()

    worst = 0.0
    for path, tensor in params.trainable_items():
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        flat = tensor.data.reshape(-1)
        aflat = analytic.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            fp = f(params).item()
            flat[i] = keep - h
            fm = f(params).item()
            flat[i] = keep
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise FloatingPointError(f"non-finite objective while perturbing {path!r}")
            numeric = (fp - fm) / (2.0 * h)
            denom = max(abs(aflat[i]), abs(numeric), REL_FLOOR)
            err = abs(aflat[i] - numeric) / denom
            if err > worst:
                worst = err
    return float(worst)
