"""Weight initialization.

All randomness flows through numpy ``Generator`` objects seeded with the
64-bit PCG64 algorithm; model constructors derive child generators from a
single seed via ``SeedSequence`` so parameter draws are reproducible and
independent of creation interleaving.
"""
from __future__ import annotations

import numpy as np

from .tensor import Tensor


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    seqs = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(s)) for s in seqs]


def glorot_uniform(shape: tuple[int, ...], rng: np.random.Generator,
                   dtype=np.float32) -> Tensor:
    """Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).

    For conv kernels (k, k, Cin, Cout) the fans include the receptive
    field; for dense kernels (Din, Dout) they are the two axes.
    """
    if len(shape) == 4:
        receptive = shape[0] * shape[1]
        fan_in, fan_out = shape[2] * receptive, shape[3] * receptive
    elif len(shape) == 2:
        fan_in, fan_out = shape
    else:
        fan_in = fan_out = int(np.prod(shape))
    limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
    data = rng.uniform(-limit, limit, size=shape).astype(dtype)
    return Tensor(data, requires_grad=True)


def orthogonal(shape: tuple[int, int], rng: np.random.Generator,
               dtype=np.float32) -> Tensor:
    """Orthogonal init for square-ish recurrent kernels via QR with sign fix."""
    rows, cols = shape
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return Tensor(q[:rows, :cols].astype(dtype), requires_grad=True)


def zeros(shape: tuple[int, ...], dtype=np.float32, trainable: bool = True) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=trainable)


def ones(shape: tuple[int, ...], dtype=np.float32, trainable: bool = True) -> Tensor:
    return Tensor(np.ones(shape, dtype=dtype), requires_grad=trainable)
