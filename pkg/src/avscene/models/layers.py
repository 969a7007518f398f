"""Layer modules: parameter owners over the functional primitives.

A :class:`Module` collects parameters by reflecting over its attributes in
definition order, so parameter paths are stable ("block1/conv1/kernel").
Non-trainable state (batch-norm moving statistics) is registered the same
way with ``requires_grad=False``.

GRU convention (fixed so checkpoints are unambiguous): gates are packed
``[update z | reset r | candidate h]`` along the last axis of the kernels;
there are separate input and recurrent biases; the reset gate multiplies
the *projected* recurrent term (``h_cand = tanh(x W_h + b_ih + r * (h U_h
+ b_hh))``); the state update is ``h_t = z * h_prev + (1 - z) * h_cand``.
"""
from __future__ import annotations

from typing import Iterator, Optional

import numpy as np

from ..engine import ops
from ..engine.init import glorot_uniform, ones, orthogonal, zeros
from ..engine.params import ParamSet
from ..engine.tensor import ShapeError, Tensor


class Module:
    """Base for parameter-owning components."""

    def named_params(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, value in vars(self).items():
            if isinstance(value, Tensor):
                yield f"{prefix}{name}", value
            elif isinstance(value, Module):
                yield from value.named_params(f"{prefix}{name}/")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_params(f"{prefix}{name}{i + 1}/")
                    elif isinstance(item, Tensor):
                        yield f"{prefix}{name}{i + 1}", item

    def param_set(self, prefix: str = "") -> ParamSet:
        out = ParamSet()
        for path, tensor in self.named_params(prefix):
            out.add(path, tensor)
        return out

    def set_trainable(self, trainable: bool) -> None:
        """Recursive; layers with non-trainable state override (batch norm
        keeps its moving statistics out of the optimizer)."""
        for value in vars(self).values():
            if isinstance(value, Tensor):
                value.requires_grad = trainable
            elif isinstance(value, Module):
                value.set_trainable(trainable)
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        item.set_trainable(trainable)
                    elif isinstance(item, Tensor):
                        item.requires_grad = trainable

    def freeze(self) -> None:
        self.set_trainable(False)

    def count(self, trainable_only: bool = False) -> int:
        return self.param_set().count(trainable_only=trainable_only)


class Dense(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator,
                 dtype=np.float32):
        self.kernel = glorot_uniform((d_in, d_out), rng, dtype)
        self.bias = zeros((d_out,), dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.dense(x, self.kernel, self.bias)


class Conv2D(Module):
    def __init__(self, k: int, c_in: int, c_out: int, rng: np.random.Generator,
                 padding: str = "same", dtype=np.float32):
        self.kernel = glorot_uniform((k, k, c_in, c_out), rng, dtype)
        self.bias = zeros((c_out,), dtype)
        self.padding = padding

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.kernel, self.bias, self.padding)


class BatchNorm(Module):
    """Channels-last batch normalization, momentum 0.99, epsilon 1e-3.

    Moving statistics use a zero-debiased average: the update weight is
    (1-m)/(1-m^t) with t the persisted update count, so inference-mode
    statistics are unbiased from the very first training step rather than
    decaying away from their initialization over ~1/(1-m) steps (which
    would poison validation for entire epochs at desk-scale step counts).
    """

    def __init__(self, channels: int, dtype=np.float32,
                 momentum: float = 0.99, eps: float = 1e-3):
        self.gamma = ones((channels,), dtype)
        self.beta = zeros((channels,), dtype)
        self.moving_mean = zeros((channels,), dtype, trainable=False)
        self.moving_var = ones((channels,), dtype, trainable=False)
        self.updates = zeros((1,), np.float64, trainable=False)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        weight = None
        if training:
            self.updates.data = self.updates.data + 1.0
            t = float(self.updates.data[0])
            weight = (1.0 - self.momentum) / (1.0 - self.momentum ** t)
        return ops.batch_norm(x, self.gamma, self.beta,
                              self.moving_mean, self.moving_var,
                              training, self.momentum, self.eps,
                              ema_weight=weight)

    def set_trainable(self, trainable: bool) -> None:
        self.gamma.requires_grad = trainable
        self.beta.requires_grad = trainable
        # moving statistics never enter the optimizer


class GRU(Module):
    """Single-direction GRU returning the full hidden sequence."""

    def __init__(self, d_in: int, d_hidden: int, rng: np.random.Generator,
                 dtype=np.float32):
        self.kernel = glorot_uniform((d_in, 3 * d_hidden), rng, dtype)
        self.recurrent_kernel = orthogonal((d_hidden, 3 * d_hidden), rng, dtype)
        self.input_bias = zeros((3 * d_hidden,), dtype)
        self.recurrent_bias = zeros((3 * d_hidden,), dtype)
        self.d_hidden = d_hidden

    def __call__(self, seq: Tensor, reverse: bool = False) -> Tensor:
        """``seq`` is (N, T, D) or (T, D); output matches with D -> d_hidden."""
        batched = seq.ndim == 3
        if seq.ndim not in (2, 3):
            raise ShapeError(f"gru input must be 2-d or 3-d, got {seq.shape}")
        if not batched:
            seq = ops.reshape(seq, (1,) + seq.shape)
        n, t, _ = seq.shape
        h_dim = self.d_hidden

        # all input projections in one matmul
        proj = ops.dense(seq, self.kernel, self.input_bias)  # (N, T, 3H)
        order = range(t - 1, -1, -1) if reverse else range(t)
        h = Tensor(np.zeros((n, h_dim), dtype=seq.dtype))
        steps: list[Optional[Tensor]] = [None] * t
        for i in order:
            px = ops.reshape(ops.narrow(proj, 1, i, 1), (n, 3 * h_dim))
            ph = ops.dense(h, self.recurrent_kernel, self.recurrent_bias)
            z = ops.sigmoid(ops.add(ops.narrow(px, 1, 0, h_dim),
                                    ops.narrow(ph, 1, 0, h_dim)))
            r = ops.sigmoid(ops.add(ops.narrow(px, 1, h_dim, h_dim),
                                    ops.narrow(ph, 1, h_dim, h_dim)))
            cand = ops.tanh(ops.add(ops.narrow(px, 1, 2 * h_dim, h_dim),
                                    ops.mul(r, ops.narrow(ph, 1, 2 * h_dim, h_dim))))
            one_minus_z = ops.sub(Tensor(np.ones((n, h_dim), dtype=seq.dtype)), z)
            h = ops.add(ops.mul(z, h), ops.mul(one_minus_z, cand))
            steps[i] = h
        out = ops.stack(steps, axis=1)  # type: ignore[arg-type]
        return out if batched else ops.reshape(out, (t, h_dim))


class BiGRU(Module):
    """Forward + backward GRU, hidden states concatenated per step."""

    def __init__(self, d_in: int, d_hidden_per_dir: int, rng: np.random.Generator,
                 dtype=np.float32):
        self.forward = GRU(d_in, d_hidden_per_dir, rng, dtype)
        self.backward = GRU(d_in, d_hidden_per_dir, rng, dtype)

    def __call__(self, seq: Tensor) -> Tensor:
        return ops.concat([self.forward(seq), self.backward(seq, reverse=True)],
                          axis=-1)
