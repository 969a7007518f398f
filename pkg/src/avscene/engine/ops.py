"""Differentiable primitives.

Every function takes and returns :class:`Tensor` and registers a closure
that scatters the output gradient back to whichever inputs need one.
Feature maps are channels-last: ``(N, H, W, C)`` with the unbatched
``(H, W, C)`` form accepted everywhere a batch is optional. Pooling
windows are axis-selective pairs over the two spatial axes, so a window
of ``(1, 2)`` halves only the second (time) axis.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .tensor import ShapeError, Tensor


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce ``grad`` back to ``shape`` after numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data

    def backward(g: np.ndarray) -> None:
        if a.needs_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.needs_grad:
            b.accumulate_grad(_unbroadcast(g, b.shape))

    return Tensor.from_op(data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    data = a.data - b.data

    def backward(g: np.ndarray) -> None:
        if a.needs_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.needs_grad:
            b.accumulate_grad(_unbroadcast(-g, b.shape))

    return Tensor.from_op(data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data

    def backward(g: np.ndarray) -> None:
        if a.needs_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.shape))
        if b.needs_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.shape))

    return Tensor.from_op(data, (a, b), backward)


def maximum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise max; ties route the gradient to the first input."""
    data = np.maximum(a.data, b.data)

    def backward(g: np.ndarray) -> None:
        a_wins = a.data >= b.data
        if a.needs_grad:
            a.accumulate_grad(_unbroadcast(g * a_wins, a.shape))
        if b.needs_grad:
            b.accumulate_grad(_unbroadcast(g * ~a_wins, b.shape))

    return Tensor.from_op(data, (a, b), backward)


def scale(x: Tensor, c: float) -> Tensor:
    cval = np.asarray(c, dtype=x.dtype)
    data = x.data * cval

    def backward(g: np.ndarray) -> None:
        if x.needs_grad:
            x.accumulate_grad(g * cval)

    return Tensor.from_op(data, (x,), backward)


def add_n(terms: Sequence[Tensor]) -> Tensor:
    if not terms:
        raise ShapeError("add_n needs at least one term")
    out = terms[0]
    for t in terms[1:]:
        out = add(out, t)
    return out


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0)

    def backward(g: np.ndarray) -> None:
        if x.needs_grad:
            x.accumulate_grad(g * (x.data > 0))

    return Tensor.from_op(data, (x,), backward)


def elu(x: Tensor) -> Tensor:
    neg = x.data < 0
    data = np.where(neg, np.expm1(x.data), x.data)

    def backward(g: np.ndarray) -> None:
        if x.needs_grad:
            x.accumulate_grad(g * np.where(neg, data + 1.0, 1.0))

    return Tensor.from_op(data, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    data = expit(x.data)

    def backward(g: np.ndarray) -> None:
        if x.needs_grad:
            x.accumulate_grad(g * data * (1.0 - data))

    return Tensor.from_op(data, (x,), backward)


def tanh(x: Tensor) -> Tensor:
    data = np.tanh(x.data)

    def backward(g: np.ndarray) -> None:
        if x.needs_grad:
            x.accumulate_grad(g * (1.0 - data * data))

    return Tensor.from_op(data, (x,), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray) -> None:
        if x.needs_grad:
            dot = (g * data).sum(axis=axis, keepdims=True)
            x.accumulate_grad((g - dot) * data)

    return Tensor.from_op(data, (x,), backward)


# ---------------------------------------------------------------------------
# linear maps
# ---------------------------------------------------------------------------

def matmul(x: Tensor, w: Tensor) -> Tensor:
    """``(..., m, k) @ (k, n)``; leading axes of ``x`` are flattened."""
    if w.ndim != 2:
        raise ShapeError(f"matmul weight must be 2-d, got {w.shape}")
    if x.shape[-1] != w.shape[0]:
        raise ShapeError(f"matmul inner axes differ: x axis -1 = {x.shape[-1]}, "
                         f"w axis 0 = {w.shape[0]}")
    lead = x.shape[:-1]
    x2 = x.data.reshape(-1, x.shape[-1])
    data = (x2 @ w.data).reshape(*lead, w.shape[1])

    def backward(g: np.ndarray) -> None:
        g2 = g.reshape(-1, w.shape[1])
        if x.needs_grad:
            x.accumulate_grad((g2 @ w.data.T).reshape(x.shape))
        if w.needs_grad:
            w.accumulate_grad(x2.T @ g2)

    return Tensor.from_op(data, (x, w), backward)


def dense(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    out = matmul(x, w)
    if b is not None:
        if b.shape != (w.shape[1],):
            raise ShapeError(f"dense bias shape {b.shape} != ({w.shape[1]},)")
        out = add(out, b)
    return out


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

def _conv_pad(kh: int, kw: int, padding: str) -> tuple[int, int]:
    if padding == "same":
        return (kh - 1) // 2, (kw - 1) // 2
    if padding == "valid":
        return 0, 0
    raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")


def conv2d(x: Tensor, kernel: Tensor, bias: Optional[Tensor] = None,
           padding: str = "same") -> Tensor:
    """Cross-correlation with an odd square kernel ``(k, k, Cin, Cout)``.

    ``x`` is ``(N, H, W, Cin)`` or ``(H, W, Cin)``; stride is always 1 and
    ``same`` padding preserves the spatial extent.
    """
    if kernel.ndim != 4:
        raise ShapeError(f"conv2d kernel must be 4-d (k, k, Cin, Cout), got {kernel.shape}")
    kh, kw, cin, cout = kernel.shape
    if kh != kw or kh % 2 == 0:
        raise ShapeError(f"conv2d kernel must be odd and square, got {kh}x{kw}")
    batched = x.ndim == 4
    if x.ndim not in (3, 4):
        raise ShapeError(f"conv2d input must be 3-d or 4-d, got {x.shape}")
    if x.shape[-1] != cin:
        raise ShapeError(f"conv2d input channels (axis -1 = {x.shape[-1]}) != "
                         f"kernel Cin (axis 2 = {cin})")
    if bias is not None and bias.shape != (cout,):
        raise ShapeError(f"conv2d bias shape {bias.shape} != ({cout},)")

    xd = x.data if batched else x.data[None]
    n, h, w_in, _ = xd.shape
    ph, pw = _conv_pad(kh, kw, padding)
    if padding == "valid" and (h < kh or w_in < kw):
        raise ShapeError(f"conv2d valid padding needs input >= kernel, "
                         f"got {h}x{w_in} vs {kh}x{kw}")
    if ph or pw:
        xp = np.zeros((n, h + 2 * ph, w_in + 2 * pw, cin), dtype=xd.dtype)
        xp[:, ph:ph + h, pw:pw + w_in, :] = xd
    else:
        xp = xd
    oh, ow = xp.shape[1] - kh + 1, xp.shape[2] - kw + 1

    # one GEMM per kernel position beats a materialized im2col here: the
    # slice copies are plain strided memcpy and the GEMM shapes stay fat
    if kh == 1:
        out = xp.reshape(-1, cin) @ kernel.data[0, 0]
    else:
        out = None
        for i in range(kh):
            for j in range(kw):
                s = np.ascontiguousarray(xp[:, i:i + oh, j:j + ow, :]).reshape(-1, cin)
                piece = s @ kernel.data[i, j]
                out = piece if out is None else out + piece
    if bias is not None:
        out += bias.data
    data = out.reshape(n, oh, ow, cout)
    if not batched:
        data = data[0]

    def backward(g: np.ndarray) -> None:
        g2 = g.reshape(n * oh * ow, cout)
        scratch = np.empty((n, oh, ow, cin), dtype=xp.dtype)
        flat = scratch.reshape(-1, cin)
        if kernel.needs_grad:
            gk = np.empty_like(kernel.data)
            for i in range(kh):
                for j in range(kw):
                    np.copyto(scratch, xp[:, i:i + oh, j:j + ow, :])
                    gk[i, j] = flat.T @ g2
            kernel.accumulate_grad(gk)
        if bias is not None and bias.needs_grad:
            bias.accumulate_grad(g2.sum(axis=0))
        if x.needs_grad:
            gxp = np.zeros_like(xp)
            piece = flat  # reuse the scratch as the matmul destination
            for i in range(kh):
                for j in range(kw):
                    np.matmul(g2, kernel.data[i, j].T, out=piece)
                    gxp[:, i:i + oh, j:j + ow, :] += scratch
            gx = gxp[:, ph:ph + h, pw:pw + w_in, :] if (ph or pw) else gxp
            x.accumulate_grad(np.ascontiguousarray(gx) if batched
                              else np.ascontiguousarray(gx[0]))

    parents = (x, kernel) if bias is None else (x, kernel, bias)
    return Tensor.from_op(data, parents, backward)


# ---------------------------------------------------------------------------
# pooling
# ---------------------------------------------------------------------------

def _pool_prepare(x: Tensor, window: tuple[int, int]):
    wf, wt = window
    if wf < 1 or wt < 1:
        raise ShapeError(f"pool window must be positive, got {window}")
    batched = x.ndim == 4
    if x.ndim not in (3, 4):
        raise ShapeError(f"pool input must be 3-d or 4-d, got {x.shape}")
    xd = x.data if batched else x.data[None]
    n, h, w, c = xd.shape
    oh, ow = h // wf, w // wt
    if oh == 0 or ow == 0:
        raise ShapeError(f"pool window {window} larger than input {h}x{w}")
    cropped = xd[:, :oh * wf, :ow * wt, :]
    blocks = cropped.reshape(n, oh, wf, ow, wt, c)
    return batched, xd.shape, blocks, (n, oh, ow, c)


def max_pool(x: Tensor, window: tuple[int, int]) -> Tensor:
    """Max over non-overlapping windows; trailing remainder rows/frames drop."""
    batched, xshape, blocks, (n, oh, ow, c) = _pool_prepare(x, window)
    wf, wt = window
    data = blocks.max(axis=(2, 4))

    def backward(g: np.ndarray) -> None:
        if not x.needs_grad:
            return
        gb = g if batched else g[None]
        winners = blocks == data[:, :, None, :, None, :]
        counts = winners.sum(axis=(2, 4), keepdims=True).astype(g.dtype)
        spread = winners * (gb[:, :, None, :, None, :] / counts)
        gx = np.zeros(xshape, dtype=g.dtype)
        gx[:, :oh * wf, :ow * wt, :] = spread.reshape(n, oh * wf, ow * wt, c)
        x.accumulate_grad(gx if batched else gx[0])

    return Tensor.from_op(data if batched else data[0], (x,), backward)


def avg_pool(x: Tensor, window: tuple[int, int]) -> Tensor:
    batched, xshape, blocks, (n, oh, ow, c) = _pool_prepare(x, window)
    wf, wt = window
    data = blocks.mean(axis=(2, 4))

    def backward(g: np.ndarray) -> None:
        if not x.needs_grad:
            return
        gb = (g if batched else g[None]) / (wf * wt)
        gx = np.zeros(xshape, dtype=g.dtype)
        spread = np.broadcast_to(gb[:, :, None, :, None, :], (n, oh, wf, ow, wt, c))
        gx[:, :oh * wf, :ow * wt, :] = spread.reshape(n, oh * wf, ow * wt, c)
        x.accumulate_grad(gx if batched else gx[0])

    return Tensor.from_op(data if batched else data[0], (x,), backward)


def mean_axes(x: Tensor, axes: tuple[int, ...], keepdims: bool = False) -> Tensor:
    axes = tuple(a % x.ndim for a in axes)
    data = x.data.mean(axis=axes, keepdims=keepdims)
    count = int(np.prod([x.shape[a] for a in axes]))

    def backward(g: np.ndarray) -> None:
        if not x.needs_grad:
            return
        ge = g if keepdims else np.expand_dims(g, axes)
        x.accumulate_grad(np.broadcast_to(ge / count, x.shape).astype(g.dtype, copy=False))

    return Tensor.from_op(data, (x,), backward)


def sum_axes(x: Tensor, axes: tuple[int, ...], keepdims: bool = False) -> Tensor:
    axes = tuple(a % x.ndim for a in axes)
    data = x.data.sum(axis=axes, keepdims=keepdims)

    def backward(g: np.ndarray) -> None:
        if not x.needs_grad:
            return
        ge = g if keepdims else np.expand_dims(g, axes)
        x.accumulate_grad(np.broadcast_to(ge, x.shape).astype(g.dtype, copy=False))

    return Tensor.from_op(data, (x,), backward)


def global_avg_pool(x: Tensor, axes: tuple[int, ...]) -> Tensor:
    """Mean over the given axes (spatial and/or temporal), axes removed."""
    return mean_axes(x, axes, keepdims=False)


def adaptive_avg_pool_to(x: Tensor, n_bins: int, axis: int = 1) -> Tensor:
    """Average the ``axis`` of ``x`` into ``n_bins`` contiguous bins.

    Bin ``b`` covers indices ``[floor(b*T/n), floor((b+1)*T/n))``; requires
    ``T >= n_bins`` so every bin is non-empty.
    """
    axis = axis % x.ndim
    t = x.shape[axis]
    if t < n_bins:
        raise ShapeError(f"adaptive pool needs axis length >= bins: {t} < {n_bins}")
    bounds = [(b * t) // n_bins for b in range(n_bins + 1)]
    moved = np.moveaxis(x.data, axis, 0)
    pieces = [moved[bounds[b]:bounds[b + 1]].mean(axis=0) for b in range(n_bins)]
    data = np.moveaxis(np.stack(pieces, axis=0), 0, axis)

    def backward(g: np.ndarray) -> None:
        if not x.needs_grad:
            return
        gm = np.moveaxis(g, axis, 0)
        gx = np.empty_like(moved)
        for b in range(n_bins):
            size = bounds[b + 1] - bounds[b]
            gx[bounds[b]:bounds[b + 1]] = gm[b] / size
        x.accumulate_grad(np.moveaxis(gx, 0, axis))

    return Tensor.from_op(data, (x,), backward)


# ---------------------------------------------------------------------------
# shape plumbing
# ---------------------------------------------------------------------------

def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    data = x.data.reshape(shape)

    def backward(g: np.ndarray) -> None:
        if x.needs_grad:
            x.accumulate_grad(g.reshape(x.shape))

    return Tensor.from_op(data, (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise ShapeError("concat of an empty list")
    axis = axis % tensors[0].ndim
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g: np.ndarray) -> None:
        sl: list[slice] = [slice(None)] * g.ndim
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            if t.needs_grad:
                sl[axis] = slice(int(start), int(stop))
                t.accumulate_grad(g[tuple(sl)])

    return Tensor.from_op(data, tuple(tensors), backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("stack of an empty list")
    data = np.stack([t.data for t in tensors], axis=axis)

    def backward(g: np.ndarray) -> None:
        for i, t in enumerate(tensors):
            if t.needs_grad:
                t.accumulate_grad(np.take(g, i, axis=axis))

    return Tensor.from_op(data, tuple(tensors), backward)


def narrow(x: Tensor, axis: int, start: int, length: int) -> Tensor:
    axis = axis % x.ndim
    if start < 0 or start + length > x.shape[axis]:
        raise ShapeError(f"narrow [{start}:{start + length}] outside axis {axis} "
                         f"of length {x.shape[axis]}")
    idx: list[slice] = [slice(None)] * x.ndim
    idx[axis] = slice(start, start + length)
    data = x.data[tuple(idx)]

    def backward(g: np.ndarray) -> None:
        if not x.needs_grad:
            return
        gx = np.zeros(x.shape, dtype=g.dtype)
        gx[tuple(idx)] = g
        x.accumulate_grad(gx)

    return Tensor.from_op(data, (x,), backward)


# ---------------------------------------------------------------------------
# regularization and normalization
# ---------------------------------------------------------------------------

def dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator] = None,
            training: bool = True) -> Tensor:
    """Inverted dropout: survivors scale by 1/(1-rate); inference is identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    draw_dtype = x.dtype if x.dtype in (np.float32, np.float64) else np.float64
    keep = rng.random(x.shape, dtype=draw_dtype) >= rate
    mask = keep.astype(x.dtype) / np.asarray(1.0 - rate, dtype=x.dtype)
    data = x.data * mask

    def backward(g: np.ndarray) -> None:
        if x.needs_grad:
            x.accumulate_grad(g * mask)

    return Tensor.from_op(data, (x,), backward)


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor,
               moving_mean: Tensor, moving_var: Tensor,
               training: bool, momentum: float = 0.99, eps: float = 1e-3,
               ema_weight: Optional[float] = None) -> Tensor:
    """Per-channel (last axis) batch normalization.

    Training normalizes with biased batch statistics and updates the moving
    buffers in place; inference is the deterministic affine map through the
    buffers. ``ema_weight`` overrides the buffer update weight (the layer
    passes the zero-debiased weight (1-m)/(1-m^t) so the moving statistics
    are unbiased from the first step instead of decaying away from their
    initialization over ~1/(1-m) steps).
    """
    c = x.shape[-1]
    for name, t in (("gamma", gamma), ("beta", beta),
                    ("moving_mean", moving_mean), ("moving_var", moving_var)):
        if t.shape != (c,):
            raise ShapeError(f"batch_norm {name} shape {t.shape} != ({c},)")
    axes = tuple(range(x.ndim - 1))
    eps = np.asarray(eps, dtype=x.dtype)

    if training:
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        w = (1.0 - momentum) if ema_weight is None else ema_weight
        w = np.asarray(w, dtype=moving_mean.dtype)
        moving_mean.data = (1 - w) * moving_mean.data + w * mu.astype(moving_mean.dtype)
        moving_var.data = (1 - w) * moving_var.data + w * var.astype(moving_var.dtype)
        istd = (1.0 / np.sqrt(var + eps)).astype(x.dtype)
        scale = gamma.data * istd
        data = x.data * scale + (beta.data - mu * scale)
        count = int(np.prod([x.shape[a] for a in axes])) or 1

        def backward(g: np.ndarray) -> None:
            xhat = (x.data - mu) * istd
            if gamma.needs_grad:
                gamma.accumulate_grad((g * xhat).sum(axis=axes))
            if beta.needs_grad:
                beta.accumulate_grad(g.sum(axis=axes))
            if x.needs_grad:
                gsum = g.sum(axis=axes)
                gdot = (g * xhat).sum(axis=axes)
                gx = (gamma.data * istd / count) * (count * g - gsum - xhat * gdot)
                x.accumulate_grad(gx.astype(x.dtype, copy=False))

        return Tensor.from_op(data, (x, gamma, beta), backward)

    istd = (1.0 / np.sqrt(moving_var.data + eps)).astype(x.dtype)
    scale = gamma.data * istd
    data = x.data * scale + (beta.data - moving_mean.data * scale)

    def backward(g: np.ndarray) -> None:
        if gamma.needs_grad:
            xhat = (x.data - moving_mean.data) * istd
            gamma.accumulate_grad((g * xhat).sum(axis=axes))
        if beta.needs_grad:
            beta.accumulate_grad(g.sum(axis=axes))
        if x.needs_grad:
            x.accumulate_grad(g * scale)

    return Tensor.from_op(data, (x, gamma, beta), backward)


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------

def cross_entropy(probs: Tensor, targets: Tensor, floor: float = 1e-12) -> Tensor:
    """Mean categorical cross-entropy between probability rows and a
    (possibly soft) target distribution of the same shape."""
    if probs.shape != targets.shape:
        raise ShapeError(f"cross_entropy shapes differ: {probs.shape} vs {targets.shape}")
    p = probs.data if probs.ndim > 1 else probs.data[None]
    t = targets.data if targets.ndim > 1 else targets.data[None]
    n = p.shape[0]
    clamped = np.maximum(p, floor)
    logp = np.log(clamped)
    data = np.asarray(-(t * logp).sum() / n, dtype=probs.dtype)

    def backward(g: np.ndarray) -> None:
        gs = float(g)
        if probs.needs_grad:
            gp = -t / clamped
            gp *= p > floor
            gp *= gs / n
            probs.accumulate_grad(gp.reshape(probs.shape).astype(probs.dtype, copy=False))
        if targets.needs_grad:
            targets.accumulate_grad((-logp * (gs / n)).reshape(targets.shape)
                                    .astype(targets.dtype, copy=False))

    return Tensor.from_op(data, (probs, targets), backward)
