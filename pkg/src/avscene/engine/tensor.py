"""Reverse-mode differentiable tensors on dense numpy arrays.

Conventions used across the engine:

* arrays are row-major (C order) and either float32 (training) or
  float64 (gradient checking);
* a ``Tensor`` is immutable once produced by an op -- optimizers mutate
  parameter ``data`` in place, which is allowed only for graph leaves;
* ``requires_grad`` doubles as the "trainable" flag for parameters.
"""
from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np


class ShapeError(ValueError):
    """Dimension mismatch; the message names the offending axes."""


class GradientError(RuntimeError):
    """Raised when backward() hits an inconsistent graph state."""


def _as_array(values, dtype=None) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if not arr.flags["C_CONTIGUOUS"]:
        arr = np.ascontiguousarray(arr)
    return arr


class Tensor:
    """n-dimensional array plus the tape entry that produced it."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = _as_array(data)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        self.name = name

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def from_op(data: np.ndarray, parents: Sequence["Tensor"],
                backward: Callable[[np.ndarray], None]) -> "Tensor":
        """Create a graph node. Skips the tape when no parent needs gradients."""
        out = Tensor(data)
        live = tuple(p for p in parents if p.needs_grad)
        if live:
            out._parents = live
            out._backward = backward
        return out

    @staticmethod
    def zeros(shape, dtype=np.float32, requires_grad: bool = False) -> "Tensor":
        return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)

    @staticmethod
    def ones(shape, dtype=np.float32, requires_grad: bool = False) -> "Tensor":
        return Tensor(np.ones(shape, dtype=dtype), requires_grad=requires_grad)

    # -- basic properties ------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def needs_grad(self) -> bool:
        return self.requires_grad or self._backward is not None

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{tag})"

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a scalar, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def assert_finite(self, what: str = "tensor") -> "Tensor":
        if not np.all(np.isfinite(self.data)):
            raise FloatingPointError(f"non-finite values in {what}")
        return self

    # -- reverse pass -----------------------------------------------------------

    def _toposort(self) -> list["Tensor"]:
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        return order

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """Accumulate gradients of ``self`` into every reachable leaf.

        Leaves keep their accumulated ``grad`` (call ``zero_grad`` between
        steps); interior nodes drop theirs once consumed.
        """
        if grad is None:
            if self.data.size != 1:
                raise GradientError("backward() without an explicit gradient "
                                    f"needs a scalar output, got shape {self.shape}")
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=self.data.dtype)
        if grad.shape != self.data.shape:
            raise ShapeError(f"seed gradient shape {grad.shape} != output shape {self.shape}")

        order = self._toposort()
        self.grad = grad if self.grad is None else self.grad + grad
        for node in reversed(order):
            if node._backward is None or node.grad is None:
                continue
            node._backward(node.grad)
            if not node.requires_grad:
                node.grad = None  # free interior gradients as we go

    def accumulate_grad(self, grad: np.ndarray) -> None:
        if self.grad is None:
            # own the buffer: upstream may reuse theirs
            self.grad = grad.copy() if not grad.flags["OWNDATA"] else grad
        else:
            self.grad = self.grad + grad

    def zero_grad(self) -> None:
        self.grad = None


def as_tensor(value, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(_as_array(value, dtype=dtype))


def collect_leaves(root: Tensor) -> Iterable[Tensor]:
    """All leaf tensors (graph inputs) reachable from ``root``."""
    return [t for t in root._toposort() if t._backward is None]
