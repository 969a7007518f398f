"""Named parameter collections.

A :class:`ParamSet` maps slash-separated paths ("audio/block1/conv1/kernel")
to parameter tensors. The tensor's ``requires_grad`` flag is the trainable
flag; batch-norm moving statistics travel in the set as non-trainable
entries so checkpoints capture them.
"""
from __future__ import annotations

from typing import Callable, Iterator

import numpy as np

from .tensor import Tensor


class DuplicateParameterError(ValueError):
    pass


class ParamSet:
    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, path: str, tensor: Tensor) -> None:
        if path in self._params:
            raise DuplicateParameterError(f"duplicate parameter path {path!r}")
        self._params[path] = tensor

    def __getitem__(self, path: str) -> Tensor:
        return self._params[path]

    def __contains__(self, path: str) -> bool:
        return path in self._params

    def __len__(self) -> int:
        return len(self._params)

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._params.items())

    def paths(self) -> list[str]:
        return list(self._params)

    def tensors(self) -> list[Tensor]:
        return list(self._params.values())

    def trainable_items(self) -> list[tuple[str, Tensor]]:
        return [(p, t) for p, t in self._params.items() if t.requires_grad]

    def count(self, trainable_only: bool = False) -> int:
        return sum(t.size for t in self._params.values()
                   if t.requires_grad or not trainable_only)

    def subset(self, predicate: Callable[[str], bool]) -> "ParamSet":
        out = ParamSet()
        for path, t in self._params.items():
            if predicate(path):
                out.add(path, t)
        return out

    def prefixed(self, prefix: str) -> "ParamSet":
        return self.subset(lambda p: p.startswith(prefix))

    def set_trainable(self, trainable: bool, predicate: Callable[[str], bool] | None = None) -> None:
        for path, t in self._params.items():
            if predicate is None or predicate(path):
                t.requires_grad = trainable

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.zero_grad()

    def snapshot(self) -> dict[str, np.ndarray]:
        """Copies of every array, for best-epoch restore and freeze checks."""
        return {p: t.data.copy() for p, t in self._params.items()}

    def restore(self, arrays: dict[str, np.ndarray]) -> None:
        for path, arr in arrays.items():
            self._params[path].data = arr.copy()

    def merged(self, other: "ParamSet", prefix: str = "") -> "ParamSet":
        out = ParamSet()
        for p, t in self._params.items():
            out.add(p, t)
        for p, t in other.items():
            out.add(prefix + p, t)
        return out


def count_params(params: ParamSet, trainable_only: bool = False) -> int:
    """Exact scalar count over the set (0 for an empty set)."""
    return params.count(trainable_only=trainable_only)
