"""Checkpoint archives.

A checkpoint is a zip holding ``manifest.json`` plus one raw little-endian
IEEE-754 blob per parameter. Zip member metadata is pinned (fixed
timestamp, stored entries, sorted member order) so identical parameter
sets serialize to byte-identical archives, and round-trips are bit-exact.
"""
from __future__ import annotations

import json
import zipfile
from pathlib import Path
from typing import Any

import numpy as np

from .params import ParamSet
from .tensor import Tensor

FORMAT_VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)

_DTYPES = {"float32": "<f4", "float64": "<f8"}


class CheckpointError(RuntimeError):
    pass


def _zip_write(zf: zipfile.ZipFile, name: str, payload: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    zf.writestr(info, payload)


def write_array(path: Path, array: np.ndarray) -> None:
    """Raw little-endian dump, the same encoding checkpoint members use."""
    path.write_bytes(np.ascontiguousarray(array).astype(_le_dtype(array.dtype)).tobytes())


def read_array(path: Path, dtype: str, shape: tuple[int, ...]) -> np.ndarray:
    data = np.frombuffer(path.read_bytes(), dtype=_DTYPES[dtype])
    return data.reshape(shape).astype(dtype, copy=True)


def _le_dtype(dtype) -> str:
    name = np.dtype(dtype).name
    if name not in _DTYPES:
        raise CheckpointError(f"unsupported parameter dtype {name}")
    return _DTYPES[name]


def save_checkpoint(path: str | Path, params: ParamSet,
                    extra: dict[str, Any] | None = None,
                    seed: int | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    blobs: list[tuple[str, bytes]] = []
    for idx, (ppath, tensor) in enumerate(params.items()):
        member = f"arrays/{idx:05d}.bin"
        entries.append({
            "path": ppath,
            "shape": list(tensor.shape),
            "dtype": np.dtype(tensor.dtype).name,
            "trainable": bool(tensor.requires_grad),
            "file": member,
        })
        blobs.append((member,
                      np.ascontiguousarray(tensor.data).astype(_le_dtype(tensor.dtype)).tobytes()))
    manifest = {
        "format_version": FORMAT_VERSION,
        "seed": seed,
        "params": entries,
        "extra": extra or {},
    }
    payload = json.dumps(manifest, sort_keys=True, indent=1).encode()
    with zipfile.ZipFile(path, "w") as zf:
        _zip_write(zf, "manifest.json", payload)
        for member, blob in blobs:
            _zip_write(zf, member, blob)


def load_checkpoint(path: str | Path) -> tuple[ParamSet, dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    with zipfile.ZipFile(path) as zf:
        try:
            manifest = json.loads(zf.read("manifest.json"))
        except KeyError as exc:
            raise CheckpointError(f"{path} has no manifest.json") from exc
        if manifest.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(
                f"unsupported checkpoint format {manifest.get('format_version')!r}")
        params = ParamSet()
        for entry in manifest["params"]:
            raw = zf.read(entry["file"])
            arr = np.frombuffer(raw, dtype=_DTYPES[entry["dtype"]])
            arr = arr.reshape(entry["shape"]).astype(entry["dtype"], copy=True)
            params.add(entry["path"], Tensor(arr, requires_grad=entry["trainable"]))
    return params, manifest


def load_into(target: ParamSet, source: ParamSet, strict: bool = True) -> None:
    """Copy arrays from ``source`` into ``target`` by path.

    Raises a structured error naming the first missing or mismatched entry.
    """
    for path, tensor in target.items():
        if path not in source:
            if strict:
                raise CheckpointError(f"checkpoint is missing parameter {path!r}")
            continue
        src = source[path]
        if tuple(src.shape) != tuple(tensor.shape):
            raise CheckpointError(f"shape mismatch for {path!r}: checkpoint "
                                  f"{tuple(src.shape)} vs model {tuple(tensor.shape)}")
        tensor.data = src.data.astype(tensor.dtype, copy=True)
    if strict:
        extras = [p for p in source.paths() if p not in target]
        if extras:
            raise CheckpointError(f"checkpoint has unexpected parameter {extras[0]!r}")
