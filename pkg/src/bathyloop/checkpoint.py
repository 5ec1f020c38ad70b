"""Parameter container I/O ("bathy-ckpt v1").

Plain text: a header line, then per parameter a `param <name> <ndim> <dims>`
line followed by one line of row-major values at 17 significant digits,
which round-trips float64 exactly.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

HEADER = "bathy-ckpt v1"


def save_checkpoint(arrays: dict[str, np.ndarray], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(HEADER + "\n")
        for name in sorted(arrays):
            arr = np.asarray(arrays[name], dtype=np.float64)
            dims = " ".join(str(d) for d in arr.shape)
            fh.write(f"param {name} {arr.ndim}{' ' + dims if dims else ''}\n")
            fh.write(" ".join(f"{v:.17g}" for v in arr.reshape(-1)) + "\n")


def load_checkpoint(path) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != HEADER:
            raise InvalidInputError(f"{path}: expected {HEADER!r} header, got {header!r}")
        while True:
            line = fh.readline()
            if not line:
                break
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] != "param" or len(parts) < 3:
                raise InvalidInputError(f"{path}: malformed param line {line!r}")
            name = parts[1]
            ndim = int(parts[2])
            shape = tuple(int(d) for d in parts[3:3 + ndim])
            values = fh.readline().split()
            arr = np.array([float(v) for v in values], dtype=np.float64)
            expected = int(np.prod(shape)) if shape else 1
            if arr.size != expected:
                raise InvalidInputError(
                    f"{path}: parameter {name!r} expects {expected} values, got {arr.size}")
            out[name] = arr.reshape(shape)
    return out
