"""Binary field snapshots with a JSON sidecar.

Layout (little-endian): magic b"WMAP", version u32, n u32, L_box f64, t f64,
then phi and pi as row-major (n, n, 3) float64 arrays.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .evolve import FieldState

MAGIC = b"WMAP"
VERSION = 1
_HEADER = struct.Struct("<4sIIdd")


class SnapshotError(ValueError):
    pass


def write_snapshot(path, state: FieldState, L_box: float, config: dict | None = None) -> Path:
    """Write ``path`` and ``path.json``; returns the binary path."""
    path = Path(path)
    n = state.phi.shape[0]
    if state.phi.shape != (n, n, 3) or state.pi.shape != (n, n, 3):
        raise SnapshotError(f"expected (n, n, 3) fields, got {state.phi.shape} and {state.pi.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, float(L_box), float(state.t)))
        fh.write(np.ascontiguousarray(state.phi, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.pi, dtype="<f8").tobytes())
    side = {"format": "WMAP", "version": VERSION, "n": n, "L_box": float(L_box), "t": float(state.t),
            "config": config or {}}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(side, indent=2, sort_keys=True))
    return path


def read_snapshot(path):
    """(FieldState, L_box, sidecar dict or None)."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotError(f"{path}: truncated header")
    magic, version, n, L_box, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported version {version}")
    count = n * n * 3
    if len(raw) != _HEADER.size + 2 * 8 * count:
        raise SnapshotError(f"{path}: size {len(raw)} does not match n={n}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    phi = body[:count].reshape(n, n, 3).astype(float)
    pi = body[count:].reshape(n, n, 3).astype(float)
    side_path = path.with_suffix(path.suffix + ".json")
    side = json.loads(side_path.read_text()) if side_path.exists() else None
    return FieldState(t, phi, pi), L_box, side
