"""Binary snapshots and CSV time series."""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .diagnostics import DiagRow
from .gauge import CssState, GaugedState
from .grid import make_grid

MAGIC = b"GFLOW1\0\0"
VERSION = 1
_HEAD = struct.Struct("<8sIBbIdddB")  # magic, version, kind, mu, N, L, t, g, has_a0
_F64 = np.dtype("<f8")


class SnapshotError(ValueError):
    pass


def _payload(s) -> tuple[int, list[np.ndarray]]:
    if isinstance(s, CssState):
        a0 = s.a0 if s.a0 is not None else np.zeros(s.grid.shape)
        return 1, [s.phi.real, s.phi.imag, a0, s.a1, s.a2]
    arrs = [s.psi1.real, s.psi1.imag, s.psi2.real, s.psi2.imag, s.a1, s.a2]
    if s.a0 is not None:
        arrs.append(s.a0)
    return 0, arrs


def snapshot_bytes(s) -> bytes:
    kind, arrs = _payload(s)
    for a in arrs:
        if not np.isfinite(a).all():
            raise SnapshotError("refusing to write non-finite values")
    if kind == 1:
        # the A0 slot is always present for CSS; has_a0 records whether it was set
        head = _HEAD.pack(MAGIC, VERSION, 1, 0, s.grid.N, s.grid.L, s.t, s.g, int(s.a0 is not None))
    else:
        head = _HEAD.pack(MAGIC, VERSION, 0, s.mu, s.grid.N, s.grid.L, s.t, 0.0, int(s.a0 is not None))
    body = b"".join(np.ascontiguousarray(a, dtype=_F64).tobytes() for a in arrs)
    return head + body


def write_snapshot(s, path) -> None:
    Path(path).write_bytes(snapshot_bytes(s))


def parse_snapshot(data: bytes, boundary: str = "dirichlet_zero"):
    """Decode snapshot bytes. The format does not carry the boundary policy."""
    if len(data) < _HEAD.size:
        raise SnapshotError("truncated snapshot header")
    magic, version, kind, mu, N, L, t, g, has_a0 = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError("not a gaugeflow snapshot (bad magic)")
    if version != VERSION:
        raise SnapshotError(f"unsupported version {version}")
    if kind not in (0, 1):
        raise SnapshotError(f"unknown state kind {kind}")
    count = 5 if kind == 1 else 6 + int(bool(has_a0))
    need = _HEAD.size + count * N * N * 8
    if len(data) != need:
        raise SnapshotError(f"truncated or oversized payload ({len(data)} bytes, expected {need})")
    flat = np.frombuffer(data, dtype=_F64, offset=_HEAD.size).astype(float)
    if not np.isfinite(flat).all():
        raise SnapshotError("snapshot contains non-finite values")
    arrs = flat.reshape(count, N, N)
    grid = make_grid(L, N, boundary)
    if kind == 1:
        a0 = arrs[2] if has_a0 else None
        return CssState(grid, arrs[0] + 1j * arrs[1], arrs[3], arrs[4], a0, g=g, t=t)
    a0 = arrs[6] if has_a0 else None
    return GaugedState(grid, mu, arrs[0] + 1j * arrs[1], arrs[2] + 1j * arrs[3], arrs[4], arrs[5], a0, t)


def read_snapshot(path, boundary: str = "dirichlet_zero"):
    return parse_snapshot(Path(path).read_bytes(), boundary)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_timeseries(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DiagRow.header())
        for r in rows:
            w.writerow([_fmt(v) for v in r.values()])


def read_timeseries(path) -> list[DiagRow]:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        head = next(rd)
        if head != DiagRow.header():
            raise ValueError("unexpected CSV header")
        return [DiagRow(*(float(v) for v in row)) for row in rd]
