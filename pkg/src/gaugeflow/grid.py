"""Uniform cell-centred grids on [-L, L]^2, stencils and deterministic quadrature.

Fields are plain numpy arrays of shape ``(..., N, N)``. The second-to-last
axis runs along x1 and the last along x2 (``indexing="ij"``), so a field
``f`` is sampled as ``f[i, j] = f(x1_i, x2_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

BOUNDARIES = ("dirichlet_zero", "periodic", "open")
ORDERS = (2, 4)


@dataclass(frozen=True)
class Grid2D:
    """Cell-centred truncation of the plane.

    Nodes sit at ``x_i = -L + (i + 1/2) h`` with ``h = 2L/N``. Boundary
    policies control the ghost values used by the stencils:

    ``dirichlet_zero``
        ghosts are 0; every stencil matrix is (skew-)symmetric.
    ``periodic``
        ghosts wrap around.
    ``open``
        ghosts are polynomial extrapolations of the interior (degree
        ``order + 1``), which turns edge stencils into one-sided ones. Used for
        soliton data whose tails (A ~ 1/r) are far from zero at the edge.
    """

    L: float
    N: int
    boundary: str = "dirichlet_zero"

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"half width L must be positive, got {self.L}")
        if int(self.N) != self.N or self.N < 8 or self.N % 2:
            raise ValueError(f"N must be even and ≥ 8, got {self.N}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary policy {self.boundary!r}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N, self.N)

    @cached_property
    def nodes(self) -> np.ndarray:
        return -self.L + (np.arange(self.N) + 0.5) * self.h

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x1, x2 = np.meshgrid(self.nodes, self.nodes, indexing="ij")
        x1.flags.writeable = False
        x2.flags.writeable = False
        return x1, x2

    @property
    def r2(self) -> np.ndarray:
        x1, x2 = self.coords
        return x1 * x1 + x2 * x2

    def zeros(self, dtype=float) -> np.ndarray:
        return np.zeros(self.shape, dtype=dtype)

    def with_boundary(self, boundary: str) -> "Grid2D":
        return Grid2D(self.L, self.N, boundary)


def make_grid(L: float, N: int, boundary: str = "dirichlet_zero") -> Grid2D:
    return Grid2D(float(L), int(N), boundary)


def _extrapolation_weights(degree: int, width: int) -> np.ndarray:
    # weights[k, m]: value at position -(k+1) from samples at 0..degree
    pts = np.arange(degree + 1, dtype=float)
    w = np.empty((width, degree + 1))
    for k in range(width):
        x = -(k + 1.0)
        for m in range(degree + 1):
            others = np.delete(pts, m)
            w[k, m] = np.prod((x - others) / (pts[m] - others))
    return w


_EXTRAP = {order: _extrapolation_weights(order + 1, 2) for order in ORDERS}


def pad(f: np.ndarray, grid: Grid2D, axis: int, width: int, order: int = 2) -> np.ndarray:
    """Append ``width`` ghost layers on both ends of spatial ``axis`` (1 or 2)."""
    ax = axis - 3  # -2 for x1, -1 for x2
    if grid.boundary == "periodic":
        spec = [(0, 0)] * f.ndim
        spec[ax] = (width, width)
        return np.pad(f, spec, mode="wrap")
    if grid.boundary == "dirichlet_zero":
        spec = [(0, 0)] * f.ndim
        spec[ax] = (width, width)
        return np.pad(f, spec, mode="constant")
    w = _EXTRAP[order]
    p = w.shape[1]
    g = np.moveaxis(f, ax, 0)
    lo = np.tensordot(w[:width], g[:p], axes=(1, 0))[::-1]
    hi = np.tensordot(w[:width], g[::-1][:p], axes=(1, 0))
    return np.moveaxis(np.concatenate([lo, g, hi], axis=0), 0, ax)


def _shifted(fp: np.ndarray, ax: int, width: int, n: int, k: int) -> np.ndarray:
    sl = [slice(None)] * fp.ndim
    sl[ax] = slice(width + k, width + k + n)
    return fp[tuple(sl)]


def partial(f: np.ndarray, grid: Grid2D, axis: int, order: int = 2) -> np.ndarray:
    """Central difference of ``f`` along x1 (``axis=1``) or x2 (``axis=2``)."""
    if axis not in (1, 2):
        raise ValueError(f"spatial axis must be 1 or 2, got {axis}")
    if order not in ORDERS:
        raise ValueError(f"stencil order must be 2 or 4, got {order}")
    ax = axis - 3
    n = f.shape[ax]
    width = order // 2
    fp = pad(f, grid, axis, width, order)
    s = lambda k: _shifted(fp, ax, width, n, k)  # noqa: E731
    if order == 2:
        return (s(1) - s(-1)) / (2.0 * grid.h)
    return (8.0 * (s(1) - s(-1)) - (s(2) - s(-2))) / (12.0 * grid.h)


def second_partial(f: np.ndarray, grid: Grid2D, axis: int, order: int = 2) -> np.ndarray:
    ax = axis - 3
    n = f.shape[ax]
    width = order // 2
    fp = pad(f, grid, axis, width, order)
    s = lambda k: _shifted(fp, ax, width, n, k)  # noqa: E731
    h2 = grid.h * grid.h
    if order == 2:
        return (s(1) - 2.0 * s(0) + s(-1)) / h2
    return (16.0 * (s(1) + s(-1)) - 30.0 * s(0) - (s(2) + s(-2))) / (12.0 * h2)


def laplacian(f: np.ndarray, grid: Grid2D, order: int = 2) -> np.ndarray:
    """Compact 5-point (order 2) or 9-point (order 4) Laplacian."""
    if order not in ORDERS:
        raise ValueError(f"stencil order must be 2 or 4, got {order}")
    return second_partial(f, grid, 1, order) + second_partial(f, grid, 2, order)


def tree_sum(a: np.ndarray) -> np.ndarray:
    """Sum the trailing two axes by a fixed pairwise tree.

    Samples are flattened row-major, zero padded to a power of two and
    combined as ``a[2k] + a[2k+1]`` level by level, so the result does not
    depend on how numpy happens to block its own reductions.
    """
    a = np.asarray(a)
    lead = a.shape[:-2]
    flat = a.reshape(lead + (-1,))
    n = flat.shape[-1]
    m = 1 << max(0, (n - 1).bit_length())
    if m != n:
        flat = np.concatenate([flat, np.zeros(lead + (m - n,), dtype=flat.dtype)], axis=-1)
    while flat.shape[-1] > 1:
        flat = flat[..., 0::2] + flat[..., 1::2]
    return flat[..., 0]


def integrate(f: np.ndarray, grid: Grid2D):
    """Midpoint quadrature ``h^2 * sum(f)`` with the deterministic tree sum."""
    out = grid.h * grid.h * tree_sum(f)
    return out.item() if np.ndim(out) == 0 else out


def l2_norm(f: np.ndarray, grid: Grid2D) -> float:
    return float(np.sqrt(integrate(np.abs(f) ** 2, grid)))


def at_origin(f: np.ndarray) -> complex | float:
    """Average of the four nodes surrounding the origin."""
    n = f.shape[-1] // 2
    return f[..., n - 1 : n + 1, n - 1 : n + 1].mean(axis=(-2, -1))[()]
