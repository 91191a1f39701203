"""Closed-form self-dual fixtures and their residual checks."""
from __future__ import annotations

import numpy as np

from .gauge import CssState, GaugedState, constraint_residuals, cov, curvature_f12
from .grid import Grid2D, l2_norm
from .maps import MapField, gauge_from_map

_SIGNS = {"+": 1.0, "-": -1.0, 1: 1.0, -1: -1.0}


def self_dual_data(n: int, grid: Grid2D, mu: int = 1) -> GaugedState:
    """Gauged degree-``n`` harmonic map ``w = z^n`` into the sphere (fixture S1 is n=1).

    Analytic facts on the whole plane: energy ``4 pi n``, charge ``-2n`` and
    ``psi1 = -i psi2``.
    """
    if mu != 1:
        raise ValueError("no finite-energy harmonic maps into H^2 exist to build a fixture from; use mu=+1")
    if n < 0:
        raise ValueError("degree must be non-negative")
    x1, x2 = grid.coords
    z = x1 + 1j * x2
    if n == 0:
        zero = np.zeros(grid.shape, complex)
        return gauge_from_map(MapField(grid, np.ones(grid.shape, complex), 1, (zero, zero)))
    dz = n * z ** (n - 1)
    return gauge_from_map(MapField(grid, z**n, 1, (dz, 1j * dz)))


def self_duality_residual(s: GaugedState, sign="+", order: int = 2) -> tuple[float, float, float]:
    """``(||(D1 +- iD2) psi1||, ||(D1 +- iD2) psi2||, ||psi1 +- i psi2||)``."""
    sg = _SIGNS[sign]
    g = s.grid
    out = []
    for p in (s.psi1, s.psi2):
        out.append(l2_norm(cov(p, s.a1, g, 1, order) + sg * 1j * cov(p, s.a2, g, 2, order), g))
    out.append(l2_norm(s.psi1 + sg * 1j * s.psi2, g))
    return out[0], out[1], out[2]


def curvature_is_nondegenerate(s: GaugedState, order: int = 2, factor: float = 10.0) -> bool:
    """True when ``max |F12|`` clears ``factor`` times the larger constraint residual.

    Only then is a small self-duality residual taken to imply the rigidity
    conclusions (``psi1 = -i psi2`` up to a constant, ``Dj psij = 0``).
    """
    r = constraint_residuals(s, order)
    peak = float(np.abs(curvature_f12(s, order)).max())
    return peak > 0 and peak >= factor * max(r.theta_norm, r.psi_norm)


def jackiw_pi_data(grid: Grid2D, N: int = 1) -> CssState:
    """Fixture JP: ``phi = 2 sqrt(2) / (1 + r^2)`` with ``A0 = |phi|^2 / 2``.

    The profile solves ``(D1 + i D2) phi = 0`` and ``F12 = -|phi|^2/2``; it
    is a static solution of the CSS equations, with the stored ``A0``, at
    coupling ``g = 1``, where the energy ``(1/2) int |D phi|^2 - (g/2)|phi|^4``
    vanishes. With the ``A0`` supplied here stationarity forces
    ``A0 = (g - 1/2) |phi|^2``, hence the coupling.
    """
    if N != 1:
        raise NotImplementedError("only the N=1 Jackiw-Pi profile is available")
    x1, x2 = grid.coords
    q = 1.0 + x1 * x1 + x2 * x2
    phi = (2.0 * np.sqrt(2.0) / q).astype(complex)
    return CssState(grid, phi, 2.0 * x2 / q, -2.0 * x1 / q, a0=4.0 / q**2, g=1.0)


def css_self_duality_residual(s: CssState, sign="+", order: int = 2) -> float:
    sg = _SIGNS[sign]
    g = s.grid
    return l2_norm(cov(s.phi, s.a1, g, 1, order) + sg * 1j * cov(s.phi, s.a2, g, 2, order), g)
