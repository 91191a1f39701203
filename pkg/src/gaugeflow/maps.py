"""Map <-> gauge dictionary: conformal-frame gauged data and frame reconstruction.

Maps are given in a conformal target coordinate ``w = u + iv``: the
stereographic coordinate of the sphere (``mu = +1``) or the Poincaré disc
coordinate of the hyperbolic plane (``mu = -1``). The frame is
``e1 = d_u phi / lambda``, ``e2 = d_v phi / lambda`` with conformal factor
``lambda = 2 / (1 + mu |w|^2)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .gauge import GaugedState, constraint_residuals, dj_psij
from .grid import Grid2D, partial

ETA = np.diag([1.0, 1.0, -1.0])


@dataclass(frozen=True)
class MapField:
    grid: Grid2D
    w: np.ndarray
    mu: int = 1
    dw: tuple[np.ndarray, np.ndarray] | None = None  # analytic (d1 w, d2 w), optional

    def __post_init__(self):
        if self.mu not in (1, -1):
            raise ValueError("mu must be +1 or -1")
        object.__setattr__(self, "w", np.asarray(self.w, dtype=complex))
        if self.w.shape != self.grid.shape:
            raise ValueError("w does not match the grid")
        if self.mu == -1 and np.abs(self.w).max() >= 1.0 - 1e-6:
            raise ValueError("Poincaré disc coordinate must satisfy max|w| < 1")

    def derivatives(self, order: int = 4) -> tuple[np.ndarray, np.ndarray]:
        if self.dw is not None:
            return np.asarray(self.dw[0], complex), np.asarray(self.dw[1], complex)
        return partial(self.w, self.grid, 1, order), partial(self.w, self.grid, 2, order)


def gauge_from_map(m: MapField, order: int = 4) -> GaugedState:
    """Gauged fields of a map in the conformal frame.

    ``psi_j = lambda(w) d_j w`` and
    ``A_j = -(d_v log lambda) d_j u + (d_u log lambda) d_j v``.
    ``order`` only matters when ``m`` carries no analytic derivatives.
    """
    w, mu = m.w, m.mu
    d1w, d2w = m.derivatives(order)
    denom = 1.0 + mu * np.abs(w) ** 2
    lam = 2.0 / denom
    dlog_u = -2.0 * mu * w.real / denom
    dlog_v = -2.0 * mu * w.imag / denom
    a1 = -dlog_v * d1w.real + dlog_u * d1w.imag
    a2 = -dlog_v * d2w.real + dlog_u * d2w.imag
    return GaugedState(m.grid, mu, lam * d1w, lam * d2w, a1, a2)


def embed(w: np.ndarray, mu: int) -> np.ndarray:
    """Target point in R^3 (or Minkowski R^{2,1}); shape ``w.shape + (3,)``."""
    w = np.asarray(w, dtype=complex)
    d = 1.0 + mu * np.abs(w) ** 2
    return np.stack([2 * w.real / d, 2 * w.imag / d, 2.0 / d - 1.0], axis=-1)


def map_frame(w: np.ndarray, mu: int) -> np.ndarray:
    """``[e1 | e2 | phi]`` of the conformal frame at each point of ``w``."""
    w = np.asarray(w, dtype=complex)
    u, v = w.real, w.imag
    d = 1.0 + mu * np.abs(w) ** 2
    half_d = d / 2.0  # 1 / lambda
    du = np.stack([2 / d - 4 * mu * u * u / d**2, -4 * mu * u * v / d**2, -4 * mu * u / d**2], axis=-1)
    dv = np.stack([-4 * mu * u * v / d**2, 2 / d - 4 * mu * v * v / d**2, -4 * mu * v / d**2], axis=-1)
    e1 = du * half_d[..., None]
    e2 = dv * half_d[..., None]
    return np.stack([e1, e2, embed(w, mu)], axis=-1)


def psi0(s: GaugedState, system: str, order: int = 2) -> np.ndarray:
    """Time derivative field: ``i D_j psi_j`` (sm) or ``D_j psi_j`` (hmhf)."""
    tension = dj_psij(s, order)
    if system == "sm":
        return 1j * tension
    if system in ("hmhf", "hmhf_main", "hmhf_appendix"):
        return tension
    raise ValueError(f"unknown system {system!r}")


def _lie_matrix(a: np.ndarray, psi: np.ndarray, mu: int) -> np.ndarray:
    r = np.zeros(a.shape + (3, 3))
    re, im = psi.real, psi.imag
    r[..., 0, 1] = -a
    r[..., 1, 0] = a
    r[..., 0, 2] = re
    r[..., 1, 2] = im
    r[..., 2, 0] = -mu * re
    r[..., 2, 1] = -mu * im
    return r


def mayer_lie_matrices(s: GaugedState, alpha: int, system: str = "sm", order: int = 2) -> np.ndarray:
    """Per-node Lie algebra elements ``R_alpha`` with ``d_alpha Phi = Phi R_alpha``.

    For ``mu = -1`` the bottom row changes sign so that
    ``R^T eta + eta R = 0`` (so(2,1)).
    """
    if alpha == 1:
        return _lie_matrix(s.a1, s.psi1, s.mu)
    if alpha == 2:
        return _lie_matrix(s.a2, s.psi2, s.mu)
    if alpha == 0:
        a0 = s.a0 if s.a0 is not None else np.zeros(s.grid.shape)
        return _lie_matrix(a0, psi0(s, system, order), s.mu)
    raise ValueError(f"alpha must be 0, 1 or 2, got {alpha}")


@dataclass(frozen=True)
class FrameField:
    grid: Grid2D
    Phi: np.ndarray  # (N, N, 3, 3); columns e1, e2, phi
    mu: int

    @property
    def phi(self) -> np.ndarray:
        return self.Phi[..., :, 2]

    def group_residual(self) -> np.ndarray:
        return group_residual(self.Phi, self.mu)


def group_residual(Phi: np.ndarray, mu: int) -> np.ndarray:
    metric = np.eye(3) if mu == 1 else ETA
    gram = np.swapaxes(Phi, -1, -2) @ metric @ Phi
    return np.abs(gram - metric).max(axis=(-2, -1))


def _anchor(grid: Grid2D) -> int:
    return grid.N // 2


def _sweep(Phi: np.ndarray, R: np.ndarray, h: float, axis: int, start: int, lines) -> None:
    """Propagate ``Phi`` from index ``start`` along ``axis`` for the given lines.

    ``Phi`` and ``R`` are (N, N, 3, 3); ``lines`` indexes the other axis.
    Each step multiplies by ``expm(+-h * R_mid)``, exact in the group.
    """
    n = Phi.shape[axis]

    def at(k):
        return (k, lines) if axis == 0 else (lines, k)

    for k in range(start, n - 1):
        mid = 0.5 * (R[at(k)] + R[at(k + 1)])
        Phi[at(k + 1)] = Phi[at(k)] @ expm(h * mid)
    for k in range(start, 0, -1):
        mid = 0.5 * (R[at(k)] + R[at(k - 1)])
        Phi[at(k - 1)] = Phi[at(k)] @ expm(-h * mid)


def reconstruct_frame(s: GaugedState, Phi_center=None, row_first: bool = True) -> FrameField:
    """Integrate ``d_j Phi = Phi R_j`` outward from the node ``(N/2, N/2)``.

    With ``row_first`` the x1 line through the anchor is integrated first and
    then every x2 column; otherwise the roles are swapped.
    """
    g = s.grid
    Phi_center = np.eye(3) if Phi_center is None else np.asarray(Phi_center, dtype=float)
    if group_residual(Phi_center, s.mu) > 1e-12:
        raise ValueError("Phi_center is not in SO(3)/SO(2,1)")
    res = constraint_residuals(s)
    if max(res.theta_norm, res.psi_norm) > 1e-2:
        warnings.warn("fields violate the constraints; reconstruction is path dependent", stacklevel=2)
    R1 = mayer_lie_matrices(s, 1)
    R2 = mayer_lie_matrices(s, 2)
    c = _anchor(g)
    Phi = np.zeros(g.shape + (3, 3))
    Phi[c, c] = Phi_center
    everything = slice(None)
    if row_first:
        _sweep(Phi, R1, g.h, 0, c, c)
        _sweep(Phi, R2, g.h, 1, c, everything)
    else:
        _sweep(Phi, R2, g.h, 1, c, c)
        _sweep(Phi, R1, g.h, 0, c, everything)
    return FrameField(g, Phi, s.mu)


def path_independence_residual(s: GaugedState) -> float:
    a = reconstruct_frame(s, row_first=True).Phi
    b = reconstruct_frame(s, row_first=False).Phi
    return float(np.sqrt(((a - b) ** 2).sum(axis=(-2, -1))).max())


def psi_from_frame(frame: FrameField, order: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Derivative fields ``<e1, d_j phi> + i <e2, d_j phi>`` of a frame field."""
    metric = np.eye(3) if frame.mu == 1 else ETA
    e1, e2, phi = frame.Phi[..., :, 0], frame.Phi[..., :, 1], frame.Phi[..., :, 2]
    out = []
    for axis in (1, 2):
        dphi = np.stack([partial(phi[..., k], frame.grid, axis, order) for k in range(3)], axis=-1)
        out.append(np.einsum("...i,ij,...j->...", e1, metric, dphi)
                   + 1j * np.einsum("...i,ij,...j->...", e2, metric, dphi))
    return out[0], out[1]


def bump_map(grid: Grid2D, amp: float = 0.5, mu: int = 1) -> MapField:
    """Fixture B1: ``w = amp * z * exp(-r^2/4)`` (degree-zero, complex, decaying)."""
    x1, x2 = grid.coords
    z = x1 + 1j * x2
    gauss = np.exp(-(x1 * x1 + x2 * x2) / 4.0)
    w = amp * z * gauss
    d1w = amp * gauss * (1.0 - z * x1 / 2.0)
    d2w = amp * gauss * (1j - z * x2 / 2.0)
    return MapField(grid, w, mu, (d1w, d2w))


def bump_data(grid: Grid2D, amp: float = 0.5, mu: int = 1) -> GaugedState:
    return gauge_from_map(bump_map(grid, amp, mu))
