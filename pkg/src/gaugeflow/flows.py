"""Right-hand sides and RK4 time stepping for the gauged flows (temporal gauge).

Systems:

``sm``             Schrödinger maps, ``d_t psi_k = i D_j D_j psi_k + F_jk psi_j``
``hmhf_main``      heat flow, ``d_t psi_k = D_j D_j psi_k - i F_jk psi_j``
``hmhf_appendix``  the gradient-flow form with the forward-heat connection law
``css``            Chern-Simons-Schrödinger

In temporal gauge ``d_t A_j = F_0j`` with ``F_0j`` from the system's
constitutive law. A stored static ``a0`` is honoured (``D_t = d_t + i a0``),
which is how stationary solitons that need ``A0 != 0`` are checked.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .gauge import CssState, GaugedState, cov, cov_laplacian, curl
from .grid import partial

log = logging.getLogger(__name__)

SYSTEMS = ("sm", "hmhf_main", "hmhf_appendix", "css")
RING = 2  # frozen boundary layer on open grids (half width of the order-4 stencil)


class CFLError(ValueError):
    pass


class NumericalAbort(RuntimeError):
    def __init__(self, msg, last_good_time):
        super().__init__(f"{msg} (last good time t={last_good_time:.6g})")
        self.last_good_time = last_good_time


@dataclass(frozen=True)
class FlowSpec:
    system: str
    dt: float
    T: float = 0.0
    cfl_guard: bool = True
    order: int = 2
    css_constraint_tol: float = 1e-6

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown system {self.system!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.T < 0:
            raise ValueError("final time must be non-negative")
        if self.order not in (2, 4):
            raise ValueError("stencil order must be 2 or 4")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    def check(self, grid) -> None:
        if self.cfl_guard and self.dt > 0.2 * grid.h**2:
            raise CFLError(f"dt={self.dt:g} exceeds the explicit budget 0.2 h^2 = {0.2 * grid.h**2:g}")


def _im(a, b):
    return np.imag(np.conj(a) * b)


def _re(a, b):
    return np.real(np.conj(a) * b)


def _tension(s, order):
    g = s.grid
    return cov(s.psi1, s.a1, g, 1, order) + cov(s.psi2, s.a2, g, 2, order)


def f0j_sm(s: GaugedState, order: int = 2):
    """``F_0j = mu Re(conj(psi_j) D_l psi_l)``."""
    t = _tension(s, order)
    return s.mu * _re(s.psi1, t), s.mu * _re(s.psi2, t)


def f0j_hmhf_main(s: GaugedState, order: int = 2):
    """``F_0j = mu Im(conj(psi_j) D_l psi_l)``."""
    t = _tension(s, order)
    return s.mu * _im(s.psi1, t), s.mu * _im(s.psi2, t)


def f0j_hmhf_appendix(s: GaugedState, order: int = 2):
    """``F_0j = mu Im(conj(psi_k) D_j psi_k) - d_k F_jk`` (forward heat flow of F12)."""
    g = s.grid
    f12 = curl(s.a1, s.a2, g, order)
    cur = []
    for j, a in ((1, s.a1), (2, s.a2)):
        cur.append(sum(_im(p, cov(p, a, g, j, order)) for p in (s.psi1, s.psi2)))
    # d_k F_1k = d_2 F12 ; d_k F_2k = d_1 F21 = -d_1 F12
    return (s.mu * cur[0] - partial(f12, g, 2, order), s.mu * cur[1] + partial(f12, g, 1, order))


def f0j_css(s: CssState, order: int = 2):
    """``F01 = -Im(conj(phi) D2 phi)``, ``F02 = Im(conj(phi) D1 phi)``."""
    g = s.grid
    return (-_im(s.phi, cov(s.phi, s.a2, g, 2, order)), _im(s.phi, cov(s.phi, s.a1, g, 1, order)))


F0J = {"sm": f0j_sm, "hmhf_main": f0j_hmhf_main, "hmhf_appendix": f0j_hmhf_appendix, "css": f0j_css}


def _freeze_ring(arrs, grid):
    if grid.boundary != "open":
        return arrs
    out = []
    for x in arrs:
        x = x.copy()
        x[:RING] = 0
        x[-RING:] = 0
        x[:, :RING] = 0
        x[:, -RING:] = 0
        out.append(x)
    return tuple(out)


def rhs(s, spec: FlowSpec):
    """Time derivative of the state's evolving fields.

    Gauged states give ``(d_t psi1, d_t psi2, d_t a1, d_t a2)``; CSS states
    give ``(d_t phi, d_t a1, d_t a2)``. On ``open`` grids the outer ring of
    nodes is held fixed (Dirichlet data taken from the state).
    """
    o = spec.order
    g = s.grid
    if spec.system == "css":
        if not isinstance(s, CssState):
            raise TypeError("css flow needs a CssState")
        dd = cov_laplacian(s.phi, s.a1, s.a2, g, o)
        dphi = 1j * dd + 1j * s.g * np.abs(s.phi) ** 2 * s.phi
        da1, da2 = f0j_css(s, o)
        if s.a0 is not None:
            dphi = dphi - 1j * s.a0 * s.phi
            da1 = da1 + partial(s.a0, g, 1, o)
            da2 = da2 + partial(s.a0, g, 2, o)
        return _freeze_ring((dphi, da1, da2), g)

    if not isinstance(s, GaugedState):
        raise TypeError(f"{spec.system} flow needs a GaugedState")
    p1, p2 = s.psi1, s.psi2
    dd1 = cov_laplacian(p1, s.a1, s.a2, g, o)
    dd2 = cov_laplacian(p2, s.a1, s.a2, g, o)
    if spec.system == "sm":
        f12 = curl(s.a1, s.a2, g, o)
        # F_jk psi_j: k=1 -> F21 psi2, k=2 -> F12 psi1
        d1 = 1j * dd1 - f12 * p2
        d2 = 1j * dd2 + f12 * p1
    elif spec.system == "hmhf_main":
        f12 = curl(s.a1, s.a2, g, o)
        d1 = dd1 + 1j * f12 * p2
        d2 = dd2 - 1j * f12 * p1
    else:
        im21 = s.mu * _im(p2, p1)
        d1 = dd1 + 1j * im21 * p2
        d2 = dd2 - 1j * im21 * p1
    da1, da2 = F0J[spec.system](s, o)
    if s.a0 is not None:
        d1 = d1 - 1j * s.a0 * p1
        d2 = d2 - 1j * s.a0 * p2
        da1 = da1 + partial(s.a0, g, 1, o)
        da2 = da2 + partial(s.a0, g, 2, o)
    return _freeze_ring((d1, d2, da1, da2), g)


def _unpack(s):
    if isinstance(s, CssState):
        return (s.phi, s.a1, s.a2)
    return (s.psi1, s.psi2, s.a1, s.a2)


def _pack(s, arrs, t):
    if isinstance(s, CssState):
        return s.replace(phi=arrs[0], a1=arrs[1], a2=arrs[2], t=t)
    return s.replace(psi1=arrs[0], psi2=arrs[1], a1=arrs[2], a2=arrs[3], t=t)


def _axpy(s, k, c):
    return _pack(s, tuple(x + c * y for x, y in zip(_unpack(s), k)), s.t + c)


def step_rk4(s, spec: FlowSpec, dt: float | None = None):
    """One classical RK4 step (``dt`` may be negative for backward steps)."""
    dt = spec.dt if dt is None else dt
    k1 = rhs(s, spec)
    k2 = rhs(_axpy(s, k1, 0.5 * dt), spec)
    k3 = rhs(_axpy(s, k2, 0.5 * dt), spec)
    k4 = rhs(_axpy(s, k3, dt), spec)
    new = tuple(
        x + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        for x, a, b, c, d in zip(_unpack(s), k1, k2, k3, k4)
    )
    return _pack(s, new, s.t + dt)


def _finite(s) -> bool:
    return all(np.isfinite(x).all() for x in _unpack(s))


def check_initial(s, spec: FlowSpec) -> None:
    spec.check(s.grid)
    if not _finite(s):
        raise NumericalAbort("non-finite initial data", s.t)
    if spec.system == "css":
        from .diagnostics import css_curvature_residual

        res = css_curvature_residual(s, spec.order)
        if res > spec.css_constraint_tol:
            raise ValueError(f"CSS data violate F12 = -|phi|^2/2 (residual {res:.3e})")


def evolve(s, spec: FlowSpec, diag_every: int = 1, diagnostics: bool = True, callback=None,
           regauge=None):
    """Integrate to ``spec.T``; returns ``(final_state, rows)``.

    Samples are taken at step 0, every ``diag_every`` steps and at the final
    step. At a sample the optional ``regauge(state)`` is applied first (a
    gauge change such as a Coulomb reprojection), then a diagnostic row is
    recorded and ``callback(step, state)`` is called. Law residuals at a
    sample use the states one step before and after it (taken with -dt/+dt
    RK4 steps).
    """
    from .diagnostics import diag_row

    check_initial(s, spec)
    rows = []
    every = max(int(diag_every), 1)

    def sample(i, x):
        if regauge is not None:
            x = regauge(x)
        if diagnostics:
            hist = (step_rk4(x, spec, -spec.dt), x, step_rk4(x, spec, spec.dt))
            rows.append(diag_row(x, hist, spec.order))
        if callback is not None:
            callback(i, x)
        return x

    s = sample(0, s)
    n = spec.steps
    for i in range(1, n + 1):
        nxt = step_rk4(s, spec)
        if not _finite(nxt):
            raise NumericalAbort("non-finite field encountered", s.t)
        s = nxt
        if i % every == 0 or i == n:
            s = sample(i, s)
    log.debug("evolved %s to t=%g in %d steps", spec.system, s.t, n)
    return s, rows


def trajectory(s, spec: FlowSpec, every: int = 1):
    """States along a run, every ``every`` steps (including the start and the end)."""
    check_initial(s, spec)
    out = [s]
    n = spec.steps
    for i in range(1, n + 1):
        s = step_rk4(s, spec)
        if not _finite(s):
            raise NumericalAbort("non-finite field encountered", s.t - spec.dt)
        if i % every == 0 or i == n:
            out.append(s)
    return out
