"""Monitored functionals: stress-energy tensors, laws, charge, energies, virial."""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .gauge import CssState, GaugedState, constraint_residuals, cov, curl
from .grid import Grid2D, integrate, l2_norm, laplacian, partial


@dataclass(frozen=True)
class StressEnergy:
    t00: np.ndarray
    t01: np.ndarray
    t02: np.ndarray
    t11: np.ndarray
    t12: np.ndarray
    t22: np.ndarray

    def t0(self, j):
        return self.t01 if j == 1 else self.t02

    def t(self, j, k):
        if j == k:
            return self.t11 if j == 1 else self.t22
        return self.t12


def _fields(s):
    if isinstance(s, CssState):
        return (s.phi,)
    return (s.psi1, s.psi2)


def _tensor(s, order, css):
    g = s.grid
    ps = _fields(s)
    d1 = [cov(p, s.a1, g, 1, order) for p in ps]
    d2 = [cov(p, s.a2, g, 2, order) for p in ps]
    t00 = 0.5 * sum(np.abs(p) ** 2 for p in ps)
    t01 = sum(np.imag(np.conj(p) * d) for p, d in zip(ps, d1))
    t02 = sum(np.imag(np.conj(p) * d) for p, d in zip(ps, d2))
    pressure = laplacian(t00, g, order)
    if css:
        pressure = pressure + 2.0 * s.g * t00 * t00
    t11 = 2.0 * sum(np.abs(d) ** 2 for d in d1) - pressure
    t22 = 2.0 * sum(np.abs(d) ** 2 for d in d2) - pressure
    t12 = 2.0 * sum(np.real(np.conj(a) * b) for a, b in zip(d1, d2))
    return StressEnergy(t00, t01, t02, t11, t12, t22)


def stress_energy_sm(s: GaugedState, order: int = 2) -> StressEnergy:
    return _tensor(s, order, css=False)


def stress_energy_css(s: CssState, order: int = 2) -> StressEnergy:
    """CSS tensor; the pressure carries ``2 g T00^2`` (``T00^2`` at g = 1/2)."""
    return _tensor(s, order, css=True)


def stress_energy(s, order=2):
    return _tensor(s, order, css=isinstance(s, CssState))


def charge(s, order: int = 2) -> float:
    return float(integrate(curl(s.a1, s.a2, s.grid, order), s.grid)) / (2.0 * np.pi)


def is_quantized(c: float, tol: float = 0.05) -> bool:
    return abs(c - round(c)) <= tol


def energy_sm(s: GaugedState) -> float:
    return 0.5 * float(integrate(np.abs(s.psi1) ** 2 + np.abs(s.psi2) ** 2, s.grid))


def hamiltonian_integrand(s: GaugedState, order: int = 2) -> np.ndarray:
    g = s.grid
    cross = sum(
        np.imag(np.conj(cov(s.psi2, a, g, j, order)) * cov(s.psi1, a, g, j, order))
        for j, a in ((1, s.a1), (2, s.a2))
    )
    t00 = 0.5 * (np.abs(s.psi1) ** 2 + np.abs(s.psi2) ** 2)
    return -cross + t00 * curl(s.a1, s.a2, g, order)


def hamiltonian_flux_integrand(s: GaugedState, order: int = 2) -> np.ndarray:
    """``(d1 T02 - d2 T01) / 2``, the divergence form of the Hamiltonian density."""
    T = stress_energy_sm(s, order)
    return 0.5 * (partial(T.t02, s.grid, 1, order) - partial(T.t01, s.grid, 2, order))


def hamiltonian_sch(s: GaugedState, order: int = 2) -> tuple[float, float]:
    """Bulk and flux forms of the Hamiltonian; both vanish on decaying solutions."""
    bulk = float(integrate(hamiltonian_integrand(s, order), s.grid))
    flux = float(integrate(hamiltonian_flux_integrand(s, order), s.grid))
    return bulk, flux


def har_density(s: GaugedState, order: int = 2) -> np.ndarray:
    g = s.grid
    grad = sum(
        np.abs(cov(p, a, g, j, order)) ** 2
        for p in (s.psi1, s.psi2)
        for j, a in ((1, s.a1), (2, s.a2))
    )
    im21 = np.imag(np.conj(s.psi2) * s.psi1)
    f12 = curl(s.a1, s.a2, g, order)
    return 0.5 * (grad - s.mu * im21 * im21) - 0.5 * s.mu * f12 * f12


def energy_har(s: GaugedState, order: int = 2) -> float:
    return float(integrate(har_density(s, order), s.grid))


def energy_css(s: CssState, order: int = 2) -> tuple[float, float]:
    """``(E, tr/4)``: ``E = 1/2 int (|D phi|^2 - (g/2)|phi|^4)`` and ``int (T11 + T22) / 4``.

    At the critical coupling g = 1/2 the quartic weight is 1/4.
    """
    g = s.grid
    grad = np.abs(cov(s.phi, s.a1, g, 1, order)) ** 2 + np.abs(cov(s.phi, s.a2, g, 2, order)) ** 2
    e = 0.5 * float(integrate(grad - 0.5 * s.g * np.abs(s.phi) ** 4, g))
    T = stress_energy_css(s, order)
    return e, 0.25 * float(integrate(T.t11 + T.t22, g))


@dataclass(frozen=True)
class VirialWeight:
    """Weight ``a`` with caller-supplied derivatives (gradient, Hessian, bilaplacian)."""

    a: np.ndarray
    grad: tuple[np.ndarray, np.ndarray]
    hess: tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    bilap: np.ndarray

    @property
    def lap(self):
        return self.hess[0][0] + self.hess[1][1]


def weight_r2(grid: Grid2D) -> VirialWeight:
    x1, x2 = grid.coords
    one, zero = np.full(grid.shape, 2.0), np.zeros(grid.shape)
    return VirialWeight(x1 * x1 + x2 * x2, (2 * x1, 2 * x2), ((one, zero), (zero, one)), zero)


def weight_bracket(grid: Grid2D) -> VirialWeight:
    """``a = (1 + r^2)^(1/2)``."""
    x1, x2 = grid.coords
    q = 1.0 + x1 * x1 + x2 * x2
    a = np.sqrt(q)
    h11 = 1 / a - x1 * x1 / a**3
    h22 = 1 / a - x2 * x2 / a**3
    h12 = -x1 * x2 / a**3
    bilap = _bilap_bracket(q)
    return VirialWeight(a, (x1 / a, x2 / a), ((h11, h12), (h12, h22)), bilap)


def _bilap_bracket(q):
    # Lap a = (q + 1) q^(-3/2); for radial F(q), Lap F = 4 (q - 1) F'' + 4 F'
    f1 = q**-1.5 - 1.5 * (q + 1) * q**-2.5
    f2 = -1.5 * q**-2.5 - 1.5 * q**-2.5 + 3.75 * (q + 1) * q**-3.5
    return 4.0 * (q - 1.0) * f2 + 4.0 * f1


def f0j(s, order=2):
    """Constitutive ``(F01, F02)`` of the system the state belongs to (sm for gauged states)."""
    if isinstance(s, CssState):
        from .flows import f0j_css

        return f0j_css(s, order)
    from .flows import f0j_sm

    return f0j_sm(s, order)


def virial(s, weight: VirialWeight, order: int = 2) -> tuple[float, float, float]:
    """``(V_a, M_a, dM_a/dt)`` with the rate from the generalized virial identity.

    Gauged states: ``int 2 Re(conj(D_j psi) D_k psi) a_jk - T00 bilap(a) + 2 F_{alpha j} T_{0 alpha} a_j``.
    CSS states: the F-term cancels and ``-2g T00^2 Lap(a)`` appears instead.
    """
    g = s.grid
    T = stress_energy(s, order)
    V = float(integrate(weight.a * T.t00, g))
    M = float(integrate(T.t01 * weight.grad[0] + T.t02 * weight.grad[1], g))
    ps = _fields(s)
    d = {1: [cov(p, s.a1, g, 1, order) for p in ps], 2: [cov(p, s.a2, g, 2, order) for p in ps]}
    dens = -T.t00 * weight.bilap
    for j in (1, 2):
        for k in (1, 2):
            re = sum(np.real(np.conj(x) * y) for x, y in zip(d[j], d[k]))
            dens = dens + 2.0 * re * weight.hess[j - 1][k - 1]
    if isinstance(s, CssState):
        dens = dens - 2.0 * s.g * T.t00 * T.t00 * weight.lap
    else:
        f01, f02 = f0j(s, order)
        f12 = curl(s.a1, s.a2, g, order)
        # 2 F_{alpha j} T_{0 alpha}: j=1 -> F01 T00 + F21 T02; j=2 -> F02 T00 + F12 T01
        force1 = f01 * T.t00 - f12 * T.t02
        force2 = f02 * T.t00 + f12 * T.t01
        dens = dens + 2.0 * (force1 * weight.grad[0] + force2 * weight.grad[1])
    return V, M, float(integrate(dens, g))


def _time_derivative(prev, nxt, dt):
    return (nxt - prev) / (2.0 * dt)


def law_residual_fields(history, order: int = 2, curvature_pressure: bool = True):
    """Pointwise residuals of the conservation and balance laws at the middle state.

    ``history`` is three consecutive, equally spaced states. Returns
    ``(law1, (law2_1, law2_2))``.

    For the map systems the momentum balance carries a curvature pressure:
    ``d_t T_0j + d_k T_jk = 2 F_aj T_0a + mu d_j (F12^2)``. The F-terms of
    the momentum derivative sum to ``d_j F_kl Im(conj(psi_l) psi_k) =
    mu d_j F12^2``, not zero. Pass ``curvature_pressure=False`` to drop it.
    """
    prev, cur, nxt = history
    dt = (nxt.t - prev.t) / 2.0
    if dt <= 0:
        raise ValueError("history must be ordered with uniform positive spacing")
    g = cur.grid
    Tp, T, Tn = (stress_energy(x, order) for x in history)
    law1 = _time_derivative(Tp.t00, Tn.t00, dt) + partial(T.t01, g, 1, order) + partial(T.t02, g, 2, order)
    law2 = []
    if isinstance(cur, CssState):
        rhs = (0.0, 0.0)
    else:
        f01, f02 = f0j(cur, order)
        f12 = curl(cur.a1, cur.a2, g, order)
        rhs = [2.0 * (f01 * T.t00 - f12 * T.t02), 2.0 * (f02 * T.t00 + f12 * T.t01)]
        if curvature_pressure:
            f2 = f12 * f12
            rhs = [rhs[0] + cur.mu * partial(f2, g, 1, order), rhs[1] + cur.mu * partial(f2, g, 2, order)]
    for j in (1, 2):
        div = partial(T.t(j, 1), g, 1, order) + partial(T.t(j, 2), g, 2, order)
        law2.append(_time_derivative(Tp.t0(j), Tn.t0(j), dt) + div - rhs[j - 1])
    return law1, tuple(law2)


def law_residuals(history, order: int = 2, curvature_pressure: bool = True) -> tuple[float, float]:
    g = history[1].grid
    law1, (l21, l22) = law_residual_fields(history, order, curvature_pressure)
    return l2_norm(law1, g), float(np.sqrt(l2_norm(l21, g) ** 2 + l2_norm(l22, g) ** 2))


@dataclass
class DiagRow:
    """One sample of the monitored scalars, in CSV column order.

    For CSS states ``res_psi`` holds the curvature constraint residual
    ``||F12 + |phi|^2/2||`` (the CSV layout has no separate column for it)
    and the map-only columns are NaN.
    """

    t: float
    energy: float
    charge: float
    hamiltonian: float = float("nan")
    h_har: float = float("nan")
    virial: float = float("nan")
    morawetz: float = float("nan")
    res_law1: float = float("nan")
    res_law2: float = float("nan")
    res_theta: float = float("nan")
    res_psi: float = float("nan")

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list[float]:
        return [getattr(self, f.name) for f in fields(self)]


def css_curvature_residual(s: CssState, order: int = 2) -> float:
    return l2_norm(curl(s.a1, s.a2, s.grid, order) + 0.5 * np.abs(s.phi) ** 2, s.grid)


def diag_row(s, history=None, order: int = 2, weight: VirialWeight | None = None) -> DiagRow:
    """All monitored scalars for one state; law residuals need ``history``."""
    weight = weight or weight_r2(s.grid)
    V, M, _ = virial(s, weight, order)
    law1 = law2 = float("nan")
    if history is not None:
        law1, law2 = law_residuals(history, order)
    if isinstance(s, CssState):
        return DiagRow(s.t, energy_css(s, order)[0], charge(s, order), virial=V, morawetz=M,
                       res_law1=law1, res_law2=law2, res_psi=css_curvature_residual(s, order))
    res = constraint_residuals(s, order)
    return DiagRow(s.t, energy_sm(s), charge(s, order), hamiltonian_sch(s, order)[0],
                   energy_har(s, order), V, M, law1, law2, res.theta_norm, res.psi_norm)
