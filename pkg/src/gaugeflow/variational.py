"""Discrete space-time actions and derivative checks.

The actions are sums over the interior time levels ``1..M-2`` of a history
with weight ``h^2 dt``; time derivatives are centred. The Euler-Lagrange
fields below are the exact gradients of those sums (spatial adjoints come
from the transposed one-dimensional stencil matrices), so a directional
finite difference of the action must match the pairing up to ``O(eps^2)``.

For the connection directions these gradients are the pre-compatibility
("preliminary") field equations; they turn into the constitutive ``F_0j``
laws of the flows only once ``D1 psi2 = D2 psi1`` holds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .diagnostics import energy_har
from .flows import FlowSpec, rhs
from .gauge import CssState, GaugedState, constraint_residuals, cov, curl
from .grid import Grid2D, l2_norm, partial, tree_sum

SCH = ("sch", "sm")
MAP_FIELDS = ("psi1", "psi2", "a0", "a1", "a2")
CSS_FIELDS = ("phi", "a0", "a1", "a2")
COMPLEX = ("psi1", "psi2", "phi")


@lru_cache(maxsize=32)
def _stencil_matrix(grid: Grid2D, order: int) -> np.ndarray:
    m = partial(np.eye(grid.N), grid, 1, order)
    m.setflags(write=False)
    return m


def partial_adjoint(f: np.ndarray, grid: Grid2D, axis: int, order: int = 2) -> np.ndarray:
    """Transpose of ``partial`` with respect to the plain node sum."""
    m = _stencil_matrix(grid, order)
    if axis == 1:
        return np.einsum("ki,...kj->...ij", m, f)
    return f @ m


def _cov_adjoint(f, a, grid, axis, order):
    return partial_adjoint(f, grid, axis, order) - 1j * a * f


@dataclass(frozen=True)
class History:
    """Uniformly spaced states stacked into arrays of shape ``(M, N, N)``."""

    states: tuple
    dt: float

    def __post_init__(self):
        st = tuple(self.states)
        if len(st) < 3:
            raise ValueError("a history needs at least three states")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        g = st[0].grid
        kind = type(st[0])
        for x in st:
            if x.grid != g:
                raise ValueError("mismatched grids in history")
            if type(x) is not kind:
                raise ValueError("history mixes state kinds")
        object.__setattr__(self, "states", st)

    @property
    def grid(self) -> Grid2D:
        return self.states[0].grid

    @property
    def is_css(self) -> bool:
        return isinstance(self.states[0], CssState)

    @property
    def names(self):
        return CSS_FIELDS if self.is_css else MAP_FIELDS

    def arrays(self) -> dict:
        out = {}
        for name in self.names:
            vals = [getattr(x, name) for x in self.states]
            if name == "a0":
                vals = [np.zeros(self.grid.shape) if v is None else v for v in vals]
            out[name] = np.stack(vals)
        return out

    @classmethod
    def from_arrays(cls, template: "History", arrs: dict) -> "History":
        st = []
        for n, x in enumerate(template.states):
            st.append(x.replace(**{k: v[n] for k, v in arrs.items()}))
        return cls(tuple(st), template.dt)


@dataclass(frozen=True)
class Perturbation:
    """Direction fields keyed by field name, each ``(M, N, N)``; ``eps`` is the step."""

    fields: dict = field(default_factory=dict)
    eps: float | None = None


def check_admissible(hist: History, pert: Perturbation, margin: int = 4) -> None:
    shape = (len(hist.states),) + hist.grid.shape
    for name, d in pert.fields.items():
        if name not in hist.names:
            raise ValueError(f"perturbation field {name!r} does not belong to this history")
        d = np.asarray(d)
        if d.shape != shape:
            raise ValueError(f"perturbation {name} has shape {d.shape}, expected {shape}")
        if np.abs(d[0]).max() > 0 or np.abs(d[-1]).max() > 0:
            raise ValueError("perturbation must vanish at the first and last time levels")
        inner = np.zeros(hist.grid.shape, bool)
        inner[margin:-margin, margin:-margin] = True
        if np.abs(d[:, ~inner]).max() > 0:
            raise ValueError(f"perturbation must vanish within {margin} nodes of the boundary")


def _st_sum(a) -> float:
    """Space-time sum: all levels flattened into one pairwise tree."""
    return float(tree_sum(np.asarray(a).reshape(1, -1)))


def _dt_centred(x, dt):
    return (x[2:] - x[:-2]) / (2.0 * dt)


def _dt_adjoint(y, dt, m):
    out = np.zeros((m,) + y.shape[1:], dtype=y.dtype)
    out[2:] += y / (2.0 * dt)
    out[:-2] -= y / (2.0 * dt)
    return out


def _cs_terms(a0, a1, a2, dt, grid, order):
    """``A0 F12 - A1 F02 + A2 F01`` at the interior levels and its gradient."""
    m = a0.shape[0]
    i = slice(1, -1)
    f12 = curl(a1[i], a2[i], grid, order)
    f01 = _dt_centred(a1, dt) - partial(a0[i], grid, 1, order)
    f02 = _dt_centred(a2, dt) - partial(a0[i], grid, 2, order)
    dens = a0[i] * f12 - a1[i] * f02 + a2[i] * f01
    g0 = np.zeros_like(a0)
    g1 = np.zeros_like(a1)
    g2 = np.zeros_like(a2)
    pa = lambda f, ax: partial_adjoint(f, grid, ax, order)  # noqa: E731
    g0[i] = f12 + pa(a1[i], 2) - pa(a2[i], 1)
    g1[i] = -pa(a0[i], 2) - f02
    g1 += _dt_adjoint(a2[i], dt, m)
    g2[i] = pa(a0[i], 1) + f01
    g2 -= _dt_adjoint(a1[i], dt, m)
    return dens, (g0, g1, g2)


def _sch_parts(hist: History, order: int):
    g = hist.grid
    mu = hist.states[0].mu
    dt = hist.dt
    f = hist.arrays()
    p1, p2, a0, a1, a2 = (f[k] for k in MAP_FIELDS)
    i = slice(1, -1)
    m = p1.shape[0]
    dtp1 = _dt_centred(p1, dt) + 1j * a0[i] * p1[i]
    d1 = [cov(p[i], a1[i], g, 1, order) for p in (p1, p2)]
    d2 = [cov(p[i], a2[i], g, 2, order) for p in (p1, p2)]
    q = 0.5 * (np.abs(p1[i]) ** 2 + np.abs(p2[i]) ** 2)
    f12 = curl(a1[i], a2[i], g, order)
    cs, (c0, c1, c2) = _cs_terms(a0, a1, a2, dt, g, order)
    dens = (
        np.real(np.conj(p2[i]) * dtp1)
        - np.imag(np.conj(d1[1]) * d1[0] + np.conj(d2[1]) * d2[0])
        + q * f12
        + 0.5 * mu * cs
    )
    return g, mu, dt, m, f, dtp1, d1, d2, q, f12, dens, (c0, c1, c2)


def action_sch(hist: History, order: int = 2) -> float:
    """Discrete Schrödinger-map action (map histories; ``a0=None`` counts as zero)."""
    if hist.is_css:
        raise TypeError("action_sch needs a history of GaugedStates")
    g, *_, dens, _ = _sch_parts(hist, order)
    return g.h**2 * hist.dt * _st_sum(dens)


def el_fields_sch(hist: History, order: int = 2) -> dict:
    """Gradients of ``action_sch / (h^2 dt)`` per node.

    Complex entries are ``dS/da + i dS/db`` for ``psi = a + ib``.
    """
    g, mu, dt, m, f, dtp1, d1, d2, q, f12, _, (c0, c1, c2) = _sch_parts(hist, order)
    p1, p2, a0, a1, a2 = (f[k] for k in MAP_FIELDS)
    i = slice(1, -1)
    ca = lambda x, a, ax: _cov_adjoint(x, a, g, ax, order)  # noqa: E731
    pa = lambda x, ax: partial_adjoint(x, g, ax, order)  # noqa: E731

    e1 = np.zeros_like(p1)
    e2 = np.zeros_like(p2)
    e1 += _dt_adjoint(p2[i], dt, m)
    e1[i] += -1j * a0[i] * p2[i] + ca(-1j * d1[1], a1[i], 1) + ca(-1j * d2[1], a2[i], 2) + f12 * p1[i]
    e2[i] = dtp1 + ca(1j * d1[0], a1[i], 1) + ca(1j * d2[0], a2[i], 2) + f12 * p2[i]

    ea0 = 0.5 * mu * c0
    ea1 = 0.5 * mu * c1
    ea2 = 0.5 * mu * c2
    ea0[i] += -np.imag(np.conj(p2[i]) * p1[i])
    ea1[i] += np.real(np.conj(p2[i]) * d1[0]) - np.real(np.conj(d1[1]) * p1[i]) - pa(q, 2)
    ea2[i] += np.real(np.conj(p2[i]) * d2[0]) - np.real(np.conj(d2[1]) * p1[i]) + pa(q, 1)
    return {"psi1": e1, "psi2": e2, "a0": ea0, "a1": ea1, "a2": ea2}


def _css_parts(hist: History, order: int):
    g = hist.grid
    dt = hist.dt
    gc = hist.states[0].g
    f = hist.arrays()
    phi, a0, a1, a2 = (f[k] for k in CSS_FIELDS)
    i = slice(1, -1)
    m = phi.shape[0]
    dtphi = _dt_centred(phi, dt) + 1j * a0[i] * phi[i]
    d = [cov(phi[i], a1[i], g, 1, order), cov(phi[i], a2[i], g, 2, order)]
    mod2 = np.abs(phi[i]) ** 2
    cs, grads = _cs_terms(a0, a1, a2, dt, g, order)
    dens = 0.5 * (
        np.imag(np.conj(phi[i]) * dtphi)
        + np.abs(d[0]) ** 2 + np.abs(d[1]) ** 2
        - 0.5 * gc * mod2 * mod2
    ) + 0.5 * cs
    return g, gc, dt, m, f, d, mod2, dens, grads


def action_css(hist: History, order: int = 2) -> float:
    """Discrete Chern-Simons-Schrödinger action."""
    if not hist.is_css:
        raise TypeError("action_css needs a history of CssStates")
    g, *_, dens, _ = _css_parts(hist, order)
    return g.h**2 * hist.dt * _st_sum(dens)


def el_fields_css(hist: History, order: int = 2) -> dict:
    g, gc, dt, m, f, d, mod2, _, (c0, c1, c2) = _css_parts(hist, order)
    phi, a0, a1, a2 = (f[k] for k in CSS_FIELDS)
    i = slice(1, -1)
    ca = lambda x, a, ax: _cov_adjoint(x, a, g, ax, order)  # noqa: E731

    e = 0.5 * 1j * _dt_adjoint(phi[i], dt, m)
    e[i] += (
        -0.5j * _dt_centred(phi, dt)
        + a0[i] * phi[i]
        + ca(d[0], a1[i], 1)
        + ca(d[1], a2[i], 2)
        - gc * mod2 * phi[i]
    )
    ea0 = 0.5 * c0
    ea1 = 0.5 * c1
    ea2 = 0.5 * c2
    ea0[i] += 0.5 * mod2
    ea1[i] += np.imag(np.conj(phi[i]) * d[0])
    ea2[i] += np.imag(np.conj(phi[i]) * d[1])
    return {"phi": e, "a0": ea0, "a1": ea1, "a2": ea2}


def _action(hist, system, order):
    if system in SCH:
        return action_sch(hist, order)
    if system == "css":
        return action_css(hist, order)
    raise ValueError(f"unknown system {system!r}")


def _pairing(hist, el, pert):
    total = 0.0
    for name, d in pert.fields.items():
        e = el[name]
        prod = np.real(np.conj(e) * d) if name in COMPLEX else e * d
        total += _st_sum(prod)
    return hist.grid.h**2 * hist.dt * total


def field_scale(hist: History) -> float:
    return max(max(float(np.abs(v).max()) for v in hist.arrays().values()), 1.0)


def variational_check(hist: History, pert: Perturbation, system: str = "sch", order: int = 2,
                      margin: int = 4):
    """``(fd_derivative, el_pairing, rel_err)`` of the action along ``pert``."""
    check_admissible(hist, pert, margin)
    if all(not np.any(d) for d in pert.fields.values()):
        return 0.0, 0.0, 0.0
    eps = pert.eps if pert.eps is not None else 1e-5 * field_scale(hist)
    base = hist.arrays()

    def shifted(c):
        arrs = {k: v + c * pert.fields[k] if k in pert.fields else v for k, v in base.items()}
        arrs = {k: v for k, v in arrs.items() if not (k == "a0" and k not in pert.fields)}
        return History.from_arrays(hist, arrs)

    fd = (_action(shifted(eps), system, order) - _action(shifted(-eps), system, order)) / (2.0 * eps)
    el = el_fields_sch(hist, order) if system in SCH else el_fields_css(hist, order)
    pair = _pairing(hist, el, pert)
    rel = abs(fd - pair) / max(abs(fd), abs(pair), 1e-300)
    return fd, pair, rel


def preliminary_f0j(s: GaugedState, order: int = 2):
    """Connection equations before compatibility is used: ``(F01, F02)``.

    ``mu F01 = Re(conj(psi1) D_j psi_j) + Re(conj(psi2)(D1 psi2 - D2 psi1))``
    ``mu F02 = Re(conj(psi2) D_j psi_j) + Re(conj(psi1)(D2 psi1 - D1 psi2))``
    """
    g = s.grid
    d11 = cov(s.psi1, s.a1, g, 1, order)
    d22 = cov(s.psi2, s.a2, g, 2, order)
    theta = cov(s.psi2, s.a1, g, 1, order) - cov(s.psi1, s.a2, g, 2, order)
    tension = d11 + d22
    f01 = np.real(np.conj(s.psi1) * tension) + np.real(np.conj(s.psi2) * theta)
    f02 = np.real(np.conj(s.psi2) * tension) - np.real(np.conj(s.psi1) * theta)
    return s.mu * f01, s.mu * f02


# random test inputs -----------------------------------------------------------------

def _smooth(grid, rng, n_bumps=3, margin=6, width=None):
    """Sum of Gaussian bumps, cut off ``margin`` nodes from the edges."""
    x1, x2 = grid.coords
    L = grid.L
    width = width or 0.25 * L
    out = np.zeros(grid.shape)
    for _ in range(n_bumps):
        c = rng.uniform(-0.4 * L, 0.4 * L, size=2)
        out += rng.normal() * np.exp(-((x1 - c[0]) ** 2 + (x2 - c[1]) ** 2) / width**2)
    mask = np.zeros(grid.shape)
    mask[margin:-margin, margin:-margin] = 1.0
    return out * mask


def random_history(grid: Grid2D, rng, levels: int = 5, dt: float = 0.05, system: str = "sch",
                   mu: int = 1, g: float = 0.5) -> History:
    """Smooth random space-time fields (not a solution of anything)."""
    states = []
    base = {}
    names = CSS_FIELDS if system == "css" else MAP_FIELDS
    for name in names:
        shape_t = rng.normal(size=3)
        spatial = [_smooth(grid, rng) for _ in range(2 if name in COMPLEX else 1)]
        base[name] = (shape_t, spatial)
    for n in range(levels):
        t = n * dt
        vals = {}
        for name, (c, spatial) in base.items():
            amp = 1.0 + c[0] * t + c[1] * t * t + c[2] * np.sin(3 * t)
            if name in COMPLEX:
                vals[name] = amp * (spatial[0] + 1j * spatial[1])
            else:
                vals[name] = amp * spatial[0]
        if system == "css":
            states.append(CssState(grid, vals["phi"], vals["a1"], vals["a2"], vals["a0"], g=g, t=t))
        else:
            states.append(GaugedState(grid, mu, vals["psi1"], vals["psi2"], vals["a1"], vals["a2"],
                                      vals["a0"], t=t))
    return History(tuple(states), dt)


def random_perturbation(hist: History, rng, names=None, margin: int = 4) -> Perturbation:
    """Smooth direction fields supported away from the boundary and the end levels."""
    names = hist.names if names is None else tuple(names)
    m = len(hist.states)
    out = {}
    for name in names:
        d = np.zeros((m,) + hist.grid.shape, dtype=complex if name in COMPLEX else float)
        for n in range(1, m - 1):
            a = _smooth(hist.grid, rng, margin=margin + 1)
            if name in COMPLEX:
                a = a + 1j * _smooth(hist.grid, rng, margin=margin + 1)
            d[n] = a
        out[name] = d / max(np.abs(d).max(), 1e-300)
    return Perturbation(out)


# gradient flow of the H_Har energy ----------------------------------------------------

def gradient_check_har(s: GaugedState, n_probes: int = 64, seed: int = 0, order: int = 2,
                       margin: int = 4, eps: float | None = None):
    """Compare the hmhf_appendix right-hand side with finite differences of ``energy_har``.

    The psi-part must equal ``-dH/d conj(psi)`` per node (descent); the
    connection part must equal ``mu dH/dA``, which is descent for
    ``mu = -1`` and ascent for ``mu = +1``. Probes are random nodes at least
    ``margin`` nodes from the edge. Errors are ``max|fd - rhs| / max|rhs|``
    over the probes, per part.
    """
    g = s.grid
    spec = FlowSpec("hmhf_appendix", dt=1.0, order=order, cfl_guard=False)
    r = rhs(s.replace(a0=None), spec)
    scale = max(float(np.abs(s.psi1).max()), float(np.abs(s.psi2).max()),
                float(np.abs(s.a1).max()), float(np.abs(s.a2).max()), 1.0)
    eps = 1e-5 * scale if eps is None else eps
    rng = np.random.default_rng(seed)
    lo, hi = margin, g.N - margin
    nodes = rng.integers(lo, hi, size=(n_probes, 2))
    h2 = g.h**2

    def fd(name, idx, unit):
        arr = getattr(s, name)
        plus = arr.copy()
        minus = arr.copy()
        plus[idx] += unit * eps
        minus[idx] -= unit * eps
        return (energy_har(s.replace(**{name: plus}), order)
                - energy_har(s.replace(**{name: minus}), order)) / (2.0 * eps * h2)

    psi_fd, psi_an, a_fd, a_an = [], [], [], []
    for i, j in nodes:
        idx = (int(i), int(j))
        for k, name in enumerate(("psi1", "psi2")):
            grad = fd(name, idx, 1.0) + 1j * fd(name, idx, 1j)
            psi_fd.append(-grad)
            psi_an.append(r[k][idx])
        for k, name in enumerate(("a1", "a2")):
            a_fd.append(s.mu * fd(name, idx, 1.0))
            a_an.append(r[2 + k][idx])

    def err(a, b):
        a, b = np.asarray(a), np.asarray(b)
        den = np.abs(b).max()
        if den == 0:
            return float(np.abs(a).max())
        return float(np.abs(a - b).max() / den)

    return err(psi_fd, psi_an), err(a_fd, a_an)


def har_gradient_norm(s: GaugedState, order: int = 2) -> float:
    """L2 norm of the hmhf_appendix right-hand side (zero at critical points)."""
    spec = FlowSpec("hmhf_appendix", dt=1.0, order=order, cfl_guard=False)
    r = rhs(s, spec)
    return float(np.sqrt(sum(l2_norm(x, s.grid) ** 2 for x in r)))


def har_kinetic_rate(s: GaugedState, order: int = 2) -> float:
    """``int F_0j T_0j`` with the Schrödinger-map ``F_0j``.

    Along Schrödinger-map runs this matches the time derivative of
    ``(1/2) int (|D psi|^2 - mu Im(conj(psi2) psi1)^2)``.
    """
    from .diagnostics import stress_energy
    from .flows import f0j_sm
    from .grid import integrate

    T = stress_energy(s, order)
    f01, f02 = f0j_sm(s, order)
    return float(integrate(f01 * T.t01 + f02 * T.t02, s.grid))


def har_kinetic(s: GaugedState, order: int = 2) -> float:
    from .grid import integrate

    g = s.grid
    grad = sum(np.abs(cov(p, a, g, j, order)) ** 2 for p in (s.psi1, s.psi2) for j, a in ((1, s.a1), (2, s.a2)))
    im21 = np.imag(np.conj(s.psi2) * s.psi1)
    return float(integrate(0.5 * (grad - s.mu * im21 * im21), g))


# constraint propagation ---------------------------------------------------------------

@dataclass(frozen=True)
class GrowthReport:
    times: np.ndarray
    theta: np.ndarray
    psi: np.ndarray
    rate_bound: float  # sup(|psi1|^2 + |psi2|^2) + 0.5
    slope: float  # least-squares slope of log(|Theta| + |Psi|)
    within_envelope: bool


def seed_theta(s: GaugedState, size: float = 1e-4, seed: int = 0, order: int = 2) -> GaugedState:
    """Add a smooth compact bump to ``psi2`` so that ``||Theta - Theta_0|| = size``."""
    rng = np.random.default_rng(seed)
    g = s.grid
    bump = _smooth(g, rng, n_bumps=2, margin=8, width=0.15 * g.L).astype(complex)
    bump = bump * np.exp(1j * rng.uniform(0, 2 * np.pi))
    dtheta = cov(bump, s.a1, g, 1, order)
    c = size / l2_norm(dtheta, g)
    return s.replace(psi2=s.psi2 + c * bump)


def constraint_propagation_check(run, baseline=None, order: int = 2) -> GrowthReport:
    """Gronwall test on a list of states from ``flows.trajectory``.

    Each of ``||Theta||`` and ``||Psi||`` must stay below its initial value
    times ``exp(rate t)``, with rate ``sup(|psi1|^2 + |psi2|^2) + 0.5``
    (the sup is taken over the whole run). With ``baseline`` (an unperturbed
    run sampled at the same times) the residual fields of the baseline are
    subtracted first, which isolates a seeded perturbation from the
    ``O(h^2)`` truncation residual of the data itself.
    """
    t = np.array([x.t for x in run])
    res = [constraint_residuals(x, order) for x in run]
    if baseline is not None:
        if len(baseline) != len(run):
            raise ValueError("baseline run must be sampled at the same times")
        g = run[0].grid
        base = [constraint_residuals(x, order) for x in baseline]
        th = np.array([l2_norm(r.theta - b.theta, g) for r, b in zip(res, base)])
        ps = np.array([l2_norm(r.psi_curv - b.psi_curv, g) for r, b in zip(res, base)])
    else:
        th = np.array([r.theta_norm for r in res])
        ps = np.array([r.psi_norm for r in res])
    rate = max(float((np.abs(x.psi1) ** 2 + np.abs(x.psi2) ** 2).max()) for x in run) + 0.5
    tt = t - t[0]
    envelope = np.exp(rate * tt)
    ok = bool(np.all(th <= th[0] * envelope) and np.all(ps <= ps[0] * envelope))
    y = np.log(th + ps)
    slope = float(np.polyfit(tt, y, 1)[0]) if len(t) > 1 and tt[-1] > 0 else 0.0
    return GrowthReport(t, th, ps, rate, slope, ok)
