"""Acceptance suite: one test (and one printed PASS/FAIL line) per criterion.

The long Schrödinger-map runs (N=256, dt=5e-5, T=0.1, 2000 RK4 steps each)
are shared between criteria through module-scoped fixtures.
"""
import filecmp
import warnings

import numpy as np
import pytest
from conftest import record_criterion

from gaugeflow.cli import cli_main, css_fixture_residuals
from gaugeflow.diagnostics import (
    charge,
    energy_css,
    energy_sm,
    hamiltonian_sch,
    law_residuals,
    stress_energy,
    virial,
    weight_r2,
)
from gaugeflow.flows import FlowSpec, rhs, step_rk4, trajectory
from gaugeflow.gauge import constraint_residuals, curl
from gaugeflow.grid import integrate, l2_norm, make_grid
from gaugeflow.maps import (
    MapField,
    bump_map,
    embed,
    gauge_from_map,
    map_frame,
    path_independence_residual,
    reconstruct_frame,
)
from gaugeflow.solitons import jackiw_pi_data, self_dual_data
from gaugeflow.variational import (
    constraint_propagation_check,
    gradient_check_har,
    har_gradient_norm,
    random_history,
    random_perturbation,
    seed_theta,
    variational_check,
)

L = 8.0
N = 256
DT = 5e-5
T_END = 0.1
DIAG_EVERY = 100


def s1(n=N, order_boundary="open"):
    return self_dual_data(1, make_grid(L, n, order_boundary))


def b1(n=N, mu=1):
    return gauge_from_map(bump_map(make_grid(L, n, "dirichlet_zero"), 0.5, mu))


def _sm_run(state, dt=DT, every=DIAG_EVERY):
    spec = FlowSpec("sm", dt, T_END)
    samples = []
    hist = {}

    def keep(i, x):
        samples.append(x)

    from gaugeflow.flows import evolve

    final, rows = evolve(state, spec, every, callback=keep)
    hist["rows"] = rows
    hist["states"] = samples
    hist["spec"] = spec
    return hist


@pytest.fixture(scope="module")
def s1_run():
    return _sm_run(s1())


@pytest.fixture(scope="module")
def b1_run():
    return _sm_run(b1())


@pytest.fixture(scope="module")
def b1_run_coarse():
    return _sm_run(b1(N // 2), dt=2 * DT, every=DIAG_EVERY // 2)


# 1 ----------------------------------------------------------------------------------

def test_c01_soliton_fixture_exactness():
    # evaluated with the order-4 stencils; order-2 numbers are reported alongside
    res = {n: constraint_residuals(s1(n), order=4) for n in (256, 512)}
    th, ps = res[256].theta_norm, res[256].psi_norm
    r_th = th / res[512].theta_norm
    r_ps = ps / res[512].psi_norm
    o2 = constraint_residuals(s1(256), order=2)
    ok = th <= 5e-3 and ps <= 5e-3 and r_th >= 3.5 and r_ps >= 3.5
    record_criterion(1, "S1 constraint residuals", ok,
                     f"order4 N=256 |Theta|={th:.2e} |Psi|={ps:.2e} (tol 5e-3); ratios N->512 "
                     f"{r_th:.1f}, {r_ps:.1f} (need >=3.5); order2 N=256 {o2.theta_norm:.2e}, {o2.psi_norm:.2e}")
    assert ok


# 2 ----------------------------------------------------------------------------------

def test_c02_charge_quantization_and_conservation(s1_run):
    c0 = charge(s1())
    charges = np.array([r.charge for r in s1_run["rows"]])
    drift = float(np.abs(charges - charges[0]).max())
    ok = abs(c0 + 2.0) <= 0.05 and drift <= 1e-6
    record_criterion(2, "charge quantization / conservation", ok,
                     f"charge(S1)={c0:.5f} (-2 +- 0.05); sm run drift {drift:.2e} (tol 1e-6)")
    assert ok


# 3 ----------------------------------------------------------------------------------

def test_c03_energy_conservation_and_har_descent(b1_run):
    e = np.array([r.energy for r in b1_run["rows"]])
    drift = float(np.abs(e - e[0]).max() / e[0])
    g = make_grid(L, 128, "dirichlet_zero")
    spec = FlowSpec("hmhf_appendix", 0.2 * g.h**2, T_END)
    from gaugeflow.flows import evolve

    _, rows = evolve(b1(128), spec, diag_every=8)
    h = np.array([r.h_har for r in rows])
    dh = np.diff(h)
    ok = drift <= 1e-5 and bool(np.all(dh < 0))
    record_criterion(3, "energy conservation / H_Har descent", ok,
                     f"sm B1 relative energy drift {drift:.2e} (tol 1e-5); hmhf_appendix max dH_Har "
                     f"{dh.max():.3e} over {len(h)} samples (need < 0)")
    assert ok


# 4 ----------------------------------------------------------------------------------

def test_c04_hamiltonian_vanishing(s1_run, b1_run):
    worst_h = 0.0
    worst_gap = 0.0
    states = [s1(), b1()] + s1_run["states"] + b1_run["states"]
    for s in states:
        e = energy_sm(s)
        bulk, flux = hamiltonian_sch(s)
        worst_h = max(worst_h, abs(bulk) / e)
        worst_gap = max(worst_gap, abs(bulk - flux) / e)
    ok = worst_h <= 1e-2 and worst_gap <= 2e-2
    record_criterion(4, "Hamiltonian vanishing", ok,
                     f"max |H_Sch|/E {worst_h:.2e} (tol 1e-2); max |bulk-flux|/E {worst_gap:.2e} (tol 2e-2) "
                     f"over {len(states)} states")
    assert ok


# 5 ----------------------------------------------------------------------------------

def test_c05_law_residual_convergence(b1_run, b1_run_coarse):
    fine = b1_run["rows"]
    coarse = b1_run_coarse["rows"]
    assert [round(r.t, 9) for r in fine] == [round(r.t, 9) for r in coarse]
    r1 = min(c.res_law1 / f.res_law1 for c, f in zip(coarse, fine))
    r2 = min(c.res_law2 / f.res_law2 for c, f in zip(coarse, fine))
    ok = r1 >= 3.5 and r2 >= 3.5
    record_criterion(5, "conservation/balance law convergence", ok,
                     f"min reduction over {len(fine)} samples: law1 {r1:.2f}x, law2 {r2:.2f}x (need >=3.5x); "
                     f"fine law1 {fine[-1].res_law1:.2e}, law2 {fine[-1].res_law2:.2e}")
    assert ok


# 6 ----------------------------------------------------------------------------------

def _perturbed_jp(n, beta=1.0):
    s = jackiw_pi_data(make_grid(L, n, "open"))
    r2 = s.grid.r2
    return s.replace(phi=s.phi * np.exp(1j * beta * r2 * np.exp(-r2 / 8.0)))


def css_virial_ratio(n=256, order=4, k=8):
    s = _perturbed_jp(n)
    spec = FlowSpec("css", 0.2 * s.grid.h**2, 0.0, order=order)
    w = weight_r2(s.grid)
    states = [s]
    for _ in range(2 * k):
        states.append(step_rk4(states[-1], spec))
    v = [virial(x, w, order)[0] for x in states]
    d = k * spec.dt
    vpp = (v[0] - 2 * v[k] + v[2 * k]) / d**2
    e = energy_css(states[k], order)[0]
    return vpp, e


def test_c06a_sm_virial(b1_run):
    rows = b1_run["rows"]
    t = np.array([r.t for r in rows])
    v = np.array([r.virial for r in rows])
    m = np.array([r.morawetz for r in rows])
    dvdt = (v[2:] - v[:-2]) / (t[2:] - t[:-2])
    err = float(np.abs(dvdt - m[1:-1]).max() / np.abs(m[1:-1]).max())
    ok = err <= 0.02
    record_criterion("6a", "sm virial dV/dt = M", ok,
                     f"max |dV/dt - M| / max|M| = {err:.2e} over {len(dvdt)} centred samples (tol 2e-2)")
    assert ok


def test_c06b_css_virial_4E():
    vpp, e = css_virial_ratio()
    err = abs(vpp - 4 * e) / abs(4 * e)
    ok = err <= 0.01
    record_criterion("6b", "css virial d2V/dt2 = 4E", ok,
                     f"d2V/dt2={vpp:.4f}, 4E={4 * e:.4f}, rel err {err:.2e} (tol 1e-2); "
                     f"measured ratio {vpp / e:.3f} (the Morawetz identity gives 8)")
    assert ok


def test_c06b_companion_css_virial_is_8E():
    vpp, e = css_virial_ratio()
    assert abs(vpp / e - 8.0) <= 0.02 * 8.0


# 7 ----------------------------------------------------------------------------------

def test_c07_stationarity():
    s = s1()
    g = s.grid
    norms = {}
    drifts = {}
    for system in ("sm", "hmhf_main", "hmhf_appendix"):
        spec = FlowSpec(system, 0.2 * g.h**2, T_END, order=4)
        norms[system] = max(l2_norm(x, g) for x in rhs(s, spec))
        end = trajectory(s, spec, every=10**9)[-1]
        num = np.sqrt(l2_norm(end.psi1 - s.psi1, g) ** 2 + l2_norm(end.psi2 - s.psi2, g) ** 2)
        den = np.sqrt(l2_norm(s.psi1, g) ** 2 + l2_norm(s.psi2, g) ** 2)
        drifts[system] = num / den
    ok = max(norms.values()) <= 5e-3 and max(drifts.values()) <= 1e-3
    record_criterion(7, "S1 stationarity (order-4 stencils)", ok,
                     "rhs norms " + ", ".join(f"{k}={v:.2e}" for k, v in norms.items())
                     + " (tol 5e-3); drift " + ", ".join(f"{k}={v:.2e}" for k, v in drifts.items())
                     + " (tol 1e-3)")
    assert ok


# 8 ----------------------------------------------------------------------------------

def test_c08_variational_oracle():
    worst = {}
    for order, tol in ((2, 1e-4), (4, 1e-5)):
        for boundary in ("periodic", "dirichlet_zero"):
            g = make_grid(4.0, 32, boundary)
            for seed in range(20):
                rng = np.random.default_rng(seed)
                for system in ("sch", "css"):
                    hist = random_history(g, rng, system=system, mu=1 if seed % 2 == 0 else -1)
                    for name in hist.names:
                        pert = random_perturbation(hist, rng, [name])
                        rel = variational_check(hist, pert, system, order)[2]
                        key = (order, system, name)
                        worst[key] = max(worst.get(key, 0.0), rel / tol)
    ok = max(worst.values()) <= 1.0
    o2 = max(v for k, v in worst.items() if k[0] == 2) * 1e-4
    o4 = max(v for k, v in worst.items() if k[0] == 4) * 1e-5
    record_criterion(8, "variational oracle", ok,
                     f"20 seeds x directions psi1,psi2,A0,A1,A2 (sch) and phi,A0,A1,A2 (css): "
                     f"max rel_err order2 {o2:.2e} (tol 1e-4), order4 {o4:.2e} (tol 1e-5)")
    assert ok


# 9 ----------------------------------------------------------------------------------

def _random_map(grid, rng, mu):
    x1, x2 = grid.coords
    w = np.zeros(grid.shape, complex)
    for _ in range(3):
        c = rng.uniform(-2, 2, size=2)
        amp = (rng.normal() + 1j * rng.normal()) * 0.3
        w += amp * np.exp(-((x1 - c[0]) ** 2 + (x2 - c[1]) ** 2) / 2.0)
    if mu == -1:
        w *= 0.8 / max(np.abs(w).max(), 1.0)
    return MapField(grid, w, mu)


def test_c09_gradient_flow_oracle():
    errs = []
    for seed in range(4):
        rng = np.random.default_rng(seed)
        mu = 1 if seed % 2 == 0 else -1
        s = gauge_from_map(_random_map(make_grid(6.0, 64, "dirichlet_zero"), rng, mu))
        errs.append(max(gradient_check_har(s, seed=seed)))
    n1 = har_gradient_norm(s1(128))
    n2 = har_gradient_norm(s1(256))
    h2 = make_grid(L, 256).h ** 2
    c = n2 / h2
    ok = max(errs) <= 1e-4 and c <= 30.0 and n1 / n2 >= 3.5
    record_criterion(9, "gradient-flow oracle", ok,
                     f"max gradient_check_har error {max(errs):.2e} (tol 1e-4); S1 gradient norm "
                     f"{n2:.3e} = {c:.1f} h^2 at N=256 (C<=30), N128->256 ratio {n1 / n2:.2f}")
    assert ok


# 10 ---------------------------------------------------------------------------------

def _roundtrip(m):
    s = gauge_from_map(m)
    c = m.grid.N // 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fr = reconstruct_frame(s, Phi_center=map_frame(m.w, m.mu)[c, c])
        pi = path_independence_residual(s)
    err = float(np.abs(fr.phi - embed(m.w, m.mu)).max())
    return err, float(fr.group_residual().max()), pi


def _s1_map(n):
    g = make_grid(L, n, "open")
    x1, x2 = g.coords
    z = x1 + 1j * x2
    return MapField(g, z, 1, (np.ones_like(z), 1j * np.ones_like(z)))


def test_c10_reconstruction():
    cases = {
        "S1": lambda n: _s1_map(n),
        "B1 mu=+1": lambda n: bump_map(make_grid(L, n, "dirichlet_zero"), 0.5, 1),
        "B1 mu=-1": lambda n: bump_map(make_grid(L, n, "dirichlet_zero"), 0.5, -1),
    }
    parts = []
    ok = True
    for name, mk in cases.items():
        e1, _, _ = _roundtrip(mk(128))
        e2, gr, pi = _roundtrip(mk(256))
        good = e1 / e2 >= 3.5 and gr <= 1e-10 and pi <= 5e-3
        ok &= good
        parts.append(f"{name}: map err {e2:.1e} (ratio {e1 / e2:.1f}), group {gr:.1e}, path {pi:.1e}")
    record_criterion(10, "frame reconstruction", ok,
                     "; ".join(parts) + " (need ratio>=3.5, group<=1e-10, path<=5e-3)")
    assert ok


# 11 ---------------------------------------------------------------------------------

def test_c11_constraint_propagation():
    g = make_grid(L, 128, "dirichlet_zero")
    base = b1(128)
    seeded = seed_theta(base, 1e-4)
    parts = []
    ok = True
    for system in ("sm", "hmhf_main", "hmhf_appendix"):
        spec = FlowSpec(system, 0.2 * g.h**2, 0.2)
        rep = constraint_propagation_check(trajectory(seeded, spec, every=8), trajectory(base, spec, every=8))
        ok &= rep.within_envelope
        growth = (rep.theta[-1] + rep.psi[-1]) / (rep.theta[0] + rep.psi[0])
        parts.append(f"{system}: growth {growth:.3f} vs envelope {np.exp(rep.rate_bound * 0.2):.3f}")
    record_criterion(11, "constraint propagation (Gronwall)", ok,
                     "seeded |dTheta|=1e-4, T=0.2; " + "; ".join(parts))
    assert ok


# 12 ---------------------------------------------------------------------------------

def test_c12_css_fixture():
    s = jackiw_pi_data(make_grid(L, N, "open"))
    res = css_fixture_residuals(s, order=4)
    e = energy_css(s, order=4)[0]
    f = integrate(curl(s.a1, s.a2, s.grid, 4), s.grid)
    t00 = integrate(stress_energy(s, 4).t00, s.grid)
    rel = abs(f + t00) / t00
    ok = max(res.values()) <= 5e-3 and abs(e) <= 1e-2 and rel <= 1e-3
    record_criterion(12, "Jackiw-Pi fixture (order-4 stencils)", ok,
                     "residuals " + ", ".join(f"{k}={v:.1e}" for k, v in res.items())
                     + f" (tol 5e-3); E_css={e:.2e} (0 +- 1e-2); int F12 vs -int T00 rel {rel:.1e} (tol 1e-3)")
    assert ok


# 13 ---------------------------------------------------------------------------------

def test_c13_determinism(tmp_path):
    args = ["evolve", "--system", "sm", "--init", "bump:amp=0.5", "--L", "8", "--N", "64",
            "--dt", "1e-3", "--T", "0.02", "--diag-every", "5"]
    codes = [cli_main(args + ["--out", str(tmp_path / d)]) for d in ("a", "b")]
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = all(filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False)
               for f in files if f != "config.echo.json")
    ok = codes == [0, 0] and same and "diag.csv" in files
    record_criterion(13, "determinism", ok,
                     f"two identical CLI runs: exit codes {codes}, {len(files) - 1} artifacts byte-identical={same}")
    assert ok
