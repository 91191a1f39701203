"""Command-line driver: ``gaugeflow evolve|diagnose|soliton|reconstruct|varcheck``.

Exit codes: 0 success, 2 validation error (bad flags, bad config, CFL
violation, ...), 3 numerical abort (non-finite fields, Poisson failure,
unreadable snapshot, failed check).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .diagnostics import diag_row
from .flows import SYSTEMS, FlowSpec, NumericalAbort, evolve
from .gauge import CssState, PoissonError, constraint_residuals, coulomb_project
from .grid import BOUNDARIES, make_grid
from .io import SnapshotError, read_snapshot, write_snapshot, write_timeseries

log = logging.getLogger("gaugeflow")

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 2, 3


REQUIRED = ("system", "init", "dt", "T")  # no silent defaults for the physics of a run


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    system: str = "sm"
    L: float = 8.0
    N: int = 128
    boundary: str | None = None  # None: open for soliton / jackiw_pi, dirichlet_zero otherwise
    mu: int = 1
    dt: float = 5e-5
    T: float = 0.01
    diag_every: int = 100
    order: int = 2
    init: str = "bump:amp=0.5"
    gauge: str = "temporal"
    out: str = "gaugeflow_out"
    seed: int = 0
    css_tol: float = 1e-6

    def resolved_boundary(self) -> str:
        if self.boundary is not None:
            return self.boundary
        kind = self.init.split(":", 1)[0]
        return "open" if kind in ("soliton", "jackiw_pi") else "dirichlet_zero"

    def validate(self) -> None:
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown system {self.system!r}")
        if self.boundary is not None and self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.mu not in (1, -1):
            raise ValueError("mu must be +1 or -1")
        if self.gauge not in ("temporal", "coulomb_reproject"):
            raise ValueError("gauge must be temporal or coulomb_reproject")
        if self.gauge == "coulomb_reproject" and self.system == "css":
            raise ValueError("Coulomb reprojection is only implemented for the map systems")
        if self.diag_every < 1:
            raise ValueError("diag_every must be >= 1")
        if self.system == "css" and not self.init.startswith(("jackiw_pi", "file:")):
            raise ValueError("css runs start from jackiw_pi or a CSS snapshot")
        if self.system != "css" and self.init.startswith("jackiw_pi"):
            raise ValueError("jackiw_pi data belong to the css system")
        make_grid(self.L, self.N, self.resolved_boundary())
        FlowSpec(self.system, self.dt, self.T, order=self.order).check(make_grid(self.L, self.N))


def _parse_init(spec: str) -> tuple[str, dict]:
    kind, _, rest = spec.partition(":")
    if kind == "file":
        return kind, {"path": rest}
    params = {}
    for item in filter(None, rest.split(",")):
        k, eq, v = item.partition("=")
        if not eq:
            raise ValueError(f"bad init parameter {item!r}")
        params[k.strip()] = v.strip()
    return kind, params


def initial_state(cfg: RunConfig):
    from .maps import bump_data
    from .solitons import jackiw_pi_data, self_dual_data

    grid = make_grid(cfg.L, cfg.N, cfg.resolved_boundary())
    kind, p = _parse_init(cfg.init)
    if kind == "soliton":
        return self_dual_data(int(p.get("n", 1)), grid, cfg.mu)
    if kind == "bump":
        return bump_data(grid, float(p.get("amp", 0.5)), cfg.mu)
    if kind == "jackiw_pi":
        s = jackiw_pi_data(grid, int(p.get("n", 1)))
        if p.get("a0", "keep") == "drop":
            s = s.replace(a0=None)
        return s
    if kind == "file":
        s = read_snapshot(p["path"], grid.boundary)
        if s.grid.N != cfg.N or s.grid.L != cfg.L:
            raise ValueError("snapshot grid does not match --L/--N")
        return s
    raise ValueError(f"unknown init spec {cfg.init!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gaugeflow", description="Gauged Schrödinger-map, heat-flow and CSS solver")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ev = sub.add_parser("evolve", help="integrate a flow and write snapshots + diag.csv")
    ev.add_argument("--config", help="JSON file with RunConfig fields (flags win)")
    ev.add_argument("--system", choices=SYSTEMS)
    ev.add_argument("--L", type=float)
    ev.add_argument("--N", type=int)
    ev.add_argument("--boundary", choices=BOUNDARIES)
    ev.add_argument("--mu", type=int, choices=(1, -1))
    ev.add_argument("--dt", type=float)
    ev.add_argument("--T", type=float)
    ev.add_argument("--diag-every", dest="diag_every", type=int)
    ev.add_argument("--order", type=int, choices=(2, 4))
    ev.add_argument("--init", help="soliton:n=1 | bump:amp=0.5 | jackiw_pi | file:PATH")
    ev.add_argument("--gauge", choices=("temporal", "coulomb_reproject"))
    ev.add_argument("--out")
    ev.add_argument("--seed", type=int)
    ev.add_argument("--css-tol", dest="css_tol", type=float,
                    help="allowed ||F12 + |phi|^2/2|| of CSS initial data")

    dg = sub.add_parser("diagnose", help="diagnostics of one snapshot")
    dg.add_argument("snapshot")
    dg.add_argument("--boundary", choices=BOUNDARIES, default="dirichlet_zero")
    dg.add_argument("--order", type=int, choices=(2, 4), default=2)
    dg.add_argument("--out", default=".")

    so = sub.add_parser("soliton", help="build a closed-form soliton and report its residuals")
    so.add_argument("--family", choices=("self_dual", "jackiw_pi"), required=True)
    so.add_argument("--n", type=int, default=1)
    so.add_argument("--L", type=float, default=8.0)
    so.add_argument("--N", type=int, default=256)
    so.add_argument("--order", type=int, choices=(2, 4), default=2)
    so.add_argument("--check", action="store_true", help="exit 3 if a residual exceeds --tol")
    so.add_argument("--tol", type=float, default=None, help="default 40 h^2")
    so.add_argument("--out", default=None, help="write the fixture as a snapshot here")

    rc = sub.add_parser("reconstruct", help="rebuild the frame field of a map snapshot")
    rc.add_argument("snapshot")
    rc.add_argument("--boundary", choices=BOUNDARIES, default="dirichlet_zero")
    rc.add_argument("--out", default=".")

    vc = sub.add_parser("varcheck", help="finite-difference check of the discrete Euler-Lagrange fields")
    vc.add_argument("--system", choices=("sch", "css"), required=True)
    vc.add_argument("--seeds", type=int, default=20)
    vc.add_argument("--N", type=int, default=32)
    vc.add_argument("--L", type=float, default=4.0)
    vc.add_argument("--order", type=int, choices=(2, 4), default=2)
    vc.add_argument("--out", default=None)
    return p


def _config_from_args(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config: {exc}") from exc
        known = {f.name for f in fields(RunConfig)}
        bad = set(data) - known
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            data[f.name] = v
    missing = [k for k in REQUIRED if k not in data]
    if missing:
        raise ValueError("evolve needs " + ", ".join("--" + k for k in missing) + " (flags or --config)")
    cfg = RunConfig(**data)
    cfg.validate()
    return cfg


def cmd_evolve(args) -> int:
    cfg = _config_from_args(args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    echo = asdict(cfg)
    echo["boundary"] = cfg.resolved_boundary()
    (out / "config.echo.json").write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n")
    s = initial_state(cfg)
    spec = FlowSpec(cfg.system, cfg.dt, cfg.T, order=cfg.order, css_constraint_tol=cfg.css_tol)
    regauge = (lambda x: coulomb_project(x, cfg.order)) if cfg.gauge == "coulomb_reproject" else None

    def save(step, x):
        write_snapshot(x, out / f"snap_{step:08d}.gf")

    final, rows = evolve(s, spec, cfg.diag_every, callback=save, regauge=regauge)
    write_timeseries(rows, out / "diag.csv")
    e = [r.energy for r in rows]
    print(f"evolve {cfg.system}: {spec.steps} steps to t={final.t:.6g}, energy {e[0]:.10g} -> {e[-1]:.10g}, "
          f"charge {rows[-1].charge:.8g}; wrote {out}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    s = read_snapshot(args.snapshot, args.boundary)
    row = diag_row(s, None, args.order)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_timeseries([row], out / "diag.csv")
    print("diagnose: " + ", ".join(f"{k}={v:.6g}" for k, v in zip(row.header(), row.values())))
    return EXIT_OK


def cmd_soliton(args) -> int:
    from .diagnostics import charge, energy_css, energy_sm
    from .solitons import css_self_duality_residual, jackiw_pi_data, self_dual_data, self_duality_residual
    from .diagnostics import css_curvature_residual

    grid = make_grid(args.L, args.N, "open")
    o = args.order
    if args.family == "self_dual":
        s = self_dual_data(args.n, grid)
        res = constraint_residuals(s, o)
        r1, r2, rel = self_duality_residual(s, "+", o)
        table = {"theta": res.theta_norm, "psi_curv": res.psi_norm, "self_dual_psi1": r1,
                 "self_dual_psi2": r2, "psi1+i*psi2": rel}
        extra = f"energy={energy_sm(s):.6g} charge={charge(s, o):.6g}"
    else:
        s = jackiw_pi_data(grid, args.n)
        table = css_fixture_residuals(s, o)
        table["self_dual"] = css_self_duality_residual(s, "+", o)
        table["curvature"] = css_curvature_residual(s, o)
        extra = f"energy={energy_css(s, o)[0]:.6g} charge={charge(s, o):.6g}"
    tol = args.tol if args.tol is not None else 40.0 * grid.h**2
    for k, v in table.items():
        print(f"  {k:<14s} {v:.3e}")
    print(f"soliton {args.family}: N={args.N} L={args.L} order={o} {extra} max residual "
          f"{max(table.values()):.3e} (tol {tol:.3e})")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        write_snapshot(s, args.out)
    if args.check and max(table.values()) > tol:
        return EXIT_ABORT
    return EXIT_OK


def css_fixture_residuals(s: CssState, order: int = 2) -> dict:
    """Norms of the residuals of the four CSS equations for a static state.

    For a static state ``d_t phi = d_t A_j = 0``, so the residuals are the
    flow right-hand sides (with the stored ``A0``) and the curvature law.
    """
    from .diagnostics import css_curvature_residual
    from .flows import rhs
    from .grid import l2_norm

    r = rhs(s, FlowSpec("css", 1.0, order=order, cfl_guard=False))
    return {"phi_eq": l2_norm(r[0], s.grid), "a1_eq": l2_norm(r[1], s.grid),
            "a2_eq": l2_norm(r[2], s.grid), "f12_eq": css_curvature_residual(s, order)}


def cmd_reconstruct(args) -> int:
    from .maps import path_independence_residual, reconstruct_frame

    s = read_snapshot(args.snapshot, args.boundary)
    if isinstance(s, CssState):
        raise ValueError("frame reconstruction needs a map (kind 0) snapshot")
    frame = reconstruct_frame(s)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "frame.npy", frame.Phi)
    gr = float(frame.group_residual().max())
    pi = path_independence_residual(s)
    print(f"reconstruct: group residual {gr:.3e}, path-independence {pi:.3e}; wrote {out / 'frame.npy'}")
    return EXIT_OK


def cmd_varcheck(args) -> int:
    from .variational import random_history, random_perturbation, variational_check

    grid = make_grid(args.L, args.N, "dirichlet_zero")
    worst = {}
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        hist = random_history(grid, rng, system=args.system, mu=1 if seed % 2 == 0 else -1)
        for name in hist.names:
            pert = random_perturbation(hist, rng, [name])
            _, _, rel = variational_check(hist, pert, args.system, args.order)
            worst[name] = max(worst.get(name, 0.0), rel)
    tol = 1e-4 if args.order == 2 else 1e-5
    for k, v in worst.items():
        print(f"  d{k:<5s} max rel_err {v:.3e}")
    ok = max(worst.values()) <= tol
    print(f"varcheck {args.system}: {args.seeds} seeds, order {args.order}, "
          f"max rel_err {max(worst.values()):.3e} ({'ok' if ok else 'FAILED'}, tol {tol:g})")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "varcheck.json").write_text(json.dumps(worst, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if ok else EXIT_ABORT


COMMANDS = {"evolve": cmd_evolve, "diagnose": cmd_diagnose, "soliton": cmd_soliton,
            "reconstruct": cmd_reconstruct, "varcheck": cmd_varcheck}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"gaugeflow: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except (SnapshotError, NumericalAbort, PoissonError, FloatingPointError) as exc:
        print(f"gaugeflow: numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ValueError, TypeError, NotImplementedError, OSError) as exc:
        print(f"gaugeflow: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(cli_main())
