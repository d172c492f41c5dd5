"""Command-line entry point ``squeezetrap``."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from .coherent import ModeLabels
from .config import RunConfig, load_config
from .dynamics import integrate
from .equilibria import pseudopotential_system, solve_combined, solve_system, write_roots_csv
from .errors import ConfigError, DivergenceError, SqueezeTrapError, UndefinedSpectrumError
from .floquet import mathieu_params, monodromy, quasienergy, stability_grid
from .verify import CHECKS, run_checks

EXIT_OK, EXIT_FAIL, EXIT_DIVERGED = 0, 1, 2
COMMANDS = ("verify", "simulate", "equilibria", "spectrum", "stability")


def _fmt(x) -> str:
    return "%.17g" % x


def _writer(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8")


def resolve_threads(flag: int | None) -> int:
    env = os.environ.get("SQUEEZETRAP_THREADS")
    raw = env if env not in (None, "") else flag
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError([("SQUEEZETRAP_THREADS", f"must be a positive integer, got {raw!r}")]) from None
    if n < 1:
        raise ConfigError([("threads", f"must be a positive integer, got {n}")])
    return n


def cmd_verify(filters: list[str] | None) -> int:
    names = None
    if filters:
        names = [n for f in filters for n in f.split(",") if n]
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            print(f"unknown check(s): {', '.join(unknown)}; available: {', '.join(CHECKS)}", file=sys.stderr)
            return EXIT_FAIL
    results = run_checks(names)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_simulate(cfg: RunConfig, plot: bool) -> int:
    p = cfg.params()
    out = cfg.output_path / "trajectory.csv"
    status = EXIT_OK
    try:
        traj = integrate(cfg.initial, cfg.t0, cfg.t1, p, cfg.tol, method=cfg.method, max_step=cfg.max_step)
    except DivergenceError as exc:
        traj = exc.partial
        print(f"divergence: {exc}; partial trajectory written", file=sys.stderr)
        status = EXIT_DIVERGED
    with _writer(out) as fh:
        traj.write_csv(fh)
    print(f"steps: {len(traj)}")
    print(f"max constraint residual: {traj.max_residual:.3e}")
    print(f"final energy: {_fmt(traj.energy[-1])}")
    if cfg.drive.V0 == 0 and traj.energy[0] != 0:
        print(f"relative energy drift: {traj.energy_drift:.3e}")
    print(f"wrote {out}")
    if plot:
        from .plotting import plot_trajectory

        print(f"wrote {plot_trajectory(traj, out.with_suffix('.png'))}")
    return status


def cmd_equilibria(cfg: RunConfig) -> int:
    p = cfg.params()
    if cfg.geometry.kind == "combined":
        t = 0.0 if cfg.equilibria_t is None else cfg.equilibria_t
        roots = solve_combined(t, p)
    else:
        system = pseudopotential_system(p, cfg.equilibria_t, exact_gradient=cfg.exact_gradient)
        roots = solve_system(system, cfg.equilibria_bounds, cfg.equilibria_grid)
    out = cfg.output_path / "roots.csv"
    with _writer(out) as fh:
        write_roots_csv(roots, fh)
    print(f"{len(roots)} stationary point(s) from {roots.converged}/{roots.starts} converged start(s)")
    if not roots and cfg.geometry.kind == "combined":
        print("  the linear system is singular for these coefficients and labels")
    for r in roots:
        flag = "" if r.admissible else "  (inadmissible: xi must be positive)"
        print(f"  xi_a={r.xi_a:.10g} xi_r={r.xi_r:.10g} residual={r.residual:.2e} {r.classification}{flag}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    p = cfg.params()
    floq = {}
    for mode in ("axial", "radial"):
        mp = mathieu_params(p, mode)
        res = monodromy(mp, Omega=cfg.drive.Omega, steps=cfg.stability_steps)
        if not res.stable:
            raise UndefinedSpectrumError(
                f"{mode} mode is unstable at (a, q) = ({mp.a:.6g}, {mp.q:.6g}); trace = {res.trace:.6g}"
            )
        floq[mode] = res
        print(f"{mode}: a={mp.a:.6g} q={mp.q:.6g} beta={res.beta:.10g} mu={res.mu:.10g}")
    states = cfg.spectrum_states or ((cfg.k_a, cfg.m_a, cfg.l, cfg.m_r),)
    out = cfg.output_path / "spectrum.csv"
    f = p.frequencies
    with _writer(out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("k_a", "m_a", "k_r", "m_r", "l", "E"))
        for k_a, m_a, l, m_r in states:
            k_r = (l + 1) / 2.0
            E = quasienergy(floq["axial"], floq["radial"], ModeLabels(k_a, m_a), ModeLabels(k_r, m_r), l, f.omega_c, f.hbar)
            w.writerow((_fmt(k_a), m_a, _fmt(k_r), m_r, l, _fmt(E)))
    print(f"wrote {out} ({len(states)} level(s))")
    return EXIT_OK


def cmd_stability(cfg: RunConfig, threads: int, plot: bool) -> int:
    a, q = cfg.stability_a.values(), cfg.stability_q.values()
    stable, beta, det = stability_grid(a, q, workers=threads, steps=cfg.stability_steps)
    out = cfg.output_path / "stability.csv"
    with _writer(out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("a", "q", "stable", "beta"))
        for i, ai in enumerate(a):
            for j, qj in enumerate(q):
                w.writerow((_fmt(ai), _fmt(qj), "true" if stable[i, j] else "false", _fmt(beta[i, j])))
    print(f"{stable.size} grid points, {int(stable.sum())} stable, max |det - 1| = {np.max(np.abs(det - 1)):.2e}")
    p = cfg.params()
    marks = {}
    for mode in ("axial", "radial"):
        mp = mathieu_params(p, mode)
        res = monodromy(mp, Omega=cfg.drive.Omega, steps=cfg.stability_steps)
        marks[mode] = (mp.a, mp.q)
        print(f"configured {mode} point (a, q) = ({mp.a:.6g}, {mp.q:.6g}): {'stable' if res.stable else 'unstable'}")
    print(f"wrote {out}")
    if plot:
        from .plotting import plot_stability

        print(f"wrote {plot_stability(a, q, stable, beta, out.with_suffix('.png'), marks)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="squeezetrap", description="Squeezed-state dynamics of ions in combined and RF traps.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="JSON run configuration (required except for verify)")
    ap.add_argument("--threads", type=int, default=None, help="worker processes for grid scans (env SQUEEZETRAP_THREADS overrides)")
    ap.add_argument("--filter", action="append", metavar="NAME", help="verify: run only the named check(s)")
    ap.add_argument("--plot", action="store_true", help="also render PNG figures next to the CSV output")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = resolve_threads(args.threads)
        if args.command == "verify":
            if args.config is not None:
                load_config(args.config)
            return cmd_verify(args.filter)
        if args.filter:
            raise ConfigError([("--filter", "only applies to the verify command")])
        if args.config is None:
            raise ConfigError([("--config", f"is required for {args.command}")])
        cfg = load_config(args.config)
        plot = args.plot or cfg.plot
        if args.command == "simulate":
            return cmd_simulate(cfg, plot)
        if args.command == "equilibria":
            return cmd_equilibria(cfg)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        return cmd_stability(cfg, threads, plot)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except SqueezeTrapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
