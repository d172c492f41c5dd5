"""JSON run configuration: loading, validation and unit rescaling."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .algebra import AXIAL_INDICES
from .coherent import STATE_TOLERANCE, XiEtaState, constraint_residual, disk_to_xieta
from .dynamics import DEFAULT_METHOD, HamiltonianParams, PhaseState
from .errors import ConfigError, SqueezeTrapError
from .trap import HBAR, TRAP_KINDS, DriveParams, Particle, TrapGeometry

SECTIONS = {
    "particle": {"Q", "M"},
    "trap": {"kind", "c2", "r0", "z0", "D", "C4", "C6", "B0"},
    "drive": {"U0", "V0", "Omega"},
    "modes": {"k_a", "m_a", "l", "m_r"},
    "frequencies": {"omega_a", "omega_r"},
    "initial_state": {"axial", "radial"},
    "integration": {"t0", "t1", "periods", "tol", "method", "max_step"},
    "scales": {"dimensionless", "physical_scales", "hbar"},
    "output": {"path", "format", "plot"},
    "stability": {"a", "q", "steps"},
    "spectrum": {"states"},
    "equilibria": {"bounds", "grid", "t", "exact_gradient"},
}
REQUIRED = ("particle", "trap", "drive")
METHODS = ("DOP853", "RK45", "Radau", "LSODA")


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    n: int

    def values(self):
        import numpy as np

        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class RunConfig:
    particle: Particle
    geometry: TrapGeometry
    drive: DriveParams
    k_a: float = 0.25
    m_a: int = 0
    l: int = 0
    m_r: int = 0
    omega_a: float | None = None
    omega_r: float | None = None
    initial: PhaseState = field(default_factory=lambda: PhaseState.from_disk(0j, 0j))
    t0: float = 0.0
    t1: float = 0.0
    tol: float = 1e-10
    method: str = DEFAULT_METHOD
    max_step: float = math.inf
    hbar: float = HBAR
    dimensionless: bool = False
    physical_scales: bool = True
    output_path: Path = Path("squeezetrap_out")
    plot: bool = False
    stability_a: GridSpec = GridSpec(-1.0, 1.0, 50)
    stability_q: GridSpec = GridSpec(0.0, 1.0, 50)
    stability_steps: int = 2000
    spectrum_states: tuple[tuple[float, int, int, int], ...] = ()
    equilibria_bounds: tuple[float, float] = (0.1, 10.0)
    equilibria_grid: int = 4
    equilibria_t: float | None = None
    exact_gradient: bool = False

    def params(self) -> HamiltonianParams:
        return HamiltonianParams.build(
            self.particle, self.geometry, self.drive,
            k_a=self.k_a, m_a=self.m_a, l=self.l, m_r=self.m_r,
            omega_a=self.omega_a, omega_r=self.omega_r, hbar=self.hbar,
            physical_scales=self.physical_scales,
        )


class _Collector:
    def __init__(self):
        self.violations: list[tuple[str, str]] = []

    def add(self, path: str, msg: str):
        self.violations.append((path, msg))

    def number(self, section: dict, key: str, path: str, default=None, *, positive=False, nonzero=False, allow_none=False):
        v = section.get(key, default)
        if v is None:
            if not allow_none and default is None:
                self.add(path, "is required")
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.add(path, f"must be a finite number, got {v!r}")
            return None
        if positive and not v > 0:
            self.add(path, f"must be positive, got {v!r}")
            return None
        if nonzero and v == 0:
            self.add(path, "must be non-zero")
            return None
        return float(v)

    def integer(self, section: dict, key: str, path: str, default: int):
        v = section.get(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < 0:
            self.add(path, f"must be a non-negative integer, got {v!r}")
            return default
        return int(v)

    def flag(self, section: dict, key: str, path: str, default: bool):
        v = section.get(key, default)
        if not isinstance(v, bool):
            self.add(path, f"must be true or false, got {v!r}")
            return default
        return v


def _section(raw: dict, name: str, c: _Collector) -> dict:
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        c.add(name, "must be an object")
        return {}
    for key in sorted(set(sec) - SECTIONS[name]):
        c.add(f"{name}.{key}", "unknown field")
    return sec


def _grid(sec: dict, key: str, c: _Collector, default: GridSpec) -> GridSpec:
    v = sec.get(key)
    if v is None:
        return default
    ok = (
        isinstance(v, list) and len(v) == 3
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) for x in v)
        and int(v[2]) == v[2] and v[2] >= 1 and v[1] >= v[0]
    )
    if not ok:
        c.add(f"stability.{key}", f"must be [lo, hi, n] with lo <= hi and integer n >= 1, got {v!r}")
        return default
    return GridSpec(float(v[0]), float(v[1]), int(v[2]))


def _state(sec: Any, path: str, c: _Collector) -> XiEtaState | None:
    if sec is None:
        return disk_to_xieta(0j)
    if not isinstance(sec, dict):
        c.add(path, "must be an object with 'z' or 'xi', 'eta', 'sigma'")
        return None
    if "z" in sec:
        extra = set(sec) - {"z"}
        if extra:
            c.add(path, f"mixes 'z' with {sorted(extra)}")
            return None
        z = sec["z"]
        if not (isinstance(z, list) and len(z) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in z)):
            c.add(f"{path}.z", f"must be [re, im], got {z!r}")
            return None
        zc = complex(z[0], z[1])
        if not abs(zc) < 1:
            c.add(f"{path}.z", f"violates the disk constraint |z| < 1 (|z| = {abs(zc):.6g})")
            return None
        return disk_to_xieta(zc)
    extra = set(sec) - {"xi", "eta", "sigma"}
    for key in sorted(extra):
        c.add(f"{path}.{key}", "unknown field")
    vals = [c.number(sec, k, f"{path}.{k}") for k in ("xi", "eta", "sigma")]
    if any(v is None for v in vals):
        return None
    xi, eta, sigma = vals
    if not (xi > 0 and eta > 0):
        c.add(path, f"xi and eta must be positive, got xi={xi}, eta={eta}")
        return None
    res = constraint_residual(xi, eta, sigma)
    if abs(res) > STATE_TOLERANCE * max(1.0, xi * eta):
        c.add(path, f"violates sigma^2 - xi eta + 1 = 0 (residual {res:.3e})")
        return None
    return XiEtaState(xi, eta, sigma)


def validate(raw: Any) -> RunConfig:
    """Build a :class:`RunConfig` from a parsed JSON document.

    Raises:
        ConfigError: listing every violation with its field path.
    """
    c = _Collector()
    if not isinstance(raw, dict):
        raise ConfigError([("", "top level must be an object")])
    for key in sorted(set(raw) - set(SECTIONS)):
        c.add(key, "unknown section")
    for key in REQUIRED:
        if key not in raw:
            c.add(key, "is required")
    sec = {name: _section(raw, name, c) for name in SECTIONS}

    pa = sec["particle"]
    Q = c.number(pa, "Q", "particle.Q", nonzero=True)
    M = c.number(pa, "M", "particle.M", positive=True)

    tr = sec["trap"]
    kind = tr.get("kind", "combined")
    if kind not in TRAP_KINDS:
        c.add("trap.kind", f"must be one of {list(TRAP_KINDS)}, got {kind!r}")
        kind = "combined"
    r0 = c.number(tr, "r0", "trap.r0", positive=True, allow_none=True)
    z0 = c.number(tr, "z0", "trap.z0", positive=True, allow_none=True)
    c2 = c.number(tr, "c2", "trap.c2", allow_none=True)
    if c2 is None and "c2" not in tr:
        if r0 is not None and z0 is not None:
            c2 = -1.0 / (r0 * r0 + 2.0 * z0 * z0)
        elif "r0" not in tr or "z0" not in tr:
            c.add("trap.c2", "is required unless both trap.r0 and trap.z0 are given")
    geo_extra = {k: c.number(tr, k, f"trap.{k}", 0.0) for k in ("D", "C4", "C6", "B0")}

    dr = sec["drive"]
    U0 = c.number(dr, "U0", "drive.U0", 0.0)
    V0 = c.number(dr, "V0", "drive.V0", 0.0)
    Omega = c.number(dr, "Omega", "drive.Omega", positive=True)

    mo = sec["modes"]
    k_a = mo.get("k_a", 0.25)
    if k_a not in AXIAL_INDICES:
        c.add("modes.k_a", f"must be one of {{0.25, 0.75}}, got {k_a!r}")
        k_a = 0.25
    m_a = c.integer(mo, "m_a", "modes.m_a", 0)
    l = c.integer(mo, "l", "modes.l", 0)
    m_r = c.integer(mo, "m_r", "modes.m_r", 0)

    fr = sec["frequencies"]
    omega_a = c.number(fr, "omega_a", "frequencies.omega_a", positive=True, allow_none=True)
    omega_r = c.number(fr, "omega_r", "frequencies.omega_r", positive=True, allow_none=True)

    ini = sec["initial_state"]
    sa = _state(ini.get("axial"), "initial_state.axial", c)
    sr = _state(ini.get("radial"), "initial_state.radial", c)

    it = sec["integration"]
    t0 = c.number(it, "t0", "integration.t0", 0.0)
    t1 = None
    if "t1" in it and "periods" in it:
        c.add("integration", "give either t1 or periods, not both")
    elif "periods" in it:
        periods = c.number(it, "periods", "integration.periods", positive=True)
        if periods is not None and Omega is not None and t0 is not None:
            t1 = t0 + periods * 2.0 * math.pi / Omega
    else:
        t1 = c.number(it, "t1", "integration.t1", t0 if t0 is not None else 0.0)
    if t0 is not None and t1 is not None and t1 < t0:
        c.add("integration.t1", f"must not precede t0 ({t1} < {t0})")
    tol = c.number(it, "tol", "integration.tol", 1e-10, positive=True)
    method = it.get("method", DEFAULT_METHOD)
    if method not in METHODS:
        c.add("integration.method", f"must be one of {list(METHODS)}, got {method!r}")
    max_step = c.number(it, "max_step", "integration.max_step", positive=True, allow_none=True) or math.inf

    sc = sec["scales"]
    dimensionless = c.flag(sc, "dimensionless", "scales.dimensionless", False)
    physical_scales = c.flag(sc, "physical_scales", "scales.physical_scales", True)
    hbar = c.number(sc, "hbar", "scales.hbar", HBAR, positive=True)

    out = sec["output"]
    path = out.get("path", "squeezetrap_out")
    if not isinstance(path, str) or not path:
        c.add("output.path", f"must be a non-empty string, got {path!r}")
        path = "squeezetrap_out"
    if out.get("format", "csv") != "csv":
        c.add("output.format", f"only 'csv' is supported, got {out.get('format')!r}")
    plot = c.flag(out, "plot", "output.plot", False)

    st = sec["stability"]
    ga = _grid(st, "a", c, GridSpec(-1.0, 1.0, 50))
    gq = _grid(st, "q", c, GridSpec(0.0, 1.0, 50))
    steps = c.integer(st, "steps", "stability.steps", 2000)
    if steps < 1:
        c.add("stability.steps", "must be at least 1")

    sp = sec["spectrum"]
    states = []
    for i, s in enumerate(sp.get("states", [])):
        p = f"spectrum.states[{i}]"
        if not (isinstance(s, list) and len(s) == 4):
            c.add(p, f"must be [k_a, m_a, l, m_r], got {s!r}")
            continue
        if s[0] not in AXIAL_INDICES:
            c.add(p, f"k_a must be one of {{0.25, 0.75}}, got {s[0]!r}")
            continue
        if not all(isinstance(x, int) and not isinstance(x, bool) and x >= 0 for x in s[1:]):
            c.add(p, "m_a, l, m_r must be non-negative integers")
            continue
        states.append((float(s[0]), s[1], s[2], s[3]))

    eq = sec["equilibria"]
    bounds = eq.get("bounds", [0.1, 10.0])
    if not (isinstance(bounds, list) and len(bounds) == 2 and all(isinstance(x, (int, float)) for x in bounds)
            and 0 < bounds[0] < bounds[1]):
        c.add("equilibria.bounds", f"must be [lo, hi] with 0 < lo < hi, got {bounds!r}")
        bounds = [0.1, 10.0]
    grid = c.integer(eq, "grid", "equilibria.grid", 4)
    if grid < 1:
        c.add("equilibria.grid", "must be at least 1")
    eq_t = c.number(eq, "t", "equilibria.t", allow_none=True)
    exact = c.flag(eq, "exact_gradient", "equilibria.exact_gradient", False)

    if c.violations:
        raise ConfigError(c.violations)

    particle = Particle(Q, M)
    geometry = TrapGeometry(c2=c2, r0=r0, z0=z0, kind=kind, **geo_extra)
    drive = DriveParams(U0, V0, Omega)
    cfg = RunConfig(
        particle=particle, geometry=geometry, drive=drive,
        k_a=float(k_a), m_a=m_a, l=l, m_r=m_r, omega_a=omega_a, omega_r=omega_r,
        initial=PhaseState(sa, sr), t0=t0, t1=t1, tol=tol, method=method, max_step=max_step,
        hbar=hbar, dimensionless=dimensionless, physical_scales=physical_scales,
        output_path=Path(path), plot=plot,
        stability_a=ga, stability_q=gq, stability_steps=steps,
        spectrum_states=tuple(states),
        equilibria_bounds=(float(bounds[0]), float(bounds[1])), equilibria_grid=grid,
        equilibria_t=eq_t, exact_gradient=exact,
    )
    if dimensionless:
        cfg = to_dimensionless(cfg)
    try:
        cfg.params()
    except SqueezeTrapError as exc:
        raise ConfigError([("frequencies", str(exc))]) from None
    return cfg


def to_dimensionless(cfg: RunConfig) -> RunConfig:
    """Rescale to units ``hbar = M = |Q| = Omega = 1``.

    Energy is measured in ``hbar Omega``, time in ``1/Omega``, length in
    ``l = sqrt(hbar/(M Omega))`` and voltage in ``hbar Omega/|Q|``.
    """
    from dataclasses import replace

    hb, M, Qabs, W = cfg.hbar, cfg.particle.M, abs(cfg.particle.Q), cfg.drive.Omega
    ell = math.sqrt(hb / (M * W))
    volt = hb * W / Qabs
    g = cfg.geometry

    def opt(v, f):
        return None if v is None else v * f

    geometry = TrapGeometry(
        c2=g.c2 * ell**2, D=g.D * ell**4, C4=g.C4 * ell**4 / volt, C6=g.C6 * ell**6 / volt,
        r0=opt(g.r0, 1.0 / ell), z0=opt(g.z0, 1.0 / ell), B0=g.B0 * Qabs / (M * W), kind=g.kind,
    )
    return replace(
        cfg,
        particle=Particle(math.copysign(1.0, cfg.particle.Q), 1.0),
        geometry=geometry,
        drive=DriveParams(cfg.drive.U0 / volt, cfg.drive.V0 / volt, 1.0),
        omega_a=opt(cfg.omega_a, 1.0 / W), omega_r=opt(cfg.omega_r, 1.0 / W),
        t0=cfg.t0 * W, t1=cfg.t1 * W, max_step=cfg.max_step * W,
        equilibria_t=opt(cfg.equilibria_t, W),
        hbar=1.0, dimensionless=False,
    )


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON configuration file.

    Raises:
        ConfigError: on unreadable files, JSON syntax errors or invalid fields.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([("", f"cannot read {path}: {exc.strerror}")]) from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}")]) from None
    return validate(raw)
