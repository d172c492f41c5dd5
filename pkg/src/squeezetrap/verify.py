"""Self-checks of the library against independent numerical oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import coherent
from .algebra import build_rep, casimir, casimir_deviation, commutator_residuals, oracle_expectation
from .dynamics import HamiltonianParams, PhaseState, gradient, hamiltonian_xieta, integrate
from .floquet import MathieuParams, monodromy, stability_grid
from .trap import DriveParams, Particle, TrapGeometry, laplacian_residual


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{status} {self.name:<18} {self.measured:.3e} (threshold {self.threshold:.1e}){extra}"


def _result(name, measured, threshold, detail=""):
    return CheckResult(name, bool(measured < threshold), float(measured), threshold, detail)


SAMPLE_INDICES = (0.25, 0.75, 0.5, 1.0, 1.5)


def random_disk_point(rng: np.random.Generator, radius: float = 0.5) -> complex:
    r = radius * math.sqrt(rng.uniform())
    return r * complex(math.cos(th := rng.uniform(0, 2 * math.pi)), math.sin(th))


def check_commutator() -> CheckResult:
    worst = max(
        max(commutator_residuals(build_rep(k, N)).values())
        for k in SAMPLE_INDICES for N in (16, 64, 128)
    )
    return _result("commutator", worst, 1e-10, "interior block, 15 (k, N) pairs")


def check_casimir() -> CheckResult:
    dev = max(casimir_deviation(build_rep(k, N)) for k in SAMPLE_INDICES for N in (16, 128))
    targets = [(0.25, -3 / 16), (0.75, -3 / 16)] + [((l + 1) / 2, (l * l - 1) / 4) for l in range(4)]
    val = max(abs(casimir(build_rep(k, 32))[0, 0].real - v) for k, v in targets)
    return _result("casimir", max(dev, val), 1e-10, "axial -3/16, radial (l^2-1)/4")


def check_s_oracle(samples: int = 60, seed: int = 20240601) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        k = SAMPLE_INDICES[rng.integers(len(SAMPLE_INDICES))]
        m = int(rng.integers(0, 5))
        z = random_disk_point(rng)
        labels = coherent.ModeLabels(k, m)
        rep = build_rep(k)
        for n in (1, 2, 3):
            exact = oracle_expectation(rep, z, m, f"E^{n}").real
            worst = max(worst, abs(coherent.S_value(n, z, labels) - exact) / abs(exact))
    return _result("s_oracle", worst, 1e-8, f"S_n vs <E^n>, {samples} states, n=1..3")


def check_matrix_elements(samples: int = 30, seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    ops = {"K0": "K0", "K+": "Kp", "K-": "Km", "K0-K1": None}
    worst = 0.0
    for _ in range(samples):
        k = SAMPLE_INDICES[rng.integers(len(SAMPLE_INDICES))]
        m = int(rng.integers(0, 5))
        z = random_disk_point(rng)
        rep = build_rep(k)
        closed = coherent.generator_expectations(z, coherent.ModeLabels(k, m))
        for key, word in ops.items():
            mat = rep.K0 - rep.K1 if word is None else word
            exact = oracle_expectation(rep, z, m, mat)
            worst = max(worst, abs(closed[key] - exact) / max(1.0, abs(exact)))
    return _result("matrix_elements", worst, 1e-8, "<K0>, <K+->, <K0-K1>")


def demo_params(seed: int = 3, harmonic: bool = False) -> HamiltonianParams:
    """A bounded anharmonic configuration in units hbar = M = |Q| = Omega = 1."""
    rng = np.random.default_rng(seed)
    particle = Particle(1.0, 1.0)
    drive = DriveParams(U0=rng.uniform(0, 0.004), V0=rng.uniform(0.5, 1.0), Omega=1.0)
    c2 = -rng.uniform(0.002, 0.005)
    B0 = rng.uniform(0, 0.1)
    p = HamiltonianParams.build(particle, TrapGeometry(c2=c2, B0=B0), drive, hbar=1.0)
    if harmonic:
        return p
    wa, wr = p.frequencies.omega_a, p.frequencies.omega_r
    lam = 2.0 / min(wa, wr)
    D = float(rng.choice([-1.0, 1.0])) * 1e-2 * wa / (drive.V0 * lam * lam)
    return HamiltonianParams.build(particle, TrapGeometry(c2=c2, B0=B0, D=D), drive, hbar=1.0)


def finite_difference_error(p: HamiltonianParams, s: PhaseState, t: float) -> float:
    """Norm-wise relative error of the analytic gradient against central differences."""
    x = [s.axial.xi, s.axial.eta, s.radial.xi, s.radial.eta]
    g = np.array(gradient(s, t, p))
    fd = np.empty(4)
    for i in range(4):
        h = 1e-6 * max(1.0, abs(x[i]))
        up, dn = list(x), list(x)
        up[i] += h
        dn[i] -= h
        fd[i] = (hamiltonian_xieta(*up, t, p) - hamiltonian_xieta(*dn, t, p)) / (2 * h)
    return float(np.max(np.abs(g - fd)) / np.max(np.abs(g)))


def check_gradient(samples: int = 200, seed: int = 11) -> CheckResult:
    rng = np.random.default_rng(seed)
    p = demo_params()
    worst = 0.0
    for _ in range(samples):
        s = PhaseState.from_disk(random_disk_point(rng, 0.8), random_disk_point(rng, 0.8))
        worst = max(worst, finite_difference_error(p, s, rng.uniform(0, 2 * math.pi)))
    return _result("gradient", worst, 1e-6, f"{samples} states")


def check_invariant_drift(periods: int = 10) -> CheckResult:
    p = demo_params()
    s0 = PhaseState.from_disk(0.2 + 0.1j, -0.15j)
    traj = integrate(s0, 0.0, periods * p.drive.period, p, tol=1e-10)
    return _result("invariant_drift", traj.max_residual, 1e-8, f"{periods} drive periods, {len(traj)} steps")


def check_mathieu_limit() -> CheckResult:
    a = np.linspace(0.05, 0.95, 10)
    err = max(abs(monodromy(MathieuParams(x, 0.0)).beta - math.sqrt(x)) for x in a)
    small_q = abs(monodromy(MathieuParams(0.0, 0.2)).beta / (0.2 / math.sqrt(2)) - 1.0)
    _, _, det = stability_grid(np.linspace(-1, 1, 10), np.linspace(0, 1, 10))
    det_err = float(np.max(np.abs(det - 1.0)))
    measured = max(err, det_err)
    passed = err < 1e-8 and det_err < 1e-10 and small_q < 0.05
    return CheckResult("mathieu_limit", passed, measured, 1e-8,
                       f"det-1={det_err:.1e}, beta(0,0.2) vs q/sqrt2 off by {small_q:.2%} (limit 5%)")


def check_harmonic_polynomials() -> CheckResult:
    worst = max(laplacian_residual(k) for k in (1, 2, 3))
    return _result("harmonic_poly", worst, 1e-6, "Laplacian of H2, H4, H6")


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "commutator": check_commutator,
    "casimir": check_casimir,
    "s_oracle": check_s_oracle,
    "matrix_elements": check_matrix_elements,
    "gradient": check_gradient,
    "invariant_drift": check_invariant_drift,
    "mathieu_limit": check_mathieu_limit,
    "harmonic_poly": check_harmonic_polynomials,
}


def run_checks(names: Iterable[str] | None = None) -> list[CheckResult]:
    selected = list(CHECKS) if names is None else list(names)
    unknown = [n for n in selected if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check(s) {unknown}; available: {sorted(CHECKS)}")
    return [CHECKS[n]() for n in selected]
