"""Stationary points of the classical Hamiltonian in the ``(xi_a, xi_r)`` plane.

With ``P_j = k_j + m_j`` and ``Q_n`` the Fock moments, the system is

    r1 = c_a + g4 [16 xi_a Q2a - 96 xi_r P_a P_r]
             + g6 [48 xi_a^2 Q3a - 240 xi_a xi_r Q2a Q1r + 90 xi_r Q1a Q2r]
    r2 = c_r + g4 [-96 xi_a P_a P_r + 6 xi_r Q2r]
             + g6 [-120 xi_a^2 Q2a Q1r + 180 xi_a xi_r Q1a Q2r - 15 xi_r^2 Q3r]

where ``c_j = 2 hbar K_j P_j / (M omega_j)``. The combined trap has
``g4 = Q A(t) D`` and ``g6 = 0``; the pseudopotential (ideal Paul) case has
``g4 = Q C4`` and ``g6 = Q C6``.

The sextic term of ``r1`` is kept linear in ``xi_r`` as displayed above. The
true derivative of the sextic energy carries ``xi_r^2`` there; pass
``exact_gradient=True`` to use it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import IO, Iterable, Literal

import numpy as np

from .coherent import ModeLabels, husimi_Q
from .dynamics import HamiltonianParams
from .errors import InvalidArgumentError
from .trap import drive_amplitude, elastic_constants, mathieu_coefficients

Classification = Literal["minimum", "saddle", "maximum", "degenerate"]

ROOT_TOLERANCE = 1e-10
DEDUP_DISTANCE = 1e-8
DEGENERACY_RATIO = 1e-10
ROOTS_HEADER = ("xi_a", "xi_r", "residual", "admissible", "classification")


@dataclass(frozen=True)
class StationaryPoint:
    xi_a: float
    xi_r: float
    residual: float
    admissible: bool
    classification: Classification | None = None


class RootSet(list):
    """A list of :class:`StationaryPoint` with solver diagnostics."""

    def __init__(self, points: Iterable[StationaryPoint] = (), *, starts: int = 0, converged: int = 0):
        super().__init__(points)
        self.starts = starts
        self.converged = converged


@dataclass(frozen=True)
class EquilibriumSystem:
    """Coefficients of the two stationarity equations.

    ``lambda_a`` and ``lambda_r`` multiply every ``xi`` (they are 1 for the
    displayed, unscaled equations).
    """

    c_a: float
    c_r: float
    g4: float
    g6: float
    labels_a: ModeLabels
    labels_r: ModeLabels
    lambda_a: float = 1.0
    lambda_r: float = 1.0
    exact_gradient: bool = False

    @property
    def scale(self) -> float:
        return max(abs(self.c_a), abs(self.c_r), abs(self.g4), abs(self.g6))

    def _q(self):
        a, r = self.labels_a, self.labels_r
        return (
            [husimi_Q(n, a) for n in (1, 2, 3)],
            [husimi_Q(n, r) for n in (1, 2, 3)],
            a.weight * r.weight,
        )

    def residual(self, xi_a: float, xi_r: float) -> tuple[float, float]:
        (Q1a, Q2a, Q3a), (Q1r, Q2r, Q3r), PP = self._q()
        la, lr = self.lambda_a, self.lambda_r
        xa, xr = la * xi_a, lr * xi_r
        r1 = self.c_a + self.g4 * la * (16.0 * xa * Q2a - 96.0 * xr * PP)
        r2 = self.c_r + self.g4 * lr * (-96.0 * xa * PP + 6.0 * xr * Q2r)
        if self.g6:
            tail = xr * xr if self.exact_gradient else xr
            r1 += self.g6 * la * (48.0 * xa * xa * Q3a - 240.0 * xa * xr * Q2a * Q1r + 90.0 * tail * Q1a * Q2r)
            r2 += self.g6 * lr * (-120.0 * xa * xa * Q2a * Q1r + 180.0 * xa * xr * Q1a * Q2r - 15.0 * xr * xr * Q3r)
        return r1, r2

    def jacobian(self, xi_a: float, xi_r: float) -> np.ndarray:
        """``d(r1, r2)/d(xi_a, xi_r)``."""
        (Q1a, Q2a, Q3a), (Q1r, Q2r, Q3r), PP = self._q()
        la, lr = self.lambda_a, self.lambda_r
        xa, xr = la * xi_a, lr * xi_r
        g4, g6 = self.g4, self.g6
        j11 = g4 * la * la * 16.0 * Q2a
        j12 = -g4 * la * lr * 96.0 * PP
        j21 = -g4 * la * lr * 96.0 * PP
        j22 = g4 * lr * lr * 6.0 * Q2r
        if g6:
            dtail = 2.0 * xr if self.exact_gradient else 1.0
            j11 += g6 * la * la * (96.0 * xa * Q3a - 240.0 * xr * Q2a * Q1r)
            j12 += g6 * la * lr * (-240.0 * xa * Q2a * Q1r + 90.0 * dtail * Q1a * Q2r)
            j21 += g6 * la * lr * (-240.0 * xa * Q2a * Q1r + 180.0 * xr * Q1a * Q2r)
            j22 += g6 * lr * lr * (180.0 * xa * Q1a * Q2r - 30.0 * xr * Q3r)
        return np.array([[j11, j12], [j21, j22]])

    def hessian(self, xi_a: float, xi_r: float) -> np.ndarray:
        """Second derivatives of the energy in ``(xi_a, xi_r)``."""
        return replace(self, exact_gradient=True).jacobian(xi_a, xi_r)

    def point(self, xi_a: float, xi_r: float) -> StationaryPoint:
        r = self.residual(xi_a, xi_r)
        xi_a, xi_r = float(xi_a), float(xi_r)
        return StationaryPoint(xi_a, xi_r, float(max(abs(r[0]), abs(r[1]))), xi_a > 0 and xi_r > 0)


def _harmonic_constants(p: HamiltonianParams, K_r: float, K_a: float) -> tuple[float, float]:
    f, M = p.frequencies, p.particle.M
    return (
        2.0 * f.hbar * K_a * p.labels_a.weight / (M * f.omega_a),
        2.0 * f.hbar * K_r * p.labels_r.weight / (M * f.omega_r),
    )


def _lambdas(p: HamiltonianParams) -> dict:
    la, lr = p.length_scales
    return {"lambda_a": la, "lambda_r": lr}


def combined_system(t: float, p: HamiltonianParams) -> EquilibriumSystem:
    K_r, K_a = elastic_constants(p.particle, p.geometry, p.drive, t)
    c_a, c_r = _harmonic_constants(p, K_r, K_a)
    g4 = p.particle.Q * drive_amplitude(p.drive, t) * p.geometry.D
    return EquilibriumSystem(c_a, c_r, g4, 0.0, p.labels_a, p.labels_r, **_lambdas(p))


def pseudopotential_springs(p: HamiltonianParams) -> tuple[float, float]:
    """Secular spring constants ``M (Omega/2)^2 (a + q^2/2)`` as ``(K_r, K_a)``."""
    mc = mathieu_coefficients(p.particle, p.geometry, p.drive)
    scale = p.particle.M * (0.5 * p.drive.Omega) ** 2
    (aa, qa), (ar, qr) = mc["axial"], mc["radial"]
    return scale * (ar + 0.5 * qr * qr), scale * (aa + 0.5 * qa * qa)


def pseudopotential_system(p: HamiltonianParams, t: float | None = None, *, exact_gradient: bool = False) -> EquilibriumSystem:
    """Ideal-Paul system. The springs are secular (time-averaged) unless an
    instant ``t`` is given."""
    K_r, K_a = pseudopotential_springs(p) if t is None else elastic_constants(p.particle, p.geometry, p.drive, t)
    c_a, c_r = _harmonic_constants(p, K_r, K_a)
    Q, g = p.particle.Q, p.geometry
    return EquilibriumSystem(c_a, c_r, Q * g.C4, Q * g.C6, p.labels_a, p.labels_r,
                             exact_gradient=exact_gradient, **_lambdas(p))


def combined_residual(xi_a: float, xi_r: float, t: float, p: HamiltonianParams) -> tuple[float, float]:
    return combined_system(t, p).residual(xi_a, xi_r)


def pseudopotential_residual(xi_a: float, xi_r: float, p: HamiltonianParams, t: float | None = None) -> tuple[float, float]:
    return pseudopotential_system(p, t).residual(xi_a, xi_r)


def solve_linear(system: EquilibriumSystem) -> RootSet:
    """Direct elimination for a system without the sextic term.

    Returns an empty set when the matrix is singular, including ``g4 = 0``.
    """
    if system.g6:
        raise InvalidArgumentError("linear solve requires g6 = 0")
    J = system.jacobian(0.0, 0.0)
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    norm = float(np.max(np.abs(J)))
    if norm == 0.0 or abs(det) <= 1e-14 * norm * norm:
        return RootSet(starts=1, converged=0)
    b0, b1 = -system.c_a, -system.c_r
    xa = (b0 * J[1, 1] - J[0, 1] * b1) / det
    xr = (J[0, 0] * b1 - b0 * J[1, 0]) / det
    return RootSet([_classified(system, system.point(xa, xr))], starts=1, converged=1)


def solve_combined(t: float, p: HamiltonianParams) -> RootSet:
    """Unique solution of the linear combined-trap system at time ``t``."""
    return solve_linear(combined_system(t, p))


def _newton(system: EquilibriumSystem, x0: np.ndarray, tol: float, max_iter: int):
    s = system.scale or 1.0
    x = np.array(x0, dtype=float)

    def norm(v):
        r = system.residual(*v)
        return max(abs(r[0]), abs(r[1])) / s, np.array(r)

    f, r = norm(x)
    for _ in range(max_iter):
        if f == 0.0:
            break
        J = system.jacobian(*x)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return x, f
        if not np.all(np.isfinite(step)):
            return x, f
        alpha = 1.0
        while alpha > 1e-6:
            xn = x + alpha * step
            fn, rn = norm(xn)
            if fn < f:
                break
            alpha *= 0.5
        else:
            break
        converged_step = np.max(np.abs(xn - x)) <= 1e-15 * (1.0 + np.max(np.abs(x)))
        x, f, r = xn, fn, rn
        if converged_step:
            break
    return x, f


def solve_system(
    system: EquilibriumSystem,
    bounds: tuple[float, float] = (0.1, 10.0),
    grid: int = 4,
    *,
    tol: float = ROOT_TOLERANCE,
    max_iter: int = 100,
    dedup: float = DEDUP_DISTANCE,
) -> RootSet:
    """Damped Newton from a ``grid x grid`` geometric multistart over ``bounds^2``.

    Converged roots (scaled residual below ``tol``) are deduplicated at
    distance ``dedup`` and sorted by ``(xi_a, xi_r)``.
    """
    lo, hi = bounds
    if not (0 < lo < hi):
        raise InvalidArgumentError(f"multistart bounds must satisfy 0 < lo < hi, got {bounds}")
    starts = np.geomspace(lo, hi, grid)
    found: list[np.ndarray] = []
    converged = 0
    for xa in starts:
        for xr in starts:
            x, f = _newton(system, (xa, xr), tol, max_iter)
            if not (np.all(np.isfinite(x)) and f <= tol):
                continue
            converged += 1
            if all(np.hypot(*(x - y)) > dedup for y in found):
                found.append(x)
    found.sort(key=lambda v: (v[0], v[1]))
    pts = [_classified(system, system.point(*x)) for x in found]
    return RootSet(pts, starts=grid * grid, converged=converged)


def solve_pseudopotential(p: HamiltonianParams, bounds: tuple[float, float] = (0.1, 10.0), t: float | None = None, **kwargs) -> RootSet:
    return solve_system(pseudopotential_system(p, t), bounds, **kwargs)


def classify_hessian(H: np.ndarray) -> Classification:
    H = 0.5 * (np.asarray(H, dtype=float) + np.asarray(H, dtype=float).T)
    ev = np.linalg.eigvalsh(H)
    norm = float(np.max(np.abs(ev)))
    if norm == 0.0 or np.min(np.abs(ev)) < DEGENERACY_RATIO * norm:
        return "degenerate"
    if np.all(ev > 0):
        return "minimum"
    if np.all(ev < 0):
        return "maximum"
    return "saddle"


def classify_stationary(point: StationaryPoint, system: EquilibriumSystem) -> Classification:
    """Eigenvalue signs of the energy Hessian at ``point``."""
    return classify_hessian(system.hessian(point.xi_a, point.xi_r))


def _classified(system: EquilibriumSystem, pt: StationaryPoint) -> StationaryPoint:
    return replace(pt, classification=classify_stationary(pt, system))


def write_roots_csv(points: Iterable[StationaryPoint], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(ROOTS_HEADER)
    for pt in points:
        w.writerow(["%.17g" % pt.xi_a, "%.17g" % pt.xi_r, "%.17g" % pt.residual,
                    "true" if pt.admissible else "false", pt.classification or ""])
