"""Dequantized classical Hamiltonian and its equations of motion.

Per mode ``j`` with weight ``w_j = k_j + m_j`` the flow reads

    w xi'    =  2 sigma dH/deta / hbar
    w eta'   = -2 sigma dH/dxi  / hbar
    w sigma' = (eta dH/deta - xi dH/dxi) / hbar

or equivalently, on the disk,

    z' = (1 - |z|^2)^2 / (2 i hbar w) dH/dz*
       = (dH/dxi (1 + z)^2 - dH/deta (1 - z)^2) / (2 i hbar w).

Time is physical (seconds, or units of ``1/Omega`` for dimensionless
configurations).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .algebra import AXIAL_INDICES
from .coherent import (
    ModeLabels,
    XiEtaState,
    constraint_residual,
    disk_to_xieta,
    h4_average,
    h6_average,
    husimi_Q,
)
from .errors import DivergenceError, DomainError, InvalidArgumentError
from .trap import (
    HBAR,
    DriveParams,
    ModeFrequencies,
    Particle,
    TrapGeometry,
    drive_amplitude,
    elastic_constants,
)

# Dormand-Prince 8(5,3); the 5(4) pair ("RK45") drifts past 1e-8 in the constraint
# over 100 drive periods at tol=1e-10.
DEFAULT_METHOD = "DOP853"

CSV_HEADER = ("t", "xi_a", "eta_a", "sigma_a", "xi_r", "eta_r", "sigma_r", "H", "res_a", "res_r")


@dataclass(frozen=True)
class PhaseState:
    axial: XiEtaState
    radial: XiEtaState

    @classmethod
    def from_disk(cls, z_a: complex, z_r: complex) -> "PhaseState":
        return cls(disk_to_xieta(z_a), disk_to_xieta(z_r))

    @classmethod
    def from_array(cls, y) -> "PhaseState":
        return cls(XiEtaState(y[0], y[1], y[2]), XiEtaState(y[3], y[4], y[5]))

    def as_array(self) -> np.ndarray:
        return np.array(self.axial.as_tuple() + self.radial.as_tuple())


class Coefficients(NamedTuple):
    """Time-dependent scalars of the classical Hamiltonian at one instant."""

    A_a: float  # 2 hbar omega_a
    B_a: float  # 2 hbar K_a / (M omega_a)
    A_r: float  # hbar omega_r
    B_r: float  # 2 hbar K_r / (M omega_r)
    const: float  # -omega_c hbar l / 2
    g4: float
    g6: float


@dataclass(frozen=True)
class HamiltonianParams:
    labels_a: ModeLabels
    labels_r: ModeLabels
    l: int
    frequencies: ModeFrequencies
    particle: Particle
    geometry: TrapGeometry
    drive: DriveParams
    physical_scales: bool = True

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 0:
            raise InvalidArgumentError(f"orbital quantum number must be a non-negative integer, got {self.l}")
        if not math.isclose(self.labels_r.k, (self.l + 1) / 2.0, rel_tol=0, abs_tol=1e-12):
            raise InvalidArgumentError(f"radial Bargmann index must be (l+1)/2 = {(self.l + 1) / 2}, got {self.labels_r.k}")
        if self.labels_a.k not in AXIAL_INDICES:
            raise InvalidArgumentError(f"axial Bargmann index must be one of {AXIAL_INDICES}, got {self.labels_a.k}")

    @classmethod
    def build(
        cls,
        particle: Particle,
        geometry: TrapGeometry,
        drive: DriveParams,
        *,
        k_a: float = 0.25,
        m_a: int = 0,
        l: int = 0,
        m_r: int = 0,
        omega_a: float | None = None,
        omega_r: float | None = None,
        hbar: float = HBAR,
        physical_scales: bool = True,
    ) -> "HamiltonianParams":
        freqs = ModeFrequencies.build(particle, geometry, drive, omega_a, omega_r, hbar)
        return cls(
            ModeLabels(k_a, m_a), ModeLabels((l + 1) / 2.0, m_r), l, freqs,
            particle, geometry, drive, physical_scales,
        )

    @cached_property
    def moments(self) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
        """``(Q1, Q2, Q3)`` for the axial and the radial mode."""
        return (
            tuple(husimi_Q(n, self.labels_a) for n in (1, 2, 3)),
            tuple(husimi_Q(n, self.labels_r) for n in (1, 2, 3)),
        )

    @property
    def length_scales(self) -> tuple[float, float]:
        if self.physical_scales:
            return self.frequencies.lambda_a, self.frequencies.lambda_r
        return 1.0, 1.0

    def coefficients(self, t) -> Coefficients:
        f, pt, g = self.frequencies, self.particle, self.geometry
        K_r, K_a = elastic_constants(pt, g, self.drive, t)
        if g.kind == "combined":
            g4 = pt.Q * drive_amplitude(self.drive, t) * g.D
            g6 = 0.0
        else:
            g4 = pt.Q * g.C4
            g6 = pt.Q * g.C6
        return Coefficients(
            A_a=2.0 * f.hbar * f.omega_a,
            B_a=2.0 * f.hbar * K_a / (pt.M * f.omega_a),
            A_r=f.hbar * f.omega_r,
            B_r=2.0 * f.hbar * K_r / (pt.M * f.omega_r),
            const=-0.5 * f.omega_c * f.hbar * self.l,
            g4=g4,
            g6=g6,
        )


def _s_terms(p: HamiltonianParams, xi_a, xi_r):
    (Q1a, Q2a, Q3a), (Q1r, Q2r, Q3r) = p.moments
    la, lr = p.length_scales
    ua, ur = la * xi_a, lr * xi_r
    S = (Q1a * ua, Q2a * ua * ua, Q3a * ua**3, Q1r * ur, Q2r * ur * ur, Q3r * ur**3)
    dS = (Q1a * la, 2.0 * Q2a * la * ua, 3.0 * Q3a * la * ua * ua, Q1r * lr, 2.0 * Q2r * lr * ur, 3.0 * Q3r * lr * ur * ur)
    return S, dS


def _energy(p: HamiltonianParams, c: Coefficients, xa, ea, xr, er):
    wa, wr = p.labels_a.weight, p.labels_r.weight
    (S1a, S2a, S3a, S1r, S2r, S3r), _ = _s_terms(p, xa, xr)
    H = wr * (c.A_r * er + c.B_r * xr) + wa * (c.A_a * ea + c.B_a * xa) + c.const
    H = H + c.g4 * h4_average(S1a, S2a, S1r, S2r)
    if p.geometry.kind == "ideal-paul":
        H = H + c.g6 * h6_average(S1a, S2a, S3a, S1r, S2r, S3r)
    return H


def _grad(p: HamiltonianParams, c: Coefficients, xa, xr):
    wa, wr = p.labels_a.weight, p.labels_r.weight
    (S1a, S2a, S3a, S1r, S2r, S3r), (d1a, d2a, d3a, d1r, d2r, d3r) = _s_terms(p, xa, xr)
    gxa = wa * c.B_a + c.g4 * (8.0 * d2a - 24.0 * S1r * d1a)
    gxr = wr * c.B_r + c.g4 * (-24.0 * S1a * d1r + 3.0 * d2r)
    if p.geometry.kind == "ideal-paul":
        gxa = gxa + c.g6 * (16.0 * d3a - 120.0 * d2a * S1r + 90.0 * d1a * S2r)
        gxr = gxr + c.g6 * (-120.0 * S2a * d1r + 90.0 * S1a * d2r - 5.0 * d3r)
    return gxa, wa * c.A_a, gxr, wr * c.A_r


def classical_hamiltonian(s: PhaseState, t: float, p: HamiltonianParams) -> float:
    """Classical energy on the product of squeezed coherent states."""
    return float(_energy(p, p.coefficients(t), s.axial.xi, s.axial.eta, s.radial.xi, s.radial.eta))


def hamiltonian_xieta(xi_a: float, eta_a: float, xi_r: float, eta_r: float, t: float, p: HamiltonianParams) -> float:
    """The classical energy as a function on all of ``(xi, eta)`` space.

    The constraint is not imposed, so partial derivatives can be taken one
    variable at a time.
    """
    return float(_energy(p, p.coefficients(t), xi_a, eta_a, xi_r, eta_r))


def hamiltonian_terms(s: PhaseState, t: float, p: HamiltonianParams) -> dict[str, float]:
    """The classical Hamiltonian split into its named contributions."""
    c = p.coefficients(t)
    wa, wr = p.labels_a.weight, p.labels_r.weight
    (S1a, S2a, S3a, S1r, S2r, S3r), _ = _s_terms(p, s.axial.xi, s.radial.xi)
    terms = {
        "kinetic_r": wr * c.A_r * s.radial.eta,
        "kinetic_a": wa * c.A_a * s.axial.eta,
        "potential_r": wr * c.B_r * s.radial.xi,
        "potential_a": wa * c.B_a * s.axial.xi,
        "rotation": c.const,
        "H4": c.g4 * h4_average(S1a, S2a, S1r, S2r),
        "H6": 0.0,
    }
    if p.geometry.kind == "ideal-paul":
        terms["H6"] = c.g6 * h6_average(S1a, S2a, S3a, S1r, S2r, S3r)
    return terms


def gradient(s: PhaseState, t: float, p: HamiltonianParams) -> tuple[float, float, float, float]:
    """``(dH/dxi_a, dH/deta_a, dH/dxi_r, dH/deta_r)``."""
    g = _grad(p, p.coefficients(t), s.axial.xi, s.radial.xi)
    return tuple(float(v) for v in g)


def _xieta_rhs(p: HamiltonianParams, t, y):
    xa, ea, sa, xr, er, sr = y
    c = p.coefficients(t)
    gxa, gea, gxr, ger = _grad(p, c, xa, xr)
    hb = p.frequencies.hbar
    na = 1.0 / (hb * p.labels_a.weight)
    nr = 1.0 / (hb * p.labels_r.weight)
    return (
        2.0 * sa * gea * na,
        -2.0 * sa * gxa * na,
        (ea * gea - xa * gxa) * na,
        2.0 * sr * ger * nr,
        -2.0 * sr * gxr * nr,
        (er * ger - xr * gxr) * nr,
    )


def eom_rhs(s: PhaseState, t: float, p: HamiltonianParams) -> tuple[float, ...]:
    """Time derivatives ``(xi_a, eta_a, sigma_a, xi_r, eta_r, sigma_r)'``."""
    return tuple(float(v) for v in _xieta_rhs(p, t, s.as_array()))


def _disk_rhs(p: HamiltonianParams, t, z_a: complex, z_r: complex):
    xa = disk_to_xieta(z_a).xi
    xr = disk_to_xieta(z_r).xi
    gxa, gea, gxr, ger = _grad(p, p.coefficients(t), xa, xr)
    hb = p.frequencies.hbar
    za = (gxa * (1.0 + z_a) ** 2 - gea * (1.0 - z_a) ** 2) / (2j * hb * p.labels_a.weight)
    zr = (gxr * (1.0 + z_r) ** 2 - ger * (1.0 - z_r) ** 2) / (2j * hb * p.labels_r.weight)
    return za, zr


def disk_eom_rhs(z_a: complex, z_r: complex, t: float, p: HamiltonianParams) -> tuple[complex, complex]:
    """Disk velocities ``(z_a', z_r')``; the anharmonic terms couple the modes."""
    return _disk_rhs(p, t, complex(z_a), complex(z_r))


@dataclass
class Trajectory:
    """Accepted integrator steps.

    ``states`` has columns ``xi_a, eta_a, sigma_a, xi_r, eta_r, sigma_r``;
    ``residuals`` holds ``sigma^2 - xi eta + 1`` per mode.
    """

    t: np.ndarray
    states: np.ndarray
    energy: np.ndarray
    residuals: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.t)

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if len(self) else 0.0

    @property
    def energy_drift(self) -> float:
        """``max |H(t) - H(t0)| / |H(t0)|``."""
        return float(np.max(np.abs(self.energy - self.energy[0])) / abs(self.energy[0]))

    def state(self, i: int) -> PhaseState:
        return PhaseState.from_array(self.states[i])

    def samples(self):
        for i in range(len(self)):
            yield self.t[i], self.state(i), self.energy[i], tuple(self.residuals[i])

    def write_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        data = np.column_stack([self.t, self.states, self.energy, self.residuals])
        for row in data:
            w.writerow(["%.17g" % v for v in row])


def _trajectory(t, Y, p: HamiltonianParams) -> Trajectory:
    t = np.asarray(t, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(len(t), 6)
    energy = _energy(p, p.coefficients(t), Y[:, 0], Y[:, 1], Y[:, 3], Y[:, 4])
    energy = np.broadcast_to(np.asarray(energy, dtype=float), t.shape).copy()
    res = np.column_stack([
        constraint_residual(Y[:, 0], Y[:, 1], Y[:, 2]),
        constraint_residual(Y[:, 3], Y[:, 4], Y[:, 5]),
    ])
    return Trajectory(t, Y, energy, res)


def _solve(fun, y0, t0, t1, tol, method, max_step, blowup, t_eval=None):
    def boundary(t, y):
        return blowup(y)

    boundary.terminal = True
    boundary.direction = -1
    return solve_ivp(
        fun, (t0, t1), y0, method=method, rtol=tol, atol=tol,
        max_step=max_step, events=boundary, t_eval=t_eval,
    )


def integrate(
    initial: PhaseState,
    t0: float,
    t1: float,
    p: HamiltonianParams,
    tol: float = 1e-10,
    *,
    method: str = DEFAULT_METHOD,
    max_step: float = np.inf,
    divergence_bound: float = 1e8,
    t_eval=None,
) -> Trajectory:
    """Integrate the (xi, eta, sigma) flow with an adaptive embedded Runge-Kutta pair.

    The constraint ``sigma^2 = xi eta - 1`` is only monitored, not enforced.
    Samples are the accepted steps, or the times in ``t_eval`` when given.

    Raises:
        DivergenceError: when ``xi + eta`` exceeds ``divergence_bound`` in
            either mode (the disk boundary) or the step size underflows. The
            partial trajectory is attached as ``err.partial``.
    """
    if not tol > 0:
        raise InvalidArgumentError(f"tolerance must be positive, got {tol}")
    if t1 < t0:
        raise InvalidArgumentError(f"t1 must not precede t0 (t0={t0}, t1={t1})")
    y0 = initial.as_array()
    if t1 == t0:
        return _trajectory([t0], [y0], p)

    def fun(t, y):
        return _xieta_rhs(p, t, y.tolist())

    def blowup(y):
        return divergence_bound - max(y[0] + y[1], y[3] + y[4])

    sol = _solve(fun, y0, t0, t1, tol, method, max_step, blowup, t_eval)
    traj = _trajectory(sol.t, sol.y.T, p)
    _check_outcome(sol, traj, divergence_bound)
    return traj


def integrate_disk(
    z_a: complex,
    z_r: complex,
    t0: float,
    t1: float,
    p: HamiltonianParams,
    tol: float = 1e-10,
    *,
    method: str = DEFAULT_METHOD,
    max_step: float = np.inf,
    boundary_margin: float = 1e-12,
    t_eval=None,
) -> tuple[np.ndarray, np.ndarray, Trajectory]:
    """Integrate the same flow in disk coordinates.

    Returns the accepted times, the complex ``(z_a, z_r)`` path of shape
    ``(n, 2)`` and the path mapped to (xi, eta, sigma) as a Trajectory.
    """
    if t1 < t0:
        raise InvalidArgumentError(f"t1 must not precede t0 (t0={t0}, t1={t1})")
    for z in (z_a, z_r):
        if not abs(z) < 1:
            raise DomainError(f"|z| must be < 1, got {abs(z)}")
    y0 = np.array([z_a.real, z_a.imag, z_r.real, z_r.imag], dtype=float)

    def fun(t, y):
        da, dr = _disk_rhs(p, t, complex(y[0], y[1]), complex(y[2], y[3]))
        return (da.real, da.imag, dr.real, dr.imag)

    def blowup(y):
        return min(1.0 - y[0] ** 2 - y[1] ** 2, 1.0 - y[2] ** 2 - y[3] ** 2) - boundary_margin

    if t1 == t0:
        ts, Y = np.array([t0]), y0[None, :]
        sol = None
    else:
        sol = _solve(fun, y0, t0, t1, tol, method, max_step, blowup, t_eval)
        ts, Y = sol.t, sol.y.T
    Z = np.column_stack([Y[:, 0] + 1j * Y[:, 1], Y[:, 2] + 1j * Y[:, 3]])
    states = np.column_stack([_xieta_columns(Z[:, 0]), _xieta_columns(Z[:, 1])])
    traj = _trajectory(ts, states, p)
    if sol is not None:
        _check_outcome(sol, traj, None)
    return ts, Z, traj


def _xieta_columns(z: np.ndarray) -> np.ndarray:
    d = 1.0 - np.abs(z) ** 2
    return np.column_stack([np.abs(1 + z) ** 2 / d, np.abs(1 - z) ** 2 / d, 2.0 * z.imag / d])


def _check_outcome(sol, traj: Trajectory, bound) -> None:
    if sol.status == 1:
        raise DivergenceError(
            f"trajectory reached the disk boundary at t={sol.t[-1]:.6g}"
            + (f" (xi + eta > {bound:g})" if bound is not None else ""),
            partial=traj,
        )
    if sol.status < 0:
        raise DivergenceError(f"integration failed at t={sol.t[-1]:.6g}: {sol.message}", partial=traj)
