"""Hill/Mathieu stability, Floquet exponents, quasienergies and the Riccati
flow of the coherent-state parameters.

The Mathieu form is ``u'' + (a - 2q cos 2tau) u = 0`` with ``tau = Omega t / 2``.
Monodromy matrices come from a fourth-order Magnus integrator whose steps
are exact exponentials of traceless 2x2 matrices, so ``det = 1`` holds to
rounding regardless of step size.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal, Union

import numpy as np
from scipy.integrate import solve_ivp

from .coherent import ModeLabels
from .dynamics import HamiltonianParams
from .errors import DivergenceError, DomainError, InvalidArgumentError, NumericalError, UndefinedSpectrumError
from .trap import effective_mathieu_coefficients, elastic_constants, mathieu_coefficients

Mode = Literal["axial", "radial"]

DEFAULT_STEPS = 2000
_MAX_PHASE_STEP = 2e-3
_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class MathieuParams:
    a: float
    q: float


@dataclass(frozen=True, eq=False)
class FloquetResult:
    monodromy: np.ndarray
    stable: bool
    beta: float
    mu: float

    @property
    def trace(self) -> float:
        return float(np.trace(self.monodromy))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.monodromy))


def _check_mode(mode):
    if mode not in ("axial", "radial"):
        raise InvalidArgumentError(f"mode must be 'axial' or 'radial', got {mode!r}")


def mathieu_params(p: HamiltonianParams, mode: Mode) -> MathieuParams:
    """Mathieu parameters of the Newtonian motion ``M u'' + K_j(t) u = 0``."""
    _check_mode(mode)
    return MathieuParams(*mathieu_coefficients(p.particle, p.geometry, p.drive)[mode])


def effective_mathieu_params(p: HamiltonianParams, mode: Mode) -> MathieuParams:
    """Mathieu parameters of the squeezing flow of the classical Hamiltonian."""
    _check_mode(mode)
    return MathieuParams(*effective_mathieu_coefficients(p.particle, p.geometry, p.drive)[mode])


def _auto_steps(strength: float, steps: int) -> int:
    return max(int(steps), int(math.ceil(math.pi * math.sqrt(strength) / _MAX_PHASE_STEP)))


def magnus_monodromy(a, q, steps: int = DEFAULT_STEPS) -> np.ndarray:
    """Monodromy over ``tau in [0, pi]`` for broadcastable arrays ``a``, ``q``.

    Returns an array of shape ``broadcast(a, q).shape + (2, 2)``. The step
    count is raised automatically so that ``h sqrt(max|a| + 2 max|q|)``
    stays below ``2e-3``.
    """
    a, q = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(q, dtype=float))
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(q))):
        raise InvalidArgumentError("Mathieu parameters must be finite")
    n = _auto_steps(float(np.max(np.abs(a) + 2.0 * np.abs(q), initial=0.0)), steps)
    h = math.pi / n
    c1, c2 = 0.5 - _SQRT3 / 6.0, 0.5 + _SQRT3 / 6.0

    m11, m12 = np.ones_like(a), np.zeros_like(a)
    m21, m22 = np.zeros_like(a), np.ones_like(a)
    for i in range(n):
        t = i * h
        f1 = a - 2.0 * q * math.cos(2.0 * (t + c1 * h))
        f2 = a - 2.0 * q * math.cos(2.0 * (t + c2 * h))
        # Omega = [[d, h], [-h F, -d]]
        d = _SQRT3 * h * h * (f2 - f1) / 12.0
        F = 0.5 * (f1 + f2)
        s2 = d * d - h * h * F
        r = np.sqrt(np.abs(s2))
        with np.errstate(invalid="ignore", divide="ignore"):
            ch = np.where(s2 >= 0, np.cosh(r), np.cos(r))
            sh = np.where(r > 0, np.where(s2 >= 0, np.sinh(r), np.sin(r)) / r, 1.0)
        e11 = ch + sh * d
        e12 = sh * h
        e21 = -sh * h * F
        e22 = ch - sh * d
        with np.errstate(over="ignore", invalid="ignore"):
            m11, m12, m21, m22 = (
                e11 * m11 + e12 * m21,
                e11 * m12 + e12 * m22,
                e21 * m11 + e22 * m21,
                e21 * m12 + e22 * m22,
            )
    out = np.stack([np.stack([m11, m12], -1), np.stack([m21, m22], -1)], -2)
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"monodromy integration overflowed ({n} steps, h={h:.3e})")
    return out


def _classify(trace):
    trace = np.asarray(trace, dtype=float)
    stable = np.abs(trace) <= 2.0
    with np.errstate(invalid="ignore"):
        beta = np.where(stable, np.arccos(np.clip(trace / 2.0, -1.0, 1.0)) / math.pi, np.nan)
    return stable, beta


def monodromy(mp: MathieuParams, Omega: float = 1.0, steps: int = DEFAULT_STEPS) -> FloquetResult:
    """Floquet analysis of one Mathieu equation.

    ``beta = arccos(trace/2)/pi`` on the principal branch ``[0, 1]`` and
    ``mu = beta Omega / 2`` for stable parameters; both are NaN otherwise.
    """
    M = magnus_monodromy(mp.a, mp.q, steps)
    stable, beta = _classify(np.trace(M))
    stable, beta = bool(stable), float(beta)
    return FloquetResult(M, stable, beta, beta * Omega / 2.0 if stable else math.nan)


def _grid_chunk(args):
    # one row per call, so results do not depend on how rows are split
    a, q, steps = args
    rows = [magnus_monodromy(np.full_like(q, ai), q, steps) for ai in a]
    M = np.stack(rows) if rows else np.empty((0, len(q), 2, 2))
    return np.trace(M, axis1=-2, axis2=-1), np.linalg.det(M)


def stability_grid(a_values, q_values, workers: int = 1, steps: int = DEFAULT_STEPS):
    """Stability over the product grid ``a_values x q_values``.

    Returns ``(stable, beta, det)`` arrays of shape ``(len(a), len(q))``.
    Rows of the grid are spread over ``workers`` processes.
    """
    a_values = np.asarray(a_values, dtype=float)
    q_values = np.asarray(q_values, dtype=float)
    workers = max(1, int(workers))
    chunks = [c for c in np.array_split(a_values, workers) if len(c)]
    strength = float(np.max(np.abs(a_values), initial=0.0) + 2.0 * np.max(np.abs(q_values), initial=0.0))
    steps = _auto_steps(strength, steps)
    jobs = [(c, q_values, steps) for c in chunks]
    if workers == 1 or len(jobs) == 1:
        parts = [_grid_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_grid_chunk, jobs))
    trace = np.concatenate([t for t, _ in parts], axis=0)
    det = np.concatenate([d for _, d in parts], axis=0)
    stable, beta = _classify(trace)
    return stable, beta, det


def quasienergy(
    mu_a: Union[float, FloquetResult],
    mu_r: Union[float, FloquetResult],
    labels_a: ModeLabels,
    labels_r: ModeLabels,
    l: int,
    omega_c: float,
    hbar: float,
) -> float:
    """``E = 2 hbar [mu_a (k_a + m_a) + mu_r (k_r + m_r) - omega_c l / 4]``.

    Raises:
        UndefinedSpectrumError: if either Floquet exponent belongs to an
            unstable mode (or is not finite).
    """
    mus = []
    for name, mu in (("axial", mu_a), ("radial", mu_r)):
        if isinstance(mu, FloquetResult):
            if not mu.stable:
                raise UndefinedSpectrumError(f"{name} mode is unstable (trace = {mu.trace:.6g})")
            mu = mu.mu
        if not math.isfinite(mu):
            raise UndefinedSpectrumError(f"{name} Floquet exponent is not finite")
        mus.append(mu)
    return 2.0 * hbar * (mus[0] * labels_a.weight + mus[1] * labels_r.weight - omega_c * l / 4.0)


@dataclass(frozen=True)
class RiccatiCoefficients:
    """Harmonic part ``A (K0 - K1) + B(t) (K0 + K1)`` of one mode.

    ``A`` and ``B`` are energies; ``B`` may be a constant or a callable of
    time. With ``alpha = (A + B)/hbar`` and ``beta = (B - A)/hbar`` the
    disk parameter and the phase obey

        i z'  = alpha z + (beta/2)(z^2 + 1)
        phi'  = alpha + (beta/2)(z + z*)
    """

    A: float
    B: Union[float, Callable[[float], float]]
    hbar: float = 1.0

    def B_at(self, t: float) -> float:
        return self.B(t) if callable(self.B) else self.B

    def alpha_beta(self, t: float) -> tuple[float, float]:
        B = self.B_at(t)
        return (self.A + B) / self.hbar, (B - self.A) / self.hbar

    @classmethod
    def from_params(cls, p: HamiltonianParams, mode: Mode) -> "RiccatiCoefficients":
        _check_mode(mode)
        f, pt = p.frequencies, p.particle
        if mode == "axial":
            def B(t):
                return 2.0 * f.hbar * elastic_constants(pt, p.geometry, p.drive, t)[1] / (pt.M * f.omega_a)

            return cls(2.0 * f.hbar * f.omega_a, B, f.hbar)

        def B(t):
            return 2.0 * f.hbar * elastic_constants(pt, p.geometry, p.drive, t)[0] / (pt.M * f.omega_r)

        return cls(f.hbar * f.omega_r, B, f.hbar)

    @classmethod
    def from_mathieu(cls, mp: MathieuParams) -> "RiccatiCoefficients":
        """Unit-frequency realization of a Mathieu equation; time is ``tau``."""
        a, q = mp.a, mp.q
        return cls(1.0, lambda tau: a - 2.0 * q * math.cos(2.0 * tau), 1.0)


def riccati_rhs(z: complex, t: float, coeffs: RiccatiCoefficients, literal: bool = False) -> tuple[complex, float]:
    """``(z', phi')``. ``literal=True`` drops the term linear in ``z``."""
    alpha, beta = coeffs.alpha_beta(t)
    lin = alpha if literal else alpha * z
    dz = -1j * (lin + 0.5 * beta * (z * z + 1.0))
    dphi = alpha + beta * z.real
    return dz, dphi


@dataclass(eq=False)
class RiccatiPath:
    t: np.ndarray
    z: np.ndarray
    phi: np.ndarray

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z)))


def riccati_evolve(
    z0: complex,
    phi0: float,
    coeffs: RiccatiCoefficients,
    t0: float,
    t1: float,
    tol: float = 1e-10,
    *,
    literal: bool = False,
    t_eval=None,
    boundary_margin: float = 1e-12,
    method: str = "DOP853",
) -> RiccatiPath:
    """Integrate the disk parameter and phase of one mode.

    Raises:
        DivergenceError: if ``1 - |z|^2`` falls below ``boundary_margin``;
            the partial path is attached.
    """
    z0 = complex(z0)
    if not abs(z0) < 1:
        raise DomainError(f"|z0| must be < 1, got {abs(z0)}")
    if t1 < t0:
        raise InvalidArgumentError(f"t1 must not precede t0 (t0={t0}, t1={t1})")
    if t1 == t0:
        return RiccatiPath(np.array([t0]), np.array([z0]), np.array([float(phi0)]))

    def fun(t, y):
        dz, dphi = riccati_rhs(complex(y[0], y[1]), t, coeffs, literal)
        return (dz.real, dz.imag, dphi)

    def boundary(t, y):
        return 1.0 - y[0] * y[0] - y[1] * y[1] - boundary_margin

    boundary.terminal = True
    boundary.direction = -1
    sol = solve_ivp(fun, (t0, t1), [z0.real, z0.imag, float(phi0)], method=method,
                    rtol=tol, atol=tol, t_eval=t_eval, events=boundary)
    path = RiccatiPath(sol.t, sol.y[0] + 1j * sol.y[1], sol.y[2])
    if sol.status == 1:
        raise DivergenceError(f"|z| reached the disk boundary at t={sol.t_events[0][0]:.6g}", partial=path)
    if sol.status < 0:
        raise DivergenceError(f"Riccati integration failed: {sol.message}", partial=path)
    return path


def riccati_bounded(mp: MathieuParams, periods: int = 50, z0: complex = 0.0,
                    threshold: float = 1e-6, tol: float = 1e-10) -> bool:
    """Whether ``1 - |z|^2`` stays above ``threshold`` for ``periods`` periods
    of the Mathieu drive (a period is ``pi`` in ``tau``)."""
    coeffs = RiccatiCoefficients.from_mathieu(mp)
    try:
        path = riccati_evolve(z0, 0.0, coeffs, 0.0, periods * math.pi, tol, boundary_margin=threshold)
    except DivergenceError:
        return False
    return bool(np.min(1.0 - np.abs(path.z) ** 2) > threshold)
