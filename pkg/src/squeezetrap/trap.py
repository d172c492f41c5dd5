"""Trap and particle configuration, drive amplitude, elastic constants and
the axisymmetric harmonic polynomials H_2k(rho, z)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from .errors import InvalidArgumentError

HBAR = 1.054571817e-34  # J s

TrapKind = Literal["combined", "ideal-paul"]
TRAP_KINDS = ("combined", "ideal-paul")


@dataclass(frozen=True)
class Particle:
    Q: float
    M: float

    def __post_init__(self):
        if not self.M > 0:
            raise InvalidArgumentError(f"mass must be positive, got {self.M}")
        if self.Q == 0:
            raise InvalidArgumentError("charge must be non-zero")


@dataclass(frozen=True)
class DriveParams:
    """``A(t) = U0 + V0 cos(Omega t)``."""

    U0: float = 0.0
    V0: float = 0.0
    Omega: float = 1.0

    def __post_init__(self):
        if not self.Omega > 0:
            raise InvalidArgumentError(f"drive frequency must be positive, got {self.Omega}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.Omega


@dataclass(frozen=True)
class TrapGeometry:
    """Multipole coefficients of the trap.

    ``D`` scales the octupole term of the combined trap; ``C4`` and ``C6``
    scale the effective quartic and sextic terms of the ideal Paul trap.
    They multiply the integer-coefficient brackets ``8z^4 - 24z^2 rho^2 + 3rho^4``
    and ``16z^6 - 120z^4 rho^2 + 90z^2 rho^4 - 5rho^6``, so the 1/8 and 1/16
    normalizations of H4 and H6 are absorbed into them.
    """

    c2: float
    D: float = 0.0
    C4: float = 0.0
    C6: float = 0.0
    r0: float | None = None
    z0: float | None = None
    B0: float = 0.0
    kind: TrapKind = "combined"

    def __post_init__(self):
        if self.kind not in TRAP_KINDS:
            raise InvalidArgumentError(f"trap kind must be one of {TRAP_KINDS}, got {self.kind!r}")

    @classmethod
    def from_semiaxes(cls, r0: float, z0: float, **kwargs) -> "TrapGeometry":
        """Quadrupole coefficient ``c2 = -1/(r0^2 + 2 z0^2)`` from the trap semiaxes."""
        if not (r0 > 0 and z0 > 0):
            raise InvalidArgumentError(f"semiaxes must be positive, got r0={r0}, z0={z0}")
        return cls(c2=-1.0 / (r0 * r0 + 2.0 * z0 * z0), r0=r0, z0=z0, **kwargs)


def cyclotron_frequency(p: Particle, g: TrapGeometry) -> float:
    """``omega_c = Q B0 / M``; zero for the ideal Paul trap."""
    if g.kind == "ideal-paul":
        return 0.0
    return p.Q * g.B0 / p.M


def drive_amplitude(d: DriveParams, t):
    return d.U0 + d.V0 * np.cos(d.Omega * t) if np.ndim(t) else d.U0 + d.V0 * math.cos(d.Omega * t)


def elastic_constants(p: Particle, g: TrapGeometry, d: DriveParams, t) -> tuple[float, float]:
    """``K_r = M omega_c^2/4 - 2 Q c2 A(t)`` and ``K_a = 4 Q c2 A(t)``."""
    A = drive_amplitude(d, t)
    wc = cyclotron_frequency(p, g)
    K_r = p.M * wc * wc / 4.0 - 2.0 * p.Q * g.c2 * A
    K_a = 4.0 * p.Q * g.c2 * A
    return K_r, K_a


def mathieu_coefficients(p: Particle, g: TrapGeometry, d: DriveParams) -> dict[str, tuple[float, float]]:
    """Mathieu ``(a, q)`` per mode for ``M u'' + K(t) u = 0`` in ``tau = Omega t / 2``.

    The equation becomes ``u'' + (a - 2q cos 2tau) u = 0`` with

        a_a = 16 Q c2 U0 / (M Omega^2),           q_a = -8 Q c2 V0 / (M Omega^2)
        a_r = omega_c^2/Omega^2 - 8 Q c2 U0 / (M Omega^2),  q_r = 4 Q c2 V0 / (M Omega^2)
    """
    base = p.Q * g.c2 / (p.M * d.Omega * d.Omega)
    bu, bv = base * d.U0, base * d.V0
    wc = cyclotron_frequency(p, g) / d.Omega
    # "+ 0.0" folds negative zeros
    return {
        "axial": (16.0 * bu + 0.0, -8.0 * bv + 0.0),
        "radial": (wc * wc + (-8.0) * bu + 0.0, 4.0 * bv + 0.0),
    }


@dataclass(frozen=True)
class ModeFrequencies:
    """Reference frequencies and the squared length scales ``2 hbar / (M omega)``."""

    omega_a: float
    omega_r: float
    omega_c: float
    hbar: float
    lambda_a: float
    lambda_r: float

    @classmethod
    def build(
        cls,
        particle: Particle,
        geometry: TrapGeometry,
        drive: DriveParams,
        omega_a: float | None = None,
        omega_r: float | None = None,
        hbar: float = HBAR,
    ) -> "ModeFrequencies":
        """Fill in missing reference frequencies from
        :func:`default_reference_frequencies`."""
        defaults = default_reference_frequencies(particle, geometry, drive)
        wa = defaults[0] if omega_a is None else float(omega_a)
        wr = defaults[1] if omega_r is None else float(omega_r)
        for name, w in (("omega_a", wa), ("omega_r", wr)):
            if w is None or not w > 0:
                raise InvalidArgumentError(
                    f"{name} has no positive default for this trap; set it explicitly"
                )
        if not hbar > 0:
            raise InvalidArgumentError(f"hbar must be positive, got {hbar}")
        M = particle.M
        return cls(
            omega_a=wa,
            omega_r=wr,
            omega_c=cyclotron_frequency(particle, geometry),
            hbar=hbar,
            lambda_a=2.0 * hbar / (M * wa),
            lambda_r=2.0 * hbar / (M * wr),
        )


def effective_mathieu_coefficients(p: Particle, g: TrapGeometry, d: DriveParams) -> dict[str, tuple[float, float]]:
    """Mathieu ``(a, q)`` of the harmonic flow generated by the classical Hamiltonian.

    The Hamiltonian carries ``2 hbar omega_a`` and ``2 hbar K_a/(M omega_a)`` on the
    axial mode and ``hbar omega_r``, ``2 hbar K_r/(M omega_r)`` on the radial one,
    so its squeezing flow is that of a Hill equation with spring ``4 K_a``
    (axial) and ``2 K_r`` (radial).
    """
    c = mathieu_coefficients(p, g, d)
    (aa, qa), (ar, qr) = c["axial"], c["radial"]
    return {"axial": (4.0 * aa, 4.0 * qa), "radial": (2.0 * ar, 2.0 * qr)}


def default_reference_frequencies(p: Particle, g: TrapGeometry, d: DriveParams):
    """Reference frequencies that make each mode's harmonic part balanced.

    Uses the lowest-order secular rule ``beta^2 = a + q^2/2`` on the effective
    Mathieu parameters. For a static trap this is ``omega_a = sqrt(K_a/M)`` and
    ``omega_r = sqrt(2 K_r/M)``, the values at which ``z = 0`` is a fixed point.
    Entries are ``None`` when the mode has no positive secular frequency.
    """
    coeffs = effective_mathieu_coefficients(p, g, d)
    out = []
    for mode, share in (("axial", 0.5), ("radial", 1.0)):
        a, q = coeffs[mode]
        beta2 = a + 0.5 * q * q
        out.append(share * 0.5 * d.Omega * math.sqrt(beta2) if beta2 > 0 else None)
    return tuple(out)


def harmonic_polynomial(k: int, rho, z):
    """``H_2k(rho, z) = sum_j (-1)^j (2k)! rho^2j z^(2k-2j) / (4^j (2k-2j)! (j!)^2)``.

    Solves the axisymmetric Laplace equation; ``H_2 = (2z^2 - rho^2)/2``.
    """
    if int(k) != k or k < 1:
        raise InvalidArgumentError(f"degree index must be a positive integer, got {k}")
    k = int(k)
    rho2 = np.asarray(rho, dtype=float) ** 2
    z2 = np.asarray(z, dtype=float) ** 2
    total = np.zeros(np.broadcast(rho2, z2).shape)
    for j in range(k + 1):
        c = (-1) ** j * math.factorial(2 * k) / (4**j * math.factorial(2 * k - 2 * j) * math.factorial(j) ** 2)
        total = total + c * rho2**j * z2 ** (k - j)
    return total if total.ndim else float(total)


def harmonic_coefficients(k: int) -> dict[tuple[int, int], float]:
    """Coefficients of ``H_2k`` keyed by the powers ``(p_rho, p_z)``."""
    return {
        (2 * j, 2 * (k - j)): (-1) ** j
        * math.factorial(2 * k)
        / (4**j * math.factorial(2 * k - 2 * j) * math.factorial(j) ** 2)
        for j in range(k + 1)
    }


def _d2(f, x, h, axis_shift):
    # fourth-order central stencil for f''
    return (
        -f(*axis_shift(x, 2 * h)) + 16 * f(*axis_shift(x, h)) - 30 * f(*x)
        + 16 * f(*axis_shift(x, -h)) - f(*axis_shift(x, -2 * h))
    ) / (12 * h * h)


def laplacian_residual(k: int, points: Iterable[tuple[float, float]] | None = None, h: float = 1e-2) -> float:
    """Max ``|d2H/drho2 + (1/rho) dH/drho + d2H/dz2|`` by finite differences.

    Default sample points are a 10x10 grid on ``[0.1, 2]^2``. Stencils are
    fourth order, exact for the quadratic and quartic polynomials.
    """
    if points is None:
        g = np.linspace(0.1, 2.0, 10)
        R, Z = np.meshgrid(g, g, indexing="ij")
        pts = np.column_stack([R.ravel(), Z.ravel()])
    else:
        pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    f = lambda r, z: harmonic_polynomial(k, r, z)  # noqa: E731
    rho, z = pts[:, 0], pts[:, 1]
    shift_r = lambda x, s: (x[0] + s, x[1])  # noqa: E731
    shift_z = lambda x, s: (x[0], x[1] + s)  # noqa: E731
    d2r = _d2(f, (rho, z), h, shift_r)
    d2z = _d2(f, (rho, z), h, shift_z)
    d1r = (-f(rho + 2 * h, z) + 8 * f(rho + h, z) - 8 * f(rho - h, z) + f(rho - 2 * h, z)) / (12 * h)
    lap = d2r + d1r / rho + d2z
    return float(np.max(np.abs(lap)))
