"""Closed-form expectation values on squeezed coherent states ``|z, k, m>``.

Each mode of the classical phase space is the open unit disk. The global
coordinates used by the Hamiltonian are

    xi    = |1 + z|^2 / (1 - |z|^2)
    eta   = |1 - z|^2 / (1 - |z|^2)
    sigma = 2 Im(z) / (1 - |z|^2)

which satisfy ``sigma**2 == xi*eta - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InvalidArgumentError, InvalidStateError, UnsupportedOrderError

#: Relative tolerance on ``sigma**2 - xi*eta + 1`` accepted at construction.
STATE_TOLERANCE = 1e-9
_BRANCH_CUTOFF = 1e-14


@dataclass(frozen=True)
class ModeLabels:
    """Bargmann index ``k`` and oscillator quantum number ``m`` of one mode."""

    k: float
    m: int = 0

    def __post_init__(self):
        if not self.k > 0:
            raise InvalidArgumentError(f"Bargmann index must be positive, got {self.k}")
        if int(self.m) != self.m or self.m < 0:
            raise InvalidArgumentError(f"m must be a non-negative integer, got {self.m}")
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "m", int(self.m))

    @property
    def weight(self) -> float:
        """``k + m``, the K0 eigenvalue of ``|k, m>``."""
        return self.k + self.m


@dataclass(frozen=True)
class XiEtaState:
    xi: float
    eta: float
    sigma: float

    def __post_init__(self):
        xi, eta, sigma = float(self.xi), float(self.eta), float(self.sigma)
        if not (xi > 0 and eta > 0):
            raise InvalidStateError(f"xi and eta must be positive, got xi={xi}, eta={eta}")
        if abs(constraint_residual(xi, eta, sigma)) > STATE_TOLERANCE * max(1.0, xi * eta):
            raise InvalidStateError(
                f"sigma^2 - xi*eta + 1 = {constraint_residual(xi, eta, sigma):.3e} for"
                f" (xi, eta, sigma) = ({xi}, {eta}, {sigma})"
            )
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_disk(cls, z: complex) -> "XiEtaState":
        return disk_to_xieta(z)

    def to_disk(self, branch: int | None = None) -> complex:
        return xieta_to_disk(self, branch)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.xi, self.eta, self.sigma)


def constraint_residual(xi: float, eta: float, sigma: float) -> float:
    return sigma * sigma - xi * eta + 1.0


def _disk(z: complex) -> tuple[complex, float]:
    z = complex(z)
    r2 = z.real * z.real + z.imag * z.imag
    if not r2 < 1.0:
        raise DomainError(f"squeeze parameter must satisfy |z| < 1, got |z| = {math.sqrt(r2)}")
    return z, 1.0 - r2


def disk_to_xieta(z: complex) -> XiEtaState:
    z, d = _disk(z)
    xi = ((1.0 + z.real) ** 2 + z.imag**2) / d
    eta = ((1.0 - z.real) ** 2 + z.imag**2) / d
    return XiEtaState(xi, eta, 2.0 * z.imag / d)


def xieta_to_disk(s: XiEtaState, branch: int | None = None) -> complex:
    """Inverse of :func:`disk_to_xieta`.

    ``branch`` (+1 or -1) fixes the sign of ``Im z``; by default it follows
    the sign of ``sigma`` and is +1 when ``sigma`` is numerically zero.
    """
    if branch is None:
        branch = -1 if s.sigma <= -_BRANCH_CUTOFF else 1
    elif branch not in (1, -1):
        raise InvalidArgumentError(f"branch must be +1 or -1, got {branch}")
    denom = s.xi + s.eta + 2.0
    return complex((s.xi - s.eta) / denom, branch * 2.0 * abs(s.sigma) / denom)


def husimi_Q(n: int, labels: ModeLabels, literal: bool = False) -> float:
    """Fock moments ``Q_n(k, m) = <k,m| E^n |k,m>`` of ``E = 2K0 + K+ + K-``.

    Q1 = 2(k + m)
    Q2 = 2k(2k + 1) + 12km + 6m^2
    Q3 = 8(k+m)^3 + 6(k+m)(2k + 4km + 2m^2) + 4(k+m)

    With ``literal=True`` the third moment is the older published polynomial
    ``4k(k+1)(2k+1) + 4mk(5+12k) + 4m^2(15k+1) + 20m^3``. Both agree at
    ``m = 0``; for ``m >= 1`` only the default form matches the operator
    algebra.
    """
    k, m = labels.k, labels.m
    if n == 1:
        return 2.0 * (k + m)
    if n == 2:
        return 2.0 * k * (2.0 * k + 1.0) + 12.0 * k * m + 6.0 * m * m
    if n == 3:
        if literal:
            return (
                4.0 * k * (k + 1.0) * (2.0 * k + 1.0)
                + 4.0 * m * k * (5.0 + 12.0 * k)
                + 4.0 * m * m * (15.0 * k + 1.0)
                + 20.0 * m**3
            )
        w = k + m
        return 8.0 * w**3 + 6.0 * w * (2.0 * k + 4.0 * k * m + 2.0 * m * m) + 4.0 * w
    raise UnsupportedOrderError(f"Husimi moments are available for n = 1, 2, 3, got {n}")


def S_value(n: int, z: complex, labels: ModeLabels) -> float:
    """``S_n = xi^n Q_n(k, m)``, the n-th moment of ``E`` on ``|z, k, m>``."""
    xi = disk_to_xieta(z).xi
    return xi**n * husimi_Q(n, labels)


def kinetic_expectation(z: complex, labels: ModeLabels) -> float:
    """``<z,k,m| K0 - K1 |z,k,m> = (k + m) eta``."""
    return labels.weight * disk_to_xieta(z).eta


def generator_expectations(z: complex, labels: ModeLabels) -> dict[str, complex]:
    """Closed forms for <K0>, <K+>, <K->, <K0 - K1> and <K0 + K1>."""
    z, d = _disk(z)
    w = labels.weight
    s = disk_to_xieta(z)
    return {
        "K0": complex(w * (2.0 - d) / d),
        "K+": 2.0 * w * z.conjugate() / d,
        "K-": 2.0 * w * z / d,
        "K0-K1": complex(w * s.eta),
        "K0+K1": complex(w * s.xi),
    }


def h4_average(S1a: float, S2a: float, S1r: float, S2r: float) -> float:
    """``<H4> = 8 S2a - 24 S1r S1a + 3 S2r``."""
    return 8.0 * S2a - 24.0 * S1r * S1a + 3.0 * S2r


def h6_average(S1a: float, S2a: float, S3a: float, S1r: float, S2r: float, S3r: float) -> float:
    """``<H6> = 16 S3a - 120 S2a S1r + 90 S1a S2r - 5 S3r``."""
    return 16.0 * S3a - 120.0 * S2a * S1r + 90.0 * S1a * S2r - 5.0 * S3r
