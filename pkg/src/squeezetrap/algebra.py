"""Truncated-Fock realization of the SU(1,1) positive discrete series.

Everything here is computed by dense matrix algebra only, so it can serve
as a brute-force reference for the closed-form expectation values in
:mod:`squeezetrap.coherent`.

Basis vectors are ``|k, m>`` with ``m = 0..N-1`` and

    K0 |k,m> = (k + m) |k,m>
    K+ |k,m> = sqrt((m + 1)(2k + m)) |k,m+1>
    K- |k,m> = sqrt(m (2k + m - 1)) |k,m-1>

Truncation only corrupts products that raise out of the top state, so all
artifact checks look at the interior block (rows/columns ``0..N-2``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, InvalidArgumentError, TruncationError

DEFAULT_TRUNCATION = 128
TAIL_TOLERANCE = 1e-10

AXIAL_INDICES = (0.25, 0.75)


@dataclass(frozen=True, eq=False)
class Su11Rep:
    """Generators of one discrete-series irrep, truncated to ``N`` states."""

    k: float
    N: int
    K0: np.ndarray
    Kplus: np.ndarray
    Kminus: np.ndarray

    @property
    def K1(self) -> np.ndarray:
        return 0.5 * (self.Kplus + self.Kminus)

    @property
    def K2(self) -> np.ndarray:
        return -0.5j * (self.Kplus - self.Kminus)

    @property
    def Omega(self) -> np.ndarray:
        """``K0 + K1``."""
        return self.K0 + self.K1

    @property
    def E(self) -> np.ndarray:
        """``2K0 + K+ + K-`` (twice ``Omega``); its Fock moments are the Q_n."""
        return 2.0 * self.K0 + self.Kplus + self.Kminus


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=64)
def build_rep(k: float, N: int = DEFAULT_TRUNCATION) -> Su11Rep:
    """Matrices of K0, K+, K- at Bargmann index ``k`` with ``N`` Fock states."""
    k = float(k)
    if not k > 0:
        raise InvalidArgumentError(f"Bargmann index must be positive, got {k}")
    if int(N) != N or N < 2:
        raise InvalidArgumentError(f"truncation must be an integer >= 2, got {N}")
    N = int(N)
    m = np.arange(N, dtype=float)
    K0 = np.diag(k + m).astype(complex)
    Kp = np.zeros((N, N), dtype=complex)
    idx = np.arange(N - 1)
    Kp[idx + 1, idx] = np.sqrt((m[:-1] + 1.0) * (2.0 * k + m[:-1]))
    Km = Kp.conj().T.copy()
    return Su11Rep(k, N, _readonly(K0), _readonly(Kp), _readonly(Km))


def commutator_residuals(rep: Su11Rep) -> dict[str, float]:
    """Max-abs residuals of the three defining relations on the interior block."""
    K0, Kp, Km = rep.K0, rep.Kplus, rep.Kminus
    s = slice(0, rep.N - 1)
    r_plus = (K0 @ Kp - Kp @ K0) - Kp
    r_minus = (K0 @ Km - Km @ K0) + Km
    r_pm = (Km @ Kp - Kp @ Km) - 2.0 * K0
    return {
        "[K0,K+]-K+": float(np.abs(r_plus[s, s]).max()),
        "[K0,K-]+K-": float(np.abs(r_minus[s, s]).max()),
        "[K-,K+]-2K0": float(np.abs(r_pm[s, s]).max()),
    }


def casimir(rep: Su11Rep) -> np.ndarray:
    """``K0^2 - (K+K- + K-K+)/2``; equals ``k(k-1)`` on the interior block."""
    K0, Kp, Km = rep.K0, rep.Kplus, rep.Kminus
    return K0 @ K0 - 0.5 * (Kp @ Km + Km @ Kp)


def casimir_deviation(rep: Su11Rep) -> float:
    C = casimir(rep)
    s = slice(0, rep.N - 1)
    target = rep.k * (rep.k - 1.0) * np.eye(rep.N - 1)
    return float(np.abs(C[s, s] - target).max())


def _check_disk(z: complex) -> complex:
    z = complex(z)
    if not abs(z) < 1.0:
        raise DomainError(f"squeeze parameter must satisfy |z| < 1, got |z| = {abs(z)}")
    return z


def squeeze_operator(rep: Su11Rep, z: complex) -> np.ndarray:
    """``U(z) = exp(z K+) exp(lambda K0) exp(-z* K-)`` with ``lambda = ln(1 - |z|^2)``.

    K+ and K- only move between neighbouring states, so each column of the
    truncated product is the exact state ``U(z)|k,m>`` cut off at ``N``.
    """
    z = _check_disk(z)
    lam = np.log1p(-(z.real**2 + z.imag**2))
    return expm(z * rep.Kplus) @ expm(lam * rep.K0) @ expm(-z.conjugate() * rep.Kminus)


def squeezed_state(rep: Su11Rep, z: complex, m: int, tol: float = TAIL_TOLERANCE) -> np.ndarray:
    """Column ``U(z)|k,m>`` of the truncated squeeze operator.

    Raises:
        TruncationError: if more than ``tol`` of the norm lies above the cut.
    """
    if int(m) != m or m < 0 or m >= rep.N:
        raise InvalidArgumentError(f"Fock label must satisfy 0 <= m < {rep.N}, got {m}")
    psi = squeeze_operator(rep, z)[:, int(m)]
    tail = 1.0 - float(np.vdot(psi, psi).real)
    if tail > tol:
        raise TruncationError(
            f"tail mass {tail:.3e} exceeds {tol:.1e} for k={rep.k}, m={m}, |z|={abs(z):.4f},"
            f" N={rep.N}; increase the truncation"
        )
    return psi


_TOKEN = re.compile(r"^(K0|K1|K2|Kp|Km|K\+|K-|Omega|E)(?:\^(\d+))?$")

OperatorWord = Union[str, Sequence[str], np.ndarray]


def operator_matrix(rep: Su11Rep, word: OperatorWord) -> np.ndarray:
    """Matrix of an operator word such as ``"E^3"``, ``["K0", "Kp"]`` or ``"Omega K-"``.

    Tokens are K0, K1, K2, Kp (or K+), Km (or K-), Omega (= K0 + K1) and
    E (= 2K0 + K+ + K-), each optionally raised to a power with ``^n``.
    The word is the left-to-right operator product. A raw matrix passes
    through unchanged.
    """
    if isinstance(word, np.ndarray):
        return word
    tokens = word.split() if isinstance(word, str) else list(word)
    if not tokens:
        raise InvalidArgumentError("empty operator word")
    table = {
        "K0": rep.K0, "K1": rep.K1, "K2": rep.K2,
        "Kp": rep.Kplus, "K+": rep.Kplus, "Km": rep.Kminus, "K-": rep.Kminus,
        "Omega": rep.Omega, "E": rep.E,
    }
    out = np.eye(rep.N, dtype=complex)
    for tok in tokens:
        match = _TOKEN.match(tok)
        if match is None:
            raise InvalidArgumentError(f"unknown operator token {tok!r}")
        power = int(match.group(2) or 1)
        out = out @ np.linalg.matrix_power(table[match.group(1)], power)
    return out


def oracle_expectation(
    rep: Su11Rep, z: complex, m: int, word: OperatorWord, tol: float = TAIL_TOLERANCE
) -> complex:
    """``<z,k,m| X |z,k,m>`` computed purely by matrix products."""
    psi = squeezed_state(rep, z, m, tol=tol)
    X = operator_matrix(rep, word)
    return complex(np.vdot(psi, X @ psi))
