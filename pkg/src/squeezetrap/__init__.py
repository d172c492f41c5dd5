"""SU(1,1) squeezed coherent states, classical dynamics and Floquet spectra
for ions in combined (Paul plus Penning) and RF traps."""

from .algebra import build_rep, oracle_expectation, squeeze_operator, squeezed_state
from .coherent import ModeLabels, XiEtaState, S_value, disk_to_xieta, husimi_Q, xieta_to_disk
from .config import RunConfig, load_config
from .dynamics import HamiltonianParams, PhaseState, Trajectory, classical_hamiltonian, gradient, integrate, integrate_disk
from .equilibria import StationaryPoint, classify_stationary, solve_combined, solve_pseudopotential
from .errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    InvalidArgumentError,
    InvalidStateError,
    NumericalError,
    SqueezeTrapError,
    TruncationError,
    UndefinedSpectrumError,
    UnsupportedOrderError,
)
from .floquet import FloquetResult, MathieuParams, RiccatiCoefficients, monodromy, quasienergy, riccati_evolve
from .trap import DriveParams, Particle, TrapGeometry

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DivergenceError", "DomainError", "DriveParams", "FloquetResult",
    "HamiltonianParams", "InvalidArgumentError", "InvalidStateError", "MathieuParams",
    "ModeLabels", "NumericalError", "Particle", "PhaseState", "RiccatiCoefficients", "RunConfig",
    "S_value", "SqueezeTrapError", "StationaryPoint", "Trajectory", "TrapGeometry",
    "TruncationError", "UndefinedSpectrumError", "UnsupportedOrderError", "XiEtaState",
    "build_rep", "classical_hamiltonian", "classify_stationary", "disk_to_xieta", "gradient",
    "husimi_Q", "integrate", "integrate_disk", "load_config", "monodromy", "oracle_expectation",
    "quasienergy", "riccati_evolve", "solve_combined", "solve_pseudopotential",
    "squeeze_operator", "squeezed_state", "xieta_to_disk",
]
