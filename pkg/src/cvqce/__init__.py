"""Simulation and verification of quantum computing on displacement-encrypted continuous-variable states."""

from .gaussian import (
    GaussianGate,
    GaussianState,
    InvalidStateError,
    apply_gate,
    apply_loss,
    coherent,
    encrypt_ensemble,
    gaussian_fidelity,
    purity,
    squeezed,
    thermal,
    vacuum,
    wigner_gaussian,
)

__version__ = "0.1.0"

__all__ = [
    "GaussianGate",
    "GaussianState",
    "InvalidStateError",
    "apply_gate",
    "apply_loss",
    "coherent",
    "encrypt_ensemble",
    "gaussian_fidelity",
    "purity",
    "squeezed",
    "thermal",
    "vacuum",
    "wigner_gaussian",
]
