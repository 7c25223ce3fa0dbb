"""Spectral statistics of dissipative quantum maps: ensembles, circuits, noise and tomography."""

__version__ = "0.1.0"

from .channels import QuantumChannel, extract_kraus, to_superoperator
from .circuits import Circuit, build_chaotic_circuit, build_ff_circuit
from .linalg import CapacityError, NumericError
from .stats import channel_csr, compute_csr, histogram, marginals, summarize

__all__ = [
    "CapacityError",
    "Circuit",
    "NumericError",
    "QuantumChannel",
    "build_chaotic_circuit",
    "build_ff_circuit",
    "channel_csr",
    "compute_csr",
    "extract_kraus",
    "histogram",
    "marginals",
    "summarize",
    "to_superoperator",
]
