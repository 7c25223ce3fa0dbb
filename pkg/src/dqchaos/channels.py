"""Quantum channels from dilations, superoperators and weak-U(1) sectors.

Superoperators act on row-major vectorized density matrices, so that
``vec(K rho K^dag) = (K kron K*) vec(rho)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import total_z
from .linalg import MAX_DENSE_DIM, CapacityError, eig_general


class StateError(RuntimeError):
    """Operation called on an object missing required data."""


@dataclass
class QuantumChannel:
    """Kraus representation on ``n`` system qubits; ``e`` environment qubits were traced out."""

    n: int
    e: int
    kraus: np.ndarray  # (r, d, d)

    def __post_init__(self):
        self.kraus = np.asarray(self.kraus, dtype=complex)
        if self.kraus.ndim == 2:
            self.kraus = self.kraus[None]
        d = 2**self.n
        if self.kraus.shape[1:] != (d, d):
            raise ValueError(f"Kraus operators must be {d}x{d}, got {self.kraus.shape[1:]}")

    @property
    def dim(self) -> int:
        return 2**self.n

    @property
    def rank(self) -> int:
        return self.kraus.shape[0]

    def trace_preservation_error(self) -> float:
        s = np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)
        return float(np.max(np.abs(s - np.eye(self.dim))))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return np.einsum("kij,jl,kml->im", self.kraus, rho, self.kraus.conj())

    def superoperator(self) -> np.ndarray:
        return to_superoperator(self)

    @classmethod
    def from_superoperator(cls, lam: np.ndarray, n: int, e: int = 0, tol: float = 1e-14) -> "QuantumChannel":
        """Minimal Kraus set from the Choi matrix of a superoperator."""
        d = 2**n
        choi = np.asarray(lam).reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
        choi = 0.5 * (choi + choi.conj().T)
        w, v = np.linalg.eigh(choi)
        keep = w > tol * max(1.0, w.max())
        kraus = (v[:, keep] * np.sqrt(w[keep])).T.reshape(-1, d, d)
        return cls(n, e, kraus)


def extract_kraus(u: np.ndarray, n: int, e: int) -> QuantumChannel:
    """Kraus operators of a dilation with the environment starting in |0...0>.

    Environment qubits are the leading (most significant) tensor factors, so
    the Kraus operators are the first block column of ``u``.
    """
    u = np.asarray(u, dtype=complex)
    d, de = 2**n, 2**e
    if u.shape != (d * de, d * de):
        raise ValueError(f"unitary of shape {u.shape} does not match n={n}, e={e}")
    kraus = u[:, :d].reshape(de, d, d)
    return QuantumChannel(n, e, kraus)


def to_superoperator(channel: QuantumChannel) -> np.ndarray:
    """Lambda = sum_s K_s kron conj(K_s)."""
    d = channel.dim
    if d * d > MAX_DENSE_DIM:
        raise CapacityError(f"superoperator dimension {d * d} exceeds {MAX_DENSE_DIM}")
    k = channel.kraus
    lam = np.einsum("sik,sjl->ijkl", k, k.conj())
    return lam.reshape(d * d, d * d)


@dataclass
class SpectrumData:
    eigenvalues: np.ndarray
    right: np.ndarray | None = None
    left: np.ndarray | None = None
    biorthogonality_residual: float | None = None
    near_defective: np.ndarray | None = None
    sector_labels: np.ndarray | None = None
    q_expectation: np.ndarray | None = None


def diagonalize(lam: np.ndarray, want_vectors: bool = True, defect_tol: float = 1e-10) -> SpectrumData:
    """Eigenvalues of a superoperator, optionally with biorthonormal eigenvectors."""
    lam = np.asarray(lam)
    if lam.shape[0] > MAX_DENSE_DIM:
        raise CapacityError(f"dimension {lam.shape[0]} exceeds {MAX_DENSE_DIM}")
    if not want_vectors:
        return SpectrumData(np.linalg.eigvals(lam))
    res = eig_general(lam, ill_tol=defect_tol)
    return SpectrumData(
        res.eigenvalues,
        right=res.right,
        left=res.left,
        biorthogonality_residual=res.biorthogonality_residual,
        near_defective=res.ill_conditioned,
    )


def weak_charge_diagonal(n: int) -> np.ndarray:
    """Diagonal of (Q (x) I - I (x) Q^T) / 2 with Q = sum of sigma^z on n qubits."""
    q = total_z(n)
    return 0.5 * (q[:, None] - q[None, :]).reshape(-1)


@dataclass
class SectorDecomposition:
    n: int
    q_values: np.ndarray
    q_expectation: np.ndarray
    labels: np.ndarray
    mixed: np.ndarray
    threshold: float
    hist_counts: np.ndarray = field(repr=False)
    hist_edges: np.ndarray = field(repr=False)

    def sizes(self) -> dict[int, int]:
        return {int(q): int(np.sum((self.labels == q) & ~self.mixed)) for q in self.q_values}

    def indices(self, q: int) -> np.ndarray:
        return np.flatnonzero((self.labels == q) & ~self.mixed)


def assign_sectors(spectrum: SpectrumData, n: int, threshold: float = 0.25, hist_bins_per_unit: int = 20) -> SectorDecomposition:
    """Label eigenvalues by the biorthogonal expectation of the weak U(1) charge.

    Labels are the nearest integer to Re<Q>; eigenvalues farther than
    ``threshold`` from every integer are marked mixed.
    """
    if spectrum.left is None or spectrum.right is None:
        raise StateError("sector assignment needs left and right eigenvectors")
    qd = weak_charge_diagonal(n)
    qexp = np.einsum("ma,m,ma->a", spectrum.left.conj(), qd, spectrum.right)
    re = qexp.real
    labels = np.rint(re).astype(int)
    mixed = np.abs(re - labels) > threshold
    edges = np.linspace(-n - 0.5, n + 0.5, (2 * n + 1) * hist_bins_per_unit + 1)
    counts, edges = np.histogram(np.clip(re, edges[0], edges[-1]), bins=edges)
    spectrum.q_expectation = qexp
    spectrum.sector_labels = np.where(mixed, np.iinfo(np.int64).min, labels)
    return SectorDecomposition(n, np.arange(-n, n + 1), qexp, labels, mixed, threshold, counts, edges)


def steady_state_sector(dec: SectorDecomposition, spectrum: SpectrumData) -> np.ndarray:
    """Eigenvalues in the q = 0 (half-filling) sector."""
    idx = dec.indices(0)
    if idx.size == 0:
        raise StateError("no eigenvalues assigned to the q = 0 sector")
    return spectrum.eigenvalues[idx]


def channel_spectrum(channel: QuantumChannel, sector: str = "all") -> np.ndarray:
    """Eigenvalues of a channel's superoperator, all or q = 0 only."""
    lam = to_superoperator(channel)
    if sector == "all":
        return np.linalg.eigvals(lam)
    if sector == "steady_state":
        spectrum = diagonalize(lam, want_vectors=True)
        return steady_state_sector(assign_sectors(spectrum, channel.n), spectrum)
    raise ValueError(f"unknown sector policy {sector!r}")
