"""Random matrix and free-fermion ensembles."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .circuits import PAULI
from .linalg import BranchError, expm, kron, logm_orthogonal

log = logging.getLogger(__name__)


def derive_seeds(master_seed, count: int) -> list[int]:
    """Independent per-member seeds from one master seed."""
    ss = np.random.SeedSequence(master_seed)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in ss.spawn(count)]


def sample_cue(dim: int, seed=None) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def sample_haar_so(dim: int, seed=None) -> np.ndarray:
    """Haar-random special orthogonal matrix of even dimension."""
    if dim < 2 or dim % 2:
        raise ValueError(f"dim must be even and >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diagonal(r))
    if np.linalg.det(q) < 0:
        q[:, [0, 1]] = q[:, [1, 0]]
    return q


def sample_ginue(dim: int, seed=None) -> np.ndarray:
    """Complex Ginibre matrix with entry variance 1/dim (unit-disk spectrum)."""
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2 * dim)


def sample_poisson_spectrum(count: int, seed=None) -> np.ndarray:
    """I.i.d. standard complex normals, an uncorrelated reference spectrum."""
    rng = np.random.default_rng(seed)
    return (rng.standard_normal(count) + 1j * rng.standard_normal(count)) / np.sqrt(2)


def majorana_gammas(num_qubits: int) -> list[np.ndarray]:
    """Jordan-Wigner Majorana operators with {g_i, g_j} = 2 delta_ij.

    Ordered g_{2i} = Z..Z X_i, g_{2i+1} = Z..Z Y_i.
    """
    gammas = []
    for i in range(num_qubits):
        for p in ("X", "Y"):
            ops = [PAULI["Z"]] * i + [PAULI[p]] + [PAULI["I"]] * (num_qubits - i - 1)
            gammas.append(kron(*ops))
    return gammas


def number_operator(num_qubits: int) -> np.ndarray:
    """Diagonal of N = sum_i (1 + sigma^z_i) / 2."""
    bits = (np.arange(2**num_qubits)[:, None] >> np.arange(num_qubits)[::-1]) & 1
    return (num_qubits - bits.sum(axis=1)).astype(float)


def number_projectors(num_qubits: int) -> list[np.ndarray]:
    """Projectors onto fixed N = 0..L, as dense diagonal matrices."""
    n = number_operator(num_qubits)
    return [np.diag((n == q).astype(complex)) for q in range(num_qubits + 1)]


@dataclass
class FfGenerator:
    num_qubits: int
    gammas: list[np.ndarray]
    orthogonal: np.ndarray
    generator: np.ndarray  # real antisymmetric, exp(generator) = orthogonal
    hamiltonian: np.ndarray  # anti-Hermitian, unitary = exp(hamiltonian)
    projected: bool
    resamples: int = 0

    def unitary(self) -> np.ndarray:
        return expm(self.hamiltonian)


def build_ff_generator(num_qubits: int, seed=None, project_u1: bool = True, max_resamples: int = 100) -> FfGenerator:
    """Sample a Haar free-fermion generator through SO(2L).

    H = (1/4) sum_ij J'_ij g_i g_j with J' = -log(O); this sign makes
    U g_k U^dag = sum_l O_kl g_l for U = exp(H). With ``project_u1`` the
    number-changing blocks of H are removed so that [U, N] = 0.
    """
    if not 2 <= num_qubits <= 10:
        raise ValueError(f"num_qubits must be in [2, 10], got {num_qubits}")
    rng = np.random.default_rng(seed)
    resamples = 0
    while True:
        o = sample_haar_so(2 * num_qubits, rng)
        try:
            j = logm_orthogonal(o)
            break
        except BranchError:
            resamples += 1
            log.warning("SO(%d) sample on the log branch cut, resampling", 2 * num_qubits)
            if resamples > max_resamples:
                raise
    gammas = majorana_gammas(num_qubits)
    g = np.array(gammas)
    h = -0.25 * np.einsum("ij,iab,jbc->ac", j, g, g)
    if project_u1:
        n = number_operator(num_qubits)
        h = h * (n[:, None] == n[None, :])
    return FfGenerator(num_qubits, gammas, o, j, h, project_u1, resamples)


def build_ff_unitary(num_qubits: int, seed=None, project_u1: bool = True) -> np.ndarray:
    """Haar free-fermion unitary on ``num_qubits`` qubits."""
    return build_ff_generator(num_qubits, seed, project_u1).unitary()
