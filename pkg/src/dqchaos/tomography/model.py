"""Forward model of a tomography experiment.

Channel parameters: r Kraus operators stacked into an (r d) x d matrix A,
made an isometry by polar retraction V = A (A^dag A)^(-1/2). Any real theta
gives a trace-preserving map.

SPAM: rho0 = A_rho A_rho^dag / Tr(.), and a column-stochastic readout
matrix C_jk = A_C[j,k]^2 / sum_j A_C[j,k]^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channels import QuantumChannel, to_superoperator
from ..linalg import NumericError
from .modes import PauliMode


def polar_retract(a: np.ndarray) -> np.ndarray:
    """Closest isometry A (A^dag A)^(-1/2), via eigh of the d x d Gram matrix."""
    gram = a.conj().T @ a
    w, v = np.linalg.eigh(gram)
    if w[0] <= 0:
        raise NumericError("rank-deficient Kraus parameter matrix")
    return a @ (v * w**-0.5) @ v.conj().T


@dataclass
class KrausParameterization:
    d: int
    r: int
    theta: np.ndarray  # length 2 r d^2: real parts then imaginary parts of A

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).ravel()
        if self.theta.size != 2 * self.r * self.d * self.d:
            raise ValueError(f"theta must have length {2 * self.r * self.d**2}, got {self.theta.size}")

    @property
    def matrix(self) -> np.ndarray:
        """The unconstrained (r d) x d complex matrix A."""
        half = self.r * self.d * self.d
        return (self.theta[:half] + 1j * self.theta[half:]).reshape(self.r * self.d, self.d)

    @property
    def kraus(self) -> np.ndarray:
        return polar_retract(self.matrix).reshape(self.r, self.d, self.d)

    def channel(self, n: int, e: int = 0) -> QuantumChannel:
        return QuantumChannel(n, e, self.kraus)

    def superoperator(self) -> np.ndarray:
        n = int(round(np.log2(self.d)))
        return to_superoperator(self.channel(n))

    @classmethod
    def from_matrix(cls, a: np.ndarray, r: int | None = None) -> "KrausParameterization":
        a = np.asarray(a, dtype=complex)
        d = a.shape[1]
        r = r or a.shape[0] // d
        return cls(d, r, np.concatenate([a.real.ravel(), a.imag.ravel()]))

    @classmethod
    def from_kraus(cls, kraus: np.ndarray, rank: int | None = None) -> "KrausParameterization":
        """Exact parameters for a given Kraus set, zero-padded up to ``rank``."""
        kraus = np.asarray(kraus, dtype=complex)
        r0, d, _ = kraus.shape
        rank = rank or r0
        if rank < r0:
            raise ValueError(f"rank {rank} is below the {r0} supplied Kraus operators")
        a = np.zeros((rank, d, d), dtype=complex)
        a[:r0] = kraus
        return cls.from_matrix(a.reshape(rank * d, d), rank)

    @classmethod
    def random(cls, d: int, r: int | None = None, seed=None) -> "KrausParameterization":
        """Gaussian A; the retracted map is the first block column of a Haar unitary."""
        r = r or d * d
        rng = np.random.default_rng(seed)
        theta = rng.standard_normal(2 * r * d * d) / np.sqrt(2 * r * d)
        return cls(d, r, theta)


def _density(a: np.ndarray) -> np.ndarray:
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def _stochastic(a: np.ndarray) -> np.ndarray:
    sq = a**2
    return sq / sq.sum(axis=0, keepdims=True)


@dataclass
class SpamModel:
    a_rho: np.ndarray  # complex d x d
    a_c: np.ndarray  # real d x d

    def __post_init__(self):
        self.a_rho = np.asarray(self.a_rho, dtype=complex)
        self.a_c = np.asarray(self.a_c, dtype=float)
        if self.a_rho.shape != self.a_c.shape or self.a_rho.shape[0] != self.a_rho.shape[1]:
            raise ValueError("SPAM factors must be square and of equal shape")

    @property
    def d(self) -> int:
        return self.a_rho.shape[0]

    @property
    def rho0(self) -> np.ndarray:
        return _density(self.a_rho)

    @property
    def corruption(self) -> np.ndarray:
        return _stochastic(self.a_c)

    @classmethod
    def from_matrices(cls, rho0: np.ndarray, corruption: np.ndarray) -> "SpamModel":
        """Factors reproducing a given density matrix and stochastic matrix."""
        w, v = np.linalg.eigh(rho0)
        a_rho = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
        return cls(a_rho, np.sqrt(np.clip(corruption, 0, None)))

    @classmethod
    def ideal(cls, d: int) -> "SpamModel":
        a = np.zeros((d, d), dtype=complex)
        a[0, 0] = 1
        return cls(a, np.eye(d))

    @classmethod
    def synthetic(cls, d: int, p1: float = 0.05, p2: float = 0.05, seed=None) -> "SpamModel":
        """rho0 = (1-p1)|0><0| + p1 drho and C = (1-p2) I + p2 dC with random drho, dC."""
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        drho = _density(g)
        dc = rng.random((d, d))
        dc /= dc.sum(axis=0, keepdims=True)
        rho0 = p1 * drho
        rho0[0, 0] += 1 - p1
        return cls.from_matrices(rho0, (1 - p2) * np.eye(d) + p2 * dc)

    @classmethod
    def near_ideal(cls, d: int, scale: float = 0.05, seed=None) -> "SpamModel":
        """Ideal SPAM with small random factor perturbations, a fit starting point."""
        rng = np.random.default_rng(seed)
        base = cls.ideal(d)
        a_rho = base.a_rho + scale * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / 2
        a_c = base.a_c + scale * rng.standard_normal((d, d))
        return cls(a_rho, a_c)


def mode_unitaries(modes) -> tuple[np.ndarray, np.ndarray]:
    """Stacked preparation and measurement rotations, each (M, d, d)."""
    prep = np.array([m.prep_unitary() for m in modes])
    meas = np.array([m.meas_unitary() for m in modes])
    return prep, meas


def predict_batch(superop: np.ndarray, spam: SpamModel, modes) -> np.ndarray:
    """Outcome probabilities (M, d) for every mode under a row-major superoperator."""
    prep, meas = mode_unitaries(modes)
    d = spam.d
    rho_in = np.einsum("mij,jk,mlk->mil", prep, spam.rho0, prep.conj())
    out = (rho_in.reshape(len(modes), d * d) @ superop.T).reshape(-1, d, d)
    diag = np.einsum("mkj,mjl,mkl->mk", meas, out, meas.conj()).real
    return diag @ spam.corruption.T


def predict_probabilities(params, spam: SpamModel, mode: PauliMode) -> np.ndarray:
    """Probabilities of the d readout outcomes for one mode.

    ``params`` is a KrausParameterization, a QuantumChannel or a superoperator.
    """
    return predict_batch(_superop(params), spam, [mode])[0]


def _superop(params) -> np.ndarray:
    if isinstance(params, KrausParameterization):
        return params.superoperator()
    if isinstance(params, QuantumChannel):
        return to_superoperator(params)
    return np.asarray(params)


def loss(params, spam: SpamModel, data) -> float:
    """Sum over modes and outcomes of (p_hat - f)^2."""
    p = predict_batch(_superop(params), spam, data.modes)
    return float(np.sum((p - data.frequencies) ** 2))
