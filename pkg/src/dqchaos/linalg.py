"""Dense complex linear algebra shared by the channel and ensemble code."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

MAX_DENSE_DIM = 4096


class CapacityError(ValueError):
    """Requested dense object exceeds the supported size."""


class NumericError(RuntimeError):
    """A numerical routine failed or produced non-finite output."""


class BranchError(NumericError):
    """Matrix logarithm requested on the branch cut (eigenvalue -1)."""


def _check_square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")


def _check_finite(*arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError("non-finite entries in result")


@dataclass
class EigResult:
    """Eigen-decomposition ``M R = R diag(w)``, ``L^H M = diag(w) L^H``.

    Left vectors are normalized so that ``L^H R = I``. ``overlaps`` holds
    ``|<l|r>|`` for unit-norm left/right pairs; small values mark
    near-defective eigenvalues.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    overlaps: np.ndarray
    condition: float
    ill_conditioned: np.ndarray

    @property
    def biorthogonality_residual(self) -> float:
        g = self.left.conj().T @ self.right
        return float(np.max(np.abs(g - np.eye(len(g)))))


def eig_general(m, ill_tol: float = 1e-6, cond_limit: float = 1e8) -> EigResult:
    """General (non-Hermitian) eigendecomposition with left and right vectors.

    Left vectors come from ``inv(R)`` when the right-vector matrix is well
    conditioned, otherwise from LAPACK's left eigenvectors, which share the
    ordering of the right ones.
    """
    m = np.asarray(m, dtype=complex)
    _check_square(m)
    if m.shape[0] > MAX_DENSE_DIM:
        raise CapacityError(f"dimension {m.shape[0]} exceeds {MAX_DENSE_DIM}")
    try:
        w, vl, vr = scipy.linalg.eig(m, left=True, right=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    _check_finite(w, vr, vl)

    vr = vr / np.linalg.norm(vr, axis=0)
    vl = vl / np.linalg.norm(vl, axis=0)
    overlaps = np.abs(np.einsum("ij,ij->j", vl.conj(), vr))
    cond = float(np.linalg.cond(vr))

    if np.isfinite(cond) and cond < cond_limit:
        left = np.linalg.inv(vr).conj().T
    else:
        # scale each left vector so that <l_a|r_a> = 1
        norms = np.einsum("ij,ij->j", vl.conj(), vr)
        safe = np.where(np.abs(norms) > 0, norms, 1.0)
        left = vl / safe.conj()
    return EigResult(
        eigenvalues=w,
        right=vr,
        left=left,
        overlaps=overlaps,
        condition=cond,
        ill_conditioned=overlaps < ill_tol,
    )


def expm(m) -> np.ndarray:
    """Matrix exponential (scaling and squaring, Pade)."""
    out = scipy.linalg.expm(np.asarray(m))
    _check_finite(out)
    return out


def logm_orthogonal(o, branch_tol: float = 1e-12) -> np.ndarray:
    """Principal logarithm of a special orthogonal matrix.

    The real Schur form of a normal orthogonal matrix is block diagonal with
    2x2 rotation blocks; each block angle is taken in (-pi, pi]. Returns an
    exactly antisymmetric real matrix.
    """
    o = np.asarray(o, dtype=float)
    _check_square(o)
    n = o.shape[0]
    t, z = scipy.linalg.schur(o, output="real")
    log_t = np.zeros_like(t)
    i = 0
    while i < n:
        if i + 1 < n and abs(t[i + 1, i]) > 1e-14:
            a = 0.5 * (t[i, i] + t[i + 1, i + 1])
            b = 0.5 * (t[i, i + 1] - t[i + 1, i])
            alpha = np.arctan2(-b, a)
            if np.pi - abs(alpha) < branch_tol:
                raise BranchError("rotation angle at pi, logarithm not principal")
            log_t[i, i + 1] = -alpha
            log_t[i + 1, i] = alpha
            i += 2
        else:
            if t[i, i] < 0:
                raise BranchError("eigenvalue -1 on the branch cut")
            i += 1
    j = z @ log_t @ z.T
    return 0.5 * (j - j.T)


def kron(*ops) -> np.ndarray:
    """Kronecker product of any number of matrices, left factor most significant."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    dim = 1
    for op in ops:
        dim *= np.shape(op)[0]
    if dim > 2 * MAX_DENSE_DIM * MAX_DENSE_DIM:
        raise CapacityError(f"kron result dimension {dim} too large")
    out = np.asarray(ops[0])
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def vec(rho: np.ndarray) -> np.ndarray:
    """Row-stacking vectorization, matching ``K (x) K*`` superoperators."""
    return np.asarray(rho).reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"length {v.size} is not a perfect square")
    return np.asarray(v).reshape(d, d)


def split_index(index: int, dims: tuple[int, int]) -> tuple[int, int]:
    """Map a composite basis index to (first, second) factor indices."""
    return divmod(index, dims[1])


def join_index(i: int, j: int, dims: tuple[int, int]) -> int:
    return i * dims[1] + j


def partial_trace(rho: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Partial trace of a bipartite operator; ``keep`` is 0 or 1."""
    da, db = dims
    r = np.asarray(rho).reshape(da, db, da, db)
    if keep == 0:
        return np.einsum("ijkj->ik", r)
    if keep == 1:
        return np.einsum("ijil->jl", r)
    raise ValueError("keep must be 0 or 1")


def align_phase(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``b`` multiplied by the global phase that best matches ``a``."""
    ov = np.vdot(b, a)
    if abs(ov) == 0:
        return b
    return b * (ov / abs(ov))


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max-norm distance between ``a`` and ``b`` modulo global phase."""
    return float(np.max(np.abs(a - align_phase(a, b))))
