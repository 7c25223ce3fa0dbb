import numpy as np
import pytest
from hypothesis import given, strategies as st

from dqchaos.ensembles import sample_haar_so
from dqchaos.linalg import (
    BranchError,
    CapacityError,
    eig_general,
    expm,
    join_index,
    kron,
    logm_orthogonal,
    partial_trace,
    phase_distance,
    split_index,
    unvec,
    vec,
)


def test_eig_diag():
    res = eig_general(np.diag([1, 1j]))
    assert sorted(res.eigenvalues, key=lambda z: z.imag) == pytest.approx([1, 1j])


def test_eig_left_right_relations(rng):
    m = rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40))
    res = eig_general(m)
    w, r, l = res.eigenvalues, res.right, res.left
    scale = np.abs(m).max()
    assert np.abs(m @ r - r * w).max() < 1e-8 * scale
    assert np.abs(l.conj().T @ m - w[:, None] * l.conj().T).max() < 1e-8 * scale
    assert res.biorthogonality_residual < 1e-6


def test_eig_near_defective_flagged():
    res = eig_general(np.array([[1, 1], [0, 1 + 1e-8]]))
    assert res.ill_conditioned.all()
    assert res.overlaps.max() < 1e-6


def test_eig_bad_conditioning_uses_lapack_left_vectors():
    res = eig_general(np.array([[1, 1], [0, 1 + 1e-12]]), cond_limit=1e8)
    g = np.einsum("ij,ij->j", res.left.conj(), res.right)
    assert np.allclose(g, 1)


def test_eig_against_companion_roots(rng):
    # eigenvalues of a 4x4 block are the roots of its characteristic polynomial
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    roots = np.roots(np.poly(m))
    w = eig_general(m).eigenvalues
    for z in w:
        assert np.min(np.abs(roots - z)) < 1e-8


def test_eig_random_64(rng):
    m = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
    w = eig_general(m).eigenvalues
    assert np.allclose(np.sort_complex(w), np.sort_complex(np.linalg.eigvals(m)), atol=1e-9)


def test_eig_capacity():
    with pytest.raises(CapacityError):
        eig_general(np.zeros((4097, 4097)))


def test_eig_rejects_nonsquare():
    with pytest.raises(ValueError):
        eig_general(np.zeros((2, 3)))


def test_expm_zero():
    assert np.allclose(expm(np.zeros((3, 3))), np.eye(3))


@pytest.mark.parametrize("alpha", [0.3, -2.0, 3.1])
def test_logm_so2(alpha):
    o = np.array([[np.cos(alpha), -np.sin(alpha)], [np.sin(alpha), np.cos(alpha)]])
    assert np.allclose(logm_orthogonal(o), [[0, -alpha], [alpha, 0]], atol=1e-12)


def test_logm_branch_cut():
    with pytest.raises(BranchError):
        logm_orthogonal(-np.eye(2))


def test_logm_round_trip_many():
    for k in range(100):
        dim = 2 * (2 + k % 4)
        o = sample_haar_so(dim, k)
        j = logm_orthogonal(o)
        assert np.array_equal(j, -j.T)
        assert np.abs(expm(j) - o).max() < 1e-8


def test_kron_identity_and_entries():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    a = np.arange(4).reshape(2, 2) + 1.0
    b = np.arange(4).reshape(2, 2) * 1j
    k = kron(a, b)
    for i in range(2):
        for j in range(2):
            for p in range(2):
                for q in range(2):
                    assert k[2 * i + j, 2 * p + q] == a[i, p] * b[j, q]


def test_index_maps_bijective():
    dims = (3, 5)
    seen = set()
    for idx in range(15):
        i, j = split_index(idx, dims)
        assert join_index(i, j, dims) == idx
        seen.add((i, j))
    assert len(seen) == 15


def test_partial_trace(rng):
    a = rng.standard_normal((2, 2))
    b = rng.standard_normal((3, 3))
    rho = np.kron(a, b)
    assert np.allclose(partial_trace(rho, (2, 3), 0), a * np.trace(b))
    assert np.allclose(partial_trace(rho, (2, 3), 1), b * np.trace(a))


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_vec_round_trip(d, seed):
    m = np.random.default_rng(seed).standard_normal((d, d))
    assert np.array_equal(unvec(vec(m)), m)


def test_phase_distance():
    a = np.eye(2) * np.exp(0.7j)
    assert phase_distance(np.eye(2), a) < 1e-15
