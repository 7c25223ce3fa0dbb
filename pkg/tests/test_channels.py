import numpy as np
import pytest
from hypothesis import given, strategies as st

from dqchaos.channels import (
    QuantumChannel,
    SpectrumData,
    StateError,
    assign_sectors,
    channel_spectrum,
    diagonalize,
    extract_kraus,
    steady_state_sector,
    to_superoperator,
    weak_charge_diagonal,
)
from dqchaos.ensembles import build_ff_unitary, sample_cue
from dqchaos.linalg import CapacityError, vec


def random_state(d, rng):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


@given(st.integers(1, 3), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_dilation_trace_preserving(n, e, seed):
    ch = extract_kraus(sample_cue(2 ** (n + e), seed), n, e)
    assert ch.rank == 2**e
    assert ch.trace_preservation_error() < 1e-10


def test_superoperator_acts_on_row_vec(rng):
    ch = extract_kraus(sample_cue(16, 4), 3, 1)
    rho = random_state(8, rng)
    assert np.allclose(to_superoperator(ch) @ vec(rho), vec(ch.apply(rho)))


def test_kraus_block_column_is_partial_trace(rng):
    # brute-force oracle: U (|0><0| (x) rho) U^dag, then trace the leading factor
    n, e = 2, 1
    u = sample_cue(8, 11)
    rho = random_state(4, rng)
    env0 = np.zeros((2, 2))
    env0[0, 0] = 1
    big = u @ np.kron(env0, rho) @ u.conj().T
    reduced = np.einsum("ijik->jk", big.reshape(2, 4, 2, 4))
    assert np.allclose(extract_kraus(u, n, e).apply(rho), reduced)


def test_from_superoperator_round_trip():
    ch = extract_kraus(sample_cue(16, 5), 2, 2)
    lam = to_superoperator(ch)
    ch2 = QuantumChannel.from_superoperator(lam, 2, 2)
    assert ch2.rank <= 4
    assert np.allclose(to_superoperator(ch2), lam, atol=1e-12)


def test_kraus_shape_checked():
    with pytest.raises(ValueError):
        QuantumChannel(2, 0, np.eye(2))


def test_spectrum_in_unit_disk_with_one():
    ev = channel_spectrum(extract_kraus(sample_cue(32, 6), 4, 1))
    assert np.abs(ev).max() <= 1 + 1e-10
    assert np.min(np.abs(ev - 1)) < 1e-10


def test_capacity():
    ch = QuantumChannel(7, 0, np.eye(128))
    with pytest.raises(CapacityError):
        to_superoperator(ch)


def test_weak_charge_diagonal():
    q = weak_charge_diagonal(1)
    assert q.tolist() == [0.0, 1.0, -1.0, 0.0]


def test_sector_sizes_ff41():
    lam = to_superoperator(extract_kraus(build_ff_unitary(5, seed=3), 4, 1))
    qd = weak_charge_diagonal(4)
    assert np.abs(lam * qd[None, :] - qd[:, None] * lam).max() < 1e-12
    spectrum = diagonalize(lam)
    dec = assign_sectors(spectrum, 4)
    assert [dec.sizes()[q] for q in range(-4, 5)] == [1, 8, 28, 56, 70, 56, 28, 8, 1]
    assert not dec.mixed.any()
    ss = steady_state_sector(dec, spectrum)
    assert len(ss) == 70 and np.min(np.abs(ss - 1)) < 1e-10


def test_post_selection_matches_block_diagonalization():
    lam = to_superoperator(extract_kraus(build_ff_unitary(4, seed=8), 3, 1))
    spectrum = diagonalize(lam)
    dec = assign_sectors(spectrum, 3)
    qd = weak_charge_diagonal(3)
    for q in range(-3, 4):
        idx = np.flatnonzero(np.isclose(qd, q))
        block = np.linalg.eigvals(lam[np.ix_(idx, idx)])
        got = spectrum.eigenvalues[dec.indices(q)]
        assert len(block) == len(got)
        dist = np.abs(block[:, None] - got[None, :])
        assert dist.min(axis=1).max() < 1e-9 and dist.min(axis=0).max() < 1e-9


def test_mixed_sectors_marked():
    lam = to_superoperator(extract_kraus(sample_cue(8, 2), 2, 1))
    spectrum = diagonalize(lam)
    dec = assign_sectors(spectrum, 2, threshold=0.01)
    assert dec.mixed.any()
    assert (spectrum.sector_labels[dec.mixed] == np.iinfo(np.int64).min).all()


def test_state_errors():
    with pytest.raises(StateError):
        assign_sectors(SpectrumData(np.ones(4)), 1)
    spectrum = diagonalize(to_superoperator(extract_kraus(sample_cue(8, 2), 2, 1)))
    dec = assign_sectors(spectrum, 2, threshold=0.0)
    with pytest.raises(StateError):
        steady_state_sector(dec, spectrum)


def test_channel_spectrum_policies():
    ch = extract_kraus(build_ff_unitary(5, seed=1), 4, 1)
    assert len(channel_spectrum(ch, "steady_state")) == 70
    with pytest.raises(ValueError):
        channel_spectrum(ch, "q=1")
