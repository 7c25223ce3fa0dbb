from itertools import product

import numpy as np
import pytest

from dqchaos.channels import QuantumChannel, extract_kraus, to_superoperator
from dqchaos.circuits import CZ, PAULI, Circuit, Gate, PlacedGate, assemble_unitary, build_ff_circuit, compile_to_cz
from dqchaos.linalg import kron, phase_distance
from dqchaos.noise import (
    TWIRL_TABLE,
    NoiseModel,
    apply_depolarizing,
    count_cz,
    depolarizing_weight,
    noisy_superoperator,
    twirl_assignment,
    twirl_circuit,
    twirled_average_superoperator,
)


def pauli_strings(k):
    return [kron(*(PAULI[c] for c in s)) for s in product("IXYZ", repeat=k)]


def sop(u):
    return np.kron(u, u.conj())


def pauli_channel_oracle(e_p, k):
    """(1 - e_p) rho + e_p/(4^k - 1) sum_{P != I} P rho P, as a superoperator."""
    ps = pauli_strings(k)
    lam = (1 - e_p) * sop(ps[0])
    for p in ps[1:]:
        lam = lam + e_p / (4**k - 1) * sop(p)
    return lam


def ptm(lam, k):
    ps = pauli_strings(k)
    d = 2**k
    return np.array([[np.trace(a @ (lam @ b.reshape(-1)).reshape(d, d)) / d for b in ps] for a in ps])


def one_gate_circuit(name, targets, L, params=()):
    return Circuit(L, 1, [[PlacedGate(Gate.make(name, params), targets)]], "custom")


def test_weight():
    assert depolarizing_weight(0.03, 1) == pytest.approx(0.04)
    assert depolarizing_weight(0.15, 2) == pytest.approx(0.16)


def test_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(e_p_1q=-0.1)
    with pytest.raises(ValueError):
        NoiseModel(e_p_2q=1.0)


def test_noiseless_matches_dilation():
    c = build_ff_circuit(5, 4, seed=2)
    ref = to_superoperator(extract_kraus(assemble_unitary(c), 4, 1))
    assert np.abs(noisy_superoperator(c, 4, 1) - ref).max() < 1e-12


def test_single_qubit_depolarizing_oracle():
    lam = noisy_superoperator(one_gate_circuit("I", (0,), 1), 1, 0, NoiseModel(0.03, 0))
    assert np.allclose(lam, pauli_channel_oracle(0.03, 1))
    assert np.allclose(np.sort(np.linalg.eigvals(lam).real), [0.96, 0.96, 0.96, 1.0])


def test_two_qubit_depolarizing_oracle():
    lam = noisy_superoperator(one_gate_circuit("CZ", (0, 1), 2), 2, 0, NoiseModel(0, 0.06))
    assert np.allclose(lam, pauli_channel_oracle(0.06, 2) @ sop(CZ))


def test_noise_on_reversed_targets():
    # a CZ on (1, 0) is the same gate; depolarizing noise is symmetric
    a = noisy_superoperator(one_gate_circuit("CZ", (1, 0), 3), 3, 0, NoiseModel(0, 0.1))
    b = noisy_superoperator(one_gate_circuit("CZ", (0, 1), 3), 3, 0, NoiseModel(0, 0.1))
    assert np.allclose(a, b)


def test_noisy_channel_is_cptp():
    c = build_ff_circuit(4, 3, seed=1)
    ch = apply_depolarizing(c, NoiseModel(0.01, 0.05), 3, 1)
    assert ch.trace_preservation_error() < 1e-10
    lam = noisy_superoperator(c, 3, 1, NoiseModel(0.01, 0.05))
    choi = lam.reshape(8, 8, 8, 8).transpose(0, 2, 1, 3).reshape(64, 64)
    assert np.linalg.eigvalsh(0.5 * (choi + choi.conj().T)).min() > -1e-12
    assert np.allclose(ch.superoperator(), lam, atol=1e-12)


def test_size_checks():
    with pytest.raises(ValueError):
        noisy_superoperator(build_ff_circuit(4, 1, 0), 2, 1)


def test_twirl_identity():
    for (a, b), (c, d) in TWIRL_TABLE.items():
        wrapped = np.kron(PAULI[c], PAULI[d]) @ CZ @ np.kron(PAULI[a], PAULI[b])
        assert phase_distance(CZ, wrapped) < 1e-10
    assert len(TWIRL_TABLE) == 16
    assert TWIRL_TABLE[("X", "I")] == ("X", "Z")


def _twirled_cz_average(model):
    c = one_gate_circuit("CZ", (0, 1), 2)
    lams = [
        noisy_superoperator(twirl_circuit(c, [twirl_assignment(pre)]), 2, 0, model)
        for pre in product("IXYZ", repeat=2)
    ]
    return sum(lams) / 16


def test_twirled_coherent_error_is_pauli_diagonal():
    model = NoiseModel(0, 0, cz_coherent=0.2)
    error = _twirled_cz_average(model) @ sop(CZ).conj().T
    r = ptm(error, 2)
    assert np.abs(r - np.diag(np.diag(r))).max() < 1e-10
    bare = noisy_superoperator(one_gate_circuit("CZ", (0, 1), 2), 2, 0, model) @ sop(CZ).conj().T
    rb = ptm(bare, 2)
    assert np.abs(rb - np.diag(np.diag(rb))).max() > 0.1


def test_twirl_leaves_depolarizing_unchanged():
    # depolarizing noise commutes with Pauli frames, so wrapping changes nothing
    model = NoiseModel(0.01, 0.05)
    bare = noisy_superoperator(one_gate_circuit("CZ", (0, 1), 2), 2, 0, model)
    assert np.allclose(_twirled_cz_average(model), bare, atol=1e-12)


def test_twirled_circuit_noiseless_is_ideal():
    c = build_ff_circuit(4, 2, seed=3)
    ideal = to_superoperator(extract_kraus(assemble_unitary(c), 3, 1))
    lam = twirled_average_superoperator(c, NoiseModel(0, 0), 3, 1, m=3, seed=0)
    assert np.abs(lam - ideal).max() < 1e-12


def test_twirled_average_trace_preserving_and_seeded():
    c = build_ff_circuit(4, 2, seed=3)
    model = NoiseModel(0.001, 0.01, cz_coherent=0.05)
    a = twirled_average_superoperator(c, model, 3, 1, m=2, seed=9)
    b = twirled_average_superoperator(c, model, 3, 1, m=2, seed=9)
    assert np.array_equal(a, b)
    ch = QuantumChannel.from_superoperator(a, 3, 1)
    assert ch.trace_preservation_error() < 1e-10
    with pytest.raises(ValueError):
        twirled_average_superoperator(c, model, 3, 1, m=0)


def test_virtual_paulis_counted_and_noiseless():
    c = compile_to_cz(build_ff_circuit(3, 2, seed=0))
    ncz = count_cz(c)
    t = twirl_circuit(c, [twirl_assignment(("X", "Y"))] * ncz)
    virt = [g for g in t.gates() if g.virtual]
    assert len(virt) == 4 * ncz
    assert phase_distance(assemble_unitary(c), assemble_unitary(t)) < 1e-12
    assert Circuit.from_json(t.to_json()).to_json() == t.to_json()
