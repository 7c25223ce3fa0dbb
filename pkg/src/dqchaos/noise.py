"""Gate-level depolarizing noise and Pauli twirling of CZ gates.

Noisy circuits are turned into exact channels by pushing the basis
operators |i><j| (x) |0..0><0..0|_env through every gate and every local
depolarizing map, then tracing out the environment.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .channels import QuantumChannel
from .circuits import CZ, PAULI, Circuit, Gate, PlacedGate, compile_to_cz
from .linalg import MAX_DENSE_DIM, CapacityError

PAULI_GATE = {"I": "I", "X": "PX", "Y": "PY", "Z": "PZ"}


@dataclass(frozen=True)
class NoiseModel:
    e_p_1q: float = 0.00029
    e_p_2q: float = 0.002
    seed: int | None = None
    # coherent over-rotation exp(-i a/2 Z(x)Z) after every CZ
    cz_coherent: float = 0.0

    def __post_init__(self):
        for name in ("e_p_1q", "e_p_2q"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name} must be in [0, 1), got {v}")

    def rate(self, arity: int) -> float:
        return self.e_p_1q if arity == 1 else self.e_p_2q


def depolarizing_weight(e_p: float, arity: int) -> float:
    """Weight a of the replacement map rho -> (1-a) rho + a (I/2^d (x) Tr_d rho).

    Equivalent to applying each of the 4^d - 1 non-identity Paulis with
    probability e_p / (4^d - 1).
    """
    k = 4**arity
    return e_p * k / (k - 1)


class _OperatorBatch:
    """A batch of operators on L qubits stored as (B, 2,..,2, 2,..,2)."""

    def __init__(self, data: np.ndarray, num_qubits: int):
        self.data = data
        self.L = num_qubits

    def _apply(self, g: np.ndarray, targets, offset: int):
        k = len(targets)
        axes = [offset + t for t in targets]
        g = g.reshape((2,) * (2 * k))
        out = np.tensordot(g, self.data, axes=(list(range(k, 2 * k)), axes))
        self.data = np.moveaxis(out, list(range(k)), axes)

    def _phase(self, diag: np.ndarray, targets):
        shape = [1] * (1 + 2 * self.L)
        for t in targets:
            shape[1 + t] = 2
        ket = diag.reshape([2] * len(targets))
        # move the gate axes into their target positions, in target order
        order = np.argsort(np.argsort(targets))
        ket = ket.transpose(order).reshape(shape)
        bra = np.moveaxis(ket.conj(), [1 + t for t in range(self.L)], [1 + self.L + t for t in range(self.L)])
        self.data *= ket
        self.data *= bra

    def unitary(self, g: np.ndarray, targets):
        if np.count_nonzero(g - np.diag(np.diagonal(g))) == 0:
            self._phase(np.diagonal(g), targets)
            return
        self._apply(g, targets, 1)
        self._apply(g.conj(), targets, 1 + self.L)

    def depolarize(self, weight: float, targets):
        """rho -> (1 - w) rho + w (I/2^d (x) Tr_targets rho), in place."""
        if weight == 0:
            return
        L = self.L
        k = len(targets)
        src = [1 + t for t in targets] + [1 + L + t for t in targets]
        v = np.moveaxis(self.data, src, list(range(2 * k)))
        diag = [(idx, idx) for idx in np.ndindex(*(2,) * k)]
        reduced = sum(v[a + b] for a, b in diag)
        v *= 1 - weight
        for a, b in diag:
            v[a + b] += (weight / 2**k) * reduced

    def trace_leading(self, e: int) -> np.ndarray:
        L = self.L
        d = 2 ** (L - e)
        x = self.data.reshape((-1, 2**e, d, 2**e, d))
        return np.einsum("bikil->bkl", x)


def noisy_superoperator(circuit: Circuit, n: int, e: int, model: NoiseModel | None = None) -> np.ndarray:
    """Exact superoperator of a noisy circuit on n system + e leading environment qubits."""
    L = circuit.num_qubits
    if n + e != L:
        raise ValueError(f"n + e = {n + e} does not match {L} circuit qubits")
    d = 2**n
    if d * d > MAX_DENSE_DIM or L > 10:
        raise CapacityError(f"channel on n={n}, e={e} exceeds dense limits")
    model = model or NoiseModel(0.0, 0.0)
    D = 2**L
    data = np.zeros((d * d, D, D), dtype=complex)
    idx = np.arange(d * d)
    # environment in |0..0>: the system index is the full index
    data[idx, idx // d, idx % d] = 1.0
    batch = _OperatorBatch(data.reshape((d * d,) + (2,) * (2 * L)), L)
    for g in circuit.gates():
        batch.unitary(g.gate.matrix, g.targets)
        if g.gate.name == "CZ" and model.cz_coherent and not g.virtual:
            batch.unitary(coherent_zz(model.cz_coherent), g.targets)
        if not g.virtual:
            batch.depolarize(depolarizing_weight(model.rate(g.gate.arity), g.gate.arity), g.targets)
    out = batch.trace_leading(e)
    return out.reshape(d * d, d * d).T


def coherent_zz(angle: float) -> np.ndarray:
    zz = np.kron(PAULI["Z"], PAULI["Z"])
    return np.cos(angle / 2) * np.eye(4) - 1j * np.sin(angle / 2) * zz


def apply_depolarizing(circuit: Circuit, model: NoiseModel, n: int, e: int) -> QuantumChannel:
    """Channel of ``circuit`` with every gate followed by local depolarizing noise."""
    return QuantumChannel.from_superoperator(noisy_superoperator(circuit, n, e, model), n, e)


def _cz_conjugation_table() -> dict[tuple[str, str], tuple[str, str]]:
    table = {}
    labels = list(PAULI)
    for a, b in product(labels, repeat=2):
        target = CZ @ np.kron(PAULI[a], PAULI[b]) @ CZ.conj().T
        for c, d in product(labels, repeat=2):
            cand = np.kron(PAULI[c], PAULI[d])
            ov = np.vdot(cand, target) / 4
            if abs(abs(ov) - 1) < 1e-12:
                table[(a, b)] = (c, d)
                break
    return table


# (A, B) -> (C, D) with (C (x) D) CZ (A (x) B) = CZ up to phase
TWIRL_TABLE = _cz_conjugation_table()


@dataclass(frozen=True)
class TwirlAssignment:
    pre: tuple[str, str]
    post: tuple[str, str]
    realization: int = 0

    def wrapped(self) -> np.ndarray:
        a, b = self.pre
        c, d = self.post
        return np.kron(PAULI[c], PAULI[d]) @ CZ @ np.kron(PAULI[a], PAULI[b])


def twirl_cz(seed=None, realization: int = 0) -> TwirlAssignment:
    """Uniformly random Pauli wrapper for one CZ."""
    rng = np.random.default_rng(seed)
    labels = list(PAULI)
    pre = (labels[rng.integers(4)], labels[rng.integers(4)])
    return TwirlAssignment(pre, TWIRL_TABLE[pre], realization)


def twirl_assignment(pre: tuple[str, str], realization: int = 0) -> TwirlAssignment:
    return TwirlAssignment(tuple(pre), TWIRL_TABLE[tuple(pre)], realization)


def twirl_circuit(circuit: Circuit, assignments) -> Circuit:
    """Wrap the k-th CZ of ``circuit`` with the k-th assignment (virtual Paulis)."""
    it = iter(assignments)
    layers = []
    for layer in circuit.layers:
        out = []
        for g in layer:
            if g.gate.name != "CZ":
                out.append(g)
                continue
            t = next(it)
            q0, q1 = g.targets
            out += [
                PlacedGate(Gate.make(PAULI_GATE[t.pre[0]]), (q0,), True),
                PlacedGate(Gate.make(PAULI_GATE[t.pre[1]]), (q1,), True),
                g,
                PlacedGate(Gate.make(PAULI_GATE[t.post[0]]), (q0,), True),
                PlacedGate(Gate.make(PAULI_GATE[t.post[1]]), (q1,), True),
            ]
        layers.append(out)
    return Circuit(circuit.num_qubits, circuit.depth, layers, circuit.family, circuit.angle_seed)


def count_cz(circuit: Circuit) -> int:
    return sum(g.gate.name == "CZ" for g in circuit.gates())


def twirled_average_superoperator(circuit: Circuit, model: NoiseModel, n: int, e: int, m: int = 6, seed=None) -> np.ndarray:
    if m < 1:
        raise ValueError("need at least one twirl realization")
    if any(g.gate.name == "SQRT_ISWAP" for g in circuit.gates()):
        circuit = compile_to_cz(circuit)
    rng = np.random.default_rng(seed)
    ncz = count_cz(circuit)
    acc = 0
    for k in range(m):
        assignments = [twirl_cz(rng, k) for _ in range(ncz)]
        acc = acc + noisy_superoperator(twirl_circuit(circuit, assignments), n, e, model)
    return acc / m


def twirled_average_channel(circuit: Circuit, model: NoiseModel, n: int, e: int, m: int = 6, seed=None) -> QuantumChannel:
    """Uniform mixture of ``m`` randomly twirled noisy realizations of ``circuit``.

    sqrt(iSWAP) gates are first compiled to the U/CZ template so that there
    are CZs to twirl.
    """
    lam = twirled_average_superoperator(circuit, model, n, e, m, seed)
    return QuantumChannel.from_superoperator(lam, n, e)
