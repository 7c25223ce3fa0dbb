"""Brickwork circuit families (free-fermion and chaotic) and their gates.

Qubit 0 is the most significant tensor factor. Chains have open boundaries;
even layers pair (0,1),(2,3),... and odd layers pair (1,2),(3,4),...
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import CapacityError, phase_distance

MAX_DENSE_QUBITS = 12

_S = 1 / np.sqrt(2)
SQRT_ISWAP = np.array(
    [[1, 0, 0, 0], [0, _S, 1j * _S, 0], [0, 1j * _S, _S, 0], [0, 0, 0, 1]],
    dtype=complex,
)
CZ = np.diag([1, 1, 1, -1]).astype(complex)

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def rz(theta: float) -> np.ndarray:
    """exp(i theta Z / 2)."""
    return np.diag([np.exp(0.5j * theta), np.exp(-0.5j * theta)])


def ry(theta: float) -> np.ndarray:
    """exp(i theta Y / 2)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, s], [-s, c]], dtype=complex)


def u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
        ]
    )


_GATES = {
    "Z": (1, lambda p: rz(*p)),
    "Y": (1, lambda p: ry(*p)),
    "U": (1, lambda p: u3(*p)),
    "PX": (1, lambda p: PAULI["X"]),
    "PY": (1, lambda p: PAULI["Y"]),
    "PZ": (1, lambda p: PAULI["Z"]),
    "I": (1, lambda p: PAULI["I"]),
    "SQRT_ISWAP": (2, lambda p: SQRT_ISWAP),
    "CZ": (2, lambda p: CZ),
}


@dataclass(frozen=True)
class Gate:
    name: str
    arity: int
    matrix: np.ndarray = field(repr=False, compare=False)
    params: tuple[float, ...] = ()

    @classmethod
    def make(cls, name: str, params: Sequence[float] = ()) -> "Gate":
        try:
            arity, factory = _GATES[name]
        except KeyError:
            raise ValueError(f"unknown gate {name!r}") from None
        params = tuple(float(p) for p in params)
        return cls(name, arity, factory(params), params)


@dataclass(frozen=True)
class PlacedGate:
    gate: Gate
    targets: tuple[int, ...]
    # frame changes (e.g. twirl Paulis) that carry no gate error
    virtual: bool = False


@dataclass
class Circuit:
    num_qubits: int
    depth: int
    layers: list[list[PlacedGate]]
    family: str
    angle_seed: int | None = None

    def gates(self):
        for layer in self.layers:
            yield from layer

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "depth": self.depth,
            "family": self.family,
            "angle_seed": self.angle_seed,
            "layers": [
                [
                    {"gate": g.gate.name, "targets": list(g.targets), "params": list(g.gate.params)}
                    | ({"virtual": True} if g.virtual else {})
                    for g in layer
                ]
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Circuit":
        layers = [
            [
                PlacedGate(Gate.make(g["gate"], g.get("params", ())), tuple(g["targets"]), g.get("virtual", False))
                for g in layer
            ]
            for layer in doc["layers"]
        ]
        return cls(doc["num_qubits"], doc["depth"], layers, doc["family"], doc.get("angle_seed"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))


def brick_pairs(num_qubits: int, layer_index: int) -> list[tuple[int, int]]:
    start = layer_index % 2
    return [(q, q + 1) for q in range(start, num_qubits - 1, 2)]


def _build(num_qubits: int, depth: int, seed, family: str) -> Circuit:
    if int(num_qubits) != num_qubits or num_qubits < 2:
        raise ValueError(f"need at least 2 qubits, got {num_qubits}")
    if int(depth) != depth or depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    rng = np.random.default_rng(seed)
    layers = []
    for t in range(depth):
        layer = []
        if family == "chaotic":
            for q, a in enumerate(rng.uniform(0, 2 * np.pi, num_qubits)):
                layer.append(PlacedGate(Gate.make("Y", [a]), (q,)))
        for q, a in enumerate(rng.uniform(0, 2 * np.pi, num_qubits)):
            layer.append(PlacedGate(Gate.make("Z", [a]), (q,)))
        for pair in brick_pairs(num_qubits, t):
            layer.append(PlacedGate(Gate.make("SQRT_ISWAP"), pair))
        layers.append(layer)
    return Circuit(num_qubits, depth, layers, family, seed)


def build_ff_circuit(num_qubits: int, depth: int, seed=None) -> Circuit:
    """Free-fermion brickwork: random Z rotations then sqrt(iSWAP) bricks per layer."""
    return _build(num_qubits, depth, seed, "free_fermion")


def build_chaotic_circuit(num_qubits: int, depth: int, seed=None) -> Circuit:
    """Free-fermion brickwork with an extra random Y rotation per qubit and layer."""
    return _build(num_qubits, depth, seed, "chaotic")


def apply_gate(state: np.ndarray, matrix: np.ndarray, targets: Sequence[int], num_qubits: int) -> np.ndarray:
    """Left-multiply a (2^L, m) array by ``matrix`` acting on ``targets``."""
    k = len(targets)
    cols = state.shape[1]
    t = state.reshape((2,) * num_qubits + (cols,))
    g = matrix.reshape((2,) * (2 * k))
    t = np.tensordot(g, t, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot puts the gate's output axes first; move them back into place
    t = np.moveaxis(t, list(range(k)), list(targets))
    return t.reshape(2**num_qubits, cols)


def assemble_unitary(circuit: Circuit) -> np.ndarray:
    """Dense circuit unitary, gates applied in layer order."""
    L = circuit.num_qubits
    if L > MAX_DENSE_QUBITS:
        raise CapacityError(f"{L} qubits exceeds dense limit {MAX_DENSE_QUBITS}")
    u = np.eye(2**L, dtype=complex)
    for g in circuit.gates():
        u = apply_gate(u, g.gate.matrix, g.targets, L)
    return u


def total_z(num_qubits: int) -> np.ndarray:
    """Diagonal of sum_i sigma^z_i in the computational basis."""
    bits = (np.arange(2**num_qubits)[:, None] >> np.arange(num_qubits)[::-1]) & 1
    return (num_qubits - 2 * bits.sum(axis=1)).astype(float)


# A solution of the 6-U / 2-CZ template, found by least squares on the
# template and kept here as the reference decomposition. Order: (U0 x U1),
# CZ, (U2 x U3), CZ, (U4 x U5) in time order; Ua acts on the first qubit.
SQRT_ISWAP_CZ_ANGLES = (
    (1.5707963267948966, 5.971759469064824, 1.7985865741168114),
    (1.5707963267948966, 2.430612952977042, 3.369382900911708),
    (3.9269908169872414, 3.474614802961592, 3.453018491704556),
    (3.9269908169872414, 5.813203527527038, 3.852572354202544),
    (1.5707963267948968, 4.484598733062776, 2.8085705042179945),
    (1.5707963267948968, 2.913802406267879, 3.6115744332423425),
)


def _check_template(angles) -> np.ndarray:
    a = np.asarray(angles, dtype=float)
    if a.shape != (6, 3):
        raise ValueError(
            f"decomposition template needs 6 U-gate angle triples and two CZs, got shape {a.shape}"
        )
    return a


def cz_decomposition_unitary(angles=SQRT_ISWAP_CZ_ANGLES) -> np.ndarray:
    a = _check_template(angles)
    m = np.kron(u3(*a[0]), u3(*a[1]))
    m = CZ @ m
    m = np.kron(u3(*a[2]), u3(*a[3])) @ m
    m = CZ @ m
    return np.kron(u3(*a[4]), u3(*a[5])) @ m


def cz_decomposition_gates(angles=SQRT_ISWAP_CZ_ANGLES) -> list[tuple[str, tuple[float, ...], tuple[int, ...]]]:
    """The template as (gate name, params, local targets) in time order."""
    a = _check_template(angles)
    return [
        ("U", tuple(a[0]), (0,)),
        ("U", tuple(a[1]), (1,)),
        ("CZ", (), (0, 1)),
        ("U", tuple(a[2]), (0,)),
        ("U", tuple(a[3]), (1,)),
        ("CZ", (), (0, 1)),
        ("U", tuple(a[4]), (0,)),
        ("U", tuple(a[5]), (1,)),
    ]


def verify_cz_decomposition(angles) -> float:
    """Max-norm deviation of the 6U+2CZ candidate from sqrt(iSWAP), modulo global phase."""
    return phase_distance(SQRT_ISWAP, cz_decomposition_unitary(angles))


def compile_to_cz(circuit: Circuit, angles=SQRT_ISWAP_CZ_ANGLES) -> Circuit:
    """Replace every sqrt(iSWAP) by the U/CZ template; other gates pass through."""
    template = cz_decomposition_gates(angles)
    layers = []
    for layer in circuit.layers:
        out = []
        for g in layer:
            if g.gate.name != "SQRT_ISWAP":
                out.append(g)
                continue
            for name, params, local in template:
                out.append(PlacedGate(Gate.make(name, params), tuple(g.targets[i] for i in local)))
        layers.append(out)
    return Circuit(circuit.num_qubits, circuit.depth, layers, circuit.family, circuit.angle_seed)
