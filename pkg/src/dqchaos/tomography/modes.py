"""Preparation/measurement settings ("Pauli modes") and their rotations.

A mode is a pair of strings: one preparation symbol per qubit from
``PREP_ALPHABET`` and one measurement basis per qubit from ``MEAS_ALPHABET``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from ..linalg import kron

PREP_ALPHABET = "01+-rl"  # |0>, |1>, |+>, |->, |+i>, |-i>
MEAS_ALPHABET = "XYZ"

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_S = np.diag([1, 1j])

# single-qubit unitaries taking |0> to each preparation state
PREP_ROTATIONS = {
    "0": np.eye(2, dtype=complex),
    "1": _X,
    "+": _H,
    "-": _H @ _X,
    "r": _S @ _H,
    "l": _S @ _H @ _X,
}
# rotations applied before a computational-basis readout
MEAS_ROTATIONS = {
    "X": _H,
    "Y": _H @ _S.conj().T,
    "Z": np.eye(2, dtype=complex),
}


@dataclass(frozen=True, order=True)
class PauliMode:
    s: str
    b: str

    def __post_init__(self):
        if len(self.s) != len(self.b) or not self.s:
            raise ValueError(f"mode strings must have equal nonzero length, got {self.s!r}, {self.b!r}")
        if set(self.s) - set(PREP_ALPHABET):
            raise ValueError(f"preparation symbols must be in {PREP_ALPHABET!r}, got {self.s!r}")
        if set(self.b) - set(MEAS_ALPHABET):
            raise ValueError(f"measurement symbols must be in {MEAS_ALPHABET!r}, got {self.b!r}")

    @property
    def n(self) -> int:
        return len(self.s)

    def prep_unitary(self) -> np.ndarray:
        return _prep_unitary(self.s)

    def meas_unitary(self) -> np.ndarray:
        return _meas_unitary(self.b)


@lru_cache(maxsize=None)
def _prep_unitary(s: str) -> np.ndarray:
    return kron(*(PREP_ROTATIONS[c] for c in s))


@lru_cache(maxsize=None)
def _meas_unitary(b: str) -> np.ndarray:
    return kron(*(MEAS_ROTATIONS[c] for c in b))


def mode_space_size(n: int) -> int:
    return 18**n


def all_modes(n: int) -> list[PauliMode]:
    """The full 6^n x 3^n mode space in lexicographic order."""
    preps = ["".join(p) for p in product(PREP_ALPHABET, repeat=n)]
    bases = ["".join(b) for b in product(MEAS_ALPHABET, repeat=n)]
    return [PauliMode(s, b) for s in preps for b in bases]


def _mode_from_index(n: int, idx: int) -> PauliMode:
    nb = 3**n
    si, bi = divmod(int(idx), nb)
    s = "".join(PREP_ALPHABET[(si // 6**k) % 6] for k in reversed(range(n)))
    b = "".join(MEAS_ALPHABET[(bi // 3**k) % 3] for k in reversed(range(n)))
    return PauliMode(s, b)


def sample_modes(n: int, count: int, seed=None) -> list[PauliMode]:
    """``count`` distinct modes drawn uniformly without replacement, in index order."""
    total = mode_space_size(n)
    if not 1 <= count <= total:
        raise ValueError(f"count must be in [1, {total}], got {count}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(total, size=count, replace=False))
    return [_mode_from_index(n, i) for i in idx]


def spam_modes(n: int) -> list[PauliMode]:
    """Preparation-only modes: every preparation string, read out in Z."""
    return [PauliMode("".join(p), "Z" * n) for p in product(PREP_ALPHABET, repeat=n)]
