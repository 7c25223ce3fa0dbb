"""Shot datasets: storage, JSON round trip and synthetic generation."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..channels import QuantumChannel, to_superoperator
from .model import SpamModel, predict_batch
from .modes import PauliMode, spam_modes


@dataclass
class ShotDataset:
    """Per-mode outcome frequencies; ``shots`` is None for exact (infinite-shot) data."""

    n: int
    modes: list[PauliMode]
    frequencies: np.ndarray  # (M, d)
    shots: np.ndarray | None = None  # (M,) ints

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        d = 2**self.n
        if self.frequencies.shape != (len(self.modes), d):
            raise ValueError(f"frequencies must have shape ({len(self.modes)}, {d}), got {self.frequencies.shape}")
        if self.shots is not None:
            self.shots = np.broadcast_to(np.asarray(self.shots, dtype=np.int64), (len(self.modes),)).copy()
            if np.any(self.shots < 1):
                raise ValueError("every mode needs at least one shot")

    def __len__(self) -> int:
        return len(self.modes)

    @property
    def exact(self) -> bool:
        return self.shots is None

    @property
    def counts(self) -> np.ndarray:
        if self.shots is None:
            raise ValueError("exact dataset has no shot counts")
        return np.rint(self.frequencies * self.shots[:, None]).astype(np.int64)

    @classmethod
    def from_counts(cls, n: int, modes, counts) -> "ShotDataset":
        counts = np.asarray(counts, dtype=np.int64)
        shots = counts.sum(axis=1)
        return cls(n, list(modes), counts / shots[:, None], shots)

    def to_dict(self) -> dict:
        rows = []
        for i, m in enumerate(self.modes):
            row = {"s": m.s, "b": m.b}
            if self.exact:
                row["frequencies"] = self.frequencies[i].tolist()
                row["shots"] = None
            else:
                row["counts"] = self.counts[i].tolist()
                row["shots"] = int(self.shots[i])
            rows.append(row)
        return {"n": self.n, "modes": rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "ShotDataset":
        n = int(doc["n"])
        modes = [PauliMode(r["s"], r["b"]) for r in doc["modes"]]
        if all("counts" in r for r in doc["modes"]):
            return cls.from_counts(n, modes, [r["counts"] for r in doc["modes"]])
        return cls(n, modes, [r["frequencies"] for r in doc["modes"]], None)

    @classmethod
    def from_json(cls, text: str) -> "ShotDataset":
        return cls.from_dict(json.loads(text))


def sample_frequencies(probs: np.ndarray, shots: int, rng) -> np.ndarray:
    """Multinomial frequencies, one row per mode."""
    p = np.clip(probs, 0, None)
    p = p / p.sum(axis=1, keepdims=True)
    return rng.multinomial(shots, p) / shots


def generate_synthetic_dataset(
    target,
    spam_truth: SpamModel,
    modes,
    shots: int | None,
    seed=None,
) -> ShotDataset:
    """Exact probabilities of ``target`` (channel or superoperator), sampled ``shots`` times per mode.

    ``shots=None`` keeps the exact probabilities.
    """
    lam = to_superoperator(target) if isinstance(target, QuantumChannel) else np.asarray(target)
    modes = list(modes)
    n = modes[0].n
    probs = predict_batch(lam, spam_truth, modes)
    if shots is None:
        return ShotDataset(n, modes, probs, None)
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    rng = np.random.default_rng(seed)
    return ShotDataset(n, modes, sample_frequencies(probs, shots, rng), np.full(len(modes), shots))


def generate_spam_dataset(spam_truth: SpamModel, n: int, shots: int | None, seed=None) -> ShotDataset:
    """Preparation-only data: identity channel, every preparation string, Z readout."""
    d = 2**n
    return generate_synthetic_dataset(np.eye(d * d), spam_truth, spam_modes(n), shots, seed)
