"""Bootstrap error bars for functionals of tomographically fitted channels.

Each experiment's shot data are resampled N_B times, every resample is
refit from an independent random start, and the spread of a scalar
functional F over the refits gives a per-experiment variance. Variances of
N_E experiments combine into the error of the ensemble mean of F.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channels import QuantumChannel, to_superoperator
from .stats import channel_csr, summarize
from .tomography.data import ShotDataset, sample_frequencies
from .tomography.fit import FitConfig, fit


def resample_dataset(data: ShotDataset, seed=None) -> ShotDataset:
    """Multinomial redraw of each mode's shots from its empirical frequencies."""
    if data.shots is None:
        raise ValueError("exact datasets have no shots to resample")
    rng = np.random.default_rng(seed)
    freqs = np.empty_like(data.frequencies)
    for shots in np.unique(data.shots):
        rows = data.shots == shots
        freqs[rows] = sample_frequencies(data.frequencies[rows], int(shots), rng)
    return ShotDataset(data.n, list(data.modes), freqs, data.shots.copy())


def bootstrap_variance(values) -> float:
    """Sample variance with 1/(N_B - 1) normalization."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError(f"need at least 2 bootstrap members, got {v.size}")
    return float(np.var(v, ddof=1))


def aggregate_error(variances) -> float:
    """err = sqrt(sum_j s_j^2) / N_E for the mean over N_E experiments."""
    s2 = np.asarray(variances, dtype=float)
    if s2.size < 1:
        raise ValueError("need at least one experiment")
    return float(np.sqrt(s2.sum()) / s2.size)


def mean_r(channel: QuantumChannel) -> float:
    return summarize(channel_csr(np.linalg.eigvals(to_superoperator(channel)))).mean_r


def mean_minus_cos_theta(channel: QuantumChannel) -> float:
    return summarize(channel_csr(np.linalg.eigvals(to_superoperator(channel)))).mean_minus_cos_theta


FUNCTIONALS: dict[str, Callable[[QuantumChannel], float]] = {
    "mean_r": mean_r,
    "mean_minus_cos_theta": mean_minus_cos_theta,
}


@dataclass
class BootstrapEnsemble:
    """Refits of one experiment's resampled data."""

    f_name: str
    member_values: np.ndarray
    channels: list[QuantumChannel] = field(default_factory=list, repr=False)
    estimate: float | None = None  # F of the fit to the original data
    seeds: list[int] = field(default_factory=list)

    @property
    def n_boot(self) -> int:
        return len(self.member_values)

    @property
    def variance(self) -> float:
        return bootstrap_variance(self.member_values)


def run_bootstrap(
    data: ShotDataset,
    spam_data: ShotDataset,
    functional: str | Callable = "mean_r",
    n_boot: int = 10,
    config: FitConfig | None = None,
    seed=None,
    keep_channels: bool = False,
) -> BootstrapEnsemble:
    """Resample both datasets ``n_boot`` times and refit each from a fresh random start."""
    if n_boot < 2:
        raise ValueError(f"need at least 2 bootstrap members, got {n_boot}")
    name, func = _functional(functional)
    config = config or FitConfig()
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(n_boot)
    values, channels, seeds = [], [], []
    for child in children:
        s_data, s_spam, s_fit = (int(x) for x in child.generate_state(3))
        res = fit(
            resample_dataset(data, s_data),
            resample_dataset(spam_data, s_spam),
            FitConfig(**{**config.__dict__, "seed": s_fit}),
        )
        values.append(func(res.channel))
        seeds.append(s_fit)
        if keep_channels:
            channels.append(res.channel)
    return BootstrapEnsemble(name, np.array(values), channels, seeds=seeds)


def _functional(functional) -> tuple[str, Callable]:
    if callable(functional):
        return getattr(functional, "__name__", "F"), functional
    try:
        return functional, FUNCTIONALS[functional]
    except KeyError:
        raise ValueError(f"unknown functional {functional!r}; known: {sorted(FUNCTIONALS)}") from None


@dataclass
class BootstrapReport:
    f_name: str
    mean: float
    err: float
    n_boot: int
    n_experiments: int
    member_values: list[list[float]]

    def to_dict(self) -> dict:
        return {
            "F_name": self.f_name,
            "mean": self.mean,
            "err": self.err,
            "N_B": self.n_boot,
            "N_E": self.n_experiments,
            "member_values": self.member_values,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def aggregate(ensembles: list[BootstrapEnsemble]) -> BootstrapReport:
    """Ensemble mean of F (original-fit estimates when present) and its bootstrap error."""
    if not ensembles:
        raise ValueError("need at least one experiment")
    names = {e.f_name for e in ensembles}
    if len(names) > 1:
        raise ValueError(f"ensembles evaluate different functionals: {sorted(names)}")
    point = [e.estimate if e.estimate is not None else float(np.mean(e.member_values)) for e in ensembles]
    return BootstrapReport(
        names.pop(),
        float(np.mean(point)),
        aggregate_error([e.variance for e in ensembles]),
        min(e.n_boot for e in ensembles),
        len(ensembles),
        [e.member_values.tolist() for e in ensembles],
    )
