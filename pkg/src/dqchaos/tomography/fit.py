"""Gradient-based fit of SPAM and channel parameters with torch autodiff."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import torch

from ..channels import QuantumChannel
from ..linalg import NumericError
from .data import ShotDataset
from .model import KrausParameterization, SpamModel
from .modes import PauliMode

log = logging.getLogger(__name__)

DTYPE = torch.complex128


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class FitConfig:
    iterations: int = 4000
    learning_rate: float = 1e-3
    seed: int | None = None
    optimizer: str = "adam"  # or "gd"
    rank: int | None = None  # default d^2
    spam_iterations: int | None = None  # default: same as iterations
    joint: bool = False  # refine SPAM together with the map after the two stages
    window: int = 500

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("adam", "gd"):
            raise ValueError(f"optimizer must be 'adam' or 'gd', got {self.optimizer!r}")


@dataclass
class FitResult:
    channel: QuantumChannel
    spam: SpamModel
    params: KrausParameterization
    loss_trace: np.ndarray
    spam_loss_trace: np.ndarray
    converged: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def final_loss(self) -> float:
        return float(self.loss_trace[-1])


def _c(x: np.ndarray) -> torch.Tensor:
    return torch.as_tensor(np.asarray(x), dtype=DTYPE)


def _r(x: np.ndarray) -> torch.Tensor:
    return torch.as_tensor(np.asarray(x), dtype=torch.float64)


class _Model:
    """Torch mirror of the numpy forward model for a fixed mode list.

    Each distinct preparation is pushed through the channel once; outcomes
    are then read out one measurement basis at a time, with the basis
    rotation folded into a (d, d^2) linear functional.
    """

    def __init__(self, data: ShotDataset):
        n = data.n
        self.d = d = 2**n
        preps = sorted({m.s for m in data.modes})
        lookup = {s: i for i, s in enumerate(preps)}
        self.prep = _c(np.array([PauliMode(s, "Z" * n).prep_unitary() for s in preps]))
        prep_index = np.array([lookup[m.s] for m in data.modes])
        self.funcs = []
        self.sizes = []
        order = []
        for b in sorted({m.b for m in data.modes}):
            idx = np.flatnonzero([m.b == b for m in data.modes])
            u = PauliMode("0" * n, b).meas_unitary()
            # functional[k, (m, l)] = u[k, m] conj(u[k, l])
            func = np.einsum("km,kl->kml", u, u.conj()).reshape(d, d * d)
            self.funcs.append(_c(func).T.contiguous())
            self.sizes.append(len(idx))
            order.append(idx)
        order = np.concatenate(order)
        self.gather = torch.as_tensor(prep_index[order])
        self.inverse = torch.as_tensor(np.argsort(order))
        self.freq = _r(data.frequencies)
        self._cache = None

    def superop(self, theta: torch.Tensor, r: int) -> torch.Tensor:
        d = self.d
        half = r * d * d
        a = torch.complex(theta[:half], theta[half:]).reshape(r * d, d)
        w, v = torch.linalg.eigh(a.conj().T @ a)
        k = (a @ (v * w.rsqrt().to(DTYPE)) @ v.conj().T).reshape(r, d, d)
        return torch.einsum("sik,sjl->ijkl", k, k.conj()).reshape(d * d, d * d)

    @staticmethod
    def rho0(a_rho: torch.Tensor) -> torch.Tensor:
        rho = a_rho @ a_rho.conj().T
        return rho / torch.diagonal(rho).sum().real

    @staticmethod
    def corruption(a_c: torch.Tensor) -> torch.Tensor:
        sq = a_c**2
        return sq / sq.sum(dim=0, keepdim=True)

    def prepared(self, a_rho: torch.Tensor) -> torch.Tensor:
        """Row-vectorized prepared states, (number of distinct preparations, d^2)."""
        if not a_rho.requires_grad and self._cache is not None and self._cache[0] is a_rho:
            return self._cache[1]
        rho = torch.einsum("mij,jk,mlk->mil", self.prep, self.rho0(a_rho), self.prep.conj())
        rho = rho.reshape(-1, self.d * self.d)
        if not a_rho.requires_grad:
            self._cache = (a_rho, rho)
        return rho

    def predict(self, lam: torch.Tensor | None, a_rho: torch.Tensor, a_c: torch.Tensor) -> torch.Tensor:
        out = self.prepared(a_rho)
        if lam is not None:
            out = out @ lam.T
        chunks = torch.split(out[self.gather], self.sizes)
        parts = [c @ f for c, f in zip(chunks, self.funcs)]
        diag = torch.cat(parts)[self.inverse].real
        return diag @ self.corruption(a_c).T

    def loss(self, p: torch.Tensor) -> torch.Tensor:
        return torch.sum((p - self.freq) ** 2)


def _optimizer(tensors, cfg: FitConfig):
    if cfg.optimizer == "adam":
        return torch.optim.Adam(tensors, lr=cfg.learning_rate)
    return torch.optim.SGD(tensors, lr=cfg.learning_rate)


def _run(closure, tensors, iterations: int, cfg: FitConfig, label: str) -> tuple[np.ndarray, bool]:
    opt = _optimizer(tensors, cfg)
    trace = np.empty(iterations)
    converged = True
    for i in range(iterations):
        opt.zero_grad()
        value = closure()
        if not torch.isfinite(value):
            raise NumericError(f"non-finite {label} loss at iteration {i}")
        try:
            value.backward()
        except RuntimeError as exc:
            raise NumericError(f"gradient evaluation failed in {label} fit at iteration {i}: {exc}") from exc
        for t in tensors:
            if not torch.all(torch.isfinite(t.grad)):
                raise NumericError(f"non-finite gradient in {label} fit at iteration {i}")
        trace[i] = value.item()
        opt.step()
        w = cfg.window
        if converged and i >= w and trace[i] >= trace[i - w] and trace[i] > 0:
            converged = False
            warnings.warn(
                f"{label} loss did not decrease over {w} iterations (iteration {i}, loss {trace[i]:.3e})",
                ConvergenceWarning,
                stacklevel=3,
            )
    return trace, converged


def fit_spam(spam_data: ShotDataset, cfg: FitConfig | None = None, init: SpamModel | None = None) -> tuple[SpamModel, np.ndarray, bool]:
    """Fit rho0 and C to preparation-only data (identity channel)."""
    cfg = cfg or FitConfig()
    d = 2**spam_data.n
    init = init or SpamModel.near_ideal(d, seed=np.random.default_rng(cfg.seed))
    model = _Model(spam_data)
    a_rho = _c(init.a_rho).requires_grad_()
    a_c = _r(init.a_c).requires_grad_()
    iters = cfg.spam_iterations or cfg.iterations
    trace, ok = _run(lambda: model.loss(model.predict(None, a_rho, a_c)), [a_rho, a_c], iters, cfg, "SPAM")
    spam = SpamModel(a_rho.detach().numpy(), a_c.detach().numpy())
    return spam, trace, ok


def fit_channel(
    data: ShotDataset,
    spam: SpamModel,
    cfg: FitConfig | None = None,
    init: KrausParameterization | None = None,
) -> tuple[KrausParameterization, np.ndarray, bool]:
    """Fit the Kraus parameters with SPAM held fixed."""
    cfg = cfg or FitConfig()
    d = 2**data.n
    r = cfg.rank or d * d
    init = init or KrausParameterization.random(d, r, seed=np.random.default_rng(cfg.seed))
    model = _Model(data)
    theta = _r(init.theta).requires_grad_()
    a_rho = _c(spam.a_rho)
    a_c = _r(spam.a_c)
    trace, ok = _run(lambda: model.loss(model.predict(model.superop(theta, r), a_rho, a_c)), [theta], cfg.iterations, cfg, "map")
    return KrausParameterization(d, r, theta.detach().numpy()), trace, ok


def fit(data: ShotDataset, spam_data: ShotDataset, cfg: FitConfig | None = None) -> FitResult:
    """Two-stage fit: SPAM from preparation-only data, then the map with SPAM frozen.

    With ``cfg.joint`` a third stage refines SPAM and map together on both
    datasets.
    """
    cfg = cfg or FitConfig()
    if data.n != spam_data.n:
        raise ValueError("map and SPAM datasets have different qubit counts")
    ss = np.random.SeedSequence(cfg.seed)
    spam_seed, map_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    spam, spam_trace, ok_spam = fit_spam(spam_data, _with_seed(cfg, spam_seed))
    params, trace, ok_map = fit_channel(data, spam, _with_seed(cfg, map_seed))
    if cfg.joint:
        params, spam, joint_trace, ok_map = _fit_joint(data, spam_data, params, spam, cfg)
        trace = np.concatenate([trace, joint_trace])
    return FitResult(
        params.channel(data.n),
        spam,
        params,
        trace,
        spam_trace,
        converged=ok_spam and ok_map,
    )


def _with_seed(cfg: FitConfig, seed: int) -> FitConfig:
    return FitConfig(**{**cfg.__dict__, "seed": seed})


def _fit_joint(data, spam_data, params, spam, cfg):
    r = params.r
    m_map, m_spam = _Model(data), _Model(spam_data)
    theta = _r(params.theta).requires_grad_()
    a_rho = _c(spam.a_rho).requires_grad_()
    a_c = _r(spam.a_c).requires_grad_()

    def closure():
        lam = m_map.superop(theta, r)
        return m_map.loss(m_map.predict(lam, a_rho, a_c)) + m_spam.loss(m_spam.predict(None, a_rho, a_c))

    trace, ok = _run(closure, [theta, a_rho, a_c], cfg.iterations, cfg, "joint")
    return (
        KrausParameterization(params.d, r, theta.detach().numpy()),
        SpamModel(a_rho.detach().numpy(), a_c.detach().numpy()),
        trace,
        ok,
    )


def loss_and_gradient(params: KrausParameterization, spam: SpamModel, data: ShotDataset) -> tuple[float, np.ndarray]:
    """Loss and its autodiff gradient with respect to theta."""
    model = _Model(data)
    theta = _r(params.theta).requires_grad_()
    value = model.loss(model.predict(model.superop(theta, params.r), _c(spam.a_rho), _r(spam.a_c)))
    value.backward()
    return value.item(), theta.grad.numpy().copy()
