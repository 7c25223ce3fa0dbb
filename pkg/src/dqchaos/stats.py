"""Complex spacing ratios and their summary statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

CHANNEL_REAL_AXIS_CUT = 0.01
# channel spectra come in conjugate pairs; each pair is counted once
CHANNEL_CONJUGATE_PAIRS = "upper"
DEFAULT_DEGENERACY_CUT = 1e-12


class StatisticsError(ValueError):
    """Too few usable eigenvalues for spacing-ratio statistics."""


@dataclass
class CsrSample:
    z: np.ndarray
    excluded_real: int = 0
    excluded_degenerate: int = 0
    source_size: int = 0
    excluded_conjugate: int = 0

    def __len__(self) -> int:
        return len(self.z)

    @property
    def r(self) -> np.ndarray:
        return np.abs(self.z)

    @property
    def theta(self) -> np.ndarray:
        return np.angle(self.z)

    @classmethod
    def concatenate(cls, samples) -> "CsrSample":
        samples = list(samples)
        if not samples:
            return cls(np.empty(0, dtype=complex))
        return cls(
            np.concatenate([s.z for s in samples]),
            sum(s.excluded_real for s in samples),
            sum(s.excluded_degenerate for s in samples),
            sum(s.source_size for s in samples),
            sum(s.excluded_conjugate for s in samples),
        )


def nearest_neighbours(points: np.ndarray, chunk: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the nearest and next-nearest neighbour of every point.

    Exact O(N^2) search, chunked over rows. Ties go to the smaller index.
    """
    n = len(points)
    nn = np.empty(n, dtype=np.intp)
    nnn = np.empty(n, dtype=np.intp)
    rows = np.arange(n)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        d = np.abs(points[start:stop, None] - points[None, :])
        local = np.arange(stop - start)
        d[local, rows[start:stop]] = np.inf
        first = np.argmin(d, axis=1)
        d[local, first] = np.inf
        nn[start:stop] = first
        nnn[start:stop] = np.argmin(d, axis=1)
    return nn, nnn


def compute_csr(
    spectrum,
    real_axis_cut: float = 0.0,
    degeneracy_cut: float = DEFAULT_DEGENERACY_CUT,
    conjugate_pairs: str = "both",
) -> CsrSample:
    """Complex spacing ratios z_i = (l_i - l_NN) / (l_i - l_NNN).

    Eigenvalues with |Im l| < ``real_axis_cut`` are removed before the
    neighbour search. With ``conjugate_pairs="upper"`` only the upper
    half-plane is kept, which removes the trivial l <-> conj(l) correlation
    of real-representable maps. Ratios whose next-nearest distance is below
    ``degeneracy_cut`` are dropped and counted.
    """
    lam = np.asarray(spectrum, dtype=complex).ravel()
    near_real = np.abs(lam.imag) < real_axis_cut
    if conjugate_pairs == "both":
        lower = np.zeros(len(lam), dtype=bool)
    elif conjugate_pairs == "upper":
        lower = ~near_real & (lam.imag <= 0)
    else:
        raise ValueError(f"conjugate_pairs must be 'both' or 'upper', got {conjugate_pairs!r}")
    keep = ~near_real & ~lower
    pts = lam[keep]
    if len(pts) < 3:
        raise StatisticsError(f"need at least 3 eigenvalues after exclusions, have {len(pts)}")
    nn, nnn = nearest_neighbours(pts)
    num = pts - pts[nn]
    den = pts - pts[nnn]
    ok = np.abs(den) >= degeneracy_cut
    z = num[ok] / den[ok]
    return CsrSample(
        z=z,
        excluded_real=int(np.sum(near_real)),
        excluded_degenerate=int(np.sum(~ok)),
        source_size=len(lam),
        excluded_conjugate=int(np.sum(lower)),
    )


def channel_csr(
    spectrum,
    real_axis_cut: float = CHANNEL_REAL_AXIS_CUT,
    conjugate_pairs: str = CHANNEL_CONJUGATE_PAIRS,
) -> CsrSample:
    """Spacing ratios with the defaults used for channel spectra."""
    return compute_csr(spectrum, real_axis_cut, conjugate_pairs=conjugate_pairs)


@dataclass
class CsrHistogram:
    edges: np.ndarray
    density: np.ndarray  # indexed [x_bin, y_bin]
    smear_sigma: float
    cap: float | None
    count: int = 0

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def bin_area(self) -> float:
        w = self.edges[1] - self.edges[0]
        return float(w * w)

    @property
    def display(self) -> np.ndarray:
        if self.cap is None:
            return self.density
        return np.minimum(self.density, self.cap)

    def mass(self) -> float:
        return float(self.density.sum() * self.bin_area)

    def density_at(self, z: complex) -> float:
        ix = np.clip(np.searchsorted(self.edges, z.real, side="right") - 1, 0, len(self.edges) - 2)
        iy = np.clip(np.searchsorted(self.edges, z.imag, side="right") - 1, 0, len(self.edges) - 2)
        return float(self.density[ix, iy])


def _smeared_weights(x: np.ndarray, edges: np.ndarray, sigma: float) -> np.ndarray:
    cdf = ndtr((edges[None, :] - x[:, None]) / sigma)
    return np.diff(cdf, axis=1)


def histogram(csr: CsrSample, bins: int = 51, smear_sigma: float = 0.05, cap: float | None = 0.6) -> CsrHistogram:
    """2D density of z over [-1, 1]^2, optionally smeared by a Gaussian kernel.

    Each ratio contributes a unit-mass isotropic Gaussian integrated exactly
    over every bin; the grid is then renormalized to unit mass. ``cap`` only
    affects ``display``.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    edges = np.linspace(-1.0, 1.0, bins + 1)
    z = np.asarray(csr.z)
    if smear_sigma > 0:
        mass = np.zeros((bins, bins))
        for start in range(0, len(z), 20000):
            part = z[start:start + 20000]
            wx = _smeared_weights(part.real, edges, smear_sigma)
            wy = _smeared_weights(part.imag, edges, smear_sigma)
            mass += wx.T @ wy
    else:
        mass, _, _ = np.histogram2d(z.real, z.imag, bins=[edges, edges])
    total = mass.sum()
    area = (edges[1] - edges[0]) ** 2
    density = mass / (total * area) if total > 0 else mass
    return CsrHistogram(edges, density, smear_sigma, cap, len(z))


@dataclass
class Marginals:
    r_edges: np.ndarray
    p_r: np.ndarray
    theta_edges: np.ndarray
    p_theta: np.ndarray

    @staticmethod
    def _centers(e):
        return 0.5 * (e[1:] + e[:-1])

    @property
    def r_centers(self):
        return self._centers(self.r_edges)

    @property
    def theta_centers(self):
        return self._centers(self.theta_edges)


def marginals(csr: CsrSample, radial_bins: int = 20, angular_bins: int = 20) -> Marginals:
    """Normalized histograms of r = |z| on [0, 1] and theta = arg z on (-pi, pi]."""
    if len(csr) == 0:
        raise StatisticsError("empty sample")
    r_edges = np.linspace(0.0, 1.0, radial_bins + 1)
    t_edges = np.linspace(-np.pi, np.pi, angular_bins + 1)
    p_r, _ = np.histogram(np.clip(csr.r, 0.0, 1.0), bins=r_edges, density=True)
    p_t, _ = np.histogram(csr.theta, bins=t_edges, density=True)
    return Marginals(r_edges, p_r, t_edges, p_t)


@dataclass
class CsrSummary:
    mean_r: float
    mean_minus_cos_theta: float
    stderr_r: float
    stderr_ct: float
    n: int
    extra: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "mean_r": self.mean_r,
            "mean_minus_cos_theta": self.mean_minus_cos_theta,
            "stderr_r": self.stderr_r,
            "stderr_ct": self.stderr_ct,
            "n": self.n,
        }


def summarize(csr: CsrSample) -> CsrSummary:
    """Means of r and -cos(theta) with standard errors."""
    n = len(csr)
    if n == 0:
        raise StatisticsError("empty sample")
    r = csr.r
    ct = -np.cos(csr.theta)
    if n > 1:
        se_r = float(np.std(r, ddof=1) / np.sqrt(n))
        se_ct = float(np.std(ct, ddof=1) / np.sqrt(n))
    else:
        se_r = se_ct = 0.0
    return CsrSummary(float(r.mean()), float(ct.mean()), se_r, se_ct, n)
