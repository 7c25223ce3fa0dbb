import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import trapezoid

from dqchaos.ensembles import sample_poisson_spectrum
from dqchaos.stats import (
    CsrSample,
    StatisticsError,
    channel_csr,
    compute_csr,
    histogram,
    marginals,
    nearest_neighbours,
    summarize,
)


def brute_force_neighbours(points):
    nn, nnn = [], []
    for i, p in enumerate(points):
        order = sorted((abs(p - q), j) for j, q in enumerate(points) if j != i)
        nn.append(order[0][1])
        nnn.append(order[1][1])
    return np.array(nn), np.array(nnn)


def multiset_close(a, b, tol=1e-12):
    a, b = np.asarray(a), np.asarray(b)
    if len(a) != len(b):
        return False
    d = np.abs(a[:, None] - b[None, :])
    return d.min(axis=1).max() < tol and d.min(axis=0).max() < tol


def test_hand_computed_three_points():
    csr = compute_csr([0, 1, 2j])
    assert np.allclose(csr.z, [-0.5j, (1 + 2j) / 5, (4 - 2j) / 5])


def test_real_axis_cut_counts():
    spectrum = [0.5 + 0.3j, 0.5 - 0.3j, -0.2 + 0.6j, -0.2 - 0.6j, 0.1, -0.7, 0.9 + 0.005j]
    csr = compute_csr(spectrum, real_axis_cut=0.01)
    assert csr.excluded_real == 3
    assert len(csr) == 4 and csr.source_size == 7


def test_upper_half_plane_policy():
    spectrum = np.array([0.5 + 0.3j, -0.2 + 0.6j, 0.1 + 0.2j, 0.7 + 0.5j])
    full = np.concatenate([spectrum, spectrum.conj(), [0.3]])
    csr = compute_csr(full, real_axis_cut=0.01, conjugate_pairs="upper")
    assert csr.excluded_conjugate == 4 and csr.excluded_real == 1
    assert multiset_close(csr.z, compute_csr(spectrum).z)
    assert channel_csr(full).excluded_conjugate == 4
    with pytest.raises(ValueError):
        compute_csr(full, conjugate_pairs="lower")


def test_too_few_points():
    with pytest.raises(StatisticsError):
        compute_csr([0.1, 0.2, 1j], real_axis_cut=0.01)


def test_degenerate_ratios_dropped():
    csr = compute_csr([0, 0, 0, 1j])
    assert csr.excluded_degenerate == 3 and len(csr) == 1


@pytest.mark.parametrize("seed", range(500))
def test_neighbours_match_brute_force(seed):
    pts = sample_poisson_spectrum(50, seed)
    nn, nnn = nearest_neighbours(pts, chunk=17)
    bnn, bnnn = brute_force_neighbours(pts)
    assert np.array_equal(nn, bnn) and np.array_equal(nnn, bnnn)


def test_neighbour_ties_smallest_index():
    nn, nnn = nearest_neighbours(np.array([0, 1, -1, 1j, 5]))
    assert nn[0] == 1 and nnn[0] == 2


@given(
    st.integers(0, 2**32 - 1),
    st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
    st.floats(0, 2 * np.pi),
    st.floats(0.01, 100),
)
def test_similarity_invariance(seed, shift, phi, scale):
    lam = sample_poisson_spectrum(60, seed)
    z0 = compute_csr(lam).z
    moved = compute_csr(shift + np.exp(1j * phi) * lam).z
    scaled = compute_csr(scale * lam).z
    assert multiset_close(z0, moved, 1e-9)
    assert np.abs(z0 - scaled).max() < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_scale_invariance_with_cut(seed):
    lam = sample_poisson_spectrum(80, seed)
    a = compute_csr(lam, real_axis_cut=0.05)
    b = compute_csr(7.5 * lam, real_axis_cut=7.5 * 0.05)
    assert np.abs(a.z - b.z).max() < 1e-12 and a.excluded_real == b.excluded_real


@given(st.integers(0, 2**32 - 1))
def test_ratios_inside_unit_disk(seed):
    assert np.abs(compute_csr(sample_poisson_spectrum(100, seed)).z).max() <= 1 + 1e-12


def test_poisson_flat_disk_oracle():
    csr = CsrSample.concatenate(compute_csr(sample_poisson_spectrum(4096, s)) for s in range(8))
    s = summarize(csr)
    assert s.mean_r == pytest.approx(2 / 3, abs=0.01)
    assert s.mean_minus_cos_theta == pytest.approx(0, abs=0.01)


def test_histogram_point_at_origin():
    h = histogram(CsrSample(np.array([0j])), bins=21, smear_sigma=0)
    assert h.density[10, 10] * h.bin_area == pytest.approx(1.0)
    assert h.mass() == pytest.approx(1.0)


@given(st.integers(0, 2**32 - 1))
def test_histogram_mass_conserved(seed):
    csr = compute_csr(sample_poisson_spectrum(200, seed))
    for sigma in (0, 0.05):
        assert histogram(csr, 31, sigma).mass() == pytest.approx(1.0, abs=1e-6)


def test_histogram_cap_display_only():
    h = histogram(CsrSample(np.zeros(10, dtype=complex)), bins=11, smear_sigma=0.05, cap=0.6)
    assert h.density.max() > 0.6
    assert h.display.max() == 0.6
    assert h.mass() == pytest.approx(1.0)


def test_smeared_density_matches_kernel():
    # bin integral of a Gaussian centred on a bin centre, checked by quadrature
    h = histogram(CsrSample(np.array([0j])), bins=21, smear_sigma=0.05)
    w = h.edges[1] - h.edges[0]
    x = np.linspace(-w / 2, w / 2, 2001)
    g = np.exp(-(x**2) / (2 * 0.05**2)) / np.sqrt(2 * np.pi * 0.05**2)
    one_d = trapezoid(g, x)
    assert h.density[10, 10] * h.bin_area == pytest.approx(one_d**2, rel=1e-6)


def test_bins_validated():
    with pytest.raises(ValueError):
        histogram(CsrSample(np.array([0j])), bins=1)


def test_marginals_unit_circle_and_disk(rng):
    m = marginals(CsrSample(np.exp(1j * rng.uniform(-np.pi, np.pi, 1000))))
    assert m.p_r[-1] * (m.r_edges[1] - m.r_edges[0]) == pytest.approx(1.0)
    r = np.sqrt(rng.random(200000))
    z = r * np.exp(1j * rng.uniform(-np.pi, np.pi, r.size))
    m = marginals(CsrSample(z))
    assert np.allclose(m.p_r, 2 * m.r_centers, atol=0.05)
    assert np.allclose(m.p_theta, 1 / (2 * np.pi), atol=0.01)
    assert np.sum(m.p_r * np.diff(m.r_edges)) == pytest.approx(1.0, abs=1e-6)
    assert np.sum(m.p_theta * np.diff(m.theta_edges)) == pytest.approx(1.0, abs=1e-6)


def test_summary_single_point():
    s = summarize(CsrSample(np.array([1 + 0j])))
    assert (s.mean_r, s.mean_minus_cos_theta, s.n) == (1.0, -1.0, 1)


def test_summary_stderr(rng):
    z = rng.random(1000) + 0j
    s = summarize(CsrSample(z))
    assert s.stderr_r == pytest.approx(np.std(z.real, ddof=1) / np.sqrt(1000))


def test_empty_sample_errors():
    with pytest.raises(StatisticsError):
        summarize(CsrSample(np.empty(0, dtype=complex)))
    with pytest.raises(StatisticsError):
        marginals(CsrSample(np.empty(0, dtype=complex)))
