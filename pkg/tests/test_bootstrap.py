import json
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dqchaos.bootstrap import (
    BootstrapEnsemble,
    aggregate,
    aggregate_error,
    bootstrap_variance,
    mean_r,
    resample_dataset,
    run_bootstrap,
)
from dqchaos.channels import extract_kraus
from dqchaos.ensembles import sample_cue
from dqchaos.tomography import (
    ConvergenceWarning,
    FitConfig,
    ShotDataset,
    SpamModel,
    all_modes,
    fit,
    generate_spam_dataset,
    generate_synthetic_dataset,
    sample_modes,
)


def synthetic(n=2, shots=1000, seed=0, modes=None):
    ch = extract_kraus(sample_cue(2 ** (n + 1), seed), n, 1)
    spam = SpamModel.synthetic(2**n, seed=seed + 1)
    modes = modes or sample_modes(n, 60, seed=seed + 2)
    data = generate_synthetic_dataset(ch, spam, modes, shots, seed=seed + 3)
    spam_data = generate_spam_dataset(spam, n, shots, seed=seed + 4)
    return ch, data, spam_data


def test_point_mass_resample_identical():
    modes = sample_modes(1, 5, seed=0)
    f = np.zeros((5, 2))
    f[:, 1] = 1
    ds = ShotDataset(1, modes, f, 100)
    assert np.array_equal(resample_dataset(ds, 3).frequencies, f)


def test_resample_concentrates():
    _, data, _ = synthetic(shots=10**6)
    res = resample_dataset(data, 1)
    dev = np.abs(res.frequencies - data.frequencies).max(axis=1)
    assert np.mean(dev < 3 / np.sqrt(10**6)) >= 0.99
    assert np.array_equal(res.shots, data.shots)


def test_resample_seeded():
    _, data, _ = synthetic()
    assert np.array_equal(resample_dataset(data, 5).frequencies, resample_dataset(data, 5).frequencies)
    assert not np.array_equal(resample_dataset(data, 5).frequencies, resample_dataset(data, 6).frequencies)


def test_resample_needs_shots():
    ch = extract_kraus(sample_cue(4, 0), 1, 1)
    exact = generate_synthetic_dataset(ch, SpamModel.ideal(2), all_modes(1), None)
    with pytest.raises(ValueError):
        resample_dataset(exact)


@pytest.mark.parametrize("values, expected", [([5, 5, 5], 0.0), ([0, 2], 2.0), ([1, 2, 3], 1.0)])
def test_variance_examples(values, expected):
    assert bootstrap_variance(values) == pytest.approx(expected)


def test_variance_needs_two():
    with pytest.raises(ValueError):
        bootstrap_variance([1.0])


@pytest.mark.parametrize("s2, err", [([4], 2.0), ([0, 0, 0], 0.0), ([1, 1, 1, 1], 0.5)])
def test_aggregate_error_examples(s2, err):
    assert aggregate_error(s2) == pytest.approx(err)


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(st.lists(finite, min_size=2, max_size=30))
def test_variance_matches_numpy(values):
    assert bootstrap_variance(values) == pytest.approx(np.var(values, ddof=1), rel=1e-9, abs=1e-9)


@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=30))
def test_aggregate_error_formula(s2):
    assert aggregate_error(s2) == pytest.approx(np.sqrt(np.sum(s2)) / len(s2))


@given(st.integers(0, 2**32 - 1))
def test_resample_keeps_shots_and_normalization(seed):
    modes = sample_modes(1, 6, seed=0)
    f = np.random.default_rng(seed).dirichlet(np.ones(2), size=6)
    f = np.round(f * 50) / 50
    f[:, 1] = 1 - f[:, 0]
    res = resample_dataset(ShotDataset(1, modes, f, 50), seed)
    assert np.allclose(res.frequencies.sum(axis=1), 1)
    assert np.allclose(res.frequencies * 50, np.round(res.frequencies * 50))
    # outcomes with zero empirical frequency are never drawn
    assert np.all(res.frequencies[f == 0] == 0)


def test_aggregate_error_empty():
    with pytest.raises(ValueError):
        aggregate_error([])


def test_aggregate_report():
    a = BootstrapEnsemble("mean_r", np.array([0.1, 0.3]), estimate=0.2)
    b = BootstrapEnsemble("mean_r", np.array([0.5, 0.5]), estimate=0.6)
    rep = aggregate([a, b])
    assert rep.mean == pytest.approx(0.4)
    assert rep.err == pytest.approx(np.sqrt(0.02) / 2)
    doc = json.loads(rep.to_json())
    assert set(doc) == {"F_name", "mean", "err", "N_B", "N_E", "member_values"}
    assert doc["N_E"] == 2 and doc["N_B"] == 2
    with pytest.raises(ValueError):
        aggregate([a, BootstrapEnsemble("other", np.array([1.0, 2.0]))])


def test_run_bootstrap_reproducible():
    _, data, spam_data = synthetic(n=1, modes=all_modes(1))
    cfg = FitConfig(iterations=50, learning_rate=1e-2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        a = run_bootstrap(data, spam_data, lambda ch: float(np.trace(ch.superoperator()).real), 3, cfg, seed=11, keep_channels=True)
        b = run_bootstrap(data, spam_data, lambda ch: float(np.trace(ch.superoperator()).real), 3, cfg, seed=11)
    assert np.array_equal(a.member_values, b.member_values)
    assert len(set(a.seeds)) == 3
    assert all(ch.trace_preservation_error() < 1e-10 for ch in a.channels)
    with pytest.raises(ValueError):
        run_bootstrap(data, spam_data, "mean_r", 1, cfg)
    with pytest.raises(ValueError):
        run_bootstrap(data, spam_data, "median_r", 2, cfg)


@pytest.mark.slow
def test_coverage_of_mean_r():
    # 25 independent synthetic experiments at default fit settings; F +- 2 err
    # should cover the true <r> in at least 80% of them
    hits = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for k in range(25):
            ch, data, spam_data = synthetic(n=2, shots=3000, seed=100 + 10 * k, modes=all_modes(2))
            est = mean_r(fit(data, spam_data, FitConfig(seed=k)).channel)
            ens = run_bootstrap(data, spam_data, "mean_r", 10, FitConfig(), seed=k)
            hits += abs(est - mean_r(ch)) <= 2 * aggregate_error([ens.variance])
    print(f"coverage {hits}/25")
    assert hits >= 20
