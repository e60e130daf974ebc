import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fstdp.analytics import normalized_cov, off_diagonal
from fstdp.core import SpikeRaster
from fstdp.datagen import (
    ProcessSpec,
    empirical_correlation,
    generate_correlated_binary,
    generate_weatherlike,
    mixing_parameters,
    reference_synthetic_spec,
)
from fstdp.exceptions import InvalidSpecError, UndefinedCorrelationError


def exact_mixing_stats(mu, a, b):
    # enumerate the mother state: P(X=1 | M=1) and P(X=1 | M=0) = b
    h1 = 1 - (1 - a) * (1 - b)
    p = mu * h1 + (1 - mu) * b
    joint = mu * h1**2 + (1 - mu) * b**2
    return p, (joint - p * p) / (p * (1 - p))


@pytest.mark.parametrize("p,c", [(0.1, 0.1), (0.1, 0.05), (0.03, 0.3), (0.3, 0.5), (0.2, 0.9), (0.01, 0.001)])
def test_mixing_parameters_exact(p, c):
    mu, a, b = mixing_parameters(p, c)
    assert a == pytest.approx(np.sqrt(c))
    assert 0 <= mu <= 1 and 0 <= b < 1
    p_hat, c_hat = exact_mixing_stats(mu, a, b)
    assert p_hat == pytest.approx(p, rel=1e-12)
    assert c_hat == pytest.approx(c, rel=1e-9)


def test_mixing_parameters_reference_values():
    # hand solution of 0.91 mu^2 - (0.9 + 0.2 sqrt(0.1)) mu + 0.1 = 0, smaller root
    mu, a, b = mixing_parameters(0.1, 0.1)
    qb = 0.9 + 0.2 * np.sqrt(0.1)
    mu_ref = (qb - np.sqrt(qb**2 - 4 * 0.91 * 0.1)) / (2 * 0.91)
    assert mu_ref == pytest.approx(0.116677, abs=1e-6)
    assert mu == pytest.approx(mu_ref, rel=1e-12)
    assert b == pytest.approx(1 - 0.9 / (1 - mu_ref * np.sqrt(0.1)), rel=1e-12)


def test_mixing_unreachable():
    with pytest.raises(InvalidSpecError):
        mixing_parameters(0.5, 0.1)
    # p below sqrt(c) is not sufficient: no real root here
    with pytest.raises(InvalidSpecError):
        mixing_parameters(0.5, 0.3)
    with pytest.raises(InvalidSpecError):
        mixing_parameters(0.0, 0.1)
    assert mixing_parameters(0.2, 0.0) == (0.0, 0.0, 0.2)


@pytest.mark.parametrize("c", [0.0, 0.05, 0.1, 0.3])
def test_generated_correlation_matches_c(c):
    spec = ProcessSpec(n_channels=6, n_steps=100_000, rates=(1.0,) * 6, correlated_set=(0, 1, 2, 3), c=c, seed=11)
    r = generate_correlated_binary(spec)
    pairs = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    for i, j in pairs:
        assert empirical_correlation(r, i, j) == pytest.approx(c, abs=0.02)
    # channels outside the correlated set stay independent of it
    assert abs(empirical_correlation(r, 0, 5)) < 0.02


def test_independent_pairs_within_three_sigma():
    spec = ProcessSpec(n_channels=4, n_steps=100_000, rates=(1.0, 5.0, 3.0, 5.0), seed=2)
    r = generate_correlated_binary(spec)
    sigma = 1 / np.sqrt(spec.n_steps)
    for i in range(4):
        for j in range(i + 1, 4):
            assert abs(empirical_correlation(r, i, j)) < 3 * sigma


def test_marginals_within_three_standard_errors():
    spec = reference_synthetic_spec(seed=4)
    r = generate_correlated_binary(spec)
    p = spec.probabilities
    se = np.sqrt(p * (1 - p) / spec.n_steps)
    assert np.all(np.abs(r.events.mean(axis=1) - p) < 3 * se)


def test_reproducible_and_seed_sensitive():
    spec = reference_synthetic_spec(n_steps=2000, seed=9)
    assert generate_correlated_binary(spec) == generate_correlated_binary(spec)
    other = reference_synthetic_spec(n_steps=2000, seed=10)
    assert generate_correlated_binary(spec) != generate_correlated_binary(other)


def test_appending_channels_keeps_existing_streams():
    a = ProcessSpec(n_channels=3, n_steps=500, rates=(1.0, 1.0, 4.0), correlated_set=(0, 1), c=0.2, seed=5)
    b = ProcessSpec(n_channels=5, n_steps=500, rates=(1.0, 1.0, 4.0, 2.0, 3.0), correlated_set=(0, 1), c=0.2, seed=5)
    ra, rb = generate_correlated_binary(a), generate_correlated_binary(b)
    np.testing.assert_array_equal(ra.events, rb.events[:3])


def test_spec_validation():
    with pytest.raises(InvalidSpecError):
        ProcessSpec(n_channels=2, n_steps=10, rates=(1.0, 0.0))
    with pytest.raises(InvalidSpecError):
        ProcessSpec(n_channels=2, n_steps=10, rates=(11.0, 1.0))
    with pytest.raises(InvalidSpecError):
        ProcessSpec(n_channels=2, n_steps=10, rates=(1.0, 1.0), c=1.0)
    with pytest.raises(InvalidSpecError):
        ProcessSpec(n_channels=2, n_steps=10, rates=(1.0, 2.0), correlated_set=(0, 1), c=0.1)
    with pytest.raises(InvalidSpecError):
        ProcessSpec(n_channels=2, n_steps=10, rates=(1.0, 1.0), correlated_set=(0, 2), c=0.1)
    # correlation unreachable at this rate: p = 0.5 >= sqrt(0.1)
    spec = ProcessSpec(n_channels=2, n_steps=10, rates=(5.0, 5.0), correlated_set=(0, 1), c=0.1)
    with pytest.raises(InvalidSpecError):
        generate_correlated_binary(spec)


def test_scalar_rate_broadcasts():
    spec = ProcessSpec(n_channels=3, n_steps=10, rates=2.0)
    assert spec.rates == (2.0, 2.0, 2.0)


# -- empirical_correlation --------------------------------------------------

def test_empirical_correlation_examples():
    rng = np.random.default_rng(0)
    r = SpikeRaster(rng.random((2, 100_000)) < 0.3)
    assert empirical_correlation(r, 0, 0) == 1.0
    assert abs(empirical_correlation(r, 0, 1)) < 0.01
    alt = SpikeRaster(np.array([[1, 0] * 50, [0, 1] * 50]))
    assert empirical_correlation(alt, 0, 1) == pytest.approx(-1.0, abs=1e-15)


def test_zero_variance_raises():
    r = SpikeRaster(np.array([[0, 0, 0, 0], [1, 0, 1, 0], [1, 1, 1, 1]]))
    with pytest.raises(UndefinedCorrelationError):
        empirical_correlation(r, 0, 1)
    with pytest.raises(UndefinedCorrelationError):
        empirical_correlation(r, 1, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(20, 300))
def test_correlation_symmetric(seed, n):
    rng = np.random.default_rng(seed)
    ev = rng.random((2, n)) < 0.4
    ev[:, 0] = [True, False]
    ev[:, 1] = [False, True]
    r = SpikeRaster(ev)
    assert empirical_correlation(r, 0, 1) == empirical_correlation(r, 1, 0)


# -- weather-like -----------------------------------------------------------

def test_weatherlike_shape_and_labels():
    r, lab = generate_weatherlike(seed=0)
    assert r.shape == (205, 4344)
    assert lab.shape == (205,) and lab.sum() == 58 and lab[:58].all()
    rates = r.events.mean(axis=1)
    assert rates[lab].mean() == pytest.approx(0.03, abs=0.005)
    assert rates[~lab].mean() == pytest.approx(0.12, abs=0.005)


def test_weatherlike_without_correlation_has_no_block():
    r, lab = generate_weatherlike(c=0.0, seed=1)
    nc = normalized_cov(r).values
    block = nc[np.ix_(lab, lab)][~np.eye(lab.sum(), dtype=bool)]
    assert abs(block.mean() - 1.0) < 0.05
    assert abs(off_diagonal(nc).mean() - 1.0) < 0.05


def test_weatherlike_validation():
    with pytest.raises(InvalidSpecError):
        generate_weatherlike(p_scarce=0.2, p_frequent=0.1)
    with pytest.raises(InvalidSpecError):
        generate_weatherlike(n_scarce_correlated=0)
