import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fstdp.analytics import (
    CovMatrix,
    cov_with_mean_input,
    normalized_cov,
    off_diagonal,
    separation_metrics,
    uncentered_cov,
)
from fstdp.core import SpikeRaster
from fstdp.datagen import ProcessSpec, generate_correlated_binary, reference_synthetic_spec
from fstdp.exceptions import DimensionError, InvalidInputError


@pytest.fixture(scope="module")
def reference_raster():
    spec = reference_synthetic_spec(seed=0)
    return generate_correlated_binary(spec), spec.labels


def bernoulli(probs, n, seed):
    rng = np.random.default_rng(seed)
    return SpikeRaster(rng.random((len(probs), n)) < np.asarray(probs)[:, None])


def loop_uncentered(ev):
    # oracle: explicit per-pair sums
    n, T = ev.shape
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = sum(int(ev[i, t]) * int(ev[j, t]) for t in range(T)) / T
    return out


# -- uncentered -------------------------------------------------------------

def test_uncentered_matches_loop():
    r = bernoulli([0.2, 0.5, 0.7], 300, 1)
    np.testing.assert_allclose(uncentered_cov(r).values, loop_uncentered(r.events), rtol=1e-14)


def test_uncentered_examples():
    r = bernoulli([0.1, 0.5], 100_000, 2)
    m = uncentered_cov(r)
    assert m.kind == "uncentered" and m.n == 2
    assert m.values[0, 1] == pytest.approx(0.05, abs=0.003)
    np.testing.assert_array_equal(np.diag(m.values), r.events.mean(axis=1))


def test_uncentered_hides_correlations(reference_raster):
    r, lab = reference_raster
    u = uncentered_cov(r).values
    corr_pairs = u[np.ix_(lab, lab)][~np.eye(lab.sum(), dtype=bool)]
    high_pairs = u[np.ix_(~lab, ~lab)][~np.eye((~lab).sum(), dtype=bool)]
    assert high_pairs.max() > corr_pairs.max()
    assert np.median(high_pairs) > corr_pairs.max()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 6), st.integers(5, 200))
def test_matrices_symmetric_and_permutation_equivariant(seed, n, T):
    rng = np.random.default_rng(seed)
    ev = rng.random((n, T)) < rng.uniform(0.05, 0.9, n)[:, None]
    ev[:, 0] = True  # keep every channel non-empty
    r = SpikeRaster(ev)
    perm = rng.permutation(n)
    rp = SpikeRaster(ev[perm])
    for f in (uncentered_cov, normalized_cov):
        m = f(r).values
        assert np.array_equal(m, m.T)
        assert (m >= 0).all()
        np.testing.assert_allclose(f(rp).values, m[np.ix_(perm, perm)], rtol=1e-13)


def test_rate_sensitivity_of_uncentered():
    base = [0.1, 0.1]
    e1 = np.mean([uncentered_cov(bernoulli(base, 50_000, s)).values[0, 1] for s in range(4)])
    e3 = np.mean([uncentered_cov(bernoulli([0.3, 0.3], 50_000, s)).values[0, 1] for s in range(4)])
    assert e3 / e1 == pytest.approx(9.0, rel=0.1)


# -- normalized -------------------------------------------------------------

def test_normalized_examples():
    r = bernoulli([0.1, 0.1, 0.5], 100_000, 3)
    m = normalized_cov(r)
    assert m.kind == "normalized"
    assert np.abs(off_diagonal(m) - 1.0).max() < 0.05
    assert m.values[0, 0] == pytest.approx(1 / r.events[0].mean(), rel=1e-12)
    assert m.values[0, 0] == pytest.approx(10, rel=0.05)


def test_normalized_correlated_pair_closed_form():
    spec = ProcessSpec(n_channels=2, n_steps=100_000, rates=(1.0, 1.0), correlated_set=(0, 1), c=0.1, seed=8)
    m = normalized_cov(generate_correlated_binary(spec))
    p = 0.1
    assert 1 + 0.1 * (1 - p) / p == pytest.approx(1.9)
    assert m.values[0, 1] == pytest.approx(1.9, abs=0.1)


def test_normalized_rate_invariance():
    lo = np.mean([normalized_cov(bernoulli([0.02, 0.02], 100_000, s)).values[0, 1] for s in range(4)])
    hi = np.mean([normalized_cov(bernoulli([0.4, 0.4], 100_000, s)).values[0, 1] for s in range(4)])
    assert lo == pytest.approx(1.0, abs=0.05)
    assert hi == pytest.approx(1.0, abs=0.05)


def test_normalized_zero_rate_guard():
    ev = np.zeros((3, 50), dtype=bool)
    ev[0, ::2] = True
    ev[1, ::5] = True
    with pytest.warns(RuntimeWarning):
        m = normalized_cov(SpikeRaster(ev))
    assert m.zero_rate.tolist() == [False, False, True]
    assert not m.values[2].any() and not m.values[:, 2].any()
    assert np.isfinite(m.values).all()
    with pytest.raises(InvalidInputError):
        normalized_cov(SpikeRaster(ev), epsilon_rate=0.0)


def test_normalized_no_warning_when_all_active():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        normalized_cov(bernoulli([0.3, 0.4], 100, 0))


def test_cov_matrix_validation():
    with pytest.raises(DimensionError):
        CovMatrix(np.zeros((2, 3)), "normalized", 10)
    with pytest.raises(InvalidInputError):
        CovMatrix(np.zeros((2, 2)), "pearson", 10)


# -- scores against the mean input ------------------------------------------

def test_cov_with_mean_identical_channels():
    row = (np.arange(40) % 3 == 0)
    r = SpikeRaster(np.tile(row, (4, 1)))
    for norm in (False, True):
        s = cov_with_mean_input(r, norm)
        assert np.ptp(s) == 0.0
    # identical channels: E[X * m] = E[X] = 14/40; normalized gives 1/p
    assert cov_with_mean_input(r, False)[0] == pytest.approx(14 / 40)
    assert cov_with_mean_input(r, True)[0] == pytest.approx(40 / 14)


def test_cov_with_mean_reference_rankings(reference_raster):
    r, lab = reference_raster
    plain = cov_with_mean_input(r, normalized=False)
    norm = cov_with_mean_input(r, normalized=True)
    assert plain[~lab].min() > plain[lab].max()
    assert set(np.argsort(norm)[-10:]) == set(np.flatnonzero(lab))


def test_cov_with_mean_needs_two_channels():
    with pytest.raises(InvalidInputError):
        cov_with_mean_input(SpikeRaster(np.ones((1, 5))), True)


# -- separation -------------------------------------------------------------

def test_separation_examples():
    lab = np.array([1, 1, 0, 0, 0], bool)
    rep = separation_metrics([0.9, 0.9, 0.1, 0.1, 0.1], lab)
    assert rep.gap == pytest.approx(0.8) and rep.auc == 1.0
    assert rep.mean_correlated == pytest.approx(0.9) and rep.mean_uncorrelated == pytest.approx(0.1)
    assert separation_metrics(np.full(5, 0.4), lab).auc == 0.5
    assert separation_metrics([0.1, 0.1, 0.9, 0.9, 0.9], lab).auc == 0.0


def brute_auc(w, lab):
    pos, neg = w[lab], w[~lab]
    return np.mean([1.0 if a > b else 0.5 if a == b else 0.0 for a in pos for b in neg])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 30))
def test_auc_matches_pair_count_and_is_transform_invariant(seed, n):
    rng = np.random.default_rng(seed)
    w = np.round(rng.random(n), 1)
    lab = np.zeros(n, bool)
    lab[: max(1, n // 3)] = True
    rng.shuffle(lab)
    if lab.all():
        lab[0] = False
    auc = separation_metrics(w, lab).auc
    assert auc == pytest.approx(brute_auc(w, lab), abs=1e-12)
    assert 0.0 <= auc <= 1.0
    assert separation_metrics(np.exp(3 * w) - 7, lab).auc == pytest.approx(auc, abs=1e-12)


def test_separation_errors():
    with pytest.raises(InvalidInputError):
        separation_metrics([0.1, 0.2], [True, True])
    with pytest.raises(DimensionError):
        separation_metrics([0.1, 0.2, 0.3], [True, False])
    with pytest.raises(InvalidInputError):
        separation_metrics([0.1, 0.2], [2, 0])
