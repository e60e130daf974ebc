import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fstdp.exceptions import DegenerateConditionError, InvalidInputError
from fstdp.plasticity import FatigueParams, Mode
from fstdp.theory import (
    TheoryParams,
    causal_P,
    estimate_n_coinc,
    expected_fatigue,
    learning_condition,
    mean_fatigue,
    p_i,
    q_i,
    rate_sweep,
    reference_theory_params,
)

X = math.exp(-1 / 5)


def brute_fatigue(p, tau_f, jump, n_steps, seed):
    # oracle: scalar loop, pre-spike level averaged over every step
    u = np.random.default_rng(seed).random(n_steps).tolist()
    x = math.exp(-1 / tau_f)
    f = acc = 0.0
    for k in range(n_steps):
        f *= x
        acc += f
        if u[k] < p:
            f = min(1.0, f + jump)
    return acc / n_steps


# -- q_i --------------------------------------------------------------------

def test_q_examples():
    params = reference_theory_params(Mode.STDP)
    assert q_i(params, 0) == pytest.approx(1 / 460, rel=1e-12)
    assert q_i(params, 10) == pytest.approx(5 / 460, rel=1e-12)
    assert sum(q_i(params, i) for i in range(100)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidInputError):
        q_i(TheoryParams(rates=(0.0, 0.0), v_th=1.0), 0)


# -- fatigue ----------------------------------------------------------------

def test_expected_fatigue_against_brute_force():
    est = expected_fatigue(5.0, 0.1, FatigueParams(), n_steps=200_000, seed=1)
    oracle = brute_fatigue(0.5, 5.0, 1.0, 1_000_000, seed=123)
    assert est.monte_carlo == pytest.approx(oracle, abs=0.01)
    exact = 0.5 * X / (1 - 0.5 * X)
    assert exact == pytest.approx(0.69310, abs=1e-5)
    assert oracle == pytest.approx(exact, abs=0.01)


def test_expected_fatigue_limits():
    f = FatigueParams()
    # the first step starts unfatigued, hence the 1/n_steps offset
    assert expected_fatigue(10.0, 0.1, f, n_steps=1000).monte_carlo == pytest.approx(X * 999 / 1000, rel=1e-12)
    assert expected_fatigue(0.0, 0.1, f, n_steps=1000).monte_carlo == 0.0
    assert mean_fatigue(10.0, 0.1, f) == pytest.approx(X, rel=1e-12)
    assert mean_fatigue(5.0, 0.1, f.__class__(jump=0.0)) == 0.0
    with pytest.raises(InvalidInputError):
        expected_fatigue(11.0, 0.1, f)


def test_closed_form_matches_in_linear_regime():
    # small jumps keep F far from the clamp, so the unclamped form is accurate
    f = FatigueParams(jump=0.05)
    est = expected_fatigue(1.0, 0.1, f, n_steps=200_000, seed=2)
    assert est.closed_form == pytest.approx(0.05 * 0.1 * X / (1 - X), rel=1e-12)
    assert est.monte_carlo == pytest.approx(est.closed_form, rel=0.05)
    assert mean_fatigue(1.0, 0.1, f) == pytest.approx(brute_fatigue(0.1, 5.0, 0.05, 200_000, 9), rel=0.05)


@pytest.mark.parametrize("rate", [0.5, 1.0, 3.0, 7.0])
def test_exact_mean_fatigue_against_brute_force(rate):
    assert mean_fatigue(rate, 0.1, FatigueParams()) == pytest.approx(
        brute_fatigue(rate * 0.1, 5.0, 1.0, 400_000, seed=int(rate * 10)), abs=0.01
    )


def test_fatigue_monotone_in_rate():
    rates = np.linspace(0.1, 10, 40)
    mc = expected_fatigue(rates, 0.1, FatigueParams(), n_steps=50_000).monte_carlo
    assert np.all(np.diff(mc) >= 0)
    assert np.all(np.diff(mean_fatigue(rates, 0.1, FatigueParams())) > 0)


# -- p_i --------------------------------------------------------------------

def test_p_examples():
    params = TheoryParams(rates=(1.0, 5.0), v_th=10.0, n_coinc=1.0, correlated_set=(0,))
    assert p_i(params, 1, Mode.STDP) == pytest.approx(0.05)
    assert p_i(params, 0, Mode.STDP) == pytest.approx(0.15)
    g5 = 0.5 * (1 - 0.5 * X / (1 - 0.5 * X))
    assert p_i(params, 1, Mode.FSTDP) == pytest.approx(g5 / 10, rel=1e-12)
    # saturates at 1
    assert p_i(TheoryParams(rates=(1.0,), v_th=0.1), 0, Mode.STDP) == 1.0


def test_p_fstdp_limit_at_full_rate():
    # discrete steps: at one spike per step the pre-spike fatigue is exactly e^{-1/tau_f}
    params = TheoryParams(rates=(10.0, 1.0), v_th=10.0, n_coinc=1.2, correlated_set=(0,))
    assert p_i(params, 0, Mode.FSTDP) == pytest.approx((0.5 * (1 - X) + 1.2) / 10, rel=1e-12)
    # with slow recovery the efficacy term vanishes and p tends to n / v_th
    slow = TheoryParams(rates=(10.0, 1.0), v_th=10.0, n_coinc=1.2, correlated_set=(0,), fatigue=FatigueParams(tau_f=200))
    assert p_i(slow, 0, Mode.FSTDP) == pytest.approx(1.2 / 10, abs=0.02)


def test_p_fstdp_below_stdp():
    params = reference_theory_params(Mode.FSTDP)
    for i in (0, 10):
        assert p_i(params, i, Mode.FSTDP) < p_i(params, i, Mode.STDP)


# -- rate sweeps ------------------------------------------------------------

SWEEP = np.linspace(0.2, 10, 50)


def test_stdp_sweep_monotone():
    rows = rate_sweep(reference_theory_params(Mode.STDP), 10, SWEEP, modes=[Mode.STDP])
    vals = [r["causal_P"] for r in rows]
    assert len(rows) == 50
    assert np.all(np.diff(vals) > 0)


def test_fstdp_sweep_rises_then_falls():
    # swept channel carries a sizeable share of the input
    params = TheoryParams(rates=(1.0,) * 10, v_th=10.0)
    rows = rate_sweep(params, 0, SWEEP, modes=[Mode.FSTDP])
    vals = np.array([r["causal_P"] for r in rows])
    k = int(vals.argmax())
    assert 0 < k < len(vals) - 1
    assert np.all(np.diff(vals[: k + 1]) > 0) and np.all(np.diff(vals[k:]) < 0)
    # oracle: maximise r/(9+r) * w * (1 - E[F](r)) / v_th on a fine grid
    fine = np.linspace(0.2, 10, 20_001)
    p = fine * 0.1
    curve = fine / (9 + fine) * 0.5 * (1 - p * X / (1 - (1 - p) * X)) / 10
    assert SWEEP[k] == pytest.approx(fine[curve.argmax()], abs=SWEEP[1] - SWEEP[0])
    assert fine[curve.argmax()] == pytest.approx(4.464, abs=0.001)


def test_fstdp_sweep_monotone_against_dense_background():
    # with ninety 5 Hz neighbours the channel's share stays nearly linear in rate
    rows = rate_sweep(reference_theory_params(Mode.FSTDP), 10, SWEEP, modes=[Mode.FSTDP])
    assert np.all(np.diff([r["causal_P"] for r in rows]) > 0)


def test_sweep_row_layout():
    rows = rate_sweep(reference_theory_params(Mode.STDP), 3, [1.0, 2.0])
    assert [r["mode"] for r in rows] == ["stdp", "stdp", "fstdp", "fstdp"]
    assert set(rows[0]) == {"rate", "mode", "q", "p", "causal_P"}
    for r in rows:
        assert r["causal_P"] == pytest.approx(r["q"] * r["p"], rel=1e-12)


def test_causal_override_matches_own_rate():
    params = reference_theory_params(Mode.FSTDP)
    assert causal_P(params, 10, Mode.FSTDP, rate=5.0) == pytest.approx(causal_P(params, 10, Mode.FSTDP), rel=1e-12)


# -- learning condition -----------------------------------------------------

def reference_ratio(mode):
    # independent evaluation of the reference setting
    w, v_th, s = 0.5, 10.0, math.sqrt(0.1)
    def att(p):
        return 1 - p * X / (1 - (1 - p) * X) if mode == "fstdp" else 1.0
    g1, g5 = w * att(0.1), w * att(0.5)
    n = 9 * s * g1
    return (5 / 460 * g5 / v_th) / (1 / 460 * (g1 + n) / v_th)


def test_learning_condition_reference():
    stdp = learning_condition(reference_theory_params(Mode.STDP), Mode.STDP)
    fstdp = learning_condition(reference_theory_params(Mode.FSTDP), Mode.FSTDP)
    assert stdp.ratio == pytest.approx(reference_ratio("stdp"), rel=1e-9)
    assert fstdp.ratio == pytest.approx(reference_ratio("fstdp"), rel=1e-9)
    assert stdp.ratio == pytest.approx(1.30004, abs=1e-5) and not stdp.learns
    assert fstdp.ratio == pytest.approx(0.57920, abs=1e-5) and fstdp.learns


def test_n_coinc_reference():
    assert estimate_n_coinc(10, 0.1, 0.5) == pytest.approx(1.42302, abs=1e-5)
    assert reference_theory_params(Mode.FSTDP).n_coinc == pytest.approx(0.98027, abs=1e-5)
    with pytest.raises(InvalidInputError):
        estimate_n_coinc(0, 0.1, 0.5)


def test_equal_rates():
    base = dict(rates=(2.0,) * 6, v_th=10.0, correlated_set=(0, 1, 2))
    for mode in (Mode.STDP, Mode.FSTDP):
        assert learning_condition(TheoryParams(n_coinc=0.3, **base), mode).learns
        v = learning_condition(TheoryParams(**base), mode)
        assert v.ratio == pytest.approx(1.0) and not v.learns


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0, 2))
def test_ratio_is_causal_quotient(rc, ru, n):
    params = TheoryParams(rates=(rc, ru), v_th=10.0, n_coinc=n, correlated_set=(0,))
    for mode in (Mode.STDP, Mode.FSTDP):
        v = learning_condition(params, mode)
        assert v.ratio == pytest.approx(causal_P(params, 1, mode) / causal_P(params, 0, mode), rel=1e-12)
        assert v.learns == (v.ratio < 1)


def test_degenerate_conditions():
    with pytest.raises(DegenerateConditionError):
        learning_condition(TheoryParams(rates=(1.0, 1.0), v_th=1.0), Mode.STDP)
    with pytest.raises(DegenerateConditionError):
        learning_condition(TheoryParams(rates=(1.0, 1.0), v_th=1.0, correlated_set=(0, 1)), Mode.STDP)
    with pytest.raises(DegenerateConditionError):
        learning_condition(TheoryParams(rates=(0.0, 1.0), v_th=1.0, correlated_set=(0,)), Mode.STDP)


def test_params_validation():
    for kw in (dict(rates=()), dict(rates=(-1.0,)), dict(rates=(11.0,)), dict(rates=(1.0,), v_th=0.0),
               dict(rates=(1.0,), correlated_set=(3,)), dict(rates=(1.0,), w=1.5)):
        kw.setdefault("v_th", 1.0)
        with pytest.raises(InvalidInputError):
            TheoryParams(**kw)
