"""Rate-level predictions of whether a channel group will be learned.

A presynaptic spike on channel ``i`` can only be credited with causing a
postsynaptic spike if it is the spike that tips the membrane over threshold.
The model here estimates that probability as a product of two factors:

``q_i = R_i / sum_j R_j``
    the share of all input events that come from channel ``i``;
``p_i = (G_i + n_i) / v_th``
    the chance that such an event brings the neuron to threshold under a
    linear membrane, where ``G_i`` is the efficacy of the spike and ``n_i``
    the coincident drive from other channels (nonzero only for correlated
    channels).

Without fatigue ``G_i = w`` regardless of rate, so the causal probability
grows with rate and frequent uncorrelated channels win.  With fatigue,
``G_i = w * (1 - E[F](R_i))`` shrinks as the rate grows and the causal
probability peaks at an intermediate rate.  Learning of the correlated
group is predicted when the causal probability of an uncorrelated exemplar
is below that of a correlated one.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

import numpy as np

from .exceptions import DegenerateConditionError, InvalidInputError
from .plasticity import FatigueParams, Mode

__all__ = [
    "TheoryParams",
    "FatigueEstimate",
    "LearningVerdict",
    "q_i",
    "expected_fatigue",
    "mean_fatigue",
    "p_i",
    "causal_P",
    "learning_condition",
    "estimate_n_coinc",
    "rate_sweep",
    "reference_theory_params",
]


@dataclass(frozen=True)
class TheoryParams:
    """Inputs to the causal-probability model.

    ``rates`` in Hz, ``dt`` in seconds.  ``w`` is the weight assumed on every
    synapse; ``n_coinc`` the coincident drive credited to correlated channels.
    """

    rates: Tuple[float, ...]
    v_th: float
    dt: float = 0.1
    w: float = 0.5
    n_coinc: float = 0.0
    fatigue: FatigueParams = field(default_factory=FatigueParams)
    correlated_set: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(self, "correlated_set", tuple(sorted(int(i) for i in self.correlated_set)))
        r = np.array(self.rates)
        if r.size == 0:
            raise InvalidInputError("need at least one channel")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise InvalidInputError("rates must be finite and non-negative")
        if np.any(r * self.dt > 1 + 1e-12):
            raise InvalidInputError("rate * dt exceeds 1 for some channel")
        if not self.v_th > 0:
            raise InvalidInputError("v_th must be positive")
        if not self.n_coinc >= 0:
            raise InvalidInputError("n_coinc must be non-negative")
        if not self.dt > 0:
            raise InvalidInputError("dt must be positive")
        if not 0 <= self.w <= 1:
            raise InvalidInputError("w must lie in [0, 1]")
        if any(not 0 <= i < r.size for i in self.correlated_set):
            raise InvalidInputError("correlated_set index out of range")

    @property
    def n_channels(self):
        return len(self.rates)

    def is_correlated(self, i):
        return i in self.correlated_set


class FatigueEstimate(NamedTuple):
    """Stationary mean of the pre-spike fatigue level.

    ``monte_carlo`` is the simulated time average; ``closed_form`` the
    unclamped linear-response value ``jump * p * x / (1 - x)`` with
    ``x = exp(-1 / tau_f)`` and ``p = rate * dt``, which is only accurate
    while fatigue rarely reaches the clamp.
    """

    monte_carlo: float
    closed_form: float


class LearningVerdict(NamedTuple):
    ratio: float
    learns: bool


def q_i(params, i):
    """Share of the total input rate carried by channel ``i``."""
    r = np.array(params.rates)
    total = r.sum()
    if total <= 0:
        raise InvalidInputError("total input rate must be positive")
    return float(r[i] / total)


def _clamped_reset_mean(p, x):
    # with the clamp and jump >= 1 every spike resets F to 1, so the pre-spike
    # level is x**k, k = steps since the last spike ~ Geometric(p)
    p = np.asarray(p, dtype=float)
    return p * x / (1.0 - (1.0 - p) * x)


def _monte_carlo_fatigue(p, f, n_steps, seed):
    # one uniform stream shared by every rate (common random numbers), so a
    # sweep over rates gives a smooth curve
    p = np.atleast_1d(np.asarray(p, dtype=float))
    u = np.random.default_rng(seed).random(n_steps)
    x = np.exp(-1.0 / f.tau_f)
    level = np.zeros_like(p)
    acc = np.zeros_like(p)
    for k in range(n_steps):
        level *= x
        acc += level
        s = u[k] < p
        if s.any():
            level[s] += f.jump
            if f.clamp:
                np.minimum(level, 1.0, out=level)
    return acc / n_steps


def expected_fatigue(rate, dt, f, n_steps=100_000, seed=0):
    """Time-averaged pre-spike fatigue under Bernoulli(``rate * dt``) arrivals.

    Parameters
    ----------
    rate : float or array_like
        Hz.  Arrays are evaluated with common random numbers.
    dt : float
        Step length in seconds.
    f : FatigueParams
    n_steps, seed : int
        Monte Carlo length and seed.

    Returns
    -------
    FatigueEstimate
    """
    p = np.asarray(rate, dtype=float) * dt
    if np.any(p < 0) or np.any(p > 1 + 1e-12):
        raise InvalidInputError("rate * dt must lie in [0, 1]")
    p = np.clip(p, 0.0, 1.0)
    x = np.exp(-1.0 / f.tau_f)
    mc = _monte_carlo_fatigue(p, f, n_steps, seed)
    closed = f.jump * p * x / (1.0 - x)
    if p.ndim == 0:
        return FatigueEstimate(float(mc[0]), float(closed))
    return FatigueEstimate(mc, closed)


def mean_fatigue(rate, dt, f, n_steps=100_000, seed=0):
    """Stationary mean pre-spike fatigue, exact where a closed form exists.

    With the clamp and ``jump >= 1`` the value is exact.  Without fatigue it is
    zero.  Otherwise the Monte Carlo estimate is returned.
    """
    p = np.clip(np.asarray(rate, dtype=float) * dt, 0.0, 1.0)
    if f.jump == 0:
        out = np.zeros_like(p)
    elif f.clamp and f.jump >= 1:
        out = _clamped_reset_mean(p, np.exp(-1.0 / f.tau_f))
    else:
        out = _monte_carlo_fatigue(p, f, n_steps, seed)
        out = out.reshape(p.shape) if p.ndim else out[0]
    return float(out) if np.ndim(out) == 0 else out


def _n_i(params, i):
    return params.n_coinc if params.is_correlated(i) else 0.0


def p_i(params, i, mode, rate=None):
    """Probability that a spike on channel ``i`` brings the neuron to threshold.

    ``rate`` overrides the channel's own rate (used by :func:`rate_sweep`).
    """
    mode = Mode(mode)
    r = params.rates[i] if rate is None else rate
    g = params.w
    if mode is Mode.FSTDP:
        g = params.w * (1.0 - mean_fatigue(r, params.dt, params.fatigue))
    return float(np.clip((g + _n_i(params, i)) / params.v_th, 0.0, 1.0))


def causal_P(params, i, mode, rate=None):
    """``q_i * p_i`` for channel ``i``; ``rate`` overrides its rate."""
    if rate is None:
        q = q_i(params, i)
    else:
        others = sum(params.rates) - params.rates[i]
        q = rate / (others + rate) if others + rate > 0 else 0.0
    if q == 0:
        return 0.0
    return float(q * p_i(params, i, mode, rate))


def learning_condition(params, mode):
    """Ratio of causal probabilities, uncorrelated over correlated exemplar.

    The exemplars are the lowest-indexed channel of each group.  ``learns`` is
    true when the ratio is below 1.

    Raises
    ------
    DegenerateConditionError
        One of the groups is empty, or the correlated exemplar has zero
        causal probability.
    """
    corr = params.correlated_set
    uncorr = [i for i in range(params.n_channels) if i not in set(corr)]
    if not corr or not uncorr:
        raise DegenerateConditionError("need both correlated and uncorrelated channels")
    pc = causal_P(params, corr[0], mode)
    if pc == 0:
        raise DegenerateConditionError("correlated exemplar has zero causal probability")
    ratio = causal_P(params, uncorr[0], mode) / pc
    return LearningVerdict(float(ratio), bool(ratio < 1))


def estimate_n_coinc(n_correlated, c, w, mean_f=0.0):
    """Expected coincident drive seen by one correlated channel.

    Under the mixing construction a shared event is copied to each of the
    other ``n_correlated - 1`` channels with probability ``sqrt(c)``; each
    copy lands with efficacy ``w * (1 - mean_f)``.
    """
    if n_correlated < 1:
        raise InvalidInputError("n_correlated must be >= 1")
    if not 0 <= c < 1:
        raise InvalidInputError("c must lie in [0, 1)")
    return float((n_correlated - 1) * np.sqrt(c) * w * (1.0 - mean_f))


def rate_sweep(params, i, rates, modes=(Mode.STDP, Mode.FSTDP)):
    """Curve data: vary channel ``i``'s rate, hold the others fixed.

    Returns a list of dicts with keys ``rate``, ``mode``, ``q``, ``p`` and
    ``causal_P``, one per (mode, rate) point.
    """
    others = sum(params.rates) - params.rates[i]
    rows = []
    for mode in modes:
        mode = Mode(mode)
        for r in np.asarray(rates, dtype=float):
            q = r / (others + r) if others + r > 0 else 0.0
            p = p_i(params, i, mode, r)
            rows.append({"rate": float(r), "mode": mode.value, "q": float(q), "p": p, "causal_P": float(q * p)})
    return rows


def reference_theory_params(mode, v_th=10.0, w=0.5, fatigue=None, dt=0.1):
    """Ten 1 Hz correlated channels (c = 0.1) and ninety 5 Hz independent ones.

    ``n_coinc`` is estimated for ``mode``: fatigue lowers the efficacy of the
    coincident copies at 1 Hz.  The ratio test does not depend on ``v_th``
    unless ``p_i`` saturates.
    """
    mode = Mode(mode)
    fatigue = FatigueParams() if fatigue is None else fatigue
    mf = mean_fatigue(1.0, dt, fatigue) if mode is Mode.FSTDP else 0.0
    return TheoryParams(
        rates=tuple([1.0] * 10 + [5.0] * 90),
        v_th=v_th,
        dt=dt,
        w=w,
        n_coinc=estimate_n_coinc(10, 0.1, w, mf),
        fatigue=fatigue,
        correlated_set=tuple(range(10)),
    )
