"""Synthetic binary event streams with controlled pairwise correlation.

Correlated channels are built by mixing.  A hidden mother process fires
with probability ``mu`` per step.  Each correlated channel copies a mother
event with probability ``sqrt(c)`` and adds independent background events
with probability ``b``::

    X_i(t) = (M(t) and A_i(t)) or B_i(t)

For two such channels with equal marginal ``p``,

    cov(X_i, X_j) = (1 - b)**2 * mu * c * (1 - mu)

``mu`` and ``b`` are solved so that the marginal is exactly ``p`` and the
Pearson coefficient is exactly ``c``.  Not every ``(p, c)`` pair is
reachable: strong correlation needs a low per-step probability.

Every channel and the mother process draws from its own child of a
``numpy.random.SeedSequence``, so appending channels leaves the existing
ones untouched.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .core import SpikeRaster
from .exceptions import InvalidSpecError, UndefinedCorrelationError

__all__ = [
    "ProcessSpec",
    "mixing_parameters",
    "generate_correlated_binary",
    "empirical_correlation",
    "generate_weatherlike",
    "reference_synthetic_spec",
]


@dataclass(frozen=True)
class ProcessSpec:
    """Family of binary processes.

    ``rates`` are in Hz; one step lasts ``dt`` seconds, so channel ``i`` fires
    with probability ``rates[i] * dt`` per step.
    """

    n_channels: int
    n_steps: int
    rates: Tuple[float, ...]
    dt: float = 0.1
    correlated_set: Tuple[int, ...] = ()
    c: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in np.broadcast_to(self.rates, (self.n_channels,))))
        object.__setattr__(self, "correlated_set", tuple(sorted(int(i) for i in self.correlated_set)))
        if self.n_channels < 1 or self.n_steps < 1:
            raise InvalidSpecError("n_channels and n_steps must be positive")
        if not self.dt > 0:
            raise InvalidSpecError("dt must be positive")
        if not 0.0 <= self.c < 1.0:
            raise InvalidSpecError(f"c must lie in [0, 1), got {self.c}")
        p = np.array(self.rates) * self.dt
        if np.any(np.array(self.rates) <= 0):
            raise InvalidSpecError("rates must be positive")
        if np.any(p > 1):
            raise InvalidSpecError("rate * dt exceeds 1 for some channel")
        cs = self.correlated_set
        if len(set(cs)) != len(cs) or any(not 0 <= i < self.n_channels for i in cs):
            raise InvalidSpecError("correlated_set must hold distinct valid channel indices")
        if cs and len({self.rates[i] for i in cs}) != 1:
            raise InvalidSpecError("correlated channels must share one rate")

    @property
    def probabilities(self):
        return np.array(self.rates) * self.dt

    @property
    def labels(self):
        lab = np.zeros(self.n_channels, dtype=bool)
        lab[list(self.correlated_set)] = True
        return lab


def mixing_parameters(p, c):
    """Mother probability, copy probability and background probability.

    Returns ``(mu, a, b)`` with ``a = sqrt(c)`` such that channels built by
    the mixing rule have marginal ``p`` and pairwise Pearson coefficient ``c``.
    """
    if not 0 < p < 1:
        raise InvalidSpecError(f"per-step probability must lie in (0, 1), got {p}")
    if not 0 <= c < 1:
        raise InvalidSpecError(f"c must lie in [0, 1), got {c}")
    if c == 0:
        return 0.0, 0.0, p
    a = np.sqrt(c)
    # the marginal fixes (1 - b) = (1 - p) / (1 - mu a); the pair covariance then
    # reduces to mu (1 - mu) (1 - p) = p (1 - mu a)^2, a quadratic in mu
    qa = p * c + 1.0 - p
    qb = 1.0 - p + 2.0 * p * a
    disc = qb * qb - 4.0 * qa * p
    if disc >= 0:
        for mu in sorted(((qb - np.sqrt(disc)) / (2 * qa), (qb + np.sqrt(disc)) / (2 * qa))):
            # b >= 0 requires mu <= p / a
            if 0.0 < mu <= min(1.0, p / a):
                b = 1.0 - (1.0 - p) / (1.0 - mu * a)
                return float(mu), float(a), float(max(b, 0.0))
    raise InvalidSpecError(f"correlation {c} unreachable at per-step probability {p}")


def _streams(seed, n_channels):
    ss = np.random.SeedSequence(seed)
    mother, *children = ss.spawn(n_channels + 1)
    return np.random.default_rng(mother), [np.random.default_rng(s) for s in children]


def generate_correlated_binary(spec):
    """Raster for ``spec``; correlated channels share one mother process."""
    mother_rng, rngs = _streams(spec.seed, spec.n_channels)
    p = spec.probabilities
    events = np.empty((spec.n_channels, spec.n_steps), dtype=bool)
    corr = set(spec.correlated_set)
    if corr:
        mu, a, b = mixing_parameters(p[spec.correlated_set[0]], spec.c)
    mother = mother_rng.random(spec.n_steps) < mu if corr else None
    for i, rng in enumerate(rngs):
        if i in corr:
            copy = rng.random(spec.n_steps) < a
            background = rng.random(spec.n_steps) < b
            events[i] = (mother & copy) | background
        else:
            events[i] = rng.random(spec.n_steps) < p[i]
    return SpikeRaster(events)


def empirical_correlation(r, i, j):
    """Pearson coefficient of channels ``i`` and ``j`` over all steps."""
    x = r.events[i].astype(float)
    y = r.events[j].astype(float)
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(np.dot(xc, xc))
    sy = np.sqrt(np.dot(yc, yc))
    if sx == 0 or sy == 0:
        raise UndefinedCorrelationError(f"channel {i if sx == 0 else j} has zero variance")
    if i == j:
        return 1.0
    # symmetric by construction: product and norms commute
    return float(np.dot(xc, yc) / (sx * sy))


def generate_weatherlike(
    n_scarce_correlated=58,
    n_frequent_uncorrelated=147,
    p_scarce=0.03,
    p_frequent=0.12,
    c=0.3,
    n_steps=4344,
    seed=0,
):
    """Scarce-but-correlated plus frequent-but-independent streams.

    The first ``n_scarce_correlated`` channels form the correlated group.
    Probabilities are per step (one step = one hour in the rainfall setting).

    Returns
    -------
    raster : SpikeRaster
    labels : numpy.ndarray of bool
        True for the scarce correlated channels.
    """
    if not (0 < p_scarce < p_frequent <= 1):
        raise InvalidSpecError("need 0 < p_scarce < p_frequent <= 1")
    if n_scarce_correlated < 1 or n_frequent_uncorrelated < 0:
        raise InvalidSpecError("group sizes must be positive")
    n = n_scarce_correlated + n_frequent_uncorrelated
    rates = [p_scarce] * n_scarce_correlated + [p_frequent] * n_frequent_uncorrelated
    spec = ProcessSpec(
        n_channels=n,
        n_steps=n_steps,
        rates=tuple(rates),
        dt=1.0,
        correlated_set=tuple(range(n_scarce_correlated)),
        c=c,
        seed=seed,
    )
    return generate_correlated_binary(spec), spec.labels


def reference_synthetic_spec(n_steps=100_000, seed=0, dt=0.1):
    """100 channels: 10 correlated at 1 Hz (c = 0.1), 90 independent at 5 Hz."""
    return ProcessSpec(
        n_channels=100,
        n_steps=n_steps,
        rates=tuple([1.0] * 10 + [5.0] * 90),
        dt=dt,
        correlated_set=tuple(range(10)),
        c=0.1,
        seed=seed,
    )
