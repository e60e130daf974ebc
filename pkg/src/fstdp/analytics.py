"""Coincidence statistics of event rasters and scoring of learned weights.

Two pairwise measures are provided.  The uncentered covariance
``E[X_i X_j]`` grows with the product of the channel rates, so frequent
channels dominate it.  The normalized covariance divides each channel by its
mean first::

    E[(X_i / E[X_i]) * (X_j / E[X_j])]

Independent channels score 1 whatever their rates; values above 1 indicate
excess coincidences.  Expectations are plug-in sample means over steps.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .exceptions import DimensionError, InvalidInputError

__all__ = [
    "CovMatrix",
    "SeparationReport",
    "uncentered_cov",
    "normalized_cov",
    "cov_with_mean_input",
    "separation_metrics",
    "off_diagonal",
]


@dataclass(frozen=True, eq=False)
class CovMatrix:
    """Symmetric channel x channel matrix.

    ``kind`` is ``"uncentered"`` or ``"normalized"``.  ``zero_rate`` flags
    channels without events (their rows are zero in the normalized matrix).
    """

    values: np.ndarray
    kind: str
    n_steps: int
    zero_rate: np.ndarray = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionError("covariance matrix must be square")
        if self.kind not in ("uncentered", "normalized"):
            raise InvalidInputError(f"unknown matrix kind {self.kind!r}")
        object.__setattr__(self, "values", v)
        zr = np.zeros(v.shape[0], dtype=bool) if self.zero_rate is None else np.asarray(self.zero_rate, dtype=bool)
        object.__setattr__(self, "zero_rate", zr)

    @property
    def n(self):
        return self.values.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, CovMatrix)
            and self.kind == other.kind
            and self.n_steps == other.n_steps
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class SeparationReport:
    gap: float
    auc: float
    mean_correlated: float
    mean_uncorrelated: float

    def as_dict(self):
        return {
            "gap": self.gap,
            "auc": self.auc,
            "mean_correlated": self.mean_correlated,
            "mean_uncorrelated": self.mean_uncorrelated,
        }


def _float_events(r):
    return r.events.astype(np.float64)


def _gram(x):
    # x is channels x steps; symmetrise to remove round-off asymmetry from BLAS
    g = x @ x.T / x.shape[1]
    return 0.5 * (g + g.T)


def uncentered_cov(r):
    """Entry ``(i, j)`` is the fraction of steps where both channels fire."""
    return CovMatrix(_gram(_float_events(r)), "uncentered", r.n_steps)


def normalized_cov(r, epsilon_rate=None):
    """Rate-normalized coincidence matrix.

    Parameters
    ----------
    r : SpikeRaster
    epsilon_rate : float, optional
        Floor on the per-step mean used as divisor.  Defaults to
        ``1 / n_steps``.  Channels with no events at all get zero rows and
        are flagged in ``zero_rate``; a ``RuntimeWarning`` is issued.
    """
    eps = 1.0 / r.n_steps if epsilon_rate is None else float(epsilon_rate)
    if not eps > 0:
        raise InvalidInputError("epsilon_rate must be positive")
    x = _float_events(r)
    mean = x.mean(axis=1)
    zero = mean == 0
    if zero.any():
        warnings.warn(f"{int(zero.sum())} channel(s) have no events", RuntimeWarning, stacklevel=2)
    scaled = x / np.maximum(mean, eps)[:, None]
    return CovMatrix(_gram(scaled), "normalized", r.n_steps, zero)


def cov_with_mean_input(r, normalized=False):
    """Score each channel against the across-channel mean signal.

    ``normalized=False`` gives ``E[X_i * m]`` with ``m(t)`` the mean of all
    channels at step ``t``; ``normalized=True`` divides both factors by their
    means first.  The channel's own contribution to ``m`` is kept.
    """
    if r.n_channels < 2:
        raise InvalidInputError("need at least two channels")
    x = _float_events(r)
    m = x.mean(axis=0)
    if normalized:
        mean = x.mean(axis=1)
        safe = np.where(mean > 0, mean, 1.0)
        mm = m.mean()
        if mm == 0:
            return np.zeros(r.n_channels)
        return np.where(mean > 0, (x @ m) / r.n_steps / (safe * mm), 0.0)
    return (x @ m) / r.n_steps


def off_diagonal(m):
    """Off-diagonal entries of a square matrix (row-major order)."""
    v = m.values if isinstance(m, CovMatrix) else np.asarray(m)
    return v[~np.eye(v.shape[0], dtype=bool)]


def separation_metrics(weights, labels):
    """Gap and ROC AUC of ``weights`` against boolean ``labels``.

    The AUC is the Mann-Whitney rank statistic with ties split evenly, so it
    equals the probability that a random correlated channel outweighs a
    random uncorrelated one.
    """
    w = np.asarray(weights, dtype=float).ravel()
    lab = np.asarray(labels).ravel()
    if w.shape != lab.shape:
        raise DimensionError(f"{w.size} weights but {lab.size} labels")
    if not np.isin(lab, (0, 1)).all():
        raise InvalidInputError("labels must be boolean")
    lab = lab.astype(bool)
    n1 = int(lab.sum())
    n0 = lab.size - n1
    if n1 == 0 or n0 == 0:
        raise InvalidInputError("labels must contain both classes")
    ranks = rankdata(w)
    auc = (ranks[lab].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0)
    return SeparationReport(
        gap=float(w[lab].min() - w[~lab].max()),
        auc=float(auc),
        mean_correlated=float(w[lab].mean()),
        mean_uncorrelated=float(w[~lab].mean()),
    )
