"""Fatigue-modulated synaptic efficacy and trace-based STDP.

A synapse carries a long-term weight ``w`` in [0, 1] and a short-term fatigue
level ``f`` in [0, 1].  What a presynaptic spike delivers to the neuron is the
efficacy ``w * (1 - f)``.  Fatigue jumps by a fixed amount on every
presynaptic spike and relaxes exponentially, so a spike that follows closely
on the previous one is transmitted at reduced strength, while a spike after a
long silence is transmitted at full weight.

The long-term weight follows additive pair-based STDP with all-to-all pairing,
realised with exponential traces.  Time differences follow the convention
``delta_t = t_pre - t_post``: negative values (pre before post) potentiate,
positive values depress.  A same-step coincidence counts as causal, because
the engine delivers presynaptic spikes before it tests the threshold.

On top of the pair terms, every postsynaptic spike lowers all weights by
``a_post``.  This non-Hebbian term does not depend on the presynaptic rate.
Without it, plain additive STDP cannot fail in the way rate-dominated input
makes it fail; see ``KernelParams``.

Anti-Hebbian learning is the same machinery with the signs of ``a_plus`` and
``a_minus`` swapped.  It is not exposed.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .exceptions import InvalidInputError

__all__ = [
    "Mode",
    "KernelParams",
    "FatigueParams",
    "PlasticityConfig",
    "SynapseState",
    "STDPTraces",
    "efficacy",
    "fatigue_decay",
    "fatigue_on_pre_spike",
    "stdp_kernel",
    "kernel_asymmetry",
    "kernel_grid_sum",
    "on_pre_spike_update",
    "on_post_spike_update",
    "trace_weight_updates",
    "pairwise_weight_updates",
]


class Mode(str, Enum):
    STDP = "stdp"
    FSTDP = "fstdp"


def _clamp01(x):
    return np.clip(x, 0.0, 1.0)


@dataclass(frozen=True)
class KernelParams:
    """Double-exponential STDP kernel plus a per-postsynaptic-spike offset.

    Parameters
    ----------
    a_plus, tau_plus : float
        Potentiation amplitude and window (time steps).
    a_minus, tau_minus : float
        Depression amplitude and window (time steps).
    a_post : float
        Weight decrement applied to every synapse on each postsynaptic spike.

    The defaults balance the kernel on the step grid: with ``a_minus =
    a_plus * exp(1 / tau)`` the discrete sums of both lobes cancel, so
    uncorrelated pre/post pairs leave weights unchanged on average while the
    continuous integral stays negative.
    """

    a_plus: float = 0.01
    a_minus: float = 0.0165
    tau_plus: float = 2.0
    tau_minus: float = 2.0
    a_post: float = 0.001

    def __post_init__(self):
        if not (self.a_plus > 0 and self.a_minus > 0):
            raise InvalidInputError("a_plus and a_minus must be positive")
        if not (self.tau_plus > 0 and self.tau_minus > 0):
            raise InvalidInputError("tau_plus and tau_minus must be positive")
        if not self.a_post >= 0:
            raise InvalidInputError("a_post must be non-negative")
        eps = kernel_asymmetry(self)
        if not eps < 0:
            raise InvalidInputError(
                f"kernel must be depression-dominated (asymmetry {eps:g} >= 0)"
            )


@dataclass(frozen=True)
class FatigueParams:
    """Spike-triggered fatigue: ``f += jump`` per spike, decay with ``tau_f`` steps."""

    jump: float = 1.0
    tau_f: float = 5.0
    clamp: bool = True

    def __post_init__(self):
        if not self.jump >= 0:
            raise InvalidInputError("fatigue jump must be >= 0")
        if not self.tau_f > 0:
            raise InvalidInputError("tau_f must be positive")


@dataclass(frozen=True)
class PlasticityConfig:
    """Learning rule: kernel, fatigue and mode.

    ``Mode.STDP`` is FSTDP with a zero fatigue jump, and the two are kept
    consistent: STDP requires ``fatigue.jump == 0`` and FSTDP requires it to be
    positive.  Use :meth:`with_mode` to switch.
    """

    kernel: KernelParams = field(default_factory=KernelParams)
    fatigue: FatigueParams = field(default_factory=FatigueParams)
    mode: Mode = Mode.FSTDP
    initial_weight: float = 0.5
    post_trace: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.mode is Mode.STDP and self.fatigue.jump != 0:
            raise InvalidInputError("STDP mode requires fatigue.jump == 0")
        if self.mode is Mode.FSTDP and self.fatigue.jump == 0:
            raise InvalidInputError("FSTDP mode requires fatigue.jump > 0")
        if not 0.0 <= self.initial_weight <= 1.0:
            raise InvalidInputError("initial_weight must lie in [0, 1]")
        if not self.post_trace >= 0:
            raise InvalidInputError("post_trace must be non-negative")

    def with_mode(self, mode, jump=1.0):
        """Copy switched to ``mode``; FSTDP gets ``jump`` if fatigue is off."""
        mode = Mode(mode)
        if mode is Mode.STDP:
            return replace(self, mode=mode, fatigue=replace(self.fatigue, jump=0.0))
        fatigue = self.fatigue
        if fatigue.jump == 0:
            fatigue = replace(fatigue, jump=jump)
        return replace(self, mode=mode, fatigue=fatigue)


@dataclass(frozen=True)
class SynapseState:
    """Weight, fatigue and presynaptic trace.  Fields may be scalars or arrays."""

    w: object
    f: object = 0.0
    pre_trace: object = 0.0

    def __post_init__(self):
        w, f, pre = (np.asarray(x, dtype=float) for x in (self.w, self.f, self.pre_trace))
        if np.any((w < 0) | (w > 1)):
            raise InvalidInputError("w must lie in [0, 1]")
        if np.any((f < 0) | (f > 1)):
            raise InvalidInputError("f must lie in [0, 1]")
        if np.any(pre < 0):
            raise InvalidInputError("pre_trace must be non-negative")


def efficacy(s):
    """Transmitted strength ``w * (1 - f)``; equals ``w`` without fatigue."""
    return s.w * (1.0 - s.f)


def fatigue_decay(s, p, steps):
    if steps < 0:
        raise InvalidInputError("steps must be >= 0")
    return replace(s, f=s.f * np.exp(-steps / p.tau_f))


def fatigue_on_pre_spike(s, p):
    f = s.f + p.jump
    if p.clamp:
        f = np.minimum(1.0, f)
    return replace(s, f=f)


def stdp_kernel(delta_t, k):
    """Weight change for one pre/post pair, ``delta_t = t_pre - t_post`` in steps."""
    dt = np.asarray(delta_t, dtype=float)
    with np.errstate(over="ignore"):
        pot = k.a_plus * np.exp(np.minimum(dt, 0.0) / k.tau_plus)
        dep = -k.a_minus * np.exp(-np.maximum(dt, 0.0) / k.tau_minus)
    out = np.where(dt <= 0, pot, dep)
    return out if out.ndim else float(out)


def kernel_asymmetry(k):
    """Integral of the continuous kernel, ``a_plus*tau_plus - a_minus*tau_minus``."""
    return k.a_plus * k.tau_plus - k.a_minus * k.tau_minus


def kernel_grid_sum(k):
    """Sum of the kernel over integer lags, the quantity the engine actually sees.

    The potentiation lobe includes lag 0, so this can be positive even when
    :func:`kernel_asymmetry` is negative.
    """
    xp = np.exp(-1.0 / k.tau_plus)
    xm = np.exp(-1.0 / k.tau_minus)
    return k.a_plus / (1.0 - xp) - k.a_minus * xm / (1.0 - xm)


def on_pre_spike_update(s, post_trace, k):
    if np.any(np.asarray(post_trace) < 0):
        raise InvalidInputError("post_trace must be non-negative")
    return replace(s, w=_clamp01(s.w - k.a_minus * post_trace), pre_trace=s.pre_trace + 1.0)


def on_post_spike_update(s, post_trace, k):
    """Potentiate every synapse against its presynaptic trace.

    Returns the updated synapses and the incremented postsynaptic trace.
    """
    w = _clamp01(s.w + k.a_plus * np.asarray(s.pre_trace) - k.a_post)
    return replace(s, w=w), post_trace + 1.0


class STDPTraces:
    """All-to-all pairing traces shared by the engine and by offline replay.

    The methods return weight increments and leave applying (and clamping)
    them to the caller.
    """

    def __init__(self, n_channels, kernel, post_trace=0.0):
        self.kernel = kernel
        self.pre = np.zeros(n_channels)
        self.post = float(post_trace)
        self._dp = np.exp(-1.0 / kernel.tau_plus)
        self._dm = np.exp(-1.0 / kernel.tau_minus)

    def decay(self):
        self.pre *= self._dp
        self.post *= self._dm

    def on_pre(self, idx):
        """Depression for channels ``idx`` spiking now; bumps their traces."""
        dw = -self.kernel.a_minus * self.post
        self.pre[idx] += 1.0
        return dw

    def on_post(self):
        """Potentiation increments for every channel; bumps the post trace."""
        dw = self.kernel.a_plus * self.pre - self.kernel.a_post
        self.post += 1.0
        return dw


def trace_weight_updates(pre, post, k):
    """Replay spike trains through the traces and sum the increments, unclamped.

    ``pre`` is a channel x step binary array, ``post`` a binary train.  The
    per-step order matches the simulation engine.
    """
    pre = np.asarray(pre, dtype=bool)
    post = np.asarray(post, dtype=bool)
    if pre.ndim != 2 or post.shape != (pre.shape[1],):
        raise InvalidInputError("pre must be channels x steps and post must match its length")
    traces = STDPTraces(pre.shape[0], k)
    total = np.zeros(pre.shape[0])
    for t in range(pre.shape[1]):
        traces.decay()
        idx = np.flatnonzero(pre[:, t])
        if idx.size:
            total[idx] += traces.on_pre(idx)
        if post[t]:
            total += traces.on_post()
    return total


def pairwise_weight_updates(pre, post, k):
    """Brute-force reference: sum the kernel over every pre/post pair.

    Includes the ``a_post`` offset once per postsynaptic spike.  Terms are
    summed exactly (``math.fsum``) because potentiation and depression can
    cancel to a small fraction of their gross size.
    """
    pre = np.asarray(pre, dtype=bool)
    t_post = np.flatnonzero(np.asarray(post, dtype=bool))
    out = np.zeros(pre.shape[0])
    for i in range(pre.shape[0]):
        terms = [stdp_kernel(float(tp - tq), k) for tp in np.flatnonzero(pre[i]) for tq in t_post]
        out[i] = math.fsum(terms + [-k.a_post] * t_post.size)
    return out
