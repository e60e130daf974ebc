"""Discrete-time leaky integrate-and-fire neuron and the simulation engine.

One raster column is one time step of ``SimClock.dt`` seconds.  EPSPs are
instantaneous: a spike delivered at step t moves the membrane at step t.
Each step runs, in this order:

1. decay fatigue and STDP traces;
2. read efficacies from the pre-jump fatigue;
3. deliver presynaptic spikes, jump their fatigue, apply pre-spike depression;
4. leak, integrate and test the threshold;
5. on a spike, reset and apply potentiation.

Weights are clamped to [0, 1] after every update.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import CalibrationError, DimensionError, InvalidInputError
from .plasticity import STDPTraces

logger = logging.getLogger(__name__)

__all__ = [
    "SimClock",
    "NeuronConfig",
    "NeuronState",
    "SpikeRaster",
    "SimResult",
    "integrate_step",
    "run_simulation",
    "pilot_rate",
    "calibrate_threshold",
]


@dataclass
class SimClock:
    dt: float = 0.1
    t: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidInputError("dt must be positive")
        if self.t < 0:
            raise InvalidInputError("t must be non-negative")

    def tick(self, n=1):
        self.t += n


@dataclass(frozen=True)
class NeuronConfig:
    """LIF parameters.  ``tau_m`` is in time steps."""

    v_th: float
    tau_m: float = 2.0
    v_reset: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.v_th) or not self.v_th > self.v_reset:
            raise InvalidInputError("v_th must be finite and exceed v_reset")
        if not self.tau_m > 0:
            raise InvalidInputError("tau_m must be positive")


@dataclass(frozen=True)
class NeuronState:
    v: float = 0.0
    last_fire_step: Optional[int] = None


class SpikeRaster:
    """Binary channel x step event matrix.

    Stored as ``uint8``; ``events[i, t] == 1`` marks an event on channel ``i``
    at step ``t``.
    """

    __slots__ = ("events",)

    def __init__(self, events):
        ev = np.asarray(events)
        if ev.ndim != 2:
            raise DimensionError("raster must be two-dimensional (channels x steps)")
        if ev.shape[0] < 1 or ev.shape[1] < 1:
            raise DimensionError("raster needs at least one channel and one step")
        if ev.dtype != bool and not np.isin(ev, (0, 1)).all():
            raise InvalidInputError("raster entries must be 0 or 1")
        self.events = ev.astype(np.uint8)

    @property
    def n_channels(self):
        return self.events.shape[0]

    @property
    def n_steps(self):
        return self.events.shape[1]

    @property
    def shape(self):
        return self.events.shape

    def rates(self, dt=1.0):
        """Per-channel mean event rate (events per ``dt`` unit)."""
        return self.events.mean(axis=1) / dt

    def head(self, n_steps):
        return SpikeRaster(self.events[:, :n_steps])

    def __eq__(self, other):
        return isinstance(other, SpikeRaster) and np.array_equal(self.events, other.events)

    def __repr__(self):
        return f"SpikeRaster(n_channels={self.n_channels}, n_steps={self.n_steps})"


@dataclass
class SimResult:
    output_spikes: np.ndarray
    final_weights: np.ndarray
    output_rate: float
    rng_seed: int
    dt: float
    weight_trajectory: Optional[np.ndarray] = None
    trajectory_steps: Optional[np.ndarray] = None
    v_th: Optional[float] = None

    @property
    def n_output_spikes(self):
        return int(self.output_spikes.sum())

    def __eq__(self, other):
        if not isinstance(other, SimResult):
            return NotImplemented
        arrays = ("output_spikes", "final_weights", "weight_trajectory", "trajectory_steps")
        return all(
            np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays
        ) and (self.output_rate, self.rng_seed, self.dt, self.v_th) == (
            other.output_rate,
            other.rng_seed,
            other.dt,
            other.v_th,
        )


def integrate_step(state, cfg, drive):
    """Leak, add ``drive`` and test the threshold.  Returns ``(state, fired)``."""
    if not np.isfinite(drive):
        raise InvalidInputError("drive must be finite")
    if drive < 0:
        raise InvalidInputError("drive must be non-negative")
    if not np.isfinite(state.v):
        raise InvalidInputError("membrane potential must be finite")
    v = state.v * np.exp(-1.0 / cfg.tau_m) + drive
    if v >= cfg.v_th:
        return NeuronState(v=cfg.v_reset, last_fire_step=state.last_fire_step), True
    return NeuronState(v=v, last_fire_step=state.last_fire_step), False


def _active_lists(raster):
    # per-step arrays of spiking channel indices
    steps, chans = np.nonzero(raster.events.T)
    bounds = np.searchsorted(steps, np.arange(raster.n_steps + 1))
    return [chans[bounds[t] : bounds[t + 1]] for t in range(raster.n_steps)]


def run_simulation(
    raster,
    neuron,
    rule,
    clock=None,
    seed=0,
    *,
    initial_weights=None,
    record_every=None,
):
    """Drive one LIF neuron with ``raster`` through plastic synapses.

    Parameters
    ----------
    raster : SpikeRaster
    neuron : NeuronConfig
    rule : PlasticityConfig
    clock : SimClock, optional
        Defaults to ``SimClock()`` (100 ms steps).  Advanced in place.
    seed : int
        Recorded in the result.  The engine itself draws no random numbers,
        so identical inputs always give identical results.
    initial_weights : array_like, optional
        Overrides ``rule.initial_weight`` per channel.
    record_every : int, optional
        Store the weight vector every ``record_every`` steps (and at the end).

    Returns
    -------
    SimResult
    """
    clock = SimClock() if clock is None else clock
    n = raster.n_channels
    if initial_weights is None:
        w = np.full(n, rule.initial_weight)
    else:
        w = np.array(initial_weights, dtype=float)
        if w.shape != (n,):
            raise DimensionError(f"initial_weights has shape {w.shape}, raster has {n} channels")
        if np.any((w < 0) | (w > 1)):
            raise InvalidInputError("initial weights must lie in [0, 1]")
    if record_every is not None and record_every < 1:
        raise InvalidInputError("record_every must be >= 1")

    fat = rule.fatigue
    decay_f = np.exp(-1.0 / fat.tau_f)
    leak = np.exp(-1.0 / neuron.tau_m)
    f = np.zeros(n)
    traces = STDPTraces(n, rule.kernel, rule.post_trace)
    v = 0.0
    v_th, v_reset = neuron.v_th, neuron.v_reset

    out = np.zeros(raster.n_steps, dtype=np.uint8)
    traj, traj_steps = [], []
    for t, idx in enumerate(_active_lists(raster)):
        # (1) decay
        traces.decay()
        f *= decay_f
        drive = 0.0
        if idx.size:
            # (2) efficacy from pre-jump fatigue, (3) deliver
            drive = float(np.sum(w[idx] * (1.0 - f[idx])))
            f[idx] += fat.jump
            if fat.clamp:
                np.minimum(f, 1.0, out=f)
            w[idx] = np.clip(w[idx] + traces.on_pre(idx), 0.0, 1.0)
        # (4) integrate
        v = v * leak + drive
        if v >= v_th:
            # (5) reset and potentiate
            v = v_reset
            out[t] = 1
            np.clip(w + traces.on_post(), 0.0, 1.0, out=w)
        if record_every is not None and (t + 1) % record_every == 0:
            traj.append(w.copy())
            traj_steps.append(t + 1)
        clock.tick()

    if record_every is not None and (not traj_steps or traj_steps[-1] != raster.n_steps):
        traj.append(w.copy())
        traj_steps.append(raster.n_steps)

    rate = out.sum() / (raster.n_steps * clock.dt)
    return SimResult(
        output_spikes=out,
        final_weights=w,
        output_rate=float(rate),
        rng_seed=int(seed),
        dt=clock.dt,
        weight_trajectory=np.array(traj) if record_every is not None else None,
        trajectory_steps=np.array(traj_steps) if record_every is not None else None,
        v_th=v_th,
    )


def _frozen_drive(raster, rule, weights):
    """Per-step input drive with weights held fixed (fatigue still active)."""
    ev = raster.events.astype(float)
    w = np.broadcast_to(np.asarray(weights, dtype=float), (raster.n_channels,))
    fat = rule.fatigue
    decay_f = np.exp(-1.0 / fat.tau_f)
    f = np.zeros(raster.n_channels)
    drive = np.empty(raster.n_steps)
    for t in range(raster.n_steps):
        f *= decay_f
        s = ev[:, t]
        drive[t] = np.dot(w * (1.0 - f), s)
        f += fat.jump * s
        if fat.clamp:
            np.minimum(f, 1.0, out=f)
    return drive


def _count_threshold_crossings(drive, v_th, leak, v_reset):
    v = 0.0
    count = 0
    for d in drive:
        v = v * leak + d
        if v >= v_th:
            v = v_reset
            count += 1
    return count


def pilot_rate(raster, neuron, rule, dt=0.1, weights=None):
    """Output rate (Hz) with plasticity switched off."""
    weights = rule.initial_weight if weights is None else weights
    drive = _frozen_drive(raster, rule, weights)
    n = _count_threshold_crossings(drive.tolist(), neuron.v_th, np.exp(-1.0 / neuron.tau_m), neuron.v_reset)
    return n / (raster.n_steps * dt)


def calibrate_threshold(
    raster_sample,
    neuron,
    rule,
    target_rate,
    dt=0.1,
    *,
    tolerance=0.2,
    max_iter=60,
):
    """Bisect ``v_th`` so a frozen-weight pilot run fires at ``target_rate`` Hz.

    ``neuron`` supplies the leak and reset; its ``v_th`` is ignored.  The
    returned threshold gives a pilot rate within ``tolerance`` (relative) of
    the target.

    Raises
    ------
    InvalidInputError
        Non-positive target or a sample shorter than 1000 steps.
    CalibrationError
        The target lies outside the rates reachable on this sample.
    """
    if not target_rate > 0:
        raise InvalidInputError("target_rate must be positive")
    if raster_sample.n_steps < 1000:
        raise InvalidInputError("calibration sample needs at least 1000 steps")

    drive = _frozen_drive(raster_sample, rule, rule.initial_weight)
    drive_list = drive.tolist()
    leak = np.exp(-1.0 / neuron.tau_m)
    duration = raster_sample.n_steps * dt

    def rate(v_th):
        return _count_threshold_crossings(drive_list, v_th, leak, neuron.v_reset) / duration

    # lowest useful threshold: anything above reset that the smallest positive drive reaches
    positive = drive[drive > 0]
    if positive.size == 0:
        raise CalibrationError("sample produces no input drive; no threshold can fire", (0.0, 0.0))
    lo = neuron.v_reset + 1e-9 * max(1.0, abs(neuron.v_reset))
    hi = neuron.v_reset + drive.sum() + 1.0
    r_lo, r_hi = rate(lo), rate(hi)
    if not (r_hi <= target_rate * (1 + tolerance) and r_lo >= target_rate * (1 - tolerance)):
        raise CalibrationError(
            f"target {target_rate:g} Hz outside achievable range [{r_hi:g}, {r_lo:g}] Hz",
            (r_hi, r_lo),
        )
    best = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r = rate(mid)
        err = abs(r - target_rate) / target_rate
        if best is None or err < best[0]:
            best = (err, mid, r)
        # aim well inside the accepted band, settle for the band if bisection stalls
        if err <= 0.05 or hi - lo <= 1e-12 * hi:
            break
        if r > target_rate:
            lo = mid
        else:
            hi = mid
    err, v_th, r = best
    if err > tolerance:
        raise CalibrationError(
            f"bisection did not reach {target_rate:g} Hz (closest {r:g} Hz)", (r_hi, r_lo)
        )
    logger.debug("calibrated v_th=%g (pilot %g Hz)", v_th, r)
    return float(v_th)
