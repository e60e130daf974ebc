"""
Which spikes cause output spikes
================================

The share of input events a channel contributes grows with its rate.
Without fatigue each event lands with the full weight, so the chance of a
channel causing an output spike keeps rising.  With fatigue, frequent
spikes arrive weakened and the curve turns over.
"""

import numpy as np

from fstdp.plasticity import FatigueParams, Mode
from fstdp.theory import (
    TheoryParams,
    learning_condition,
    mean_fatigue,
    rate_sweep,
    reference_theory_params,
)

###############################################################################
# Mean fatigue seen by an arriving spike, as a function of rate.

for r in (0.5, 1.0, 2.0, 5.0, 10.0):
    print(f"{r:5.1f} Hz: E[F] = {mean_fatigue(r, 0.1, FatigueParams()):.3f}")

###############################################################################
# Sweep one channel among ten 1 Hz neighbours.

params = TheoryParams(rates=(1.0,) * 10, v_th=10.0)
rates = np.linspace(0.2, 10, 25)
rows = rate_sweep(params, 0, rates)
for mode in ("stdp", "fstdp"):
    curve = np.array([r["causal_P"] for r in rows if r["mode"] == mode])
    print(f"{mode:>5}: peak at {rates[curve.argmax()]:.2f} Hz, "
          f"value at 10 Hz is {curve[-1] / curve.max():.2f} of the peak")

###############################################################################
# Verdicts for the ten-correlated / ninety-frequent mixture.

for mode in (Mode.STDP, Mode.FSTDP):
    v = learning_condition(reference_theory_params(mode), mode)
    print(f"{mode.value:>5}: ratio {v.ratio:.3f}, correlated group learned: {v.learns}")
