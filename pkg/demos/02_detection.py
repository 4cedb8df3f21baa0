"""
Detecting a misbehaving relay
=============================

The source compares the empirical CDF of what comes back, split by its own
symbol, with the CDF it would see from an honest relay. A threshold is
calibrated on honest runs and applied to several attacks.
"""

import numpy as np

from relaydetect import attacks, channel, detector, quantizer
from relaydetect.empirics import cond_cdf_matrix, maliciousness_R

grid = quantizer.choose_grid(2.0)
n = 100_000

# 1% false-alarm threshold from 200 honest blocks
profile = detector.calibrate_threshold(channel.ChannelModel(), grid, n, 200, 0.99, seed=3)
print(f"calibrated tau = {profile.tau:.5f}")

behaviours = {
    "honest": attacks.Identity(),
    "sign flip": attacks.SignFlip(),
    "resample marginal": attacks.ResampleMarginal(),
    "offset 0.5": attacks.AdditiveOffset(0.5),
    "garble 1% with sign flip": attacks.PartialGarble(0.01, attacks.SignFlip()),
}

# the resampling attack keeps the relay's output marginal intact, so an
# observer who ignores X1 cannot see it; conditioning on X1 can
for name, b in behaviours.items():
    res = [detector.run_detection(grid, n, b, profile.tau, seed=1000 + k) for k in range(20)]
    rate = np.mean([r.attacked for r in res])
    print(f"{name:26s} mean D = {np.mean([r.d for r in res]):.5f}   flagged {rate:.0%}")

# R measures how far the relay's kernel is from forwarding; it needs u,
# which only the relay sees, so it is a diagnostic rather than a detector
b = channel.sample_batch(n, seed=5)
for name, beh in behaviours.items():
    v = attacks.apply_attack(b.u, beh, seed=6)
    print(f"{name:26s} R = {maliciousness_R(cond_cdf_matrix(v, b.u, grid), grid):9.3f}")
