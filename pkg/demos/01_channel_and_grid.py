"""
The channel and its quantization grid
=====================================

The relay hears U = X1 + X2 + N with BPSK symbols and noise density
proportional to exp(-x^2). This script samples a block, checks it against
the closed forms, and shows how the grid is sized from the posterior tails.
"""

import numpy as np

from relaydetect import channel, quantizer

# one block of 100k uses, reproducible from its seed
batch = channel.sample_batch(100_000, seed=1)
noise = batch.u - batch.x1 - batch.x2
print(f"noise variance  {noise.var():.4f}  (model 0.5)")

# the empirical CDF of U given X1=+1 hugs the erfc closed form
t = np.array([-1.0, 0.0, 1.0, 2.0, 3.0])
emp = [(batch.u[batch.x1 == 1] <= ti).mean() for ti in t]
print("F(t | +1)       empirical", np.round(emp, 4))
print("                model    ", np.round(channel.cond_cdf_u(t, 1), 4))

# the posterior saturates quickly: beyond |u| = beta1 the relay's output
# says almost nothing new about X1
for u in (0.0, 1.0, 2.0, 3.0):
    print(f"P(X1=+1 | u={u:+.0f}) = {channel.posterior(1, u):.5f}")

# xi is the posterior mass left in each tail beyond +-beta1; the grid gets
# just enough cells that one cell's worth of mass, 1/(n'-2), is about xi
for beta1 in (2.0, 3.0, 4.0):
    g = quantizer.choose_grid(beta1)
    xi = quantizer.xi_values(beta1).max()
    print(f"beta1={beta1:g}: xi={xi:.6g}  n'={g.n_prime}  step={g.step:.6g}")

# every sample falls in exactly one bin, 1-based, with the open outer bins
g = quantizer.choose_grid(2.0)
idx = quantizer.quantize(batch.u, g)
counts = np.bincount(idx, minlength=g.n_prime + 1)[1:]
print("bin occupancy   min", counts.min(), " max", counts.max(), " total", counts.sum())
