"""
Numerical checks of the theory
==============================

The detector works because this channel cannot be imitated by any relay
kernel. These checks evaluate the quantities behind that claim.
"""

import numpy as np

from relaydetect import analysis, quantizer
from relaydetect.channel import cond_cdf_u, cond_pdf_u, noise_pdf

# two windows of X2 + N shifted by 2 carry different mass, so no kernel can
# make +1 look like -1
w = analysis.non_manip_witness(0.0, 2.0)
print(f"witness: lhs={w.lhs:.4f} rhs={w.rhs:.4f} gap={w.gap:.4f}")

# M measures how badly a grid kernel misreproduces the channel CDF; it is 0
# at the identity kernel W0 and bounded below away from it
grid = quantizer.choose_grid(2.0)
print(f"M(W0) = {analysis.M_functional(analysis.W0(grid), grid):.3g}")
for delta in (0.1, 1.0, 5.0):
    est = analysis.estimate_lambda(grid, delta, budget=2000, seed=0)
    print(f"lambda(delta={delta:g}) <= {est.value:.4g}   ({est.probes} probes)")

# with one conditioning symbol the infimum collapses: every row set to the
# channel CDF reproduces it exactly while sitting far from W0
F = np.tile(cond_cdf_u(grid.thresholds, 1), (grid.n_prime, 1))
print(f"single-symbol M at a far kernel: {analysis.M_functional(F, grid, symbols=(1,)):.3g}")

# the posterior range within a bin shrinks fast as the grid refines
for beta1 in (2.0, 3.0, 4.0):
    g = quantizer.choose_grid(beta1)
    d = analysis.delta_F_max(g)
    print(f"beta1={beta1:g}: dFmax={d:.4g}  (b-a)^2 n' dFmax={(2 * beta1) ** 2 * g.n_prime * d:.4g}")

# a second noisy hop does not destroy identifiability: the convolved laws
# still differ, and equal laws deconvolve back to equal laws
x, step = analysis.tabulation_grid()
res = analysis.deconvolution_check(cond_pdf_u(x, 1), cond_pdf_u(x, -1), noise_pdf(x), step)
print(f"after a noisy hop the two conditionals differ by {res.forward_difference:.4f}")
same = analysis.deconvolution_check(cond_pdf_u(x, 1), cond_pdf_u(x, 1), noise_pdf(x), step)
print(f"identical inputs recover to within {same.recovered_difference:.2g}")
