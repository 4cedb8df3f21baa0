"""
Numerical checks of the detectability theory.

Covers the non-manipulability witness, the kernel-mismatch functional M and
its constrained infimum, the posterior-range bound that sizes the grid, the
finite-n convergence bound, and a Fourier deconvolution demonstration for a
noisy broadcast hop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression
from scipy.special import erfc

from .attacks import WMatrix
from .channel import PRIOR, cond_cdf_u, posterior
from .empirics import identity_kernel
from .quantizer import QuantizerGrid, bin_probabilities


# -- non-manipulability witness ------------------------------------------------


def _x2_plus_noise_cdf(x):
    # X2 + N: equal mixture of unit-erf Gaussians centred at +1 and -1
    x = np.asarray(x, dtype=float)
    return 0.25 * erfc(1.0 - x) + 0.25 * erfc(-1.0 - x)


@dataclass(frozen=True)
class WitnessReport:
    a: float
    b: float
    lhs: float  # Pr(a+1 < X2+N < b+1)
    rhs: float  # Pr(a-1 < X2+N < b-1)

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)


def non_manip_witness(a: float, b: float) -> WitnessReport:
    """
    Compare the two window probabilities of X2 + N.

    Any (a, b) with unequal sides certifies that no attack kernel can
    reproduce both input-conditioned output laws.
    """
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    F = _x2_plus_noise_cdf
    lhs = float(F(b + 1) - F(a + 1))
    rhs = float(F(b - 1) - F(a - 1))
    return WitnessReport(a=float(a), b=float(b), lhs=lhs, rhs=rhs)


# -- kernel functional ----------------------------------------------------------


def W0(grid: QuantizerGrid) -> WMatrix:
    """The identity kernel on the grid: w[i, j] = Phi(t_j - u_i)."""
    return WMatrix(identity_kernel(grid))


def _as_w(W, grid: QuantizerGrid) -> np.ndarray:
    if not isinstance(W, WMatrix):
        W = WMatrix(W)
    if W.n_prime != grid.n_prime:
        raise ValueError(f"W has {W.n_prime} rows, grid has n'={grid.n_prime}")
    return W.entries


def _normalize_symbols(symbols) -> tuple:
    if symbols in (1, -1):
        symbols = (symbols,)
    symbols = tuple(int(s) for s in symbols)
    if not symbols or any(s not in (1, -1) for s in symbols):
        raise ValueError("symbols must be a nonempty subset of (+1, -1)")
    return symbols


class _Mismatch:
    """Precomputed pieces of M for one grid and symbol set."""

    def __init__(self, grid: QuantizerGrid, symbols=(1,)):
        self.grid = grid
        self.symbols = _normalize_symbols(symbols)
        self.scale = (grid.beta1 - grid.alpha1) / (grid.n_prime - 2)
        self.p = np.stack([bin_probabilities(grid, s) for s in self.symbols])  # (S, n')
        self.F = np.stack([cond_cdf_u(grid.thresholds, s) for s in self.symbols])  # (S, n'-1)
        # per-column Hessian bound, for gradient steps
        self.lipschitz = 2 * self.scale * float((self.p**2).sum())

    def residual(self, W):
        # W: (..., n', n'-1) -> (..., S, n'-1)
        return self.F - np.einsum("si,...ij->...sj", self.p, W)

    def value(self, W):
        r = self.residual(W)
        return self.scale * (r**2).sum(axis=(-2, -1))

    def grad(self, W):
        r = self.residual(W)
        return -2 * self.scale * np.einsum("si,sj->ij", self.p, r)


def M_functional(W, grid: QuantizerGrid, symbols=(1,)) -> float:
    """
    Weighted squared mismatch between the channel CDF at the thresholds and
    the CDF induced by kernel ``W``::

        M = step * sum_s sum_j (F(t_j | s) - sum_i P(bin i | s) w[i, j])**2

    ``symbols`` selects the conditioning symbols summed over; (+1,) by default.
    """
    w = _as_w(W, grid)
    return float(_Mismatch(grid, symbols).value(w))


def max_kernel_distance(grid: QuantizerGrid) -> float:
    """Largest entrywise L1 distance from W0 reachable inside the kernel domain."""
    i = np.arange(1, grid.n_prime + 1)
    return float(np.maximum(i - 1, grid.n_prime - i).sum())


def _project_rows(W: np.ndarray) -> np.ndarray:
    out = np.empty_like(W)
    for k, row in enumerate(W):
        out[k] = isotonic_regression(row).x
    return np.clip(out, 0.0, 1.0)


def _random_kernels(rng, w0: np.ndarray, size: int) -> np.ndarray:
    n_rows, n_cols = w0.shape
    out = np.repeat(w0[None], size, axis=0)
    kind = rng.integers(0, 3, size=size)
    for b in range(size):
        if kind[b] == 0:
            out[b] = np.sort(rng.random((n_rows, n_cols)), axis=1)
        else:
            k = rng.integers(1, 4) if kind[b] == 1 else rng.integers(1, n_rows + 1)
            rows = rng.choice(n_rows, size=k, replace=False)
            out[b, rows] = np.sort(rng.random((k, n_cols)), axis=1)
    return out


def _descend(mm: _Mismatch, w0, S, W, delta, rng, steps):
    best_w, best_m = W, float(mm.value(W))
    eta = 1.0 / mm.lipschitz
    for _ in range(steps):
        cand = _project_rows(best_w - eta * mm.grad(best_w))
        d = float((S * (cand - w0)).sum())
        if d <= 0:
            eta *= 0.5
            continue
        if d < delta:
            cand = w0 + (delta / d) * (cand - w0)
            if (cand.min() < -1e-12 or cand.max() > 1 + 1e-12
                    or np.any(np.diff(cand, axis=1) < -1e-12)):
                eta *= 0.5
                continue
            cand = np.clip(cand, 0.0, 1.0)
        m = float(mm.value(cand))
        if m < best_m:
            best_w, best_m = cand, m
            eta *= 1.5
        else:
            eta *= 0.5
        if eta * mm.lipschitz < 1e-8:
            break
    return best_w, best_m


@dataclass(frozen=True)
class LambdaEstimate:
    value: float
    W: np.ndarray
    probes: int
    delta: float

    def __float__(self):
        return self.value


def estimate_lambda(
    grid: QuantizerGrid,
    delta: float,
    budget: int,
    seed: int,
    symbols=(1, -1),
    refine: int = 4,
    steps: int = 200,
) -> LambdaEstimate:
    """
    Randomized upper bound on inf M(W) over kernels at L1 distance >= delta
    from W0.

    Each of ``budget`` restarts draws a random monotone kernel (whole-matrix
    or a few rows replaced), pulls it along the segment towards W0 until its
    distance is exactly ``delta`` and evaluates M there. The ``refine`` best
    probes then get projected-gradient descent that keeps the distance
    constraint. The returned value is the smallest M seen at any feasible
    probed point, so it can only overestimate the infimum.

    ``symbols`` defaults to both conditioning symbols: with +1 alone the
    infimum is 0 for every reachable delta (a kernel whose rows all equal
    F(t_j | +1) has M = 0).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    dmax = max_kernel_distance(grid)
    if delta > dmax:
        raise ValueError(f"delta={delta} exceeds the largest reachable distance {dmax}")
    mm = _Mismatch(grid, symbols)
    w0 = identity_kernel(grid)
    S = 1.0 - 2.0 * w0  # on the domain, |W - W0|_1 = <S, W - W0>
    rng = np.random.default_rng(seed)

    # the per-row far extreme always reaches dmax; include it as probe 0
    i = np.arange(1, grid.n_prime + 1)
    far = np.where((i - 1 >= grid.n_prime - i)[:, None], 1.0, 0.0) * np.ones_like(w0)

    keep: list[tuple[float, np.ndarray]] = []
    probes = 0
    remaining = budget
    first = True
    while remaining > 0:
        size = min(remaining, 256)
        remaining -= size
        batch = _random_kernels(rng, w0, size)
        if first:
            batch[0] = far
            first = False
        dist = (S * (batch - w0)).sum(axis=(1, 2))
        ok = dist >= delta
        if not ok.any():
            continue
        scaled = w0 + (delta / dist[ok])[:, None, None] * (batch[ok] - w0)
        vals = mm.value(scaled)
        probes += int(ok.sum())
        for k in np.argsort(vals)[:refine]:
            keep.append((float(vals[k]), scaled[k]))
        keep.sort(key=lambda x: x[0])
        del keep[refine:]

    if not keep:
        raise RuntimeError("no probe reached the requested distance; increase budget")
    best_m, best_w = keep[0]
    for m, w in keep:
        w_ref, m_ref = _descend(mm, w0, S, w, delta, rng, steps)
        probes += 1
        if m_ref < best_m:
            best_m, best_w = m_ref, w_ref
    return LambdaEstimate(value=max(best_m, 0.0), W=best_w, probes=probes, delta=float(delta))


# -- posterior range bound --------------------------------------------------------


_INTERIOR = 32
_TAIL_SPAN = 8.0


def posterior_bin_ranges(grid: QuantizerGrid, x1: int) -> np.ndarray:
    """
    max - min of P(x1 | u) over each bin, from the bin endpoints plus 32
    interior points. The unbounded edge bins use the limiting posterior at
    -inf / +inf as their outer endpoint.
    """
    t = grid.thresholds
    frac = np.linspace(0.0, 1.0, _INTERIOR + 2)
    inner = t[:-1, None] + (t[1:] - t[:-1])[:, None] * frac[None, :]
    first = np.concatenate(([-np.inf], t[0] - _TAIL_SPAN * (1 - frac[:-1]), [t[0]]))
    last = np.concatenate(([t[-1]], t[-1] + _TAIL_SPAN * frac[1:], [np.inf]))
    out = np.empty(grid.n_prime)
    for k0 in range(0, len(inner), 20000):
        p = posterior(x1, inner[k0 : k0 + 20000])
        out[1 + k0 : 1 + k0 + len(p)] = p.max(axis=1) - p.min(axis=1)
    for idx, pts in ((0, first), (grid.n_prime - 1, last)):
        p = posterior(x1, pts)
        out[idx] = p.max() - p.min()
    return out


def delta_F_max(grid: QuantizerGrid) -> float:
    """Largest squared per-bin posterior range, over bins and both symbols."""
    return float(max(np.max(posterior_bin_ranges(grid, s)) ** 2 for s in (1, -1)))


# -- convergence bound ----------------------------------------------------------


@dataclass(frozen=True)
class ThetaInputs:
    mu: float
    n: int
    grid: QuantizerGrid
    eps: float
    p_typical: float
    p_atypical: float
    delta_f_max: float

    def __post_init__(self):
        if not (self.mu > 0 and self.eps > 0):
            raise ValueError("mu and eps must be positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        for name in ("p_typical", "p_atypical"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a probability")


def theta_bound(inp: ThetaInputs) -> float:
    """
    Upper bound on the probability that the grid-averaged CDF deviation
    exceeds ``mu``::

        4 (n'-1)^2 / (mu^2 (n'-2)^2) * ( n'^3 L^2 / n
                                         + L^2 n' dFmax / (P(A) (P(x) - eps)^2) )
        + n' P(not A)

    with L = beta1 - alpha1.
    """
    if inp.eps >= PRIOR:
        raise ValueError("eps must be below the symbol prior 0.5")
    if inp.p_typical == 0:
        raise ValueError("p_typical must be positive")
    g = inp.grid
    npr = g.n_prime
    L2 = (g.beta1 - g.alpha1) ** 2
    lead = 4 * (npr - 1) ** 2 / (inp.mu**2 * (npr - 2) ** 2)
    inner = npr**3 * L2 / inp.n + L2 * npr * inp.delta_f_max / (
        inp.p_typical * (PRIOR - inp.eps) ** 2
    )
    return float(lead * inner + npr * inp.p_atypical)


# -- deconvolution --------------------------------------------------------------


class IllConditionedDeconvolution(ValueError):
    pass


@dataclass(frozen=True)
class DeconvolutionResult:
    forward_difference: float  # max |a*noise - b*noise|
    recovered_difference: float  # max |deconv(a*noise) - deconv(b*noise)|
    retained_fraction: float  # share of the inputs' spectral energy kept by the cutoff
    coincide: bool  # convolved densities agree to within tolerance

    @property
    def difference(self) -> float:
        """Recovered difference when the convolved densities coincide, else the forward one."""
        return self.recovered_difference if self.coincide else self.forward_difference


def deconvolution_check(
    pdf_a,
    pdf_b,
    noise,
    grid_step: float,
    cutoff: float = 1e-8,
    atol: float = 1e-9,
) -> DeconvolutionResult:
    """
    Convolve two tabulated densities with a noise density, compare, then
    divide the noise transform back out and compare the recovered densities.

    All three arrays share one uniform grid of spacing ``grid_step``; the
    noise is tabulated centred on the middle sample. Frequencies where the
    noise transform falls below ``cutoff`` are discarded.
    """
    a = np.asarray(pdf_a, dtype=float)
    b = np.asarray(pdf_b, dtype=float)
    z = np.asarray(noise, dtype=float)
    if not (a.shape == b.shape == z.shape) or a.ndim != 1:
        raise ValueError("densities must be 1-d arrays on the same grid")
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    n = len(a)
    Z = np.fft.rfft(np.fft.ifftshift(z)) * grid_step
    A = np.fft.rfft(a)
    B = np.fft.rfft(b)
    conv_a, conv_b = A * Z, B * Z
    forward = float(np.max(np.abs(np.fft.irfft(conv_a - conv_b, n))))

    keep = np.abs(Z) >= cutoff
    # share of the inputs' spectrum that survives the cutoff
    energy = np.abs(A) ** 2 + np.abs(B) ** 2
    retained = float(energy[keep].sum() / energy.sum()) if energy.sum() > 0 else 1.0
    if retained < 0.6:
        raise IllConditionedDeconvolution(
            f"cutoff discards {100 * (1 - retained):.1f}% of the spectral energy"
        )
    inv = np.zeros_like(Z)
    inv[keep] = 1.0 / Z[keep]
    rec_a = np.fft.irfft(conv_a * inv, n)
    rec_b = np.fft.irfft(conv_b * inv, n)
    recovered = float(np.max(np.abs(rec_a - rec_b)))
    return DeconvolutionResult(
        forward_difference=forward,
        recovered_difference=recovered,
        retained_fraction=retained,
        coincide=forward <= atol,
    )


def tabulation_grid(n_points: int = 2**14, half_width: float = 12.5):
    """Uniform grid centred on 0 with ``n_points`` samples; returns (x, step)."""
    step = 2 * half_width / n_points
    x = (np.arange(n_points) - n_points // 2) * step
    return x, step
