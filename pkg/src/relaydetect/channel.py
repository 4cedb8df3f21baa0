"""
Binary-input Gaussian multiple-access channel U = X1 + X2 + N.

X1 and X2 are equiprobable BPSK symbols in {+1, -1}. The noise density is
proportional to exp(-x**2), i.e. a zero-mean Gaussian with variance 1/2, so
every CDF in this module reduces to the error function with unit scaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, expit

NOISE_VAR = 0.5
PRIOR = 0.5
_NORM = 1.0 / np.sqrt(np.pi)

SYMBOLS = (1, -1)


def check_symbol(s) -> int:
    """Return ``s`` as a plain int, raising ``ValueError`` unless it is +1 or -1."""
    if s not in (1, -1):
        raise ValueError(f"BPSK symbol must be +1 or -1, got {s!r}")
    return int(s)


def check_symbols(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.size and not np.all((x == 1) | (x == -1)):
        raise ValueError("BPSK sequence may only contain +1 and -1")
    return x.astype(np.int8, copy=False)


def noise_pdf(x):
    x = np.asarray(x, dtype=float)
    return _NORM * np.exp(-(x**2))


def _gauss_cdf(t, mean):
    # unit-scaled erf form; erfc keeps the lower tail accurate
    return 0.5 * erfc(mean - np.asarray(t, dtype=float))


def cond_pdf_u(x, x1: int):
    """Density of U given X1 = x1 (mixture of two Gaussians at 0 and 2*x1)."""
    x1 = check_symbol(x1)
    x = np.asarray(x, dtype=float)
    return 0.5 * _NORM * (np.exp(-((x - 2 * x1) ** 2)) + np.exp(-(x**2)))


def cond_cdf_u(t, x1: int):
    """CDF of U given X1 = x1, evaluated through the error function."""
    x1 = check_symbol(x1)
    return 0.5 * _gauss_cdf(t, 0.0) + 0.5 * _gauss_cdf(t, 2.0 * x1)


def marginal_pdf_u(x):
    return PRIOR * cond_pdf_u(x, 1) + PRIOR * cond_pdf_u(x, -1)


def marginal_cdf_u(t):
    return PRIOR * cond_cdf_u(t, 1) + PRIOR * cond_cdf_u(t, -1)


def posterior(x1: int, u):
    """
    Posterior probability P(X1 = x1 | U = u).

    Uses the two-term closed form

        P(+1|u) = 1/(2 + e^{4u-4} + e^{-4u-4}) + 1/(2 e^{4-4u} + 1 + e^{-8u})

    (and its mirror image for x1 = -1). The two terms sum to the logistic
    function of the log-likelihood ratio

        log (1 + e^{4u-4}) - log (1 + e^{-4u-4}),

    which is what is evaluated: it stays finite for any |u| and, unlike the
    two-term sum, is monotone in u even after rounding.
    """
    x1 = check_symbol(x1)
    u = np.asarray(u, dtype=float) * x1
    out = expit(np.logaddexp(0.0, 4 * u - 4) - np.logaddexp(0.0, -4 * u - 4))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class SampleBatch:
    """One transmission block: source symbols and the relay's observation."""

    x1: np.ndarray
    x2: np.ndarray
    u: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return len(self.u)


def sample_batch(n: int, seed: int) -> SampleBatch:
    """Draw ``n`` i.i.d. channel uses, reproducible from ``seed``."""
    if int(n) < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    x1 = (1 - 2 * rng.integers(0, 2, size=n)).astype(np.int8)
    x2 = (1 - 2 * rng.integers(0, 2, size=n)).astype(np.int8)
    noise = rng.normal(0.0, np.sqrt(NOISE_VAR), size=n)
    u = x1 + x2 + noise
    for a in (x1, x2, u):
        a.flags.writeable = False
    return SampleBatch(x1=x1, x2=x2, u=u, seed=int(seed))


def sample_marginal_u(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw from the unconditional law of U, independently of any source data."""
    s = (1 - 2 * rng.integers(0, 2, size=(2, n))).sum(axis=0)
    return s + rng.normal(0.0, np.sqrt(NOISE_VAR), size=n)


@dataclass(frozen=True)
class ChannelModel:
    """
    Immutable handle on the channel law.

    The noise variance and prior are fixed by the model; the class exists so
    that calibration and experiment code can be handed "the channel" as a
    value and stay agnostic of module-level functions.
    """

    noise_var: float = NOISE_VAR
    prior: float = PRIOR

    def __post_init__(self):
        if self.noise_var != NOISE_VAR or self.prior != PRIOR:
            raise ValueError("only the unit-erf noise (variance 1/2) with equal priors is supported")

    def pdf(self, x, x1: int):
        return cond_pdf_u(x, x1)

    def cdf(self, t, x1: int):
        return cond_cdf_u(t, x1)

    def posterior(self, x1: int, u):
        return posterior(x1, u)

    def sample(self, n: int, seed: int) -> SampleBatch:
        return sample_batch(n, seed)
