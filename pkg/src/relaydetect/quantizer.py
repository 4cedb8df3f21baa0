"""
Uniform quantization grid for the relay observation.

The grid has ``n_prime`` points. Points 1..n_prime-1 run uniformly from
``alpha1 = -beta1`` to ``beta1``; the last point sits one step beyond
``beta1``. Bins are left-open/right-closed::

    B(u_1)       = (-inf, alpha1]
    B(u_j)       = (u_{j-1}, u_j]        j = 2..n_prime-1
    B(u_nprime)  = (beta1, +inf)

Indices in the public API are 1-based to match that layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import cond_cdf_u, posterior


@dataclass(frozen=True)
class XiValues:
    xi1: float
    xi2: float
    xi3: float
    xi4: float

    def max(self) -> float:
        return max(self.xi1, self.xi2, self.xi3, self.xi4)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.xi1, self.xi2, self.xi3, self.xi4)


def xi_values(beta1: float) -> XiValues:
    """Posterior tail masses at +-beta1 that size the grid."""
    return XiValues(
        xi1=float(posterior(1, -beta1)),
        xi2=float(1.0 - posterior(1, beta1)),
        xi3=float(posterior(-1, beta1)),
        xi4=float(1.0 - posterior(-1, -beta1)),
    )


@dataclass(frozen=True, eq=False)
class QuantizerGrid:
    beta1: float
    n_prime: int
    points: np.ndarray

    @property
    def alpha1(self) -> float:
        return -self.beta1

    @property
    def step(self) -> float:
        return (self.beta1 - self.alpha1) / (self.n_prime - 2)

    @property
    def thresholds(self) -> np.ndarray:
        """Test points t_j = u_j, j = 1..n_prime-1."""
        return self.points[:-1]

    @property
    def n_thresholds(self) -> int:
        return self.n_prime - 1

    def summary(self) -> dict:
        return {"beta1": self.beta1, "n_prime": self.n_prime, "step": self.step}

    def __eq__(self, other):
        if not isinstance(other, QuantizerGrid):
            return NotImplemented
        return self.beta1 == other.beta1 and self.n_prime == other.n_prime

    def __hash__(self):
        return hash((self.beta1, self.n_prime))

    def __repr__(self):
        return f"QuantizerGrid(beta1={self.beta1!r}, n_prime={self.n_prime}, step={self.step:.6g})"


def make_grid(beta1: float, n_prime: int) -> QuantizerGrid:
    """Build the grid for an explicit ``n_prime`` (no sizing rule applied)."""
    beta1 = float(beta1)
    n_prime = int(n_prime)
    if not beta1 > 0:
        raise ValueError(f"beta1 must be positive, got {beta1}")
    if n_prime < 4:
        raise ValueError(f"n_prime must be >= 4, got {n_prime}")
    inner = np.linspace(-beta1, beta1, n_prime - 1)
    step = 2 * beta1 / (n_prime - 2)
    points = np.append(inner, beta1 + step)
    points.flags.writeable = False
    return QuantizerGrid(beta1=beta1, n_prime=n_prime, points=points)


def choose_grid(beta1: float) -> QuantizerGrid:
    """
    Size the grid from ``beta1`` alone.

    ``n_prime - 2`` is the reciprocal of the largest xi value, rounded up,
    so the bin count errs on the fine side.
    """
    beta1 = float(beta1)
    if not beta1 > 0:
        raise ValueError(f"beta1 must be positive, got {beta1}")
    xi_max = xi_values(beta1).max()
    n_prime = math.ceil(1.0 / xi_max) + 2
    if n_prime < 4:
        raise ValueError(f"beta1={beta1} too small: grid would have n_prime={n_prime} < 4")
    return make_grid(beta1, n_prime)


def quantize(u, grid: QuantizerGrid):
    """1-based bin index of each ``u``."""
    idx = np.searchsorted(grid.thresholds, np.asarray(u, dtype=float), side="left") + 1
    return idx[()] if idx.ndim == 0 else idx


def quantize_values(u, grid: QuantizerGrid):
    """Representative grid point of each ``u``."""
    return grid.points[np.asarray(quantize(u, grid)) - 1]


def bin_edges(grid: QuantizerGrid) -> np.ndarray:
    """Edges of length n_prime + 1, with -inf and +inf at the ends."""
    return np.concatenate(([-np.inf], grid.thresholds, [np.inf]))


def bin_probabilities(grid: QuantizerGrid, x1: int) -> np.ndarray:
    """P(U in B(u_i) | X1 = x1) for i = 1..n_prime, from CDF differences."""
    cdf = cond_cdf_u(bin_edges(grid), x1)
    return np.diff(cdf)


@dataclass(frozen=True)
class GridAsymptoticsRow:
    beta1: float
    n_prime: int
    step: float
    lower_tail: dict  # x1 -> F(alpha1 | x1)
    upper_tail: dict  # x1 -> 1 - F(beta1 | x1)


def verify_grid_asymptotics(beta1_list) -> list[GridAsymptoticsRow]:
    """Tail masses outside [alpha1, beta1] and the step, for increasing beta1."""
    beta1_list = [float(b) for b in beta1_list]
    if not beta1_list:
        raise ValueError("beta1_list must be nonempty")
    if any(b2 <= b1 for b1, b2 in zip(beta1_list, beta1_list[1:])):
        raise ValueError("beta1_list must be strictly increasing")
    rows = []
    for b in beta1_list:
        g = choose_grid(b)
        rows.append(
            GridAsymptoticsRow(
                beta1=b,
                n_prime=g.n_prime,
                step=g.step,
                lower_tail={s: float(cond_cdf_u(g.alpha1, s)) for s in (1, -1)},
                upper_tail={s: float(1.0 - cond_cdf_u(g.beta1, s)) for s in (1, -1)},
            )
        )
    return rows
