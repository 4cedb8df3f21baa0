"""
Empirical conditional CDFs and the statistics built on them: the
maliciousness measure R and a typicality test.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import PRIOR, SYMBOLS, check_symbol, check_symbols
from .quantizer import QuantizerGrid, bin_probabilities, quantize


class EmptyConditioningClassError(ValueError):
    """No sample carries the requested conditioning symbol."""


def step_phi(t):
    """Unit step: 1 for t >= 0, else 0."""
    out = (np.asarray(t) >= 0).astype(float)
    return out[()] if out.ndim == 0 else out


def identity_kernel(grid: QuantizerGrid) -> np.ndarray:
    """Phi(t_j - u_i) as an n_prime x (n_prime - 1) array."""
    return step_phi(grid.thresholds[None, :] - grid.points[:, None])


def _cdf_counts(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    # cumulative #{v <= t_j} for sorted t, without sorting v
    k = np.searchsorted(t, v, side="left")
    return np.cumsum(np.bincount(k, minlength=len(t) + 1)[: len(t)])


def empirical_cdf_given_x1(v, x1, s: int, t):
    """
    Fraction of positions with ``x1 == s`` whose ``v`` is at most ``t``.

    ``t`` may be a scalar or an array.
    """
    s = check_symbol(s)
    v = np.asarray(v, dtype=float)
    x1 = check_symbols(x1)
    if v.shape != x1.shape or v.ndim != 1 or len(v) == 0:
        raise ValueError("v and x1 must be nonempty 1-d sequences of equal length")
    sel = v[x1 == s]
    if len(sel) == 0:
        raise EmptyConditioningClassError(f"no positions with x1 == {s:+d}")
    t_arr = np.asarray(t, dtype=float)
    flat = t_arr.ravel()
    order = np.argsort(flat, kind="stable")
    counts = np.empty(len(flat))
    counts[order] = _cdf_counts(sel, flat[order])
    out = (counts / len(sel)).reshape(t_arr.shape)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class CondCdfMatrix:
    """
    Per-bin empirical CDF of v at the threshold grid.

    Row i (0-based here) is the quantization bin of u, column j the threshold
    t_{j+1}. Rows for empty bins are all zero.
    """

    counts: np.ndarray
    bin_totals: np.ndarray

    @property
    def values(self) -> np.ndarray:
        tot = self.bin_totals[:, None].astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = np.where(tot > 0, self.counts / tot, 0.0)
        return vals

    @property
    def nonempty(self) -> np.ndarray:
        return self.bin_totals > 0

    @property
    def n(self) -> int:
        return int(self.bin_totals.sum())

    def to_csv(self, path, grid: QuantizerGrid) -> Path:
        path = Path(path)
        vals = self.values
        try:
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["u_tilde"] + [f"{t:.6g}" for t in grid.thresholds])
                for p, row in zip(grid.points, vals):
                    w.writerow([f"{p:.6g}"] + [f"{x:.6g}" for x in row])
        except OSError as exc:
            raise OSError(f"cannot write CDF matrix to {path}: {exc}") from exc
        return path


def cond_cdf_matrix(v, u, grid: QuantizerGrid) -> CondCdfMatrix:
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if v.shape != u.shape or v.ndim != 1 or len(v) == 0:
        raise ValueError("v and u must be nonempty 1-d sequences of equal length")
    m = grid.n_prime
    rows = np.asarray(quantize(u, grid)) - 1
    cols = np.searchsorted(grid.thresholds, v, side="left")  # v <= t_j  iff  j >= col
    hist = np.bincount(rows * m + cols, minlength=m * m).reshape(m, m)
    counts = np.cumsum(hist, axis=1)[:, : m - 1]
    return CondCdfMatrix(counts=counts, bin_totals=hist.sum(axis=1))


def maliciousness_R(m: CondCdfMatrix, grid: QuantizerGrid, include_empty: bool = False) -> float:
    """
    Summed absolute gap between the per-bin empirical CDF and the identity step.

    By default only bins that received at least one sample contribute; with
    ``include_empty=True`` an empty bin contributes its full |0 - Phi| row.
    """
    if m.counts.shape != (grid.n_prime, grid.n_prime - 1):
        raise ValueError("matrix does not match grid dimensions")
    diff = np.abs(m.values - identity_kernel(grid))
    if not include_empty:
        diff = diff[m.nonempty]
    return float(diff.sum())


@dataclass(frozen=True)
class TypicalityResult:
    typical: bool
    worst: float  # largest deviation over all checked conditions

    def __bool__(self):
        return self.typical


def typicality_check(x1, u, grid: QuantizerGrid, eps: float) -> TypicalityResult:
    """
    Test whether (x1, quantized u) is eps-close to the channel model.

    Checks, for every bin and symbol,
    |P(bin | x) - N(bin) P(x | bin) / N(x)| < eps and |P(x) - N(x)/n| < eps.
    A symbol that never occurs makes its ratio term undefined; that term is
    taken as 0.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    x1 = check_symbols(x1)
    u = np.asarray(u, dtype=float)
    if x1.shape != u.shape or len(u) == 0:
        raise ValueError("x1 and u must be nonempty and of equal length")
    n = len(u)
    p_bin_given = {s: bin_probabilities(grid, s) for s in SYMBOLS}
    p_bin = sum(PRIOR * p_bin_given[s] for s in SYMBOLS)
    bins = np.asarray(quantize(u, grid)) - 1
    n_bin = np.bincount(bins, minlength=grid.n_prime)
    worst = 0.0
    for s in SYMBOLS:
        n_s = int(np.count_nonzero(x1 == s))
        with np.errstate(invalid="ignore", divide="ignore"):
            p_s_given_bin = np.where(p_bin > 0, PRIOR * p_bin_given[s] / p_bin, 0.0)
        ratio = n_bin * p_s_given_bin / n_s if n_s else np.zeros(grid.n_prime)
        worst = max(worst, float(np.max(np.abs(p_bin_given[s] - ratio))))
        worst = max(worst, abs(PRIOR - n_s / n))
    return TypicalityResult(typical=worst < eps, worst=worst)
