"""
Relay behaviours: how the forwarded sequence v is produced from u.

Every behaviour is an immutable value. :func:`apply_attack` is pure given
``(u, behaviour, seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import check_symbol, cond_cdf_u, sample_marginal_u
from .quantizer import QuantizerGrid, quantize


class NoClosedFormError(ValueError):
    """The behaviour's induced conditional CDF has no closed form here."""


@dataclass(frozen=True, eq=False)
class WMatrix:
    """
    Per-bin conditional CDF of v at the thresholds: n_prime x (n_prime - 1),
    each row nondecreasing in [0, 1].
    """

    entries: np.ndarray

    def __post_init__(self):
        w = np.array(self.entries, dtype=float)
        if w.ndim != 2 or w.shape[1] != w.shape[0] - 1:
            raise ValueError(f"W must have shape (n', n'-1), got {w.shape}")
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("W entries must lie in [0, 1]")
        if np.any(np.diff(w, axis=1) < 0):
            raise ValueError("W rows must be nondecreasing")
        w.flags.writeable = False
        object.__setattr__(self, "entries", w)

    @property
    def n_prime(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


class RelayBehavior:
    """Base class; subclasses implement ``_apply``."""

    depth = 1

    def _apply(self, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Identity(RelayBehavior):
    def _apply(self, u, rng):
        return u.copy()


@dataclass(frozen=True)
class AdditiveOffset(RelayBehavior):
    c: float

    def _apply(self, u, rng):
        return u + self.c


@dataclass(frozen=True)
class SignFlip(RelayBehavior):
    def _apply(self, u, rng):
        return -u


@dataclass(frozen=True)
class ResampleMarginal(RelayBehavior):
    """Forward fresh draws from the unconditional law of U, ignoring u."""

    def _apply(self, u, rng):
        return sample_marginal_u(len(u), rng)


def _check_inner(b: RelayBehavior) -> None:
    if not isinstance(b, RelayBehavior):
        raise TypeError(f"expected a RelayBehavior, got {type(b).__name__}")
    if b.depth > 1:
        raise ValueError("behaviours may be nested at most two levels deep")


@dataclass(frozen=True)
class PartialGarble(RelayBehavior):
    """Each position independently handed to ``inner`` with probability ``p``."""

    p: float
    inner: RelayBehavior

    depth = 2

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        _check_inner(self.inner)

    def _apply(self, u, rng):
        mask_rng, inner_rng = rng.spawn(2)
        hit = mask_rng.random(len(u)) < self.p
        attacked = self.inner._apply(u, inner_rng)
        return np.where(hit, attacked, u)


@dataclass(frozen=True)
class BlockSwitch(RelayBehavior):
    """Consecutive blocks of the sequence handled by different behaviours."""

    schedule: tuple = field(default_factory=tuple)

    depth = 2

    def __post_init__(self):
        sched = tuple((int(length), b) for length, b in self.schedule)
        if not sched:
            raise ValueError("schedule must be nonempty")
        for length, b in sched:
            if length < 1:
                raise ValueError("block lengths must be positive")
            _check_inner(b)
        object.__setattr__(self, "schedule", sched)

    @property
    def total_length(self) -> int:
        return sum(length for length, _ in self.schedule)

    def _apply(self, u, rng):
        if self.total_length != len(u):
            raise ValueError(
                f"schedule covers {self.total_length} symbols but the sequence has {len(u)}"
            )
        rngs = rng.spawn(len(self.schedule))
        out, start = [], 0
        for (length, b), r in zip(self.schedule, rngs):
            out.append(b._apply(u[start : start + length], r))
            start += length
        return np.concatenate(out)


@dataclass(frozen=True)
class CustomKernel(RelayBehavior):
    """
    Arbitrary i.i.d. kernel defined on the grid.

    For u in bin i, v lands at threshold t_j with probability
    w[i, j] - w[i, j-1] (w[i, 0] taken as 0) and at t_{n'-1} + step with the
    remaining 1 - w[i, n'-1]. Placing v at the right edge of its cell is
    invisible to every statistic evaluated on the threshold grid.
    """

    W: WMatrix
    grid: QuantizerGrid

    def __post_init__(self):
        if not isinstance(self.W, WMatrix):
            object.__setattr__(self, "W", WMatrix(self.W))
        if self.W.n_prime != self.grid.n_prime:
            raise ValueError("W does not match the grid dimensions")

    def support(self) -> np.ndarray:
        g = self.grid
        return np.append(g.thresholds, g.beta1 + g.step)

    def _apply(self, u, rng):
        rows = np.asarray(quantize(u, self.grid)) - 1
        r = rng.random(len(u))
        cell = np.empty(len(u), dtype=np.intp)
        for i in np.unique(rows):
            sel = rows == i
            cell[sel] = np.searchsorted(self.W.entries[i], r[sel], side="right")
        return self.support()[cell]


def apply_attack(u, b: RelayBehavior, seed: int) -> np.ndarray:
    """Produce the forwarded sequence v from u under behaviour ``b``."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or len(u) == 0:
        raise ValueError("u must be a nonempty 1-d sequence")
    if not isinstance(b, RelayBehavior):
        raise TypeError(f"expected a RelayBehavior, got {type(b).__name__}")
    return b._apply(u, np.random.default_rng(seed))


def marginal_of_attack(b: RelayBehavior, x1: int, t):
    """Closed-form P(V <= t | X1 = x1) for the analytically tractable behaviours."""
    x1 = check_symbol(x1)
    if isinstance(b, Identity):
        return cond_cdf_u(t, x1)
    if isinstance(b, AdditiveOffset):
        return cond_cdf_u(np.asarray(t, dtype=float) - b.c, x1)
    if isinstance(b, SignFlip):
        return 1.0 - cond_cdf_u(-np.asarray(t, dtype=float), x1)
    if isinstance(b, ResampleMarginal):
        return 0.5 * cond_cdf_u(t, 1) + 0.5 * cond_cdf_u(t, -1)
    raise NoClosedFormError(f"no closed-form marginal for {type(b).__name__}")


_KINDS = {
    "identity": Identity,
    "additive_offset": AdditiveOffset,
    "sign_flip": SignFlip,
    "resample_marginal": ResampleMarginal,
    "partial_garble": PartialGarble,
    "block_switch": BlockSwitch,
}
_NAMES = {cls: name for name, cls in _KINDS.items()}


def behavior_from_dict(d: dict) -> RelayBehavior:
    """
    Build a behaviour from a config mapping such as
    ``{"kind": "partial_garble", "p": 0.1, "inner": {"kind": "sign_flip"}}``.

    ``custom_kernel`` is not expressible here; construct it in code.
    """
    if isinstance(d, str):
        d = {"kind": d}
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _KINDS:
        raise ValueError(f"unknown attack kind {kind!r}; expected one of {sorted(_KINDS)}")
    if kind == "partial_garble":
        return PartialGarble(p=float(d["p"]), inner=behavior_from_dict(d["inner"]))
    if kind == "block_switch":
        sched = [(blk["length"], behavior_from_dict(blk["behavior"])) for blk in d["schedule"]]
        return BlockSwitch(schedule=tuple(sched))
    if kind == "additive_offset":
        return AdditiveOffset(c=float(d["c"]))
    if d:
        raise ValueError(f"unexpected parameters for {kind}: {sorted(d)}")
    return _KINDS[kind]()


def behavior_to_dict(b: RelayBehavior) -> dict:
    if isinstance(b, CustomKernel):
        raise ValueError("custom_kernel behaviours are not serializable")
    name = _NAMES[type(b)]
    if isinstance(b, PartialGarble):
        return {"kind": name, "p": b.p, "inner": behavior_to_dict(b.inner)}
    if isinstance(b, BlockSwitch):
        return {
            "kind": name,
            "schedule": [{"length": n, "behavior": behavior_to_dict(x)} for n, x in b.schedule],
        }
    if isinstance(b, AdditiveOffset):
        return {"kind": name, "c": b.c}
    return {"kind": name}


def behavior_label(b: RelayBehavior) -> str:
    """Short stable text label used in report rows."""
    if isinstance(b, CustomKernel):
        return "custom_kernel"
    d = behavior_to_dict(b)
    if d["kind"] == "partial_garble":
        return f"partial_garble(p={b.p:g},{behavior_label(b.inner)})"
    if d["kind"] == "additive_offset":
        return f"additive_offset(c={b.c:g})"
    if d["kind"] == "block_switch":
        return "block_switch(" + ",".join(f"{n}:{behavior_label(x)}" for n, x in b.schedule) + ")"
    return d["kind"]
