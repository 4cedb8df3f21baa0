"""
Source-side decision statistic and thresholds.

The source compares the empirical CDF of what it hears back, conditioned on
its own transmitted symbol, against the known channel CDF at the grid
thresholds.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import seeding
from .attacks import Identity, RelayBehavior, apply_attack
from .channel import SYMBOLS, ChannelModel, check_symbol, cond_cdf_u, sample_batch
from .empirics import empirical_cdf_given_x1
from .quantizer import QuantizerGrid, make_grid

log = logging.getLogger(__name__)


class ThresholdNotPositiveError(ValueError):
    pass


def decision_statistic(v, x1, grid: QuantizerGrid, s: int) -> float:
    """
    D^n for conditioning symbol ``s``.

    Sum over the n'-1 thresholds of |empirical CDF - channel CDF|, divided by
    n'-2. The odd normalization is intentional, so values can reach
    (n'-1)/(n'-2).
    """
    s = check_symbol(s)
    t = grid.thresholds
    emp = empirical_cdf_given_x1(v, x1, s, t)
    return float(np.abs(emp - cond_cdf_u(t, s)).sum() / (grid.n_prime - 2))


def decision_statistics(v, x1, grid: QuantizerGrid) -> tuple[float, float]:
    """(D^n given +1, D^n given -1)."""
    return tuple(decision_statistic(v, x1, grid, s) for s in SYMBOLS)


def mu_prime(mu: float, grid: QuantizerGrid, delta: float) -> float:
    """Honest-side threshold mu + delta/(n'-2)."""
    if mu <= 0 or delta < 0:
        raise ValueError("mu must be positive and delta nonnegative")
    return mu + delta / (grid.n_prime - 2)


def epsilon_threshold(lambda_est: float, mu_n: float, grid: QuantizerGrid) -> float:
    """Attack-side threshold (lambda - mu_n) / (beta1 - alpha1)."""
    if not lambda_est > mu_n:
        raise ThresholdNotPositiveError(
            f"threshold not positive at n'={grid.n_prime}: lambda={lambda_est} <= mu_n={mu_n}"
        )
    return (lambda_est - mu_n) / (grid.beta1 - grid.alpha1)


@dataclass(frozen=True)
class DetectionResult:
    d_plus: float
    d_minus: float
    threshold: float
    n: int
    n_prime: int
    seed: int

    @property
    def d(self) -> float:
        return max(self.d_plus, self.d_minus)

    @property
    def attacked(self) -> bool:
        return self.d > self.threshold

    CSV_FIELDS = ("seed", "n", "n_prime", "d_plus", "d_minus", "d", "threshold", "attacked")

    def as_row(self) -> dict:
        return {
            "seed": self.seed,
            "n": self.n,
            "n_prime": self.n_prime,
            "d_plus": f"{self.d_plus:.6g}",
            "d_minus": f"{self.d_minus:.6g}",
            "d": f"{self.d:.6g}",
            "threshold": f"{self.threshold:.6g}",
            "attacked": int(self.attacked),
        }

    def append_csv(self, path) -> Path:
        path = Path(path)
        new = not path.exists() or path.stat().st_size == 0
        try:
            with path.open("a", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=self.CSV_FIELDS, lineterminator="\n")
                if new:
                    w.writeheader()
                w.writerow(self.as_row())
        except OSError as exc:
            raise OSError(f"cannot append detection result to {path}: {exc}") from exc
        return path


@dataclass(frozen=True)
class ThresholdProfile:
    """
    A reusable operating threshold.

    ``method`` is ``"calibrated-quantile"`` (``q`` set, calibration fields
    filled) or ``"epsilon-theory"``.
    """

    tau: float
    method: str
    beta1: float
    n_prime: int
    q: float | None = None
    calibration_n: int | None = None
    calibration_trials: int | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.method not in ("calibrated-quantile", "epsilon-theory"):
            raise ValueError(f"unknown threshold method {self.method!r}")

    @property
    def grid(self) -> QuantizerGrid:
        return make_grid(self.beta1, self.n_prime)

    def save(self, path) -> Path:
        path = Path(path)
        d = asdict(self)
        d.pop("extra")
        lines = [f"{k} = {'' if v is None else repr(v)}" for k, v in d.items()]
        try:
            path.write_text("\n".join(lines) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write threshold profile to {path}: {exc}") from exc
        return path

    @classmethod
    def load(cls, path) -> "ThresholdProfile":
        path = Path(path)
        raw = {}
        for line in path.read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            raw[key.strip()] = val.strip()
        conv = {
            "tau": float,
            "beta1": float,
            "n_prime": int,
            "q": float,
            "calibration_n": int,
            "calibration_trials": int,
            "seed": int,
        }
        kw = {}
        for key, val in raw.items():
            if key == "method":
                kw[key] = val.strip("'\"")
            elif key in conv:
                kw[key] = None if val == "" else conv[key](val)
            else:
                raise ValueError(f"{path}: unknown key {key!r}")
        return cls(**kw)


def detect(d: float, profile: ThresholdProfile) -> bool:
    return d > profile.tau


def run_detection(
    grid: QuantizerGrid,
    n: int,
    attack: RelayBehavior,
    threshold: float,
    seed: int,
) -> DetectionResult:
    """One trial: transmit, let the relay act, compute both statistics."""
    batch = sample_batch(n, seed)
    v = apply_attack(batch.u, attack, seeding.derive_seed(seed, seeding.ATTACK))
    d_plus, d_minus = decision_statistics(v, batch.x1, grid)
    return DetectionResult(
        d_plus=d_plus, d_minus=d_minus, threshold=threshold, n=n, n_prime=grid.n_prime, seed=seed
    )


def _honest_stat(args) -> float:
    grid, n, seed = args
    return run_detection(grid, n, Identity(), np.inf, seed).d


def honest_statistics(grid: QuantizerGrid, n: int, trials: int, seed: int, workers: int = 1) -> np.ndarray:
    """max(D+, D-) over ``trials`` honest-relay trials, trial k seeded from (seed, k)."""
    jobs = [(grid, n, seeding.derive_seed(seed, seeding.CALIBRATION, k)) for k in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return np.array(list(ex.map(_honest_stat, jobs, chunksize=8)))
    return np.array([_honest_stat(j) for j in jobs])


def calibrate_threshold(
    channel: ChannelModel,
    grid: QuantizerGrid,
    n: int,
    trials: int,
    q: float,
    seed: int,
    workers: int = 1,
) -> ThresholdProfile:
    """Empirical ``q``-quantile of the honest-relay statistic."""
    if trials < 100:
        raise ValueError(f"calibration needs at least 100 trials, got {trials}")
    if not 0 < q < 1:
        raise ValueError(f"q must be in (0, 1), got {q}")
    log.info("calibrating threshold: beta1=%g n=%d trials=%d q=%g", grid.beta1, n, trials, q)
    stats = honest_statistics(grid, n, trials, seed, workers=workers)
    tau = float(np.quantile(stats, q))
    return ThresholdProfile(
        tau=tau,
        method="calibrated-quantile",
        beta1=grid.beta1,
        n_prime=grid.n_prime,
        q=q,
        calibration_n=n,
        calibration_trials=trials,
        seed=seed,
        extra={"statistics": stats},
    )


def theory_profile(lambda_est: float, mu_n: float, grid: QuantizerGrid) -> ThresholdProfile:
    return ThresholdProfile(
        tau=epsilon_threshold(lambda_est, mu_n, grid),
        method="epsilon-theory",
        beta1=grid.beta1,
        n_prime=grid.n_prime,
    )
