"""
Monte Carlo experiments: detection and false-alarm rates over sweeps.

Seeds
-----
Calibration trial k uses ``derive_seed(master_seed, CALIBRATION)`` as its
profile seed, expanded per trial inside :func:`detector.honest_statistics`.
Detection trial k of a cell uses
``derive_seed(master_seed, DETECTION, data_cell, k)`` where ``data_cell``
indexes the (beta1, n) combination only. Cells that differ only in the
attack therefore see the same source symbols and noise, which makes
comparisons across attack parameters paired rather than independent.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__, seeding
from .attacks import apply_attack, behavior_from_dict, behavior_label
from .channel import ChannelModel, sample_batch
from .detector import ThresholdProfile, calibrate_threshold, decision_statistics
from .empirics import cond_cdf_matrix, maliciousness_R
from .quantizer import QuantizerGrid, choose_grid

log = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "cell",
    "beta1",
    "n",
    "n_prime",
    "attack",
    "trials",
    "threshold",
    "detections",
    "detection_rate",
    "mean_d",
    "median_d",
    "mean_r",
    "error",
)
REPORT_HEADER = ",".join(REPORT_COLUMNS)


@dataclass
class ThresholdSpec:
    q: float | None = 0.99
    calibration_trials: int = 500
    tau: float | None = None

    def __post_init__(self):
        if (self.q is None) == (self.tau is None):
            raise ValueError("threshold needs exactly one of q (calibrated) or tau (fixed)")


@dataclass
class ExperimentConfig:
    beta1: float = 2.0
    n: int = 100_000
    trials: int = 200
    master_seed: int = 0
    attack: dict = field(default_factory=lambda: {"kind": "identity"})
    threshold: ThresholdSpec = field(default_factory=ThresholdSpec)
    sweep: dict | None = None
    workers: int = 1
    output_dir: str | None = None

    def __post_init__(self):
        if isinstance(self.threshold, dict):
            self.threshold = ThresholdSpec(**self.threshold)
        if isinstance(self.attack, str):
            self.attack = {"kind": self.attack}
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        behavior_from_dict(self.attack)  # validate early
        if self.sweep:
            for key, axis in self.sweep.items():
                if key not in ("n", "beta1", "attack", "attack_param"):
                    raise ValueError(f"unknown sweep axis {key!r}")
                values = axis["values"] if key == "attack_param" else axis
                if not values:
                    raise ValueError(f"sweep axis {key!r} is empty")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh) or {})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentReport:
    rows: list[dict]
    provenance: dict
    wall_times: list[float] = field(default_factory=list)
    profiles: dict = field(default_factory=dict)


def _set_param(attack: dict, name: str, value) -> dict:
    out = json.loads(json.dumps(attack))
    node = out
    *path, leaf = name.split(".")
    for key in path:
        node = node[key]
    node[leaf] = value
    return out


def _cells(cfg: ExperimentConfig):
    axes = cfg.sweep or {}
    ns = axes.get("n", [cfg.n])
    betas = axes.get("beta1", [cfg.beta1])
    attacks = axes.get("attack", [cfg.attack])
    if "attack_param" in axes:
        ap = axes["attack_param"]
        attacks = [_set_param(a, ap["name"], v) for a in attacks for v in ap["values"]]
    data_cells = list(itertools.product(betas, ns))
    for data_idx, (beta1, n) in enumerate(data_cells):
        for attack in attacks:
            yield data_idx, float(beta1), int(n), attack


def _trial(args):
    grid, n, attack, seed = args
    batch = sample_batch(n, seed)
    v = apply_attack(batch.u, attack, seeding.derive_seed(seed, seeding.ATTACK))
    d = max(decision_statistics(v, batch.x1, grid))
    r = maliciousness_R(cond_cdf_matrix(v, batch.u, grid), grid)
    return d, r


def _profile_path(cfg: ExperimentConfig, beta1, n) -> Path | None:
    if cfg.output_dir is None:
        return None
    t = cfg.threshold
    name = f"threshold_b{beta1:g}_n{n}_q{t.q:g}_c{t.calibration_trials}_s{cfg.master_seed}.txt"
    return Path(cfg.output_dir) / name


def _resolve_threshold(cfg, grid: QuantizerGrid, n: int, cache: dict) -> float:
    t = cfg.threshold
    if t.tau is not None:
        return float(t.tau)
    key = (grid.beta1, n, t.q, t.calibration_trials)
    if key in cache:
        return cache[key].tau
    path = _profile_path(cfg, grid.beta1, n)
    if path is not None and path.exists():
        profile = ThresholdProfile.load(path)
        log.info("reusing threshold profile %s", path)
    else:
        profile = calibrate_threshold(
            ChannelModel(),
            grid,
            n,
            t.calibration_trials,
            t.q,
            seeding.derive_seed(cfg.master_seed, seeding.CALIBRATION),
            workers=cfg.workers,
        )
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            profile.save(path)
    cache[key] = profile
    return profile.tau


def _run_cell(cfg, cell_idx, data_idx, beta1, n, attack_dict, cache, grids):
    row = {
        "cell": cell_idx,
        "beta1": beta1,
        "n": n,
        "n_prime": "",
        "attack": "",
        "trials": cfg.trials,
        "threshold": float("nan"),
        "detections": "",
        "detection_rate": float("nan"),
        "mean_d": float("nan"),
        "median_d": float("nan"),
        "mean_r": float("nan"),
        "error": "",
    }
    try:
        attack = behavior_from_dict(attack_dict)
        row["attack"] = behavior_label(attack)
        if beta1 not in grids:
            grids[beta1] = choose_grid(beta1)
        grid = grids[beta1]
        row["n_prime"] = grid.n_prime
        tau = _resolve_threshold(cfg, grid, n, cache)
        jobs = [
            (grid, n, attack, seeding.derive_seed(cfg.master_seed, seeding.DETECTION, data_idx, k))
            for k in range(cfg.trials)
        ]
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
                out = list(ex.map(_trial, jobs, chunksize=8))
        else:
            out = [_trial(j) for j in jobs]
        d = np.array([o[0] for o in out])
        r = np.array([o[1] for o in out])
        hits = int(np.count_nonzero(d > tau))
        row.update(
            threshold=tau,
            detections=hits,
            detection_rate=hits / cfg.trials,
            mean_d=float(d.mean()),
            median_d=float(np.median(d)),
            mean_r=float(r.mean()),
        )
    except Exception as exc:  # one bad cell must not sink the sweep
        log.warning("cell %d failed: %s", cell_idx, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _provenance(cfg: ExperimentConfig) -> dict:
    return {
        "version": __version__,
        "master_seed": cfg.master_seed,
        "config": json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":")),
    }


def sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """One row per cell of the Cartesian product of the sweep axes."""
    cache: dict = {}
    grids: dict = {}
    rows, times = [], []
    for cell_idx, (data_idx, beta1, n, attack) in enumerate(_cells(cfg)):
        t0 = time.perf_counter()
        rows.append(_run_cell(cfg, cell_idx, data_idx, beta1, n, attack, cache, grids))
        times.append(time.perf_counter() - t0)
    prov = _provenance(cfg)
    prov["grids"] = ";".join(
        f"beta1={g.beta1:g}:n_prime={g.n_prime}:step={g.step:.6g}" for g in grids.values()
    )
    return ExperimentReport(rows=rows, provenance=prov, wall_times=times, profiles=cache)


def run_trials(cfg: ExperimentConfig) -> ExperimentReport:
    """Single cell at the config's own settings, ignoring any sweep axes."""
    return sweep(replace(cfg, sweep=None))


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def render_report(report: ExperimentReport) -> str:
    buf = io.StringIO()
    prov = " ".join(f"{k}={report.provenance[k]}" for k in sorted(report.provenance))
    buf.write(f"# {prov}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for row in report.rows:
        w.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def emit_report(report: ExperimentReport, path) -> Path:
    """Write the report as CSV: one '#' provenance line, header, one row per cell."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            fh.write(render_report(report))
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path
