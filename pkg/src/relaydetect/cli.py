"""
Command line entry point.

Subcommands: grid-info, calibrate, detect, sweep, analyze. Options mirror
the keys of the YAML experiment config; a ``--config`` file is read first
and explicit flags override it. Relative output paths resolve against
``$RELAYDETECT_OUTPUT_DIR`` when set.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import yaml

from . import analysis, seeding
from .attacks import behavior_from_dict
from .channel import ChannelModel, cond_pdf_u, noise_pdf
from .detector import ThresholdProfile, calibrate_threshold, run_detection
from .harness import ExperimentConfig, emit_report, sweep
from .quantizer import choose_grid, xi_values

OUTPUT_ENV = "RELAYDETECT_OUTPUT_DIR"


def _out_path(p: str | None, default_name: str) -> Path:
    base = os.environ.get(OUTPUT_ENV)
    path = Path(p) if p else Path(default_name)
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def _load_config(args) -> ExperimentConfig:
    d = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            d = yaml.safe_load(fh) or {}
    for key in ("beta1", "n", "trials", "master_seed", "workers", "output_dir"):
        val = getattr(args, key, None)
        if val is not None:
            d[key] = val
    if getattr(args, "attack", None):
        d["attack"] = yaml.safe_load(args.attack)
    thr = dict(d.get("threshold") or {})
    if getattr(args, "tau", None) is not None:
        thr = {"tau": args.tau, "q": None}
    else:
        if getattr(args, "q", None) is not None:
            thr["q"] = args.q
        if getattr(args, "calibration_trials", None) is not None:
            thr["calibration_trials"] = args.calibration_trials
    if thr:
        d["threshold"] = thr
    if getattr(args, "sweep", None):
        d["sweep"] = yaml.safe_load(args.sweep)
    if d.get("output_dir") is None and os.environ.get(OUTPUT_ENV):
        d["output_dir"] = os.environ[OUTPUT_ENV]
    return ExperimentConfig.from_dict(d)


def cmd_grid_info(args):
    g = choose_grid(args.beta1)
    xi = xi_values(args.beta1)
    info = dict(g.summary(), alpha1=g.alpha1, xi_max=xi.max())
    for k, v in info.items():
        print(f"{k} = {v:.6g}" if isinstance(v, float) else f"{k} = {v}")


def cmd_calibrate(args):
    cfg = _load_config(args)
    grid = choose_grid(cfg.beta1)
    t = cfg.threshold
    if t.q is None:
        raise SystemExit("calibrate needs a quantile q, not a fixed tau")
    profile = calibrate_threshold(
        ChannelModel(),
        grid,
        cfg.n,
        t.calibration_trials,
        t.q,
        seeding.derive_seed(cfg.master_seed, seeding.CALIBRATION),
        workers=cfg.workers,
    )
    path = profile.save(_out_path(args.out, "threshold.txt"))
    print(f"tau = {profile.tau:.6g}  ->  {path}")


def cmd_detect(args):
    cfg = _load_config(args)
    if args.profile:
        profile = ThresholdProfile.load(args.profile)
        grid, tau = profile.grid, profile.tau
    else:
        grid = choose_grid(cfg.beta1)
        if cfg.threshold.tau is None:
            raise SystemExit("detect needs --profile or --tau")
        tau = cfg.threshold.tau
    attack = behavior_from_dict(cfg.attack)
    seed = args.seed if args.seed is not None else cfg.master_seed
    res = run_detection(grid, cfg.n, attack, tau, seed)
    for k, v in res.as_row().items():
        print(f"{k} = {v}")
    if args.csv:
        res.append_csv(_out_path(args.csv, "detections.csv"))


def cmd_sweep(args):
    cfg = _load_config(args)
    report = sweep(cfg)
    path = emit_report(report, _out_path(args.out, "sweep.csv"))
    print(f"{len(report.rows)} rows -> {path}")


ANALYZE_COLUMNS = ("quantity", "beta1", "n_prime", "parameter", "value")


def analyze_rows(beta1: float, delta: float, budget: int, seed: int, mu: float, n: int, eps: float):
    g = choose_grid(beta1)
    rows = []

    def add(q, param, value):
        rows.append({"quantity": q, "beta1": beta1, "n_prime": g.n_prime, "parameter": param,
                     "value": value})

    w = analysis.non_manip_witness(0.0, 2.0)
    add("witness_lhs", "a=0;b=2", w.lhs)
    add("witness_rhs", "a=0;b=2", w.rhs)
    add("witness_gap", "a=0;b=2", w.gap)
    lam = analysis.estimate_lambda(g, delta, budget, seed)
    add("lambda_upper", f"delta={delta:g};budget={budget}", lam.value)
    dfm = analysis.delta_F_max(g)
    add("delta_F_max", "", dfm)
    theta = analysis.theta_bound(
        analysis.ThetaInputs(mu=mu, n=n, grid=g, eps=eps, p_typical=0.99, p_atypical=0.01,
                             delta_f_max=dfm)
    )
    add("theta", f"mu={mu:g};n={n};eps={eps:g};p_typical=0.99", theta)
    x, step = analysis.tabulation_grid()
    dec = analysis.deconvolution_check(cond_pdf_u(x, 1), cond_pdf_u(x, -1), noise_pdf(x), step)
    add("deconv_forward", "f(+1) vs f(-1)", dec.forward_difference)
    add("deconv_recovered", "f(+1) vs f(-1)", dec.recovered_difference)
    return rows


def cmd_analyze(args):
    rows = analyze_rows(args.beta1, args.delta, args.budget, args.master_seed or 0, args.mu, args.n,
                        args.eps)
    path = _out_path(args.out, "analysis.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=ANALYZE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: f"{v:.6g}" if isinstance(v, float) else v for k, v in r.items()})
    print(f"{len(rows)} rows -> {path}")


def _common(p, n_default=None):
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--beta1", type=float)
    p.add_argument("--n", type=int, default=n_default)
    p.add_argument("--master-seed", dest="master_seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output-dir", dest="output_dir")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relaydetect", description=__doc__.strip().splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grid-info", help="print the quantization grid for beta1")
    p.add_argument("--beta1", type=float, default=2.0)
    p.set_defaults(func=cmd_grid_info)

    p = sub.add_parser("calibrate", help="calibrate a threshold profile on honest trials")
    _common(p)
    p.add_argument("--q", type=float)
    p.add_argument("--calibration-trials", dest="calibration_trials", type=int)
    p.add_argument("--out", help="profile file (default threshold.txt)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("detect", help="run one detection trial")
    _common(p)
    p.add_argument("--attack", help="attack as YAML, e.g. '{kind: sign_flip}'")
    p.add_argument("--profile", help="threshold profile file")
    p.add_argument("--tau", type=float)
    p.add_argument("--seed", type=int, help="trial seed (default: master seed)")
    p.add_argument("--csv", help="append the result row to this CSV")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("sweep", help="Monte Carlo sweep, written as CSV")
    _common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--attack")
    p.add_argument("--q", type=float)
    p.add_argument("--calibration-trials", dest="calibration_trials", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--sweep", help="sweep axes as YAML, e.g. '{n: [10000, 100000]}'")
    p.add_argument("--out", help="report CSV (default sweep.csv)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="theory checks report (witness, lambda, theta, ...)")
    p.add_argument("--beta1", type=float, default=2.0)
    p.add_argument("--delta", type=float, default=5.0)
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--master-seed", dest="master_seed", type=int, default=0)
    p.add_argument("--mu", type=float, default=0.05)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--out", help="report CSV (default analysis.csv)")
    p.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
