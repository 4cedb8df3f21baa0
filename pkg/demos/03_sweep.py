"""
A reproducible sweep
====================

Experiments are plain configs. This one varies the garbling probability of
a partial sign-flip attack and writes a CSV whose bytes depend only on the
config. Cells that differ only in the attack reuse both the calibrated
threshold and the underlying channel draws.
"""

import sys
import tempfile
from pathlib import Path

from relaydetect.harness import ExperimentConfig, emit_report, sweep

cfg = ExperimentConfig.from_dict({
    "beta1": 2.0,
    "n": 20_000,
    "trials": 50,
    "master_seed": 7,
    "attack": {"kind": "partial_garble", "p": 0.0, "inner": {"kind": "sign_flip"}},
    "threshold": {"q": 0.95, "calibration_trials": 200},
    "sweep": {"attack_param": {"name": "p", "values": [0.0, 0.003, 0.01, 0.03]}},
})

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp()) / "sweep.csv"
report = sweep(cfg)
emit_report(report, out)
print(out.read_text())
