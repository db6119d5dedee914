"""
Running scenarios from JSON configs
===================================

The same scenarios are available through ``cal run``, ``cal sweep`` and
``cal validate``. Here they are driven in-process and written to a
temporary directory.
"""

import json
import tempfile
from pathlib import Path

from cal import cli

out = Path(tempfile.mkdtemp(prefix="cal_demo_"))

cfg = {"scenario": "oscillator", "m": 1.0, "theta": 0.3, "t_end": 20.0,
       "initial": {"q0": [1.0], "qdot0": [0.0]}}
path = out / "oscillator.json"
path.write_text(json.dumps(cfg))
print("validate ->", cli.main(["validate", str(path)]))
print("run ->", cli.main(["run", str(path), "--out", str(out / "oscillator")]))
summary = json.loads((out / "oscillator" / "summary.json").read_text())
print("sup error:", summary["sup_error"], " files:", summary["files"])

sweep = {"scenario": "blowup-horizon", "t_end": 20.0, "grids": {"eps_dis": [0.5, 0.1, 0.02]}}
path = out / "sweep.json"
path.write_text(json.dumps(sweep))
print("sweep ->", cli.main(["sweep", str(path), "--out", str(out / "sweep")]))
print((out / "sweep" / "sweep.csv").read_text())
