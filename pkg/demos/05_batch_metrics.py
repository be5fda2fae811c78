"""Seeded batch: how many instances stay unresolved after each iteration."""

import sys
import tempfile
from pathlib import Path

from crp3d.cli import main

n = int(sys.argv[1]) if len(sys.argv) > 1 else 4

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "batch"
    # same as: crp3d batch --seed 0 --instances n --out <dir>
    main(["batch", "--seed", "0", "--instances", str(n), "--out", str(out)])
    print((out / "instances.csv").read_text())
    print((out / "unresolved_curve.csv").read_text())
    print((out / "conflicts_curve.csv").read_text())
