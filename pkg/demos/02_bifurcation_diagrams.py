#!/usr/bin/env python3
"""Equilibrium branches vs total demand, with and without the controller.

Without flexible loads the two demand-satisfying branches meet in a
saddle-node at P_max and vanish. With the controller a third branch -- the
proportionally-shedding capacity point -- appears, and above P_max it is the
only (and stable) survivor. Optionally renders the diagrams via figures/render.
"""

import json
import os
import subprocess
import sys
import tempfile

from vcstab import ControllerParams, LoadSet, LoadSpec, NetworkParams
from vcstab.experiments import bifurcation_sweep
from vcstab.serialize import fmt, write_csv

net = NetworkParams(2.0, 1.0)
grid = [round(0.1 * k, 1) for k in range(1, 13)]

configs = {
    "inflexible": (LoadSet((LoadSpec(0.5), LoadSpec(0.25))), None),
    "vcs": (LoadSet((LoadSpec(0.3, True, 1.0), LoadSpec(0.3, True, 2.0),
                     LoadSpec(0.4))), ControllerParams(0.1, 0.1)),
}

outdir = tempfile.mkdtemp(prefix="bifurcation-")
for name, (loads, ctrl) in configs.items():
    rows = bifurcation_sweep(net, loads, ctrl, grid)
    print(f"\n{name} sweep:")
    for r in rows:
        tag = "" if r.exists else "  (no equilibrium)"
        print(f"  p0n = {r.p0n:4.2f}  {r.branch:8s}  gN = {r.gN:7.4f}  "
              f"{r.stable}{tag}")
    csv_path = os.path.join(outdir, f"{name}_sweep.csv")
    write_csv(csv_path, ["p0n", "branch", "gN", "v", "stable", "exists"],
              [[fmt(r.p0n), r.branch, fmt(r.gN), fmt(r.v), r.stable,
                "1" if r.exists else "0"] for r in rows])

    spec_path = os.path.join(outdir, f"{name}.json")
    with open(spec_path, "w") as f:
        json.dump({"kind": "bifurcation", "input": csv_path,
                   "output": os.path.join(outdir, f"{name}.png"),
                   "annotate": {"p_max": net.p_max(), "g_l": net.g_l},
                   "title": f"{name} equilibrium branches"}, f)
    render = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                          "..", "figures", "render")
    proc = subprocess.run([sys.executable, render, "--spec", spec_path],
                          capture_output=True, text=True)
    if proc.returncode == 0:
        print(f"  figure: {proc.stdout.strip()}")
    else:
        print(f"  (figure rendering unavailable: {proc.stderr.strip()})")
