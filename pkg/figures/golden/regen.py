#!/usr/bin/env python3
"""Regenerate the golden CSVs in this directory from the vcstab CLI.

Run from the repository root with the package installed:

    python3 figures/golden/regen.py
"""

import json
import os
import tempfile

from vcstab import ControllerParams, LoadSet, LoadSpec, NetworkParams, cli
from vcstab.experiments import RampScenario, ab_grid_study, linear_ramp
from vcstab.serialize import fmt, write_csv

HERE = os.path.dirname(os.path.abspath(__file__))

GRID = [round(0.1 * k, 1) for k in range(1, 12)]  # 0.1 .. 1.1

CONFIGS = {
    "inflexible_sweep.csv": ("sweep", {
        "network": {"E": 2.0, "g_l": 1.0},
        "loads": [{"P0": 0.5}, {"P0": 0.25}],
        "sweep": {"grid": GRID},
    }),
    "vcs_sweep.csv": ("sweep", {
        "network": {"E": 2.0, "g_l": 1.0},
        "loads": [{"P0": 0.3, "flexible": True, "kappa": 1.0},
                  {"P0": 0.3, "flexible": True, "kappa": 2.0},
                  {"P0": 0.4}],
        "controller": {"a": 0.1, "b": 0.1},
        "sweep": {"grid": GRID},
    }),
    "trajectory.csv": ("simulate", {
        "network": {"E": 2.0, "g_l": 1.0},
        "loads": [{"P0": 0.3, "flexible": True, "kappa": 1.0},
                  {"P0": 0.3, "flexible": True, "kappa": 2.0},
                  {"P0": 0.4}],
        "controller": {"a": 0.1, "b": 0.1},
        "scenario": {"horizon": 120.0, "dt": 0.05,
                     "ramp": {"p0n_start": 0.6, "p0n_end": 1.2, "t_ramp": 60.0}},
    }),
    "trajectory_collapse.csv": ("simulate", {
        "network": {"E": 2.0, "g_l": 1.0},
        "loads": [{"P0": 0.5}, {"P0": 0.25}],
        "scenario": {"horizon": 400.0, "dt": 0.1,
                     "ramp": {"p0n_start": 0.6, "p0n_end": 1.3, "t_ramp": 50.0}},
    }),
}


def regen_cli_outputs():
    for name, (command, doc) in CONFIGS.items():
        with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
            json.dump(doc, f)
            cfg = f.name
        try:
            code = cli.main([command, "--config", cfg,
                             "--out", os.path.join(HERE, name)])
            if code not in (0, 4):  # a collapsing golden run is expected
                raise SystemExit(f"{command} for {name} failed with exit code {code}")
        finally:
            os.unlink(cfg)


def regen_ab_grid():
    net = NetworkParams(2.0, 1.0)
    loads = LoadSet((LoadSpec(0.3, True, 1.0), LoadSpec(0.3, True, 2.0),
                     LoadSpec(0.4)))
    scenario = RampScenario(linear_ramp(loads, 0.6, 1.2, 30.0),
                            horizon=400.0, dt=0.02)
    # a = 1.5 sits above v^2 everywhere on the ramp, so those runs never settle
    cells = ab_grid_study(net, loads, scenario,
                          a_values=[0.05, 0.1, 1.5], b_values=[0.05, 0.1, 0.13])
    rows = [[fmt(c.a), fmt(c.b), c.verdict, fmt(c.dP_norm)] for c in cells]
    write_csv(os.path.join(HERE, "ab_grid.csv"),
              ["a", "b", "verdict", "dP_norm"], rows)


if __name__ == "__main__":
    regen_cli_outputs()
    regen_ab_grid()
    print("golden CSVs regenerated in", HERE)
