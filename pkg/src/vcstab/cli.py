"""Command-line entry point: equilibria | simulate | sweep | stability.

Exit codes: 0 success, 2 configuration error, 3 no equilibrium exists
(overloaded inflexible system), 4 the simulated run collapsed (the output
file is still written).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import equilibria as eq
from . import experiments, stability
from .dynamics import VcsState
from .serialize import (
    ConfigError,
    RunConfig,
    fmt,
    jsonable,
    load_config,
    write_csv,
    write_json,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_EQUILIBRIUM = 3
EXIT_COLLAPSE = 4


def _point_payload(pt, net, loads, ctrl):
    return {
        "class": pt.kind,
        "exists": pt.exists,
        "g": jsonable(pt.g_star),
        "phi": pt.phi_star,
        "ghat": jsonable(pt.ghat_star),
        "gN": pt.gN_star,
        "v": pt.v_star,
        "residual": jsonable(pt.residual(net, loads, ctrl)),
        "stability": stability.classify(pt, net, loads, ctrl) if pt.exists else "none",
    }


def cmd_equilibria(cfg: RunConfig, out):
    points = eq.all_equilibria(cfg.net, cfg.loads, cfg.ctrl)
    report = {
        "p_max": cfg.net.p_max(),
        "total_demand": cfg.loads.total_demand,
        "points": [_point_payload(p, cfg.net, cfg.loads, cfg.ctrl) for p in points],
    }
    if not points:
        report["message"] = (
            "no equilibrium: total demand exceeds the network capacity "
            f"({cfg.loads.total_demand} > {cfg.net.p_max()})"
        )
    write_json(out, jsonable(report))
    return EXIT_NO_EQUILIBRIUM if not points else EXIT_OK


def cmd_simulate(cfg: RunConfig, out, dt=None):
    if cfg.scenario is None:
        raise ConfigError("simulate requires a 'scenario' section")
    scenario = cfg.scenario
    if dt is not None:
        scenario = experiments.RampScenario(scenario.schedule, scenario.horizon,
                                            dt, scenario.initial)
    if cfg.ctrl is not None:
        cfg.ctrl.check_regime(cfg.net)
    result = experiments.run_ramp(cfg.net, cfg.loads, cfg.ctrl, scenario)
    traj = result.trajectory
    n, n_f = cfg.loads.n, (cfg.loads.n_f if cfg.ctrl is not None else 0)
    header = (["t"] + [f"g_{i+1}" for i in range(n)] + ["phi"]
              + [f"ghat_{i+1}" for i in range(n_f)] + ["v"]
              + [f"P_{i+1}" for i in range(n)] + [f"P0_{i+1}" for i in range(n)]
              + ["collapsed"])
    rows = []
    m = len(traj.times)
    for k in range(m):
        collapsed = result.collapsed and k == m - 1
        rows.append([fmt(traj.times[k])]
                    + [fmt(x) for x in traj.g[k]]
                    + [fmt(traj.phi[k])]
                    + [fmt(x) for x in traj.ghat[k]]
                    + [fmt(result.v[k])]
                    + [fmt(x) for x in result.P[k]]
                    + [fmt(x) for x in result.p0_t[k]]
                    + ["1" if collapsed else "0"])
    write_csv(out, header, rows)
    return EXIT_COLLAPSE if result.collapsed else EXIT_OK


def cmd_sweep(cfg: RunConfig, out):
    if cfg.sweep_grid is None:
        raise ConfigError("sweep requires a 'sweep' section")
    rows = experiments.bifurcation_sweep(cfg.net, cfg.loads, cfg.ctrl, cfg.sweep_grid)
    header = ["p0n", "branch", "gN", "v", "stable", "exists"]
    out_rows = [[fmt(r.p0n), r.branch, fmt(r.gN), fmt(r.v), r.stable,
                 "1" if r.exists else "0"] for r in rows]
    write_csv(out, header, out_rows)
    return EXIT_OK


def _select_point(cfg: RunConfig):
    """Point override from config, else the first equilibrium of the system."""
    sel = cfg.point or {}
    if "g" in sel:
        g = np.asarray(sel["g"], dtype=float)
        ghat = np.asarray(sel.get("ghat", g[cfg.loads.flexible_indices]
                                  if cfg.ctrl is not None else []), dtype=float)
        v = cfg.net.voltage(g.sum())
        return eq.EquilibriumPoint(g, float(sel.get("phi", 0.0)), ghat,
                                   float(g.sum()), v, sel.get("branch", "override"))
    points = eq.all_equilibria(cfg.net, cfg.loads, cfg.ctrl)
    if not points:
        return None
    branch = sel.get("branch")
    if branch is not None:
        match = [p for p in points if p.kind == branch]
        if not match:
            raise ConfigError(f"no equilibrium with branch {branch!r}; "
                              f"available: {[p.kind for p in points]}")
        return match[0]
    return points[0]


def cmd_stability(cfg: RunConfig, out):
    pt = _select_point(cfg)
    if pt is None:
        write_json(out, {"message": "no equilibrium to analyze (overload)"})
        return EXIT_NO_EQUILIBRIUM
    report = {"point": _point_payload(pt, cfg.net, cfg.loads, cfg.ctrl)}
    if cfg.ctrl is None:
        J = stability.jacobian_inflexible(cfg.net, cfg.loads, pt.g_star)
        report["eigenvalues"] = jsonable(np.sort(np.linalg.eigvals(J).real))
        report["verdict"] = stability.classify(pt, cfg.net, cfg.loads, None)
    else:
        state = VcsState(pt.g_star, pt.phi_star, pt.ghat_star)
        spec = stability.vcs_closed_form_spectrum(cfg.net, cfg.loads, state, cfg.ctrl)
        col = stability.routh_first_column(spec.quartic)
        g_I_bar = float(pt.g_star[cfg.loads.inflexible_indices].sum())
        b1_lim, c1_lim = stability.small_a_limits(cfg.net, cfg.loads, cfg.ctrl,
                                                  pt.gN_star, cfg.loads.total_demand,
                                                  g_I_bar=g_I_bar)
        report.update({
            "quad_pair_roots": jsonable(spec.quad_pair_roots),
            "minus_v2": spec.minus_v2,
            "quartic": {"a3": spec.quartic.a3, "a2": spec.quartic.a2,
                        "a1": spec.quartic.a1, "a0": spec.quartic.a0},
            "quartic_roots": jsonable(spec.quartic_roots),
            "closed_form_eigenvalues": jsonable(spec.closed_form_eigenvalues),
            "oracle_eigenvalues": jsonable(spec.oracle_eigenvalues),
            "max_match_error": spec.max_match_error,
            "degenerate_a": spec.degenerate_a,
            "routh_first_column": jsonable(col.entries),
            "routh_sign_changes": col.sign_changes,
            "routh_degenerate": col.degenerate,
            "small_a_limits": {"b1": b1_lim, "c1": c1_lim},
            "verdict": stability.classify(pt, cfg.net, cfg.loads, cfg.ctrl),
        })
    write_json(out, jsonable(report))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vcstab",
        description="Stability toolkit for star DC networks of constant-power loads",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("equilibria", "solve and classify all operating points"),
        ("simulate", "integrate a demand scenario and write the trajectory CSV"),
        ("sweep", "bifurcation sweep over total demand, written as CSV"),
        ("stability", "spectral / Routh-Hurwitz report for one operating point"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--out", default=None, help="output path (overrides config)")
        p.add_argument("--dt", type=float, default=None, help="integration step override")
        p.add_argument("--seed", type=int, default=None, help="reserved")
    return parser


_DEFAULT_OUT = {
    "equilibria": "equilibria.json",
    "simulate": "trajectory.csv",
    "sweep": "sweep.csv",
    "stability": "stability.json",
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = args.out or cfg.output or _DEFAULT_OUT[args.command]
        if args.command == "equilibria":
            return cmd_equilibria(cfg, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, dt=args.dt)
        if args.command == "sweep":
            return cmd_sweep(cfg, out)
        return cmd_stability(cfg, out)
    except ConfigError as exc:
        print(f"vcstab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
