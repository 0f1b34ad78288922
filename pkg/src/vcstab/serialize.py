"""Config ingestion and bit-stable CSV/JSON serialization.

CSV output uses fixed scientific notation with 17 significant digits, LF line
endings, and UTF-8, so identical runs produce byte-identical files. Files are
written to a temporary path and renamed into place.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .dynamics import ControllerParams, DemandSchedule, VcsState
from .experiments import RampScenario, default_overload_ramp, linear_ramp
from .network import LoadSet, LoadSpec, NetworkParams


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass
class RunConfig:
    net: NetworkParams
    loads: LoadSet
    ctrl: ControllerParams | None = None
    scenario: RampScenario | None = None
    sweep_grid: list | None = None
    point: dict | None = None
    output: str | None = None
    raw: dict | None = None


def fmt(x):
    """One float, 17 significant digits, scientific notation."""
    return f"{float(x):.16e}"


def write_text_atomic(path, text):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    """rows of already-formatted strings; header is a list of column names."""
    lines = [",".join(header)]
    lines += [",".join(r) for r in rows]
    write_text_atomic(path, "\n".join(lines) + "\n")


def write_json(path, obj):
    write_text_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _jsonable(x):
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def jsonable(x):
    return _jsonable(x)


def parse_config(doc: dict) -> RunConfig:
    """Build a validated RunConfig from a parsed JSON document."""
    try:
        net = NetworkParams(float(doc["network"]["E"]), float(doc["network"]["g_l"]))
        specs = []
        for entry in doc["loads"]:
            specs.append(LoadSpec(float(entry["P0"]), bool(entry.get("flexible", False)),
                                  float(entry["kappa"]) if "kappa" in entry else None))
        loads = LoadSet(tuple(specs))
        ctrl = None
        if "controller" in doc and doc["controller"] is not None:
            ctrl = ControllerParams(float(doc["controller"]["a"]),
                                    float(doc["controller"]["b"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc

    scenario = None
    if "scenario" in doc and doc["scenario"] is not None:
        scenario = _parse_scenario(doc["scenario"], net, loads)
    sweep_grid = None
    if "sweep" in doc and doc["sweep"] is not None:
        sweep_grid = _parse_sweep(doc["sweep"])
    return RunConfig(net, loads, ctrl, scenario, sweep_grid,
                     doc.get("point"), doc.get("output"), raw=doc)


def _parse_scenario(sc, net, loads) -> RampScenario:
    try:
        horizon = float(sc["horizon"])
        dt = float(sc.get("dt", 1e-3))
        if "schedule" in sc:
            schedule = DemandSchedule(sc["schedule"]["times"],
                                      np.asarray(sc["schedule"]["demands"], dtype=float))
        elif "ramp" in sc:
            r = sc["ramp"]
            if "p0n_start" in r:
                schedule = linear_ramp(loads, float(r["p0n_start"]),
                                       float(r["p0n_end"]), float(r.get("t_ramp", 100.0)))
            else:
                schedule = default_overload_ramp(net, loads,
                                                 t_ramp=float(r.get("t_ramp", 100.0)),
                                                 start_frac=float(r.get("start_frac", 0.6)),
                                                 end_frac=float(r.get("end_frac", 1.2)))
        else:
            schedule = DemandSchedule.constant(loads.p0)
        initial = sc.get("initial", "equilibrium")
        if isinstance(initial, dict):
            initial = VcsState(np.asarray(initial["g"], dtype=float),
                               float(initial.get("phi", 0.0)),
                               np.asarray(initial.get("ghat", []), dtype=float))
        if schedule.n != loads.n:
            raise ValueError("schedule width must match the number of loads")
        return RampScenario(schedule, horizon, dt, initial)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def _parse_sweep(sw):
    try:
        if "grid" in sw:
            grid = [float(x) for x in sw["grid"]]
        else:
            grid = list(np.linspace(float(sw["start"]), float(sw["stop"]),
                                    int(sw["num"])))
        if not grid or any(x < 0 for x in grid):
            raise ValueError("sweep grid must be nonempty with demands >= 0")
        return grid
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sweep: {exc}") from exc


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(doc)


def config_to_dict(cfg: RunConfig) -> dict:
    """Canonical dictionary form; parse_config(config_to_dict(c)) == c."""
    doc = {
        "network": {"E": cfg.net.E, "g_l": cfg.net.g_l},
        "loads": [
            {"P0": l.p0, "flexible": l.flexible,
             **({"kappa": l.kappa} if l.kappa is not None else {})}
            for l in cfg.loads.loads
        ],
    }
    if cfg.ctrl is not None:
        doc["controller"] = {"a": cfg.ctrl.a, "b": cfg.ctrl.b}
    if cfg.scenario is not None:
        sc = {
            "horizon": cfg.scenario.horizon,
            "dt": cfg.scenario.dt,
            "schedule": {
                "times": list(map(float, cfg.scenario.schedule.times)),
                "demands": [list(map(float, row)) for row in cfg.scenario.schedule.demands],
            },
        }
        if isinstance(cfg.scenario.initial, VcsState):
            sc["initial"] = {"g": list(map(float, cfg.scenario.initial.g)),
                             "phi": cfg.scenario.initial.phi,
                             "ghat": list(map(float, cfg.scenario.initial.ghat))}
        else:
            sc["initial"] = cfg.scenario.initial
        doc["scenario"] = sc
    if cfg.sweep_grid is not None:
        doc["sweep"] = {"grid": list(map(float, cfg.sweep_grid))}
    if cfg.point is not None:
        doc["point"] = cfg.point
    if cfg.output is not None:
        doc["output"] = cfg.output
    return doc
