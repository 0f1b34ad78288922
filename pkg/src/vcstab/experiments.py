"""Experiment drivers: bifurcation sweeps, demand-ramp runs, and gain grids."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    ControllerParams,
    DemandSchedule,
    Event,
    System,
    Trajectory,
    VcsState,
    collapse_event,
    integrate,
)
from .equilibria import (
    EquilibriumPoint,
    all_equilibria,
    inflexible_equilibria,
    load_satisfaction_set,
    proportional_allocation_point,
)
from .network import LoadSet, NetworkParams
from . import stability

#: Multiplicative perturbation applied to g when confirming stability dynamically.
PERTURBATION_FACTOR = 1.01

#: Fraction of post-ramp samples used for steady-state assertions.
POST_TRANSIENT_FRACTION = 0.10


@dataclass(frozen=True)
class SweepRow:
    p0n: float
    branch: str
    gN: float
    v: float
    stable: str
    exists: bool


_BRANCH_ORDER = {"Es_low": 0, "boundary": 1, "Ep": 2, "Es_high": 3, "none": 4}


def bifurcation_sweep(net: NetworkParams, loads: LoadSet,
                      ctrl: ControllerParams | None, p0n_grid):
    """Solve and classify every equilibrium branch over a total-demand grid.

    Per-load demands are the base demands scaled by p0n / total_demand(base).
    Overloaded inflexible grid points emit a single exists=False row.
    """
    rows = []
    for p0n in sorted(float(p) for p in p0n_grid):
        if p0n < 0:
            raise ValueError(f"grid demands must be >= 0, got {p0n}")
        if p0n == 0.0:
            rows.append(SweepRow(0.0, "Es_low", 0.0, net.E, "stable", True))
            continue
        scaled = loads.scaled_to(p0n)
        points = all_equilibria(net, scaled, ctrl)
        points = _dedupe_capacity_point(points)
        if not points:
            rows.append(SweepRow(p0n, "none", float("nan"), float("nan"), "none", False))
            continue
        for pt in points:
            verdict = stability.classify(pt, net, scaled, ctrl) if pt.exists else "none"
            rows.append(SweepRow(p0n, pt.kind, pt.gN_star, pt.v_star, verdict, pt.exists))
    rows.sort(key=lambda r: (r.p0n, _BRANCH_ORDER.get(r.branch, 9)))
    return rows


def _dedupe_capacity_point(points):
    """At exactly p0n = P_max the Ep point coincides with the Es boundary point."""
    kinds = [p.kind for p in points]
    if "boundary" in kinds and "Ep" in kinds:
        bd = points[kinds.index("boundary")]
        ep = points[kinds.index("Ep")]
        if np.allclose(bd.g_star, ep.g_star, rtol=1e-9, atol=1e-12):
            return [p for p in points if p.kind != "boundary"]
    return points


@dataclass
class RampScenario:
    """A demand schedule plus integration settings and the initial-state rule."""

    schedule: DemandSchedule
    horizon: float
    dt: float = 1e-3
    initial: VcsState | str = "equilibrium"


def linear_ramp(loads: LoadSet, p0n_start, p0n_end, t_ramp):
    """Total demand ramped linearly over [0, t_ramp], per-load shares fixed."""
    shares = loads.p0 / loads.total_demand
    return DemandSchedule([0.0, t_ramp],
                          np.vstack([shares * p0n_start, shares * p0n_end]))


def default_overload_ramp(net: NetworkParams, loads: LoadSet, t_ramp=100.0,
                          start_frac=0.6, end_frac=1.2):
    return linear_ramp(loads, start_frac * net.p_max(), end_frac * net.p_max(), t_ramp)


@dataclass
class RampResult:
    trajectory: Trajectory
    collapsed: bool
    p0_t: np.ndarray      # per-sample demands, shape (m, n)
    v: np.ndarray
    P: np.ndarray         # per-sample load powers, shape (m, n)
    dP: np.ndarray
    schedule_end: float = 0.0


def initial_equilibrium_state(net: NetworkParams, loads: LoadSet,
                              ctrl: ControllerParams | None, p0) -> VcsState:
    """The low-conductance demand-satisfying equilibrium for demands p0."""
    at0 = loads.scaled_to(float(np.sum(p0)))
    pts = (inflexible_equilibria(net, at0) if ctrl is None
           else load_satisfaction_set(net, at0, ctrl))
    low = [p for p in pts if p.kind in ("Es_low", "boundary")]
    if not low:
        raise ValueError("no demand-satisfying equilibrium at the initial demands")
    pt = low[0]
    ghat = pt.ghat_star if ctrl is not None else np.empty(0)
    return VcsState(pt.g_star.copy(), 0.0, ghat.copy())


def run_ramp(net: NetworkParams, loads: LoadSet, ctrl: ControllerParams | None,
             scenario: RampScenario, record_every=1) -> RampResult:
    """Integrate under the time-varying demand schedule, watching for collapse."""
    schedule = scenario.schedule
    if isinstance(scenario.initial, VcsState):
        state0 = scenario.initial
    else:
        state0 = initial_equilibrium_state(net, loads, ctrl, schedule(0.0))
    system = System(net, loads, ctrl, schedule)
    traj = integrate(system, state0, (0.0, scenario.horizon), scenario.dt,
                     events=[collapse_event(net)], record_every=record_every)
    p0_t = np.array([schedule(t) for t in traj.times])
    v = traj.voltages(net)
    P = v[:, None] ** 2 * traj.g
    return RampResult(traj, traj.reason == "collapse", p0_t, v, P, P - p0_t,
                      schedule_end=schedule.end_time)


def post_transient_slice(result: RampResult):
    """Slice of the final samples recorded after the last schedule breakpoint."""
    times = result.trajectory.times
    settled = np.nonzero(times >= result.schedule_end)[0]
    k0 = int(settled[0]) if len(settled) else len(times) - 1
    tail = max(1, int((len(times) - k0) * POST_TRANSIENT_FRACTION))
    return slice(len(times) - tail, len(times))


def confirm_stability(net: NetworkParams, loads: LoadSet,
                      ctrl: ControllerParams | None, point: EquilibriumPoint,
                      horizon=400.0, dt=1e-2, tol=1e-6):
    """Integrate from a 1% conductance perturbation; True if the run returns
    to the point within tol (max-norm over the full state) before the horizon."""
    state0 = VcsState(point.g_star * PERTURBATION_FACTOR, point.phi_star,
                      point.ghat_star.copy())
    system = System(net, loads, ctrl)
    target = system.pack(VcsState(point.g_star, point.phi_star, point.ghat_star))

    def back(t, state):
        return np.abs(system.pack(state) - target).max() < tol

    traj = integrate(system, state0, (0.0, horizon), dt,
                     events=[Event("returned", back), collapse_event(net)],
                     record_every=50)
    return traj.reason == "returned"


@dataclass(frozen=True)
class GridCell:
    a: float
    b: float
    verdict: str          # converged-to-Es_low | converged-to-Ep | collapsed | other
    dP_norm: float


def ab_grid_study(net: NetworkParams, loads: LoadSet, scenario: RampScenario,
                  a_values, b_values, rel_tol=1e-2):
    """Terminal verdict of the ramp scenario for each controller gain pair."""
    cells = []
    for a in a_values:
        for b in b_values:
            if not (a > 0 and b > 0):
                raise ValueError("gain grids must be strictly positive")
            ctrl = ControllerParams(a, b)
            result = run_ramp(net, loads, ctrl, scenario, record_every=10)
            dP_norm = float(np.abs(result.dP[-1]).max())
            cells.append(GridCell(a, b, _terminal_verdict(net, loads, ctrl, result,
                                                         rel_tol), dP_norm))
    return cells


def _terminal_verdict(net, loads, ctrl, result: RampResult, rel_tol):
    if result.collapsed:
        return "collapsed"
    p0_T = result.p0_t[-1]
    terminal = loads.scaled_to(float(p0_T.sum()))
    g_T = result.trajectory.g[-1]
    scale = max(float(np.abs(g_T).max()), net.g_l)
    pts = load_satisfaction_set(net, terminal, ctrl)
    low = [p for p in pts if p.kind in ("Es_low", "boundary")]
    if low and np.abs(g_T - low[0].g_star).max() <= rel_tol * scale:
        return "converged-to-Es_low"
    ep = proportional_allocation_point(net, terminal, ctrl)
    if ep.exists and np.abs(g_T - ep.g_star).max() <= rel_tol * scale:
        return "converged-to-Ep"
    return "other"
