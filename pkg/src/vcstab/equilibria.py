"""Closed-form equilibria: the total-conductance quadratic, the load
satisfaction set, and the proportional-allocation point."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ControllerParams, VcsState, inflexible_rhs, vcs_rhs
from .network import LoadSet, NetworkParams

#: |p0n - P_max| within this relative tolerance is treated as the boundary case.
CAPACITY_REL_TOL = 1e-12

#: |gN - g_l| within this relative tolerance classifies a point as boundary/Ep.
BOUNDARY_REL_TOL = 1e-10


@dataclass(frozen=True)
class EquilibriumPoint:
    """A solved operating point with class tag and existence flag."""

    g_star: np.ndarray
    phi_star: float
    ghat_star: np.ndarray
    gN_star: float
    v_star: float
    kind: str  # 'Es_low' | 'Es_high' | 'Ep' | 'boundary'
    exists: bool = True

    def residual(self, net: NetworkParams, loads: LoadSet, ctrl: ControllerParams | None):
        """Max-norm of the corresponding RHS at the point (nan when exists=False)."""
        if not self.exists:
            return math.nan
        if ctrl is None:
            return float(np.abs(inflexible_rhs(net, loads, self.g_star)).max())
        state = VcsState(self.g_star, self.phi_star, self.ghat_star)
        gdot, phidot, ghatdot = vcs_rhs(net, loads, state, ctrl)
        parts = [np.abs(gdot).max(), abs(phidot)]
        if len(ghatdot):
            parts.append(np.abs(ghatdot).max())
        return float(max(parts))


def solve_total_conductance(net: NetworkParams, p0n):
    """Roots gN of the equilibrium quadratic gN^2 + (2g_l - (E g_l)^2/p0n) gN + g_l^2.

    Returns [] above capacity, [g_l] at capacity, the two straddling roots
    below it, and [0] for zero demand. The larger root is computed first and
    the smaller recovered from the Vieta product g_l^2 to avoid cancellation
    near the double root.
    """
    if p0n < 0:
        raise ValueError(f"total demand must be >= 0, got {p0n}")
    p_max = net.p_max()
    if p0n == 0:
        return [0.0]
    if abs(p0n - p_max) <= CAPACITY_REL_TOL * p_max:
        return [net.g_l]
    if p0n > p_max:
        return []
    B = 2 * net.g_l - (net.E * net.g_l) ** 2 / p0n  # < -2 g_l below capacity
    disc = B * B - 4 * net.g_l**2
    hi = (-B + math.sqrt(disc)) / 2.0
    lo = net.g_l**2 / hi
    return [lo, hi]


def _classify_gN(gN, g_l, es_kind=True):
    if abs(gN - g_l) <= BOUNDARY_REL_TOL * g_l:
        return "boundary"
    return ("Es_low" if es_kind else "low") if gN < g_l else ("Es_high" if es_kind else "high")


def _points_from_roots(net, loads, roots, with_controller):
    points = []
    flex = loads.flexible_indices
    for gN in roots:
        v = net.voltage(gN)
        g = loads.p0 / v**2
        ghat = g[flex] if with_controller else np.empty(0)
        points.append(
            EquilibriumPoint(g, 0.0, ghat, float(g.sum()), v, _classify_gN(gN, net.g_l))
        )
    return points


def inflexible_equilibria(net: NetworkParams, loads: LoadSet):
    """Equilibria of the all-inflexible system; empty list means overload."""
    roots = solve_total_conductance(net, loads.total_demand)
    return _points_from_roots(net, loads, roots, with_controller=False)


def load_satisfaction_set(net: NetworkParams, loads: LoadSet, ctrl: ControllerParams):
    """Equilibria where every demand is met exactly (phi* = 0, ghat* = g*|F)."""
    if loads.n_f < 1:
        raise ValueError("load satisfaction set requires at least one flexible load")
    roots = solve_total_conductance(net, loads.total_demand)
    return _points_from_roots(net, loads, roots, with_controller=True)


def proportional_allocation_point(net: NetworkParams, loads: LoadSet, ctrl: ControllerParams):
    """The unique capacity point gN* = g_l, v* = E/2 with proportional shedding.

    Reported with exists=False (conductances unclamped) when some flexible
    load would need negative conductance, i.e. flexible demand is depleted.
    """
    if loads.n_f < 1:
        raise ValueError("proportional allocation requires at least one flexible load")
    p_max = net.p_max()
    v = net.E / 2.0
    shortfall = p_max - loads.total_demand  # negative under overload
    phi = -shortfall / loads.kappa_bar
    g = loads.p0 / v**2
    flex = loads.flexible_indices
    g[flex] = (loads.p0[flex] + loads.kappa / loads.kappa_bar * shortfall) / v**2
    exists = bool(np.all(g[flex] >= 0))
    return EquilibriumPoint(g, float(phi), g[flex].copy(), float(g.sum()), v, "Ep", exists)


def all_equilibria(net: NetworkParams, loads: LoadSet, ctrl: ControllerParams | None):
    """Every equilibrium of the configured system, Es branches then Ep."""
    if ctrl is None:
        return inflexible_equilibria(net, loads)
    return load_satisfaction_set(net, loads, ctrl) + [
        proportional_allocation_point(net, loads, ctrl)
    ]
