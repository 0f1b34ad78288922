"""Jacobians, closed-form spectra, Routh-Hurwitz classification, and the
damping-gain shed band."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ControllerParams, VcsState
from .equilibria import BOUNDARY_REL_TOL, EquilibriumPoint
from .network import LoadSet, NetworkParams, as_conductances

#: Routh entries within this absolute tolerance of zero make the column degenerate.
ROUTH_DEGENERATE_TOL = 1e-12

#: |a - (v^2 - 2 v^2 gI/(gN+g_l))| below this flags the degenerate -a eigenvalue.
DEGENERACY_TOL = 1e-9


def jacobian_inflexible(net: NetworkParams, loads: LoadSet, g_star):
    """Jacobian of gdot = -dP at g*: (2v^2/(gN+g_l)) g* 1^T - v^2 I."""
    g_star = as_conductances(g_star, loads.n)
    from .dynamics import inflexible_rhs

    res = float(np.abs(inflexible_rhs(net, loads, g_star)).max())
    if res > 1e-6:
        warnings.warn(f"g* is not an equilibrium (residual {res:.3g})", stacklevel=2)
    gN = g_star.sum()
    v = net.voltage(gN)
    w = 2 * v**2 / (gN + net.g_l) * g_star
    return np.outer(w, np.ones(loads.n)) - v**2 * np.eye(loads.n)


def rpsi_spectrum(w, q):
    """Eigenpairs of the rank-1-plus-scaled-identity matrix w 1^T + q I.

    Returns n pairs: (q, e1 - e_i) for i = 2..n and (sum(w) + q, w).
    """
    w = np.asarray(w, dtype=complex if np.iscomplexobj(w) else float)
    n = len(w)
    pairs = []
    for i in range(1, n):
        x = np.zeros(n)
        x[0], x[i] = 1.0, -1.0
        pairs.append((q, x))
    top = w.copy() if np.linalg.norm(w) > 0 else np.eye(n)[0]
    pairs.append((w.sum() + q, top))
    return pairs


def tilde_lambda(net: NetworkParams, gN):
    """v^2 (g_l - gN)/(g_l + gN); zero at capacity, minimum -E^2/27 at gN = 2 g_l."""
    v = net.voltage(gN)
    return v**2 * (net.g_l - gN) / (net.g_l + gN)


def mismatch_curvature_c(net: NetworkParams, p0n, gN):
    """Sensitivity c of the shared-state derivative to the total conductance."""
    if p0n < 0:
        raise ValueError(f"total demand must be >= 0, got {p0n}")
    v = net.voltage(gN)
    dPN = net.total_power(gN) - p0n
    first = (v**2 * (net.g_l - gN) / (gN + net.g_l)) ** 2
    second = dPN * 2 * v**2 * (gN - 2 * net.g_l) / (gN + net.g_l) ** 2
    return first + second


@dataclass(frozen=True)
class QuarticCoeffs:
    """Coefficients of lam^4 + a3 lam^3 + a2 lam^2 + a1 lam + a0."""

    a3: float
    a2: float
    a1: float
    a0: float

    def roots(self):
        return np.roots([1.0, self.a3, self.a2, self.a1, self.a0])


def vcs_quartic(net: NetworkParams, loads: LoadSet, ctrl: ControllerParams,
                gN, p0n, g_I_bar=None):
    """The four coupled-mode coefficients at total conductance gN, demand p0n.

    When g_I_bar is not given, the inflexible aggregate is recovered from the
    per-load equilibrium relation g_i = p0_i / v^2.
    """
    if loads.n_f < 1:
        raise ValueError("the coupled-mode quartic requires a flexible load")
    v = net.voltage(gN)
    v2 = v**2
    if g_I_bar is None:
        g_I_bar = float(loads.p0[loads.inflexible_indices].sum()) / v2
    lam = tilde_lambda(net, gN)
    c = mismatch_curvature_c(net, p0n, gN)
    kb = loads.kappa_bar
    a, b = ctrl.a, ctrl.b
    a0 = kb * a * c * v2
    a1 = a * v2 * lam + kb * c * (a + v2)
    a2 = kb * c + v2 * (a + b) - 2 * b * v2 * g_I_bar / (gN + net.g_l) + lam * (a + v2)
    a3 = b + a + v2 + lam
    return QuarticCoeffs(a3, a2, a1, a0)


def jacobian_vcs(net: NetworkParams, loads: LoadSet, state: VcsState,
                 ctrl: ControllerParams):
    """Full closed-loop Jacobian, size (n + 1 + n_F) in [g, phi, ghat] order."""
    n = loads.n
    flex = loads.flexible_indices
    n_f = len(flex)
    g = np.asarray(state.g, dtype=float)
    if len(g) != n or len(state.ghat) != n_f:
        raise ValueError("state shape does not match the load set")
    gN = g.sum()
    v2 = net.voltage(gN) ** 2
    dim = n + 1 + n_f
    J = np.zeros((dim, dim))

    # d(gdot)/dg: RPSI core minus the damping on flexible diagonal entries
    w = 2 * v2 / (gN + net.g_l) * g
    J[:n, :n] = np.outer(w, np.ones(n)) - v2 * np.eye(n)
    J[flex, flex] -= ctrl.b
    # d(gdot)/dphi and d(gdot)/dghat
    J[flex, n] = -loads.kappa
    for k, i in enumerate(flex):
        J[i, n + 1 + k] = ctrl.b
    # d(phidot)/dg is the constant row c 1^T
    c = mismatch_curvature_c(net, loads.total_demand, gN)
    J[n, :n] = c
    # damping filter rows
    for k, i in enumerate(flex):
        J[n + 1 + k, i] = ctrl.a
        J[n + 1 + k, n + 1 + k] = -ctrl.a
    return J


def _sorted_eigs(vals):
    vals = np.asarray(vals, dtype=complex)
    return vals[np.lexsort((vals.imag, vals.real))]


@dataclass
class SpectrumReport:
    """Closed-form eigenvalue groups checked against a dense numeric oracle."""

    quad_pair_roots: np.ndarray      # 2 roots, multiplicity n_F - 1 each
    minus_v2: float                  # eigenvalue -v^2, multiplicity n_I - 1
    quartic: QuarticCoeffs
    quartic_roots: np.ndarray
    closed_form_eigenvalues: np.ndarray
    oracle_eigenvalues: np.ndarray
    max_match_error: float
    degenerate_a: bool               # a coincides with v^2 - 2 v^2 gI/(gN + g_l)


def vcs_closed_form_spectrum(net: NetworkParams, loads: LoadSet, state: VcsState,
                             ctrl: ControllerParams) -> SpectrumReport:
    """Assemble the three closed-form eigenvalue groups and cross-check them
    against the numeric spectrum of the full Jacobian.

    With no inflexible loads the coupled modes reduce to a cubic; the -v^2
    factor of the quartic is then dropped along with the (n_I - 1)-fold group.
    """
    n_f, n_i = loads.n_f, loads.n_i
    if n_f < 1:
        raise ValueError("closed-form spectrum requires at least one flexible load")
    g = np.asarray(state.g, dtype=float)
    gN = g.sum()
    v2 = net.voltage(gN) ** 2
    a, b = ctrl.a, ctrl.b
    g_I_bar = float(g[loads.inflexible_indices].sum())

    quad = np.roots([1.0, a + b + v2, a * v2])
    quartic = vcs_quartic(net, loads, ctrl, gN, loads.total_demand, g_I_bar=g_I_bar)

    groups = list(np.repeat(quad, n_f - 1))
    if n_i >= 1:
        groups += [-v2] * (n_i - 1)
        groups += list(quartic.roots())
    else:
        # quartic = (lam + v^2) * cubic; only the cubic roots are eigenvalues
        kb, c = loads.kappa_bar, mismatch_curvature_c(net, loads.total_demand, gN)
        lam = tilde_lambda(net, gN)
        groups += list(np.roots([1.0, a + b + lam, a * lam + kb * c, kb * c * a]))

    closed = _sorted_eigs(groups)
    oracle = _sorted_eigs(np.linalg.eigvals(jacobian_vcs(net, loads, state, ctrl)))
    err = float(np.abs(closed - oracle).max()) if len(closed) == len(oracle) else math.inf
    degenerate = abs(a - (v2 - 2 * v2 * g_I_bar / (gN + net.g_l))) < DEGENERACY_TOL
    return SpectrumReport(quad, -v2, quartic, quartic.roots(), closed, oracle,
                          err, degenerate)


@dataclass
class RouthColumn:
    """First Routh-Hurwitz column (1, a3, b1, c1, d1) of the quartic."""

    entries: tuple
    sign_changes: int
    degenerate: bool


def routh_first_column(q: QuarticCoeffs) -> RouthColumn:
    """Build the first column; sign changes count right-half-plane roots.

    Division by a near-zero pivot is not attempted: the column is flagged
    degenerate instead.
    """
    a3, a2, a1, a0 = q.a3, q.a2, q.a1, q.a0
    if abs(a3) < ROUTH_DEGENERATE_TOL:
        return RouthColumn((1.0, a3, math.nan, math.nan, a0), 0, True)
    b1 = (a3 * a2 - a1) / a3
    b2 = a0
    if abs(b1) < ROUTH_DEGENERATE_TOL:
        return RouthColumn((1.0, a3, b1, math.nan, a0), 0, True)
    c1 = (b1 * a1 - a3 * b2) / b1
    d1 = a0
    entries = (1.0, a3, b1, c1, d1)
    degenerate = any(abs(e) < ROUTH_DEGENERATE_TOL for e in entries)
    signs = [math.copysign(1.0, e) for e in entries]
    changes = sum(1 for s0, s1 in zip(signs, signs[1:]) if s0 != s1)
    return RouthColumn(entries, changes, degenerate)


def classify(point: EquilibriumPoint, net: NetworkParams, loads: LoadSet,
             ctrl: ControllerParams | None):
    """Stability verdict for an equilibrium: stable | unstable | marginal | degenerate.

    Without a controller the verdict is the sign of gN* - g_l. With one, the
    always-left-half-plane groups are skipped and the verdict is the
    Routh-Hurwitz verdict on the coupled-mode quartic.
    """
    gN = point.gN_star
    if ctrl is None:
        if abs(gN - net.g_l) <= BOUNDARY_REL_TOL * net.g_l:
            return "marginal"
        return "stable" if gN < net.g_l else "unstable"
    g_I_bar = float(point.g_star[loads.inflexible_indices].sum())
    q = vcs_quartic(net, loads, ctrl, gN, loads.total_demand, g_I_bar=g_I_bar)
    col = routh_first_column(q)
    if col.degenerate:
        return "degenerate"
    return "stable" if col.sign_changes == 0 else "unstable"


def small_a_limits(net: NetworkParams, loads: LoadSet, ctrl: ControllerParams,
                   gN, p0n, g_I_bar=None):
    """Diagnostic a -> 0+ limits of the Routh pivots b1 and c1."""
    v2 = net.voltage(gN) ** 2
    if g_I_bar is None:
        g_I_bar = float(loads.p0[loads.inflexible_indices].sum()) / v2
    b = ctrl.b
    kb = loads.kappa_bar
    lam = tilde_lambda(net, gN)
    c = mismatch_curvature_c(net, p0n, gN)
    b1 = (b + lam) * (v2 + kb * c / (b + lam + v2)) - 2 * b * v2 * g_I_bar / (gN + net.g_l)
    c1 = kb * c * v2
    return b1, c1


def shed_band(net: NetworkParams, b):
    """Roots (m_b, M_b) of tilde_lambda(gN) + b = 0 around the minimizer 2 g_l.

    Valid for b in (0, E^2/27); m_b is found by bisection on (g_l, 2 g_l) and
    M_b on (2 g_l, G) with G expanded geometrically until it brackets the root.
    Returned as offsets from g_l.
    """
    b_max = net.E**2 / 27.0
    if not (0 < b < b_max):
        raise ValueError(f"damping gain must lie in (0, E^2/27) = (0, {b_max:.6g}), got {b}")

    def h(gN):
        return tilde_lambda(net, gN) + b

    xi = _bisect(h, net.g_l, 2 * net.g_l)
    hi = 4 * net.g_l
    while h(hi) < 0:
        hi *= 2.0
    Xi = _bisect(h, 2 * net.g_l, hi)
    return xi - net.g_l, Xi - net.g_l


def _bisect(f, lo, hi, f_tol=1e-13, max_iter=200):
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise ValueError("bisection interval does not bracket a root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) < f_tol or (hi - lo) < 1e-16 * max(1.0, abs(mid)):
            return mid
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)
