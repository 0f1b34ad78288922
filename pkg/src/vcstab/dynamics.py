"""Closed-loop and baseline load dynamics with a fixed-step RK4 integrator.

The integrator is deterministic: identical inputs give bit-identical
trajectories. Load conductances are clamped to the nonnegative orthant after
every step (analytically the orthant is invariant; the clamp only guards
against discretization undershoot).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .network import LoadSet, NetworkParams, as_conductances

#: Relative voltage threshold below which a run is declared collapsed.
COLLAPSE_VOLTAGE_FRACTION = 0.01

#: Default integration step (seconds).
DEFAULT_DT = 1e-3


@dataclass(frozen=True)
class ControllerParams:
    """Gains of the stabilization controller: damping-filter rate a, gain b."""

    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not (self.a > 0):
            raise ValueError(f"controller rate a must be > 0, got {self.a}")
        if self.b < 0:
            raise ValueError(f"damping gain b must be >= 0, got {self.b}")

    def check_regime(self, net: NetworkParams, gN_max=None):
        """Warn when the gains leave the regions the analysis relies on.

        b outside (0, E^2/27) voids the shed-band guarantees; a at or above
        v(gN_max)^2 voids the small-a stability argument (the caller supplies
        an upper bound on the total conductance of interest).
        """
        b_max = net.E**2 / 27.0
        if not (0 < self.b < b_max):
            warnings.warn(
                f"damping gain b={self.b} outside (0, E^2/27)=(0, {b_max:.6g}); "
                "shed-band guarantees do not apply",
                stacklevel=2,
            )
        if gN_max is not None:
            v_min = net.voltage(gN_max)
            if self.a >= v_min**2:
                warnings.warn(
                    f"filter rate a={self.a} >= v_min^2={v_min**2:.6g} for "
                    f"gN <= {gN_max}; stability analysis does not apply",
                    stacklevel=2,
                )


@dataclass
class VcsState:
    """Closed-loop state: conductances g, shared state phi, damping states ghat.

    For the baseline (no controller) system phi is 0 and ghat is empty.
    """

    g: np.ndarray
    phi: float = 0.0
    ghat: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        self.g = as_conductances(self.g)
        self.ghat = np.asarray(self.ghat, dtype=float)

    def copy(self):
        return VcsState(self.g.copy(), self.phi, self.ghat.copy())

    def flat(self):
        return np.concatenate([self.g, [self.phi], self.ghat])


class DemandSchedule:
    """Piecewise-linear per-load demand P_0,i(t), constant outside the breakpoints."""

    def __init__(self, times, demands):
        self.times = np.asarray(times, dtype=float)
        self.demands = np.asarray(demands, dtype=float)
        if self.times.ndim != 1 or len(self.times) < 1:
            raise ValueError("schedule needs at least one breakpoint")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("schedule breakpoints must be strictly increasing")
        if self.demands.shape[0] != len(self.times):
            raise ValueError("one demand row per breakpoint required")
        if np.any(self.demands < 0):
            raise ValueError("demands must be >= 0")

    @classmethod
    def constant(cls, p0):
        return cls([0.0], np.asarray(p0, dtype=float)[None, :])

    @property
    def n(self):
        return self.demands.shape[1]

    @property
    def end_time(self):
        return float(self.times[-1])

    def __call__(self, t):
        times = self.times
        if len(times) == 1 or t <= times[0]:
            return self.demands[0].copy()
        if t >= times[-1]:
            return self.demands[-1].copy()
        k = int(np.searchsorted(times, t, side="right"))
        w = (t - times[k - 1]) / (times[k] - times[k - 1])
        return (1.0 - w) * self.demands[k - 1] + w * self.demands[k]


def inflexible_rhs(net: NetworkParams, loads: LoadSet, g, p0=None):
    """gdot = -dP for every load (the all-inflexible baseline)."""
    g = as_conductances(g, loads.n)
    if p0 is None:
        p0 = loads.p0
    v = net.voltage(g.sum())
    return p0 - v**2 * g


def vcs_rhs(net: NetworkParams, loads: LoadSet, state: VcsState, ctrl: ControllerParams, p0=None):
    """Closed-loop derivatives (gdot, phidot, ghatdot).

    Flexible loads add the shedding term -kappa_i*phi and the damping term
    b*(ghat_i - g_i) on top of the baseline -dP_i; phi integrates the product
    of the total mismatch and the total-power slope.
    """
    g = as_conductances(state.g, loads.n)
    flex = loads.flexible_indices
    if len(state.ghat) != len(flex):
        raise ValueError(f"expected {len(flex)} damping states, got {len(state.ghat)}")
    if p0 is None:
        p0 = loads.p0
    gN = g.sum()
    v = net.voltage(gN)
    gdot = p0 - v**2 * g
    if len(flex):
        gdot[flex] += -loads.kappa * state.phi + ctrl.b * (state.ghat - g[flex])
    dPN = float(v**2 * gN - p0.sum())
    phidot = dPN * net.total_power_slope(gN)
    ghatdot = -ctrl.a * (state.ghat - g[flex])
    return gdot, phidot, ghatdot


def detect_collapse(state: VcsState, net: NetworkParams):
    """True when the bus voltage has fallen below 1% of the source voltage."""
    return net.voltage(state.g.sum()) < COLLAPSE_VOLTAGE_FRACTION * net.E


@dataclass
class Trajectory:
    """Sampled solution: times, flat states, and how to unpack them."""

    times: np.ndarray
    states: np.ndarray
    n: int
    flexible_indices: np.ndarray
    events: list = field(default_factory=list)
    reason: str = "horizon"

    def state_at(self, k) -> VcsState:
        y = self.states[k]
        return VcsState(y[: self.n], float(y[self.n]), y[self.n + 1 :].copy())

    @property
    def final_state(self) -> VcsState:
        return self.state_at(-1)

    @property
    def g(self):
        return self.states[:, : self.n]

    @property
    def phi(self):
        return self.states[:, self.n]

    @property
    def ghat(self):
        return self.states[:, self.n + 1 :]

    def voltages(self, net: NetworkParams):
        return net.voltage(self.g.sum(axis=1))


class IntegrationError(RuntimeError):
    """Non-finite state encountered; carries the trajectory up to the failure."""

    def __init__(self, message, trajectory: Trajectory):
        super().__init__(message)
        self.trajectory = trajectory


class System:
    """An ODE in flat coordinates [g, phi, ghat] with optional demand schedule."""

    def __init__(self, net, loads, ctrl=None, schedule=None):
        if schedule is not None and schedule.n != loads.n:
            raise ValueError("schedule width must match the number of loads")
        self.net = net
        self.loads = loads
        self.ctrl = ctrl
        self.schedule = schedule
        self.n = loads.n
        self.flex = loads.flexible_indices
        self.dim = loads.n + 1 + (len(self.flex) if ctrl is not None else 0)
        self._a_warned = ctrl is None

    def demand(self, t):
        return self.schedule(t) if self.schedule is not None else self.loads.p0

    def pack(self, state: VcsState):
        if self.ctrl is None:
            return np.concatenate([state.g, [state.phi]])
        return state.flat()

    def unpack(self, y) -> VcsState:
        state = object.__new__(VcsState)
        state.g = y[: self.n].copy()
        state.phi = float(y[self.n])
        state.ghat = y[self.n + 1 :].copy()
        return state

    def rhs(self, t, y):
        # hot path: same math as inflexible_rhs / vcs_rhs without revalidation
        p0 = self.demand(t)
        n = self.n
        net = self.net
        g = np.maximum(y[:n], 0.0)
        gN = g.sum()
        v2 = (net.E * net.g_l / (gN + net.g_l)) ** 2
        out = np.empty_like(y)
        out[:n] = p0 - v2 * g
        if self.ctrl is None:
            out[n] = 0.0
            return out
        flex = self.flex
        phi = y[n]
        ghat = y[n + 1 :]
        gf = g[flex]
        out[flex] += -self.loads.kappa * phi + self.ctrl.b * (ghat - gf)
        dPN = v2 * gN - p0.sum()
        slope = (net.E * net.g_l) ** 2 * (net.g_l - gN) / (gN + net.g_l) ** 3
        out[n] = dPN * slope
        out[n + 1 :] = -self.ctrl.a * (ghat - gf)
        return out

    def on_sample(self, t, y):
        if not self._a_warned:
            v = self.net.voltage(max(y[: self.n].sum(), 0.0))
            if self.ctrl.a >= v**2:
                warnings.warn(
                    f"filter rate a={self.ctrl.a} >= v(t)^2={v**2:.6g} at t={t:.6g}; "
                    "the stability analysis no longer applies",
                    stacklevel=2,
                )
                self._a_warned = True


@dataclass(frozen=True)
class Event:
    """Named terminating predicate on (t, state)."""

    name: str
    predicate: object


def collapse_event(net: NetworkParams) -> Event:
    return Event("collapse", lambda t, state: detect_collapse(state, net))


def integrate(system: System, state0: VcsState, t_span, dt=DEFAULT_DT, events=(), record_every=1):
    """Classical fixed-step RK4 with orthant projection and event hooks.

    Events are checked after every step; a firing event terminates the run
    and is recorded as (name, time). Raises IntegrationError when the state
    stops being finite.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    t0, tf = float(t_span[0]), float(t_span[1])
    if not np.isfinite([t0, tf]).all() or tf <= t0:
        raise ValueError(f"need a finite span with tf > t0, got {t_span}")

    y = system.pack(state0).astype(float)
    n_steps = int(np.ceil((tf - t0) / dt - 1e-12))
    times = [t0]
    samples = [y.copy()]
    fired = []
    reason = "horizon"
    rhs = system.rhs
    t = t0
    for k in range(n_steps):
        h = min(dt, tf - t)
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        np.maximum(y[: system.n], 0.0, out=y[: system.n])
        t = t0 + (k + 1) * dt if t + h < tf else tf

        record = (k + 1) % record_every == 0 or t >= tf
        if not np.isfinite(y).all():
            raise IntegrationError(
                f"non-finite state at t={t:.6g}",
                Trajectory(np.array(times), np.array(samples), system.n,
                           system.flex, fired, "non-finite"),
            )
        state = None
        for ev in events:
            state = state or system.unpack(y)
            if ev.predicate(t, state):
                fired.append((ev.name, t))
                reason = ev.name
                record = True
                break
        if record:
            times.append(t)
            samples.append(y.copy())
            system.on_sample(t, y)
        if reason != "horizon":
            break

    return Trajectory(np.array(times), np.array(samples), system.n, system.flex,
                      fired, reason)
