"""Algebra of the star DC network: voltage divider, powers, mismatches, capacity.

All quantities are in SI base units (volts, siemens, watts). Everything here
is a pure function of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class NetworkParams:
    """Source voltage E and line conductance g_l of the star network."""

    E: float
    g_l: float

    def __post_init__(self):
        object.__setattr__(self, "E", float(self.E))
        object.__setattr__(self, "g_l", float(self.g_l))
        if not (self.E > 0):
            raise ValueError(f"source voltage E must be > 0, got {self.E}")
        if not (self.g_l > 0):
            raise ValueError(f"line conductance g_l must be > 0, got {self.g_l}")

    def voltage(self, gN):
        """Bus voltage E*g_l/(gN + g_l) for total load conductance gN >= 0."""
        gN = _check_gN(gN)
        return self.E * self.g_l / (gN + self.g_l)

    def p_max(self):
        """Maximum power the line can deliver, E^2*g_l/4, attained at gN = g_l."""
        return self.E**2 * self.g_l / 4.0

    def total_power(self, gN):
        """Total power drawn by all loads, (E*g_l)^2 * gN / (gN + g_l)^2."""
        gN = _check_gN(gN)
        return (self.E * self.g_l) ** 2 * gN / (gN + self.g_l) ** 2

    def total_power_slope(self, gN):
        """d(total_power)/d(gN) = (E*g_l)^2 * (g_l - gN) / (gN + g_l)^3."""
        gN = _check_gN(gN)
        return (self.E * self.g_l) ** 2 * (self.g_l - gN) / (gN + self.g_l) ** 3


def _check_gN(gN):
    gN = np.asarray(gN, dtype=float)
    if np.any(gN < 0):
        raise ValueError(f"total conductance must be >= 0, got {gN}")
    return gN if gN.ndim else float(gN)


@dataclass(frozen=True)
class LoadSpec:
    """One load: nominal demand p0, flexibility flag, shedding weight kappa.

    kappa is required (and must be > 0) only for flexible loads. Inflexible
    loads must have p0 > 0; zero-demand inflexible loads are simply omitted
    from the model.
    """

    p0: float
    flexible: bool = False
    kappa: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "p0", float(self.p0))
        if self.kappa is not None:
            object.__setattr__(self, "kappa", float(self.kappa))
        if self.p0 < 0:
            raise ValueError(f"nominal demand must be >= 0, got {self.p0}")
        if self.flexible:
            if self.kappa is None or not (self.kappa > 0):
                raise ValueError(
                    f"flexible load requires shedding weight kappa > 0, got {self.kappa}"
                )
        elif self.p0 == 0:
            raise ValueError("inflexible load must have p0 > 0 (omit zero-demand loads)")


@dataclass(frozen=True)
class LoadSet:
    """Ordered collection of loads with derived index sets and aggregates."""

    loads: tuple[LoadSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "loads", tuple(self.loads))
        if len(self.loads) < 1:
            raise ValueError("need at least one load")
        # derived quantities are immutable; cache them once
        flex = np.array([i for i, l in enumerate(self.loads) if l.flexible], dtype=int)
        infl = np.array([i for i, l in enumerate(self.loads) if not l.flexible], dtype=int)
        kappa = np.array([self.loads[i].kappa for i in flex])
        p0 = np.array([l.p0 for l in self.loads])
        object.__setattr__(self, "_flex", flex)
        object.__setattr__(self, "_infl", infl)
        object.__setattr__(self, "_kappa", kappa)
        object.__setattr__(self, "_p0", p0)

    @property
    def n(self):
        return len(self.loads)

    @property
    def flexible_indices(self):
        return self._flex

    @property
    def inflexible_indices(self):
        return self._infl

    @property
    def n_f(self):
        return len(self._flex)

    @property
    def n_i(self):
        return len(self._infl)

    @property
    def p0(self):
        """Vector of nominal demands, in load order (do not mutate)."""
        return self._p0

    @property
    def kappa(self):
        """Shedding weights of the flexible loads, in flexible-index order."""
        return self._kappa

    @property
    def kappa_bar(self):
        return float(self._kappa.sum()) if self.n_f else 0.0

    @property
    def total_demand(self):
        return float(self._p0.sum())

    def scaled_to(self, p0n):
        """Same loads with demands rescaled so the total demand equals p0n."""
        if p0n < 0:
            raise ValueError(f"total demand must be >= 0, got {p0n}")
        base = self.total_demand
        if base == 0:
            raise ValueError("cannot rescale a load set with zero total demand")
        s = p0n / base
        return LoadSet(
            tuple(LoadSpec(l.p0 * s, l.flexible, l.kappa) for l in self.loads)
        )


def as_conductances(g, n=None):
    """Validate and return a conductance vector (g_i >= 0 for all i)."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 1:
        raise ValueError(f"conductance vector must be 1-D, got shape {g.shape}")
    if n is not None and len(g) != n:
        raise ValueError(f"expected {n} conductances, got {len(g)}")
    if np.any(g < 0):
        raise ValueError("conductances must be >= 0")
    return g


def load_powers(net: NetworkParams, loads: LoadSet, g):
    """Per-load powers and mismatches at conductances g.

    Returns (P, dP, v) with P_i = v^2 g_i and dP_i = P_i - p0_i, where
    v is the bus voltage at total conductance sum(g).
    """
    g = as_conductances(g, loads.n)
    v = net.voltage(g.sum())
    P = v**2 * g
    return P, P - loads.p0, v
