#!/usr/bin/env python3
"""Why a star DC network collapses: capacity limit and runaway conductance.

The source can deliver at most E^2 g_l / 4 W. Constant-power loads that ask
for more keep raising their conductance, which only lowers the bus voltage
further -- total conductance grows without bound at least at the overload
rate until the voltage is gone.
"""

import numpy as np

from vcstab import (
    LoadSet,
    LoadSpec,
    NetworkParams,
    System,
    VcsState,
    collapse_event,
    integrate,
)

net = NetworkParams(E=2.0, g_l=1.0)
print(f"network: E = {net.E} V, g_l = {net.g_l} S, capacity P_max = {net.p_max()} W")

grid = np.linspace(0.0, 5.0, 11)
print("\ntotal power vs total conductance (peaks at gN = g_l):")
for gN in grid:
    bar = "#" * int(40 * net.total_power(gN) / net.p_max())
    print(f"  gN = {gN:4.1f}  P = {net.total_power(gN):.4f}  {bar}")

# demand 20% above capacity: no equilibrium exists, conductance runs away
loads = LoadSet((LoadSpec(1.2),))
traj = integrate(System(net, loads), VcsState(np.array([1.0])), (0.0, 200.0),
                 dt=0.01, events=[collapse_event(net)], record_every=100)

slopes = np.diff(traj.g[:, 0]) / np.diff(traj.times)
print(f"\noverload run (demand 1.2 W > P_max = {net.p_max()} W):")
print(f"  terminated by: {traj.reason} at t = {traj.times[-1]:.1f} s")
print(f"  final voltage: {traj.voltages(net)[-1]:.4f} V")
print(f"  conductance growth rate never below {slopes.min():.4f} S/s "
      f"(overload excess is 0.2 W)")
