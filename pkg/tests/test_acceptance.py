"""End-to-end acceptance checks. Each test prints one PASS line on success;
a failure is reported by pytest as usual."""

import json
import time

import numpy as np
import pytest

from vcstab import (
    ControllerParams,
    LoadSet,
    LoadSpec,
    NetworkParams,
    VcsState,
    cli,
    classify,
    collapse_event,
    integrate,
    jacobian_inflexible,
    shed_band,
    solve_total_conductance,
    tilde_lambda,
    vcs_closed_form_spectrum,
)
from vcstab.equilibria import (
    all_equilibria,
    inflexible_equilibria,
    proportional_allocation_point,
)
from vcstab.experiments import (
    RampScenario,
    bifurcation_sweep,
    confirm_stability,
    linear_ramp,
    post_transient_slice,
    run_ramp,
)
from vcstab.stability import routh_first_column, vcs_quartic
from vcstab.dynamics import System


def report(name, started, detail=""):
    extra = f" ({detail})" if detail else ""
    print(f"PASS {name} [{time.perf_counter() - started:.2f}s]{extra}")


def test_capacity_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        net = NetworkParams(rng.uniform(0.5, 10.0), rng.uniform(0.1, 5.0))
        # 5001 points over [0, 5 g_l] puts g_l exactly on the grid
        grid = np.linspace(0.0, 5.0 * net.g_l, 5001)
        peak = net.total_power(grid).max()
        worst = max(worst, abs(peak - net.p_max()) / net.p_max())
    assert worst < 1e-9
    report("capacity-identity", t0, f"max rel err {worst:.2e}")


def test_overload_collapse_rate():
    t0 = time.perf_counter()
    net = NetworkParams(2.0, 1.0)
    loads = LoadSet((LoadSpec(1.2),))  # 0.2 above capacity
    traj = integrate(System(net, loads), VcsState(np.array([1.0])),
                     (0.0, 200.0), dt=0.01, events=[collapse_event(net)])
    assert traj.reason == "collapse"
    slopes = np.diff(traj.g[:, 0]) / np.diff(traj.times)
    assert slopes.min() >= 0.2 - 1e-6
    report("overload-collapse-rate", t0,
           f"min slope {slopes.min():.6f}, collapse at t={traj.times[-1]:.1f}")


def test_equilibrium_quadratic_roots():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    net = NetworkParams(2.0, 1.0)
    for p0n in rng.uniform(1e-6, net.p_max() * (1 - 1e-12), size=50):
        lo, hi = solve_total_conductance(net, p0n)
        assert lo < net.g_l < hi
        assert abs(lo * hi - net.g_l**2) < 1e-10
    assert solve_total_conductance(net, net.p_max()) == [net.g_l]
    assert solve_total_conductance(net, net.p_max() * 1.000001) == []
    report("equilibrium-quadratic-roots", t0)


def test_inflexible_stability_boundary():
    t0 = time.perf_counter()
    net = NetworkParams(2.0, 1.0)
    seen = []
    for p0n in [0.2, 0.5, 0.8, 0.95, 1.0, 0.999999]:
        loads = LoadSet((LoadSpec(p0n / 2),) * 2)
        for pt in inflexible_equilibria(net, loads):
            verdict = classify(pt, net, loads, None)
            gN, v = pt.gN_star, pt.v_star
            lam_n = 2 * v**2 * gN / (gN + net.g_l) - v**2
            if verdict == "stable":
                assert gN < net.g_l and lam_n < 0
            elif verdict == "unstable":
                assert gN > net.g_l and lam_n > 0
            else:
                assert abs(gN - net.g_l) < 1e-9 and abs(lam_n) < 1e-9
            # lam_n really is the slow eigenvalue of the Jacobian
            eigs = np.linalg.eigvals(jacobian_inflexible(net, loads, pt.g_star))
            assert abs(np.sort(eigs.real)[-1] - lam_n) < 1e-9
            seen.append(verdict)
    assert {"stable", "unstable", "marginal"} <= set(seen)
    report("inflexible-stability-boundary", t0)


def test_closed_form_spectra_match_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(120):
        net = NetworkParams(rng.uniform(1.0, 4.0), rng.uniform(0.5, 2.0))
        n = int(rng.integers(2, 9))
        n_f = int(rng.integers(1, n + 1))
        specs = tuple(
            LoadSpec(rng.uniform(0.05, 0.4), True, rng.uniform(0.5, 3.0))
            if i < n_f else LoadSpec(rng.uniform(0.05, 0.4))
            for i in range(n))
        loads = LoadSet(specs)
        ctrl = ControllerParams(rng.uniform(0.01, 0.3), rng.uniform(0.01, 0.14))
        g = rng.uniform(0.05, 2.0, n)
        state = VcsState(g, rng.normal(), g[loads.flexible_indices])
        rep = vcs_closed_form_spectrum(net, loads, state, ctrl)
        worst = max(worst, rep.max_match_error)
    assert worst <= 1e-8

    # degenerate filter rate: -a joins the spectrum
    net = NetworkParams(2.0, 1.0)
    loads = LoadSet((LoadSpec(0.6, True, 1.0), LoadSpec(0.1)))
    g = np.array([0.45, 0.05])
    v2 = net.voltage(g.sum()) ** 2
    a = v2 - 2 * v2 * g[1] / (g.sum() + net.g_l)
    rep = vcs_closed_form_spectrum(net, loads, VcsState(g, 0.0, g[:1]),
                                   ControllerParams(a, 0.1))
    assert rep.degenerate_a
    assert np.abs(rep.oracle_eigenvalues + a).min() < 1e-9
    report("closed-form-spectra-oracle", t0, f"max abs err {worst:.2e}")


def test_proportional_shedding_ramp():
    t0 = time.perf_counter()
    net = NetworkParams(2.0, 1.0)
    loads = LoadSet((LoadSpec(0.3, True, 1.0), LoadSpec(0.3, True, 2.0),
                     LoadSpec(0.4)))
    ctrl = ControllerParams(0.1, 0.1)
    scenario = RampScenario(linear_ramp(loads, 0.6, 1.2, 100.0),
                            horizon=250.0, dt=0.01)
    result = run_ramp(net, loads, ctrl, scenario, record_every=20)
    assert not result.collapsed
    tail = post_transient_slice(result)
    dP = result.dP[tail].mean(axis=0)
    p_max = net.p_max()
    ratio = dP[0] / dP[1]
    assert ratio == pytest.approx(0.5, rel=0.02)
    assert abs(dP[2]) <= 1e-3 * p_max
    shed = dP[0] + dP[1]
    assert abs(shed - (p_max - 1.2)) <= 1e-3 * p_max
    report("proportional-shedding-ramp", t0,
           f"ratio {ratio:.4f}, inflexible mismatch {dP[2]:.2e}")


def test_routh_sign_pattern():
    t0 = time.perf_counter()
    net = NetworkParams(2.0, 1.0)
    ctrl = ControllerParams(0.1, 0.1)
    base = LoadSet((LoadSpec(0.5, True, 1.0), LoadSpec(0.5)))

    over = base.scaled_to(1.2)
    pt = proportional_allocation_point(net, over, ctrl)
    col = routh_first_column(vcs_quartic(net, over, ctrl, pt.gN_star, 1.2))
    assert all(e > 0 for e in col.entries)

    under = base.scaled_to(0.75)
    pt_u = proportional_allocation_point(net, under, ctrl)
    col_u = routh_first_column(vcs_quartic(net, under, ctrl, pt_u.gN_star, 0.75))
    assert col_u.entries[-1] < 0  # d1 flips sign below capacity

    for p0n in [0.5, 0.75, 0.9]:
        loads = base.scaled_to(p0n)
        low = all_equilibria(net, loads, ctrl)[0]
        assert low.kind == "Es_low"
        assert classify(low, net, loads, ctrl) == "stable"
    report("routh-sign-pattern", t0)


def test_shed_band_roots():
    t0 = time.perf_counter()
    net = NetworkParams(2.0, 1.0)
    bands = []
    for b in [0.05, 0.1, 0.13]:
        m_b, M_b = shed_band(net, b)
        assert abs(tilde_lambda(net, net.g_l + m_b) + b) < 1e-12
        assert abs(tilde_lambda(net, net.g_l + M_b) + b) < 1e-12
        bands.append((m_b, M_b))
    ms, Ms = zip(*bands)
    assert ms[0] < ms[1] < ms[2]
    assert Ms[0] > Ms[1] > Ms[2]
    assert abs(tilde_lambda(net, 2 * net.g_l) + net.E**2 / 27) < 1e-12
    report("shed-band-roots", t0, f"b=0.1 band ({ms[1]:.4f}, {Ms[1]:.4f})")


def test_bifurcation_structure():
    t0 = time.perf_counter()
    net = NetworkParams(2.0, 1.0)
    grid = [0.5, 0.75, 1.0, 1.1]

    infl = LoadSet((LoadSpec(0.5), LoadSpec(0.25)))
    rows_i = bifurcation_sweep(net, infl, None, grid)
    counts_i = [sum(r.p0n == p and r.exists for r in rows_i) for p in grid]
    assert counts_i == [2, 2, 1, 0]

    ctrl = ControllerParams(0.1, 0.1)
    flex = LoadSet((LoadSpec(0.3, True, 1.0), LoadSpec(0.3, True, 2.0),
                    LoadSpec(0.4)))
    rows_v = bifurcation_sweep(net, flex, ctrl, grid)
    counts_v = [sum(r.p0n == p and r.exists for r in rows_v) for p in grid]
    assert counts_v == [3, 3, 1, 1]

    confirmed = 0
    for rows, loads, c in [(rows_i, infl, None), (rows_v, flex, ctrl)]:
        for r in rows:
            if r.stable != "stable" or not r.exists:
                continue
            scaled = loads.scaled_to(r.p0n)
            pts = [p for p in all_equilibria(net, scaled, c)
                   if p.kind == r.branch and abs(p.gN_star - r.gN) < 1e-9]
            assert confirm_stability(net, scaled, c, pts[0])
            confirmed += 1
    assert confirmed >= 5
    report("bifurcation-structure", t0, f"{confirmed} stable branches confirmed")


def test_inflexible_overload_collapses_despite_controller(tmp_path):
    t0 = time.perf_counter()
    # flexible shedding cannot help when inflexible demand alone exceeds capacity
    doc = {
        "network": {"E": 2.0, "g_l": 1.0},
        "loads": [{"P0": 0.2, "flexible": True, "kappa": 1.0},
                  {"P0": 0.5, "flexible": False}],
        "controller": {"a": 0.1, "b": 0.1},
        "scenario": {"horizon": 400.0, "dt": 0.02,
                     "schedule": {"times": [0.0, 60.0],
                                  "demands": [[0.2, 0.5], [0.2, 1.3]]}},
    }
    cfg = tmp_path / "overload.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "overload.csv"
    code = cli.main(["simulate", "--config", str(cfg), "--out", str(out)])
    assert code == cli.EXIT_COLLAPSE
    assert out.read_text().splitlines()[-1].endswith(",1")
    report("inflexible-overload-collapse", t0, "exit code 4")
