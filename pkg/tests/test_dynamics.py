import numpy as np
import pytest

from vcstab import (
    ControllerParams,
    DemandSchedule,
    Event,
    IntegrationError,
    LoadSet,
    LoadSpec,
    NetworkParams,
    System,
    VcsState,
    collapse_event,
    detect_collapse,
    inflexible_rhs,
    integrate,
    vcs_rhs,
)
from vcstab.equilibria import load_satisfaction_set, proportional_allocation_point


class TestControllerParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            ControllerParams(0.0, 0.1)
        with pytest.raises(ValueError):
            ControllerParams(0.1, -0.1)
        assert ControllerParams(0.1, 0.0).b == 0.0

    def test_regime_warning_large_b(self, net):
        with pytest.warns(UserWarning, match="shed-band"):
            ControllerParams(0.1, 0.5).check_regime(net)

    def test_regime_warning_large_a(self, net):
        with pytest.warns(UserWarning, match="stability analysis"):
            ControllerParams(0.5, 0.1).check_regime(net, gN_max=3.0)

    def test_regime_quiet_in_range(self, net):
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            ControllerParams(0.05, 0.1).check_regime(net, gN_max=1.0)


class TestDemandSchedule:
    def test_interpolation(self):
        sched = DemandSchedule([0.0, 10.0], np.array([[1.0, 2.0], [3.0, 2.0]]))
        np.testing.assert_allclose(sched(5.0), [2.0, 2.0])
        np.testing.assert_allclose(sched(-1.0), [1.0, 2.0])
        np.testing.assert_allclose(sched(100.0), [3.0, 2.0])
        assert sched.end_time == 10.0

    def test_constant(self):
        sched = DemandSchedule.constant([0.5, 0.25])
        np.testing.assert_allclose(sched(42.0), [0.5, 0.25])

    def test_rejects_unordered_breakpoints(self):
        with pytest.raises(ValueError):
            DemandSchedule([0.0, 0.0], np.zeros((2, 1)))

    def test_rejects_negative_demand(self):
        with pytest.raises(ValueError):
            DemandSchedule([0.0], np.array([[-1.0]]))


class TestInflexibleRhs:
    def test_at_equilibrium(self, net, two_inflexible):
        np.testing.assert_allclose(
            inflexible_rhs(net, two_inflexible, np.array([2 / 9, 1 / 9])),
            [0.0, 0.0], atol=1e-14)

    def test_undervoltage_growth(self, net, two_inflexible):
        # past the high-conductance branch every mismatch is negative supply-side
        gdot = inflexible_rhs(net, two_inflexible, np.array([4.0, 2.0]))
        assert np.all(gdot > 0)

    def test_demand_override(self, net, two_inflexible):
        gdot = inflexible_rhs(net, two_inflexible, np.zeros(2), p0=np.array([1.0, 1.0]))
        np.testing.assert_allclose(gdot, [1.0, 1.0])


class TestVcsRhs:
    def test_zero_at_proportional_point(self, net, ctrl):
        loads = LoadSet((LoadSpec(0.7, True, 1.0), LoadSpec(0.5)))
        pt = proportional_allocation_point(net, loads, ctrl)
        state = VcsState(pt.g_star, pt.phi_star, pt.ghat_star)
        gdot, phidot, ghatdot = vcs_rhs(net, loads, state, ctrl)
        assert np.abs(gdot).max() < 1e-12
        assert abs(phidot) < 1e-12
        assert np.abs(ghatdot).max() < 1e-12

    def test_zero_at_satisfaction_point(self, net, ctrl):
        loads = LoadSet((LoadSpec(0.5, True, 1.0), LoadSpec(0.25)))
        pt = load_satisfaction_set(net, loads, ctrl)[0]
        state = VcsState(pt.g_star, 0.0, pt.ghat_star)
        gdot, phidot, ghatdot = vcs_rhs(net, loads, state, ctrl)
        assert max(np.abs(gdot).max(), abs(phidot), np.abs(ghatdot).max()) < 1e-12

    def test_reduces_to_inflexible_bitwise(self, net, ctrl, two_inflexible, rng):
        for _ in range(20):
            g = rng.uniform(0, 3, size=2)
            state = VcsState(g, 0.7, np.empty(0))
            gdot, _, ghatdot = vcs_rhs(net, two_inflexible, state, ctrl)
            base = inflexible_rhs(net, two_inflexible, g)
            assert np.array_equal(gdot, base)
            assert len(ghatdot) == 0

    def test_ghat_shape_checked(self, net, ctrl, mixed_pair):
        with pytest.raises(ValueError):
            vcs_rhs(net, mixed_pair, VcsState(np.array([0.5, 0.5])), ctrl)


class TestDetectCollapse:
    def test_threshold(self, net):
        assert not detect_collapse(VcsState(np.array([50.0])), net)  # v = 2/51
        assert detect_collapse(VcsState(np.array([300.0])), net)     # v < 0.02


def _system_rhs_matches_reference(net, loads, ctrl, y, t=0.0):
    system = System(net, loads, ctrl)
    out = system.rhs(t, y.copy())
    state = system.unpack(y)
    if ctrl is None:
        ref = inflexible_rhs(net, loads, np.maximum(state.g, 0))
        np.testing.assert_array_equal(out[: loads.n], ref)
    else:
        gdot, phidot, ghatdot = vcs_rhs(
            net, loads, VcsState(np.maximum(state.g, 0), state.phi, state.ghat), ctrl)
        np.testing.assert_allclose(out[: loads.n], gdot, rtol=0, atol=0)
        assert out[loads.n] == pytest.approx(phidot, rel=1e-12, abs=1e-15)
        np.testing.assert_allclose(out[loads.n + 1:], ghatdot, rtol=0, atol=0)


class TestSystem:
    def test_fast_rhs_matches_reference(self, net, ctrl, mixed_pair, rng):
        for _ in range(25):
            y = np.concatenate([rng.uniform(0, 3, 2), [rng.normal()], rng.uniform(0, 3, 1)])
            _system_rhs_matches_reference(net, mixed_pair, ctrl, y)

    def test_fast_rhs_matches_inflexible(self, net, two_inflexible, rng):
        for _ in range(25):
            y = np.concatenate([rng.uniform(0, 3, 2), [0.0]])
            _system_rhs_matches_reference(net, two_inflexible, None, y)

    def test_schedule_width_checked(self, net, two_inflexible):
        with pytest.raises(ValueError):
            System(net, two_inflexible, None, DemandSchedule.constant([0.5]))

    def test_large_a_warning_during_run(self, net, mixed_pair):
        # a above v(t)^2 along the whole run triggers the one-shot warning
        ctrl = ControllerParams(10.0, 0.1)
        system = System(net, mixed_pair, ctrl)
        state0 = VcsState(np.array([0.5, 0.5]), 0.0, np.array([0.5]))
        with pytest.warns(UserWarning, match="no longer applies"):
            integrate(system, state0, (0.0, 0.1), dt=0.01)


class TestIntegrate:
    def test_stays_at_equilibrium(self, net, ctrl):
        loads = LoadSet((LoadSpec(0.5, True, 1.0), LoadSpec(0.25)))
        pt = load_satisfaction_set(net, loads, ctrl)[0]
        state0 = VcsState(pt.g_star, 0.0, pt.ghat_star)
        traj = integrate(System(net, loads, ctrl), state0, (0.0, 5.0), dt=0.01)
        drift = np.abs(traj.states - traj.states[0]).max()
        assert drift < 1e-9

    def test_collapse_run_terminates(self, net):
        loads = LoadSet((LoadSpec(1.2),))
        traj = integrate(System(net, loads), VcsState(np.array([1.0])),
                         (0.0, 200.0), dt=0.01, events=[collapse_event(net)],
                         record_every=10)
        assert traj.reason == "collapse"
        assert traj.events[0][0] == "collapse"
        # overload: total conductance grows at least at the overload rate
        slopes = np.diff(traj.g[:, 0]) / np.diff(traj.times)
        assert slopes.min() >= 0.2 - 1e-6

    def test_orthant_invariance(self, net, ctrl):
        loads = LoadSet((LoadSpec(0.01, True, 1.0), LoadSpec(0.3)))
        state0 = VcsState(np.array([2.0, 0.2]), 5.0, np.array([0.0]))
        traj = integrate(System(net, loads, ctrl), state0, (0.0, 20.0), dt=0.01)
        assert traj.g.min() >= 0.0

    def test_deterministic_repeats(self, net, ctrl, mixed_pair):
        def run():
            state0 = VcsState(np.array([0.4, 0.6]), 0.1, np.array([0.4]))
            return integrate(System(net, mixed_pair, ctrl), state0, (0.0, 10.0),
                             dt=0.01).states

        assert np.array_equal(run(), run())

    def test_rk4_order_step_halving(self, net, ctrl):
        # terminal error vs a fine reference should shrink ~16x per halving
        loads = LoadSet((LoadSpec(0.5, True, 1.0), LoadSpec(0.25)))
        state0 = VcsState(np.array([0.3, 0.15]), 0.05, np.array([0.25]))

        def terminal(dt):
            return integrate(System(net, loads, ctrl), state0, (0.0, 2.0),
                             dt=dt, record_every=10**9).states[-1]

        ref = terminal(0.0005)
        e1 = np.abs(terminal(0.08) - ref).max()
        e2 = np.abs(terminal(0.04) - ref).max()
        assert 12.0 <= e1 / e2 <= 20.0

    def test_custom_event_and_record_every(self, net, two_inflexible):
        ev = Event("halfway", lambda t, s: t >= 1.0)
        traj = integrate(System(net, two_inflexible),
                         VcsState(np.array([2 / 9, 1 / 9])), (0.0, 5.0),
                         dt=0.1, events=[ev], record_every=5)
        assert traj.reason == "halfway"
        assert traj.times[-1] == pytest.approx(1.0)

    def test_nonfinite_raises_with_partial_trajectory(self, net, two_inflexible):
        class Exploding(System):
            def rhs(self, t, y):
                if t > 0.5:
                    return np.full_like(y, np.inf)
                return super().rhs(t, y)

        with pytest.raises(IntegrationError) as err:
            integrate(Exploding(net, two_inflexible),
                      VcsState(np.array([0.2, 0.1])), (0.0, 2.0), dt=0.1)
        assert err.value.trajectory.reason == "non-finite"
        assert len(err.value.trajectory.times) >= 1

    def test_bad_span_and_dt(self, net, two_inflexible):
        system = System(net, two_inflexible)
        s0 = VcsState(np.array([0.2, 0.1]))
        with pytest.raises(ValueError):
            integrate(system, s0, (0.0, 1.0), dt=0.0)
        with pytest.raises(ValueError):
            integrate(system, s0, (1.0, 1.0))

    def test_trajectory_accessors(self, net, ctrl, mixed_pair):
        state0 = VcsState(np.array([0.4, 0.6]), 0.1, np.array([0.4]))
        traj = integrate(System(net, mixed_pair, ctrl), state0, (0.0, 1.0), dt=0.1)
        final = traj.final_state
        assert final.g.shape == (2,) and final.ghat.shape == (1,)
        np.testing.assert_allclose(traj.voltages(net),
                                   net.voltage(traj.g.sum(axis=1)))
