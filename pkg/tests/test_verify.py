"""Verification toolkit: initial-condition parsing, route comparison,
membership battery, discrete action stationarity, mechanics reduction."""

import numpy as np
import pytest

import dirac_thermo as dt
from conftest import make_oscillator


@pytest.fixture(scope="module")
def piston_traj(piston):
    y0 = dt.lagrangian_chart_initial(piston, {"q": [1.0], "S": 0.0})
    return dt.integrate_explicit(dt.lagrangian_field(piston), y0, 0.1, 1e-3)


class TestChartInitial:
    def test_dict_form(self, piston):
        flat = dt.lagrangian_chart_initial(piston, {"q": [1.0], "S": 0.5, "v": [0.2]})
        assert np.array_equal(flat, [1.0, 0.5, 0.2])

    def test_dict_velocity_defaults_to_rest(self, piston):
        flat = dt.lagrangian_chart_initial(piston, {"q": [1.0], "S": 0.5})
        assert np.array_equal(flat, [1.0, 0.5, 0.0])

    def test_tuple_form(self, membrane):
        flat = dt.lagrangian_chart_initial(
            membrane, (np.zeros(3), [0.1, 0.2, 0.3], 1.0)
        )
        assert np.array_equal(flat, [0, 0, 0, 1.0, 0.1, 0.2, 0.3])

    def test_flat_passthrough(self, piston):
        flat = dt.lagrangian_chart_initial(piston, [1.0, 0.0, 0.3])
        assert np.array_equal(flat, [1.0, 0.0, 0.3])

    def test_degenerate_chart_drops_velocity(self, reactions):
        flat = dt.lagrangian_chart_initial(reactions, {"q": [0.2], "S": 0.1})
        assert np.array_equal(flat, [0.2, 0.1])

    def test_wrong_length_rejected(self, piston):
        with pytest.raises(dt.DimensionMismatchError):
            dt.lagrangian_chart_initial(piston, [1.0, 0.0])


class TestCrossFormulation:
    def test_piston_routes_agree(self, piston):
        report = dt.cross_formulation_compare(piston, {"q": [1.0], "S": 0.0}, 0.1, 1e-3)
        assert set(report.available) == {"lagrangian", "hamilton-dirac-N"}
        key = ("lagrangian", "hamilton-dirac-N")
        assert report.deviations[key] <= 1e-9
        assert report.final_deviations[key] <= report.deviations[key]

    def test_frictionless_piston_keeps_entropy_frozen(self):
        m = dt.build_piston(dt.PistonParams(lam=0.0))
        y0 = dt.lagrangian_chart_initial(m, {"q": [1.0], "S": 0.3})
        traj = dt.integrate_explicit(dt.lagrangian_field(m), y0, 0.1, 1e-3)
        S = np.array([pt.S for pt in traj.states])
        assert np.max(np.abs(S - 0.3)) == 0.0
        report = dt.cross_formulation_compare(m, y0, 0.1, 1e-3)
        assert report.deviations[("lagrangian", "hamilton-dirac-N")] <= 1e-9

    def test_degenerate_model_gates_momentum_route(self, reactions):
        report = dt.cross_formulation_compare(reactions, {"q": [0.0], "S": 0.0}, 0.1, 1e-3)
        assert report.available == ("lagrangian",)
        msg = report.unavailable["hamilton-dirac-N"]
        assert "velocity-independent" in msg


class TestEquivalenceBattery:
    def test_piston_all_formulations(self, piston):
        report = dt.formulation_equivalence_battery(
            piston, {"q": [1.0], "S": 0.0}, t_end=0.1, h=1e-3, sample_count=10
        )
        assert set(report.memberships) == {
            "pontryagin-P",
            "mixed-M",
            "cotangent-TstarQ",
            "momentum-N",
            "hamilton-N",
        }
        assert report.worst_solution_residual() <= 1e-6
        assert report.weakest_rejection() >= 1e-3

    def test_degenerate_model_runs_velocity_side_only(self, reactions):
        report = dt.formulation_equivalence_battery(
            reactions, {"q": [0.0], "S": 0.0}, t_end=0.1, h=1e-3, sample_count=5
        )
        assert set(report.memberships) == {"pontryagin-P", "mixed-M"}
        assert report.worst_solution_residual() <= 1e-6


class TestActionStationarity:
    def test_admissible_field_is_unit_and_constrained(self, piston, piston_traj):
        field = dt.admissible_variation(piston, piston_traj, seed=3)
        assert abs(field.sup_norm() - 1.0) < 1e-12
        for k, pt in enumerate(piston_traj.states):
            s = dt.entropy_slope(piston, pt.q, pt.v, pt.S)
            F = dt.friction_value(piston, pt.q, pt.v, pt.S)
            assert abs(s * field.dS[k] - F @ field.dq[k]) < 1e-12

    def test_admissible_residual_small_violating_large(self, piston, piston_traj):
        good = dt.admissible_variation(piston, piston_traj, seed=0)
        bad = dt.constraint_violating_variation(piston_traj, seed=0)
        r_good = dt.action_variation_residual(piston, piston_traj, good)
        r_bad = dt.action_variation_residual(piston, piston_traj, bad)
        assert r_good <= 1e-3
        assert r_bad >= 1e-1
        assert r_bad > 50.0 * r_good

    def test_projection_rebuilds_constrained_entropy_component(
        self, piston, piston_traj
    ):
        good = dt.admissible_variation(piston, piston_traj, seed=1)
        garbled = dt.VariationField(dq=good.dq, dS=np.zeros_like(good.dS))
        r_ref = dt.action_variation_residual(piston, piston_traj, good)
        r_proj = dt.action_variation_residual(
            piston, piston_traj, garbled, project=True
        )
        assert abs(r_proj - r_ref) < 1e-12

    def test_epsilon_must_be_positive(self, piston, piston_traj):
        field = dt.admissible_variation(piston, piston_traj)
        with pytest.raises(ValueError):
            dt.action_variation_residual(piston, piston_traj, field, epsilon=0.0)

    def test_nonvanishing_endpoint_rejected(self, piston, piston_traj):
        field = dt.admissible_variation(piston, piston_traj)
        dq = field.dq.copy()
        dq[0, 0] = 1.0
        with pytest.raises(dt.DiracThermoError, match="endpoint"):
            dt.action_variation_residual(
                piston, piston_traj, dt.VariationField(dq=dq, dS=field.dS)
            )

    def test_shape_mismatch_rejected(self, piston, piston_traj):
        K = len(piston_traj.states)
        field = dt.VariationField(dq=np.zeros((K + 1, 1)), dS=np.zeros(K + 1))
        with pytest.raises(dt.DimensionMismatchError):
            dt.action_variation_residual(piston, piston_traj, field)

    def test_momentum_route_states_lack_velocities(self, piston):
        hmodel = dt.build_hamiltonian_model(piston)
        p0 = dt.momentum_map(piston, [1.0], [0.0], 0.0)
        traj = dt.integrate_explicit(
            dt.hamilton_field_N(hmodel), np.array([1.0, 0.0, p0[0]]), 0.05, 1e-3
        )
        with pytest.raises(dt.DiracThermoError, match="velocity-carrying"):
            dt.admissible_variation(piston, traj)

    def test_violating_field_shape(self, piston_traj):
        field = dt.constraint_violating_variation(piston_traj)
        K = len(piston_traj.states)
        assert field.dq.shape == (K, 1)
        assert np.all(field.dq == 0.0)
        assert field.dS[0] == 0.0 and field.dS[-1] < 1e-30
        assert field.dS[K // 2] > 0.5


class TestMechanicsReduction:
    def test_oscillator_matches_canonical_oracle(self):
        osc = make_oscillator()
        report = dt.mechanics_reduction_check(
            osc, samples=50, canonical_field=lambda q, S, p: (p, -q)
        )
        assert report.max_canonical_deviation <= 1e-12
        assert report.max_entropy_rate == 0.0
        assert report.max_oracle_deviation <= 1e-12

    def test_thermal_model_fails_premise(self, piston):
        with pytest.raises(dt.DiracThermoError, match="entropy-independent"):
            dt.mechanics_reduction_check(piston, samples=5)
