"""Tests for the dynamics service."""
import math

import numpy as np
import pytest

from axivort.models.dynamics import SimConfig
from axivort.models.field import VorticityField
from axivort.services.biot_savart_service import BiotSavartService
from axivort.services.dynamics_service import DynamicsService
from axivort.services.experiment_service import ExperimentService
from axivort.services.field_service import field_service
from axivort.utils.exceptions import DomainError, UnsupportedDimensionError


class PoisonedBiotSavart(BiotSavartService):
    """Returns NaN velocities for element self-evaluations after a number of calls."""

    def __init__(self, healthy_calls: int):
        super().__init__()
        self.healthy_calls = healthy_calls
        self.calls = 0

    def induced_velocity(self, d, src_r, src_z, weights, delta, tgt_r, tgt_z, threads=None):
        ur, uz = super().induced_velocity(d, src_r, src_z, weights, delta, tgt_r, tgt_z, threads)
        if tgt_r is src_r:
            self.calls += 1
            if self.calls > self.healthy_calls:
                return np.full_like(ur, np.nan), uz
        return ur, uz


class TestDynamicsService:
    """Test cases for DynamicsService."""

    @pytest.fixture
    def dynamics_service(self):
        """Create dynamics service instance."""
        return DynamicsService()

    def test_step_carries_q_and_measure(self, dynamics_service, ring_field):
        """Test a step moves elements, keeps q and conserves element volumes."""
        moved = dynamics_service.step(ring_field, 0.05)

        np.testing.assert_array_equal(moved.q, ring_field.q)
        assert moved.size == ring_field.size
        np.testing.assert_allclose(moved.measure, ring_field.measure, rtol=1e-12)
        assert field_service.lp_norm_rel_vort(moved, 1.0) == pytest.approx(
            field_service.lp_norm_rel_vort(ring_field, 1.0), rel=1e-12
        )
        assert not np.array_equal(moved.z, ring_field.z)

    def test_fixed_area_mode(self, dynamics_service, ring_field):
        """Test the fixed mode keeps dr dz cell areas."""
        moved = dynamics_service.step(ring_field, 0.05, area_mode="fixed")
        np.testing.assert_array_equal(moved.area, ring_field.area)

    def test_ring_translates_along_axis(self, dynamics_service, ring_field):
        """Test a positive ring self-propagates towards +z."""
        field = ring_field
        for _ in range(4):
            field = dynamics_service.step(field, 0.5)
        assert field_service.centroid_z(field) > field_service.centroid_z(ring_field)

    @pytest.mark.parametrize("dt", [0.0, math.nan, math.inf])
    def test_step_rejects_bad_time_step(self, dynamics_service, ring_field, dt):
        """Test zero and non-finite steps are rejected."""
        with pytest.raises(DomainError):
            dynamics_service.step(ring_field, dt)

    def test_step_rejects_unknown_modes(self, dynamics_service, ring_field):
        """Test unknown integrators and area modes are rejected."""
        with pytest.raises(DomainError):
            dynamics_service.step(ring_field, 0.1, integrator="euler")
        with pytest.raises(DomainError):
            dynamics_service.step(ring_field, 0.1, area_mode="mass")

    @pytest.mark.parametrize("integrator, bound", [("rk4", 1e-8), ("rk2", 1e-5)])
    def test_reversibility(self, dynamics_service, ring_field, integrator, bound):
        """Test forward then backward integration returns close to the start."""
        error = dynamics_service.reversibility_error(ring_field, 0.1, 5, integrator)
        assert error < bound

    def test_rk4_reversal_error_order(self, dynamics_service, ring_field):
        """Test the forward-backward error shrinks at least like dt^4 over a fixed time."""
        steps = np.array([1, 2, 4])
        dts = 0.8 / steps
        errors = [
            dynamics_service.reversibility_error(ring_field, float(dt), int(n), "rk4")
            for dt, n in zip(dts, steps)
        ]
        assert all(e > 0.0 for e in errors)
        slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
        assert slope >= 3.5

    def test_suggest_time_step(self, dynamics_service, ring_field, zero_field):
        """Test the CFL step is positive and falls back to the cell size at rest."""
        assert 0.0 < dynamics_service.suggest_time_step(ring_field) < math.inf
        expected = 0.2 * math.sqrt(0.01)
        assert dynamics_service.suggest_time_step(zero_field, 0.2) == pytest.approx(expected)

    def test_run_emits_records(self, dynamics_service, ring_field):
        """Test record times, the length function and exact conservation of q norms."""
        cfg = SimConfig(dt=0.02, t_end=0.1, diag_every=1)
        records = dynamics_service.run_simulation(ring_field, cfg)

        assert [rec.t for rec in records] == pytest.approx([0.0, 0.02, 0.04, 0.06, 0.08, 0.1])
        lengths = [rec.L for rec in records]
        assert lengths[0] == 1.0
        assert all(b >= a for a, b in zip(lengths, lengths[1:]))
        for rec in records:
            assert rec.relvort_L1 == pytest.approx(records[0].relvort_L1, rel=1e-12)
            assert rec.relvort_Linf == records[0].relvort_Linf
            assert rec.energy == pytest.approx(records[0].energy, rel=1e-3)

    def test_run_emits_final_record(self, dynamics_service, ring_field):
        """Test the last step is always emitted."""
        cfg = SimConfig(dt=0.02, t_end=0.1, diag_every=2)
        records = dynamics_service.run_simulation(ring_field, cfg)
        assert [rec.t for rec in records] == pytest.approx([0.0, 0.04, 0.08, 0.1])

    def test_run_with_cfl_step(self, dynamics_service, ring_field):
        """Test a CFL-chosen step still lands exactly on t_end."""
        cfg = SimConfig(t_end=0.3, diag_every=1000)
        records = dynamics_service.run_simulation(ring_field, cfg)
        assert records[-1].t == pytest.approx(0.3)

    def test_run_rejects_dimension_mismatch(self, dynamics_service, ring_field):
        """Test the config dimension must match the field."""
        with pytest.raises(DomainError):
            dynamics_service.run_simulation(ring_field, SimConfig(dt=0.1, d=4))

    def test_run_rejects_empty_field(self, dynamics_service):
        """Test a run needs elements."""
        empty = VorticityField(3, [], [], [], [])
        with pytest.raises(DomainError):
            dynamics_service.run_simulation(empty, SimConfig(dt=0.1))

    def test_run_aborts_on_non_finite_velocity(self, ring_field):
        """Test a NaN velocity stops the run and keeps the valid records."""
        # t = 0 stage, then three RK4 stages; the velocity of the moved field is poisoned
        service = DynamicsService(biot=PoisonedBiotSavart(healthy_calls=4))
        records = service.run_simulation(ring_field, SimConfig(dt=0.01, t_end=0.05))

        assert len(records) == 1
        assert records[0].t == 0.0

    def test_run_abort_appends_last_valid_state(self, ring_field):
        """Test an abort between emissions records the last valid state."""
        # two full steps survive, the third step's first stage is poisoned
        service = DynamicsService(biot=PoisonedBiotSavart(healthy_calls=9))
        cfg = SimConfig(dt=0.01, t_end=0.05, diag_every=5)
        records = service.run_simulation(ring_field, cfg)

        assert [rec.t for rec in records] == pytest.approx([0.0, 0.02])

    def test_claim_bounds_hold_on_ring_run(self, dynamics_service, ring_field):
        """Test the flow-map estimates along a short ring run."""
        records = dynamics_service.run_simulation(ring_field, SimConfig(dt=0.05, t_end=0.2))
        report = dynamics_service.check_claim_bounds(records, ring_field)

        assert report.passed
        assert report.records == len(records)
        assert 0.0 < report.max_ratio_r_omega <= 1.0
        assert 0.0 < report.max_ratio_omega <= 1.0

    def test_claim_bounds_need_d3(self, dynamics_service):
        """Test the flow-map estimates are d = 3 only."""
        field = VorticityField(4, [1.0], [0.0], [1.0], [0.1])
        with pytest.raises(UnsupportedDimensionError):
            dynamics_service.check_claim_bounds([], field)

    def test_rescaled_run_transforms_exactly(self, dynamics_service, ring_field):
        """Test a rescaled ring run is the original run with lengths and times divided by 2."""
        lam = 2.0
        records = dynamics_service.run_simulation(ring_field, SimConfig(dt=0.01, t_end=0.04))
        scaled = dynamics_service.run_simulation(
            field_service.rescale(ring_field, lam), SimConfig(dt=0.01 / lam, t_end=0.04 / lam)
        )

        assert len(scaled) == len(records)
        for base, rec in zip(records, scaled):
            assert rec.t == pytest.approx(base.t / lam, rel=1e-12, abs=1e-15)
            assert rec.R == pytest.approx(base.R / lam, rel=1e-9)
            assert rec.max_ur == pytest.approx(base.max_ur, rel=1e-9)
            assert rec.ur_on_R == pytest.approx(base.ur_on_R, rel=1e-9)
            # L carries an absolute 1, so only L - 1 scales
            assert rec.L - 1.0 == pytest.approx((base.L - 1.0) / lam, rel=1e-9, abs=1e-15)

    def test_scale_invariant_chains_on_rescaled_run(self, dynamics_service, ring_field):
        """Test the R chains give the same ratios on a rescaled run."""
        lam = 2.0
        chains = ExperimentService()
        records = dynamics_service.run_simulation(ring_field, SimConfig(dt=0.01, t_end=0.04))
        scaled = dynamics_service.run_simulation(
            field_service.rescale(ring_field, lam), SimConfig(dt=0.01 / lam, t_end=0.04 / lam)
        )

        key = chains.trajectory_bound_check(records, C=1.0)
        key_scaled = chains.trajectory_bound_check(scaled, C=1.0)
        assert key_scaled.max_ratio == pytest.approx(key.max_ratio, rel=1e-6, abs=1e-12)
        uniform = chains.feng_sverak_chain_check(records, C=1.0)
        uniform_scaled = chains.feng_sverak_chain_check(scaled, C=1.0)
        assert uniform_scaled.max_ratio == pytest.approx(uniform.max_ratio, rel=1e-6, abs=1e-12)

    def test_claim_bounds_on_rescaled_run(self, dynamics_service, ring_field):
        """Test the flow-map estimates keep holding after rescaling."""
        scaled_field = field_service.rescale(ring_field, 4.0)
        records = dynamics_service.run_simulation(
            scaled_field, SimConfig(dt=0.05 / 4.0, t_end=0.2 / 4.0)
        )
        report = dynamics_service.check_claim_bounds(records, scaled_field)
        assert report.passed
        assert report.max_ratio_omega <= 1.0
