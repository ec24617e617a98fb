"""
Dynamics service: Lagrangian advection of the transported scalar and run diagnostics.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from axivort.core.config import numerics
from axivort.core.logging import logger
from axivort.models.dynamics import ClaimBoundReport, DiagnosticsRecord, SimConfig
from axivort.models.field import VorticityField
from axivort.services.biot_savart_service import BiotSavartService, biot_savart_service
from axivort.services.field_service import FieldService, field_service
from axivort.utils.exceptions import (
    DomainError,
    SimulationAbortedError,
    UnsupportedDimensionError,
)

Velocities = Tuple[np.ndarray, np.ndarray]


class DynamicsService:
    """Service class for time integration of vorticity fields."""

    def __init__(
        self, biot: BiotSavartService = biot_savart_service, fields: FieldService = field_service
    ):
        self.biot = biot
        self.fields = fields

    def _stage_velocity(
        self, field: VorticityField, r: np.ndarray, z: np.ndarray, area_mode: str
    ) -> Velocities:
        if area_mode == "volume":
            # omega_i * area_i is a Lagrangian invariant when sigma r^(d-2) area is carried
            weights = field.circulation
        else:
            weights = field.q * r ** (field.d - 2) * field.area
        ur, uz = self.biot.induced_velocity(field.d, r, z, weights, field.delta, r, z)
        if not (np.all(np.isfinite(ur)) and np.all(np.isfinite(uz))):
            raise SimulationAbortedError("non-finite velocity in a Runge-Kutta stage")
        return ur, uz

    def _advance(
        self,
        field: VorticityField,
        dt: float,
        integrator: str,
        area_mode: str,
        k1: Optional[Velocities] = None,
    ) -> VorticityField:
        r0, z0 = field.r, field.z

        def stage(k: Velocities, h: float) -> Velocities:
            r = np.maximum(r0 + h * k[0], 0.0)
            return self._stage_velocity(field, r, z0 + h * k[1], area_mode)

        if k1 is None:
            k1 = self._stage_velocity(field, r0, z0, area_mode)
        if integrator == "rk4":
            k2 = stage(k1, 0.5 * dt)
            k3 = stage(k2, 0.5 * dt)
            k4 = stage(k3, dt)
            r1 = r0 + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            z1 = z0 + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        elif integrator == "rk2":
            k2 = stage(k1, 0.5 * dt)
            r1 = r0 + dt * k2[0]
            z1 = z0 + dt * k2[1]
        else:
            raise DomainError(f"unknown integrator '{integrator}'")

        crossed = r1 < 0.0
        if np.any(crossed):
            logger.warning(f"{int(crossed.sum())} elements crossed the axis, clamped to r = 0")
            r1 = np.where(crossed, 0.0, r1)

        area = field.area
        if area_mode == "volume":
            moved = (r1 > 0.0) & (r0 > 0.0)
            ratio = np.where(moved, r0 / np.where(moved, r1, 1.0), 1.0)
            area = field.area * ratio ** (field.d - 2)
        return field.with_positions(r1, z1, area)

    def step(
        self,
        field: VorticityField,
        dt: float,
        integrator: str = "rk4",
        area_mode: str = "volume",
    ) -> VorticityField:
        """
        Advance every element by one Runge-Kutta step of the induced velocity.

        Args:
            field: Current field
            dt: Non-zero finite time step; negative values integrate backward
            integrator: "rk4" or "rk2"
            area_mode: "volume" carries sigma r^(d-2) area, "fixed" keeps area

        Returns:
            New field with moved elements; q is untouched
        """
        if not math.isfinite(dt) or dt == 0.0:
            raise DomainError(f"time step must be finite and non-zero, got {dt}")
        if area_mode not in ("volume", "fixed"):
            raise DomainError(f"unknown area mode '{area_mode}'")
        return self._advance(field, dt, integrator, area_mode)

    def suggest_time_step(self, field: VorticityField, cfl: float = numerics.CFL) -> float:
        """dt = cfl * h / max|u| with h the smallest element spacing."""
        spacing = float(np.sqrt(np.min(field.area)))
        ur, uz = self.biot.element_velocities(field)
        speed = float(np.max(np.hypot(ur, uz))) if ur.size else 0.0
        if speed == 0.0:
            return cfl * spacing
        return cfl * spacing / speed

    def reversibility_error(
        self, field: VorticityField, dt: float, n_steps: int, integrator: str = "rk4"
    ) -> float:
        """Max position error after n steps forward and n steps back."""
        current = field
        for _ in range(n_steps):
            current = self.step(current, dt, integrator)
        for _ in range(n_steps):
            current = self.step(current, -dt, integrator)
        return float(np.max(np.hypot(current.r - field.r, current.z - field.z)))

    def _record(
        self, field: VorticityField, t: float, length: float, max_ur: float, ur_on_r: float
    ) -> DiagnosticsRecord:
        fs = self.fields
        i_r2, i_z = fs.half_plane_moments(field)
        return DiagnosticsRecord(
            t=t,
            R=fs.support_radius(field),
            omega_max=fs.omega_max(field),
            relvort_L1=fs.lp_norm_rel_vort(field, 1.0),
            relvort_Linf=fs.lp_norm_rel_vort(field, math.inf),
            r_omega_L1=fs.weighted_l1(field, 1),
            energy=self.biot.kinetic_energy(field).value,
            I_r2=i_r2,
            I_z=i_z,
            L=length,
            max_ur=max_ur,
            ur_on_R=ur_on_r,
            support_volume=fs.support_volume(field),
        )

    def _radial_sup(self, field: VorticityField, k1: Velocities, n_z: int) -> Tuple[float, float]:
        elements = float(np.max(np.abs(k1[0]))) if k1[0].size else 0.0
        return elements, self.biot.max_radial_velocity_on_r(field, n_z)

    def run_simulation(
        self, initial: VorticityField, cfg: SimConfig
    ) -> List[DiagnosticsRecord]:
        """
        Integrate to cfg.t_end and emit diagnostics every cfg.diag_every steps.

        L(t) = 1 + int_0^t sup |u^r| ds is accumulated by the trapezoid rule, the sup being
        taken over element positions and the (R, z) probe. A non-finite velocity stops the
        run; the records up to the last valid state are returned.

        Args:
            initial: Field at t = 0
            cfg: Time-stepping parameters

        Returns:
            Emitted diagnostics records in time order
        """
        if cfg.d != initial.d:
            raise DomainError(
                f"config dimension {cfg.d} does not match field dimension {initial.d}"
            )
        field = initial if cfg.delta is None else initial.with_delta(cfg.delta)
        if initial.size == 0:
            raise DomainError("simulation needs a non-empty field")

        dt = cfg.dt if cfg.dt is not None else self.suggest_time_step(field, cfg.cfl)
        n_steps = 0 if cfg.t_end == 0.0 else max(1, int(math.ceil(cfg.t_end / dt - 1e-9)))
        if n_steps:
            dt = cfg.t_end / n_steps
        logger.info(
            f"🚀 Run started: {field.size} elements, d={field.d}, dt={dt:.4g}, "
            f"{n_steps} steps, {cfg.integrator}"
        )

        k1 = self._stage_velocity(field, field.r, field.z, cfg.area_mode)
        max_ur, ur_on_r = self._radial_sup(field, k1, cfg.probe_nz)
        length = 1.0
        records = [self._record(field, 0.0, length, max_ur, ur_on_r)]
        emitted = 0

        for n in range(1, n_steps + 1):
            try:
                moved = self._advance(field, dt, cfg.integrator, cfg.area_mode, k1)
                k1_next = self._stage_velocity(moved, moved.r, moved.z, cfg.area_mode)
            except SimulationAbortedError as exc:
                logger.error(f"❌ Run aborted at step {n} (t={(n - 1) * dt:.4g}): {exc}")
                if emitted != n - 1:
                    records.append(
                        self._record(field, (n - 1) * dt, length, max_ur, ur_on_r)
                    )
                return records
            field, k1 = moved, k1_next
            next_max, next_probe = self._radial_sup(field, k1, cfg.probe_nz)
            length += 0.5 * dt * (max(max_ur, ur_on_r) + max(next_max, next_probe))
            max_ur, ur_on_r = next_max, next_probe
            if n % cfg.diag_every == 0 or n == n_steps:
                records.append(self._record(field, n * dt, length, max_ur, ur_on_r))
                emitted = n
                logger.debug(f"t={n * dt:.4f} R={records[-1].R:.6f} L={length:.6f}")

        logger.info(f"✅ Run finished: {len(records)} records, L(t_end)={length:.6g}")
        return records

    def check_claim_bounds(
        self,
        series: Sequence[DiagnosticsRecord],
        initial: VorticityField,
        tol: float = numerics.CLAIM_TOL,
    ) -> ClaimBoundReport:
        """
        Check ||r w(t)||_1 <= (||w0/r||_1 + ||r w0||_1) L^2 and
        ||w(t)||_inf <= (||w0/r||_inf + ||w0||_inf) L along a run.

        Args:
            series: Diagnostics of a d = 3 run
            initial: The run's initial field
            tol: Relative slack on each ratio

        Returns:
            ClaimBoundReport with the worst ratio of each estimate
        """
        if initial.d != 3:
            raise UnsupportedDimensionError(initial.d, allowed="3")
        fs = self.fields
        a = fs.lp_norm_rel_vort(initial, 1.0) + fs.weighted_l1(initial, 1)
        b = fs.lp_norm_rel_vort(initial, math.inf) + fs.omega_max(initial)
        worst_rw, worst_w = 0.0, 0.0
        for rec in series:
            if rec.r_omega_L1 > 0.0:
                worst_rw = max(worst_rw, rec.r_omega_L1 / (a * rec.L**2))
            if rec.omega_max > 0.0:
                worst_w = max(worst_w, rec.omega_max / (b * rec.L))
        passed = worst_rw <= 1.0 + tol and worst_w <= 1.0 + tol
        return ClaimBoundReport(
            max_ratio_r_omega=worst_rw,
            max_ratio_omega=worst_w,
            tol=tol,
            records=len(series),
            passed=passed,
        )


# Global service instance
dynamics_service = DynamicsService()
