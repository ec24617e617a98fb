"""
Experiment service: growth-exponent fits and pathwise checks of the differential bound chains
along simulated trajectories.
"""
import math
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from axivort.core.config import numerics
from axivort.core.logging import logger
from axivort.models.dynamics import DiagnosticsRecord
from axivort.models.experiment import (
    BoundCheckReport,
    ConservationReport,
    GrowthFit,
    GrowthTableRow,
    MonotonicityReport,
)
from axivort.models.field import SUPPORTED_DIMENSIONS
from axivort.models.inequality import InequalityName
from axivort.utils.exceptions import (
    DomainError,
    InsufficientSamplesError,
    UnsupportedDimensionError,
)

CONSERVED_NORMS = ("relvort_L1", "relvort_Linf", "energy")


def predicted_growth_exponent(d: int) -> Optional[Fraction]:
    """Upper growth exponent 4/(6-d) of R(t); None marks exponential growth at d = 6."""
    if d not in SUPPORTED_DIMENSIONS:
        raise UnsupportedDimensionError(d)
    if d == 6:
        return None
    return Fraction(4, 6 - d)


def _ratios(lhs: np.ndarray, bound: np.ndarray) -> np.ndarray:
    lhs = np.abs(lhs)
    out = np.zeros_like(lhs)
    positive = bound > 0.0
    out[positive] = lhs[positive] / bound[positive]
    out[~positive & (lhs > 0.0)] = math.inf
    return out


class ExperimentService:
    """Service class for post-processing simulated diagnostics series."""

    def __init__(
        self,
        slack: float = numerics.BOUND_SLACK,
        min_samples: int = numerics.MIN_FIT_SAMPLES,
    ):
        self.slack = slack
        self.min_samples = min_samples

    @staticmethod
    def _require_records(series: Sequence[DiagnosticsRecord], minimum: int = 3) -> None:
        if len(series) < minimum:
            raise InsufficientSamplesError(
                f"bound check needs at least {minimum} records, got {len(series)}"
            )

    @staticmethod
    def _column(series: Sequence[DiagnosticsRecord], name: str) -> np.ndarray:
        return np.array([getattr(rec, name) for rec in series], dtype=float)

    def _time_derivative(self, series: Sequence[DiagnosticsRecord], name: str) -> np.ndarray:
        # centred differences inside, one-sided at both ends
        return np.gradient(self._column(series, name), self._column(series, "t"))

    def _verdict(
        self, name: str, constant: float, ratios: np.ndarray, times: np.ndarray
    ) -> BoundCheckReport:
        worst = int(np.argmax(ratios))
        passed = bool(ratios[worst] <= 1.0 + self.slack)
        logger.info(
            f"{'✅' if passed else '❌'} {name}: max ratio {ratios[worst]:.4f} "
            f"at t={times[worst]:.4g} (C={constant:.4g})"
        )
        return BoundCheckReport(
            name=name,
            constant=constant,
            max_ratio=float(ratios[worst]),
            worst_t=float(times[worst]),
            slack=self.slack,
            records=int(ratios.size),
            passed=passed,
        )

    # Growth fits

    def fit_growth_exponent(
        self,
        series: Sequence[Tuple[float, float]],
        window: Optional[Tuple[float, float]] = None,
        series_name: str = "R",
    ) -> GrowthFit:
        """
        Fit value ~ (1 + t)^beta on a time window.

        Args:
            series: (t, value) samples in time order
            window: (t_lo, t_hi); defaults to the last half of the series
            series_name: Label carried into the result

        Returns:
            GrowthFit with slope, intercept and RMS log-log residual
        """
        if not series:
            raise InsufficientSamplesError("cannot fit an empty series")
        t = np.array([p[0] for p in series], dtype=float)
        values = np.array([p[1] for p in series], dtype=float)
        if window is None:
            window = (t[0] + 0.5 * (t[-1] - t[0]), float(t[-1]))
        t_lo, t_hi = window
        if not t_lo < t_hi:
            raise DomainError(f"fit window must satisfy t_lo < t_hi, got {window}")
        inside = (t >= t_lo) & (t <= t_hi)
        if int(inside.sum()) < self.min_samples:
            raise InsufficientSamplesError(
                f"growth fit needs {self.min_samples} samples in {window}, got {int(inside.sum())}"
            )
        if np.any(values[inside] <= 0.0):
            raise DomainError(f"growth fit of {series_name} needs positive values")
        if np.any(t[inside] <= -1.0):
            raise DomainError("growth fit needs t > -1")

        log_t = np.log1p(t[inside])
        log_v = np.log(values[inside])
        result = stats.linregress(log_t, log_v)
        residual = float(np.sqrt(np.mean((log_v - (result.intercept + result.slope * log_t)) ** 2)))
        return GrowthFit(
            beta=float(result.slope),
            window=(float(t_lo), float(t_hi)),
            residual=residual,
            series_name=series_name,
            intercept=float(result.intercept),
            samples=int(inside.sum()),
        )

    def fit_series(
        self,
        records: Sequence[DiagnosticsRecord],
        name: str,
        window: Optional[Tuple[float, float]] = None,
    ) -> GrowthFit:
        return self.fit_growth_exponent(
            [(rec.t, getattr(rec, name)) for rec in records], window, series_name=name
        )

    # Record-level constants

    def record_constants(
        self, series: Sequence[DiagnosticsRecord], name: InequalityName, d: int = 3
    ) -> List[float]:
        """
        Empirical constants of an inequality evaluated from diagnostics records alone.

        The key estimates use the probed sup at R; the uniform bounds use the larger of the
        element and probe suprema.
        """
        name = InequalityName(name)
        constants = []
        for rec in series:
            if name in (InequalityName.KEY_R14, InequalityName.KEY_HIGHD):
                lhs = rec.ur_on_R
                rhs = (
                    rec.relvort_Linf ** (1.0 / d) * rec.relvort_L1 ** (1.0 - 1.0 / d)
                    + rec.R ** (d / 4.0 - 0.5) * rec.energy**0.5 * rec.relvort_Linf**0.5
                )
            elif name is InequalityName.GLOBAL_ENERGY:
                lhs = max(rec.max_ur, rec.ur_on_R)
                rhs = rec.energy ** (1 / 3) * rec.relvort_Linf**0.5 * rec.r_omega_L1 ** (1 / 6)
            elif name is InequalityName.FENG_SVERAK:
                lhs = max(rec.max_ur, rec.ur_on_R)
                rhs = rec.relvort_Linf**0.5 * rec.relvort_L1**0.25 * rec.r_omega_L1**0.25
            else:
                raise DomainError(f"no record-level form for {name.value}")
            constants.append(lhs / rhs if rhs > 0.0 else 0.0)
        return constants

    # Pathwise chains

    def trajectory_bound_check(
        self, series: Sequence[DiagnosticsRecord], C: float, d: int = 3
    ) -> BoundCheckReport:
        """
        Check |dR/dt| <= C (c1 + c2 R^(d/4 - 1/2)) at every record.

        Args:
            series: Diagnostics of one run, t = 0 record first
            C: Empirical constant of the key estimate
            d: Dimension; d = 3 gives the R^(1/4) chain

        Returns:
            BoundCheckReport with the max ratio of |dR/dt| to the bound
        """
        self._require_records(series)
        first = series[0]
        c1 = first.relvort_Linf ** (1.0 / d) * first.relvort_L1 ** (1.0 - 1.0 / d)
        c2 = first.energy**0.5 * first.relvort_Linf**0.5
        radius = self._column(series, "R")
        bound = C * (c1 + c2 * radius ** (d / 4.0 - 0.5))
        ratios = _ratios(self._time_derivative(series, "R"), bound)
        name = "key_R14_chain" if d == 3 else f"key_highd_chain_d{d}"
        return self._verdict(name, C, ratios, self._column(series, "t"))

    def feng_sverak_chain_check(
        self, series: Sequence[DiagnosticsRecord], C: float
    ) -> BoundCheckReport:
        """|dR/dt| <= C ||q0||_inf^(1/2) ||q0||_1^(1/4) ||r w(t)||_1^(1/4)."""
        self._require_records(series)
        first = series[0]
        r_omega = self._column(series, "r_omega_L1")
        bound = C * first.relvort_Linf**0.5 * first.relvort_L1**0.25 * r_omega**0.25
        ratios = _ratios(self._time_derivative(series, "R"), bound)
        return self._verdict("feng_sverak_chain", C, ratios, self._column(series, "t"))

    def length_function_monitor(
        self, series: Sequence[DiagnosticsRecord], C_global: float
    ) -> BoundCheckReport:
        """
        Check dL/dt <= C_A L^(1/3) for the length function L(t).

        C_A = C ||u0||_2^(1/3) ||q0||_inf^(1/2) (||q0||_1 + ||r w0||_1)^(1/6) combines the
        uniform u^r bound with ||r w(t)||_1 <= (||q0||_1 + ||r w0||_1) L^2.

        Args:
            series: d = 3 diagnostics, t = 0 record first
            C_global: Empirical constant of the uniform u^r bound

        Returns:
            BoundCheckReport whose constant is C_A
        """
        self._require_records(series)
        first = series[0]
        c_a = (
            C_global
            * first.energy ** (1.0 / 3.0)
            * first.relvort_Linf**0.5
            * (first.relvort_L1 + first.r_omega_L1) ** (1.0 / 6.0)
        )
        length = self._column(series, "L")
        ratios = _ratios(self._time_derivative(series, "L"), c_a * length ** (1.0 / 3.0))
        return self._verdict("length_function_chain", c_a, ratios, self._column(series, "t"))

    # Conservation and monotonicity

    def conservation_drift(
        self,
        series: Sequence[DiagnosticsRecord],
        include_r_omega: bool = False,
        tol: float = numerics.CONSERVATION_TOL,
        energy_tol: float = numerics.ENERGY_DRIFT_TOL,
    ) -> ConservationReport:
        """
        Max relative drift of the conserved norms; ||r w||_1 only for single-signed data.

        Energy drift is reported against its own, looser tolerance since blobs regularise it.
        """
        if not series:
            raise InsufficientSamplesError("conservation check needs at least one record")
        names = CONSERVED_NORMS + (("r_omega_L1",) if include_r_omega else ())
        drifts: Dict[str, float] = {}
        for name in names:
            values = self._column(series, name)
            ref = values[0]
            drifts[name] = 0.0 if ref == 0.0 else float(np.max(np.abs(values - ref)) / abs(ref))
        passed = all(
            drift <= (energy_tol if name == "energy" else tol) for name, drift in drifts.items()
        )
        return ConservationReport(drifts=drifts, tol=tol, passed=passed)

    def monotonicity_check(
        self, series: Sequence[DiagnosticsRecord], slack: float = numerics.MONOTONE_SLACK
    ) -> MonotonicityReport:
        """int r^2 |w| must not decrease and int |z w| must not increase between records."""
        i_r2 = self._column(series, "I_r2")
        i_z = self._column(series, "I_z")
        decrease = float(np.max(np.maximum(i_r2[:-1] - i_r2[1:], 0.0))) if i_r2.size > 1 else 0.0
        increase = float(np.max(np.maximum(i_z[1:] - i_z[:-1], 0.0))) if i_z.size > 1 else 0.0
        return MonotonicityReport(
            max_decrease_I_r2=decrease,
            max_increase_I_z=increase,
            slack=slack,
            passed=decrease <= slack and increase <= slack,
        )

    def high_d_growth_table(
        self, d_list: Sequence[int], fits: Optional[Dict[int, GrowthFit]] = None
    ) -> List[GrowthTableRow]:
        """Predicted growth exponents per dimension next to any fitted ones."""
        fits = fits or {}
        rows = []
        for d in d_list:
            exponent = predicted_growth_exponent(d)
            fit = fits.get(d)
            rows.append(
                GrowthTableRow(
                    d=d,
                    predicted="exp" if exponent is None else str(exponent),
                    fitted=None if fit is None else fit.beta,
                )
            )
        return rows


# Global service instance
experiment_service = ExperimentService()
