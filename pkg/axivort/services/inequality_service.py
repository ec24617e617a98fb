"""
Inequality service: evaluate both sides of the velocity estimates on discrete fields,
check their scaling invariance and solve exponent-determination systems exactly.
"""
import math
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from axivort.core.config import numerics
from axivort.core.logging import logger
from axivort.models.field import VorticityField
from axivort.models.inequality import (
    CorpusSummary,
    ExponentTriple,
    InequalityName,
    InequalityReport,
    LinearConstraint,
    RhsFactor,
    ScalingSuiteResult,
)
from axivort.services.biot_savart_service import BiotSavartService, biot_savart_service
from axivort.services.field_service import FieldService, field_service
from axivort.utils.exceptions import (
    DomainError,
    InconsistentSystemError,
    RankDeficientSystemError,
    UnsupportedDimensionError,
)

# (term index, norm name, exponent)
Term = Tuple[int, str, Fraction]

TRIPLE_UNKNOWNS = ("alpha", "beta", "gamma")

# Which supremum each inequality bounds
LHS_KIND = {
    InequalityName.KEY_R14: "ur_on_R",
    InequalityName.KEY_HIGHD: "ur_on_R",
    InequalityName.GLOBAL_ENERGY: "ur_sup",
    InequalityName.FENG_SVERAK: "u_sup",
    InequalityName.MAJDA_BERTOZZI: "u_sup",
}

THREE_D_ONLY = {
    InequalityName.KEY_R14,
    InequalityName.GLOBAL_ENERGY,
    InequalityName.FENG_SVERAK,
    InequalityName.MAJDA_BERTOZZI,
}


def inequality_terms(name: InequalityName, d: int = 3) -> List[Term]:
    """Right-hand side of each inequality as (term, norm, exponent) triples."""
    name = InequalityName(name)
    if name is InequalityName.KEY_R14:
        return [
            (0, "q_inf", Fraction(1, 3)),
            (0, "q_L1", Fraction(2, 3)),
            (1, "R", Fraction(1, 4)),
            (1, "energy", Fraction(1, 2)),
            (1, "q_inf", Fraction(1, 2)),
        ]
    if name is InequalityName.KEY_HIGHD:
        return [
            (0, "q_inf", Fraction(1, d)),
            (0, "q_L1", 1 - Fraction(1, d)),
            (1, "R", Fraction(d, 4) - Fraction(1, 2)),
            (1, "energy", Fraction(1, 2)),
            (1, "q_inf", Fraction(1, 2)),
        ]
    if name is InequalityName.GLOBAL_ENERGY:
        return [
            (0, "energy", Fraction(1, 3)),
            (0, "q_inf", Fraction(1, 2)),
            (0, "r_omega_L1", Fraction(1, 6)),
        ]
    if name is InequalityName.FENG_SVERAK:
        return [
            (0, "q_inf", Fraction(1, 2)),
            (0, "q_L1", Fraction(1, 4)),
            (0, "r_omega_L1", Fraction(1, 4)),
        ]
    # the support volume is recorded beside the vorticity bound, not weighted
    return [(0, "omega_inf", Fraction(1)), (0, "support_volume", Fraction(0))]


def scaling_weights(d: int) -> Dict[str, Fraction]:
    """Power of lambda picked up by each norm under omega -> lambda omega(lambda x)."""
    return {
        "q_inf": Fraction(d - 1),
        "q_L1": Fraction(-1),
        "r_omega_L1": Fraction(-d),
        "energy": Fraction(-d, 2),
        "R": Fraction(-1),
        "omega_inf": Fraction(1),
        "support_volume": Fraction(-d),
    }


# Cross-sectional scaling of a thin ring at fixed ring radius
TWO_D_WEIGHTS = {
    "q_inf": Fraction(1),
    "q_L1": Fraction(-1),
    "r_omega_L1": Fraction(-1),
    "energy": Fraction(-1),
}


def homogeneity(unknowns: Sequence[str]) -> LinearConstraint:
    """Exponents sum to one."""
    return LinearConstraint(
        coefficients={u: 1 for u in unknowns}, rhs=1, label="homogeneity"
    )


def scaling_law(
    norms: Dict[str, str], weights: Dict[str, Fraction], label: str, lhs_weight: Fraction = 0
) -> LinearConstraint:
    """
    The right-hand side must scale like the left-hand side.

    Args:
        norms: unknown name -> norm name
        weights: norm name -> scaling power
        label: Name reported on inconsistency
        lhs_weight: Scaling power of the bounded quantity

    Returns:
        sum(weights[norm] * x) = lhs_weight
    """
    return LinearConstraint(
        coefficients={u: weights[n] for u, n in norms.items()}, rhs=lhs_weight, label=label
    )


def fixed_exponent(unknown: str, value: Fraction) -> LinearConstraint:
    return LinearConstraint(coefficients={unknown: 1}, rhs=value, label=f"{unknown} = {value}")


def feng_sverak_system() -> List[LinearConstraint]:
    """Homogeneity, 3D scaling and alpha = 1/2 for ||q||_inf^a ||q||_1^b ||r w||_1^c."""
    norms = {"alpha": "q_inf", "beta": "q_L1", "gamma": "r_omega_L1"}
    return [
        homogeneity(TRIPLE_UNKNOWNS),
        scaling_law(norms, scaling_weights(3), "3D scaling"),
        fixed_exponent("alpha", Fraction(1, 2)),
    ]


def energy_variant_system() -> Tuple[List[LinearConstraint], Tuple[str, ...]]:
    """Four-factor system with the energy whose solution is the uniform u^r bound."""
    norms = {"energy": "energy", "q_inf": "q_inf", "q_L1": "q_L1", "r_omega_L1": "r_omega_L1"}
    unknowns = tuple(norms)
    constraints = [
        homogeneity(unknowns),
        scaling_law(norms, scaling_weights(3), "3D scaling"),
        scaling_law(norms, TWO_D_WEIGHTS, "two-dimensionalization"),
        fixed_exponent("q_L1", Fraction(0)),
    ]
    return constraints, unknowns


class InequalityService:
    """Service class for inequality certification on vorticity fields."""

    def __init__(
        self,
        biot: BiotSavartService = biot_savart_service,
        fields: FieldService = field_service,
        probe_nz: int = numerics.PROBE_NZ,
        stability_tol: float = numerics.CORPUS_STABILITY_TOL,
    ):
        self.biot = biot
        self.fields = fields
        self.probe_nz = probe_nz
        self.stability_tol = stability_tol

    def _norms(self, field: VorticityField) -> Dict[str, Callable[[], float]]:
        fs = self.fields
        return {
            "q_inf": lambda: fs.lp_norm_rel_vort(field, math.inf),
            "q_L1": lambda: fs.lp_norm_rel_vort(field, 1.0),
            "r_omega_L1": lambda: fs.weighted_l1(field, 1),
            "energy": lambda: self.biot.kinetic_energy(field).value,
            "R": lambda: fs.support_radius(field),
            "omega_inf": lambda: fs.omega_max(field),
            "support_volume": lambda: fs.support_volume(field),
        }

    def _lhs(self, kind: str, field: VorticityField) -> float:
        if field.is_zero():
            return 0.0
        if kind == "ur_on_R":
            return self.biot.max_radial_velocity_on_r(field, self.probe_nz)
        return self.biot.velocity_sup(field, radial=kind == "ur_sup")[0]

    def evaluate(
        self,
        name: InequalityName,
        field: VorticityField,
        field_id: str = "",
        exponent_overrides: Optional[Dict[str, float]] = None,
    ) -> InequalityReport:
        """
        Evaluate an inequality on one field.

        Args:
            name: Which inequality
            field: Vorticity snapshot
            field_id: Provenance tag copied into the report
            exponent_overrides: norm name -> additive exponent perturbation, applied in every term

        Returns:
            InequalityReport with empirical_constant = lhs / rhs (0 when rhs = 0)
        """
        name = InequalityName(name)
        if name in THREE_D_ONLY and field.d != 3:
            raise UnsupportedDimensionError(field.d, allowed="3")
        if field.size == 0:
            raise DomainError("inequalities need a non-empty field")
        overrides = exponent_overrides or {}
        norms = self._norms(field)
        cache: Dict[str, float] = {}
        factors = []
        for term, norm, exponent in inequality_terms(name, field.d):
            if norm not in cache:
                cache[norm] = norms[norm]()
            factors.append(
                RhsFactor(
                    norm=norm,
                    value=cache[norm],
                    exponent=float(exponent) + overrides.get(norm, 0.0),
                    term=term,
                )
            )
        lhs = self._lhs(LHS_KIND[name], field)
        partial = InequalityReport(
            name=name, lhs=lhs, factors=factors, empirical_constant=0.0, field_id=field_id
        )
        rhs = partial.rhs()
        constant = lhs / rhs if rhs > 0.0 else 0.0
        return partial.model_copy(update={"empirical_constant": constant})

    def check_key_estimate(self, field: VorticityField, field_id: str = "") -> InequalityReport:
        """sup_z |u^r(R,z)| against the R^(1/4) estimate; d = 3."""
        return self.evaluate(InequalityName.KEY_R14, field, field_id)

    def check_key_estimate_high_d(
        self, field: VorticityField, field_id: str = ""
    ) -> InequalityReport:
        """Dimension-dependent form of the key estimate; identical to the d = 3 one at d = 3."""
        return self.evaluate(InequalityName.KEY_HIGHD, field, field_id)

    def check_global_estimate(self, field: VorticityField, field_id: str = "") -> InequalityReport:
        return self.evaluate(InequalityName.GLOBAL_ENERGY, field, field_id)

    def check_feng_sverak(self, field: VorticityField, field_id: str = "") -> InequalityReport:
        return self.evaluate(InequalityName.FENG_SVERAK, field, field_id)

    def check_majda_bertozzi(self, field: VorticityField, field_id: str = "") -> InequalityReport:
        return self.evaluate(InequalityName.MAJDA_BERTOZZI, field, field_id)

    # Corpus harness

    def check_corpus(
        self, name: InequalityName, corpus: Sequence[Tuple[str, VorticityField]]
    ) -> List[InequalityReport]:
        """Reports in field_id order."""
        ordered = sorted(corpus, key=lambda item: item[0])
        return [self.evaluate(name, field, field_id) for field_id, field in ordered]

    def summarize(self, reports: Sequence[InequalityReport]) -> CorpusSummary:
        """
        Max empirical constant over a corpus and its stability under corpus doubling.

        Args:
            reports: Reports of a single inequality in field_id order

        Returns:
            CorpusSummary; the half-corpus max is taken over the first half of the reports
        """
        if not reports:
            raise DomainError("cannot summarize an empty corpus")
        constants = [r.empirical_constant for r in reports]
        best = int(np.argmax(constants))
        half = max(1, len(reports) // 2)
        full_max = constants[best]
        half_max = max(constants[:half])
        stable = full_max == 0.0 or abs(full_max - half_max) <= self.stability_tol * full_max
        return CorpusSummary(
            name=reports[0].name,
            count=len(reports),
            max_constant=full_max,
            argmax_field_id=reports[best].field_id,
            half_corpus_max=half_max,
            stable=stable,
        )

    # Scaling invariance

    def scaling_invariance_suite(
        self,
        name: InequalityName,
        field: VorticityField,
        lambdas: Sequence[float],
        exponent_overrides: Optional[Dict[str, float]] = None,
        tol: float = numerics.SCALING_TOL,
    ) -> ScalingSuiteResult:
        """
        Empirical constant of ``name`` on ``rescale(field, lam)`` for each lambda.

        Args:
            name: Inequality under test
            field: Base field
            lambdas: Positive scale factors
            exponent_overrides: Perturbed exponents, used to confirm wrong exponents are caught
            tol: Allowed relative deviation from the unscaled constant

        Returns:
            ScalingSuiteResult with the max relative deviation
        """
        if any(not lam > 0.0 for lam in lambdas):
            raise DomainError("every scale factor must be positive")
        reference = self.evaluate(name, field, exponent_overrides=exponent_overrides)
        base = reference.empirical_constant
        constants: List[float] = []
        deviation = 0.0
        for lam in lambdas:
            scaled = self.fields.rescale(field, lam)
            constant = self.evaluate(
                name, scaled, exponent_overrides=exponent_overrides
            ).empirical_constant
            constants.append(constant)
            if base > 0.0:
                deviation = max(deviation, abs(constant / base - 1.0))
            elif constant > 0.0:
                deviation = math.inf
        passed = deviation < tol
        logger.info(
            f"{'✅' if passed else '❌'} Scaling suite {InequalityName(name).value}: "
            f"max deviation {deviation:.3e} over {len(lambdas)} scales"
        )
        return ScalingSuiteResult(
            name=name,
            lambdas=list(lambdas),
            constants=constants,
            reference_constant=base,
            max_deviation=deviation,
            tol=tol,
            passed=passed,
            overrides=exponent_overrides,
        )

    # Exponent systems

    def solve_exponent_system(
        self, constraints: Sequence[LinearConstraint], unknowns: Sequence[str]
    ) -> Dict[str, Fraction]:
        """
        Exact Gauss-Jordan elimination over the rationals.

        Args:
            constraints: Linear constraints on the unknowns
            unknowns: Names of the unknowns, fixing the column order

        Returns:
            Mapping unknown -> exact rational value
        """
        unknowns = list(unknowns)
        for c in constraints:
            extra = set(c.coefficients) - set(unknowns)
            if extra:
                raise DomainError(f"constraint '{c.label}' names unknown exponents {sorted(extra)}")
        rows = [
            [c.coefficients.get(u, Fraction(0)) for u in unknowns] + [c.rhs] for c in constraints
        ]
        labels = [c.label for c in constraints]
        n = len(unknowns)
        rank = 0
        for col in range(n):
            pivot = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
            if pivot is None:
                continue
            rows[rank], rows[pivot] = rows[pivot], rows[rank]
            labels[rank], labels[pivot] = labels[pivot], labels[rank]
            lead = rows[rank][col]
            rows[rank] = [v / lead for v in rows[rank]]
            for i in range(len(rows)):
                if i != rank and rows[i][col] != 0:
                    factor = rows[i][col]
                    rows[i] = [a - factor * b for a, b in zip(rows[i], rows[rank])]
            rank += 1
        for i in range(rank, len(rows)):
            if rows[i][n] != 0:
                raise InconsistentSystemError(labels[i])
        if rank < n:
            raise RankDeficientSystemError(rank, n)
        solution = {}
        for i in range(n):
            col = next(j for j in range(n) if rows[i][j] != 0)
            solution[unknowns[col]] = rows[i][n]
        return solution

    def solve_exponents(self, constraints: Sequence[LinearConstraint]) -> ExponentTriple:
        """Solve for (alpha, beta, gamma); needs three independent constraints."""
        solution = self.solve_exponent_system(constraints, TRIPLE_UNKNOWNS)
        return ExponentTriple(**solution)


# Global service instance
inequality_service = InequalityService()
