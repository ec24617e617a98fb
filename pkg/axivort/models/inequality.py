"""
Inequality reports, exponent systems and scaling-suite results.
"""
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class InequalityName(str, Enum):
    KEY_R14 = "key_R14"
    KEY_HIGHD = "key_highd"
    GLOBAL_ENERGY = "global_energy"
    FENG_SVERAK = "feng_sverak"
    MAJDA_BERTOZZI = "majda_bertozzi"


class RhsFactor(BaseModel):
    """One norm factor of a right-hand side term."""

    model_config = ConfigDict(frozen=True)

    norm: str
    value: float = Field(..., ge=0.0)
    exponent: float
    term: int = Field(default=0, ge=0, description="index of the summand the factor belongs to")


class InequalityReport(BaseModel):
    """Both sides of an inequality evaluated on one field."""

    model_config = ConfigDict(frozen=True)

    name: InequalityName
    lhs: float = Field(..., ge=0.0)
    factors: List[RhsFactor]
    empirical_constant: float = Field(..., ge=0.0)
    field_id: str = ""

    @model_validator(mode="after")
    def validate_factors(self) -> "InequalityReport":
        if self.lhs > 0.0 and any(f.value <= 0.0 and f.exponent != 0.0 for f in self.factors):
            raise ValueError("every weighted factor must be positive when lhs > 0")
        return self

    def term_values(self) -> List[float]:
        terms: Dict[int, float] = {}
        for factor in self.factors:
            terms[factor.term] = terms.get(factor.term, 1.0) * factor.value**factor.exponent
        return [terms[k] for k in sorted(terms)]

    def rhs(self) -> float:
        """Sum over terms of the product of factor^exponent."""
        return sum(self.term_values())

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name.value,
            "lhs": self.lhs,
            "factors": [f.model_dump() for f in self.factors],
            "constant": self.empirical_constant,
            "field_id": self.field_id,
        }


class LinearConstraint(BaseModel):
    """sum(coefficients[name] * x[name]) = rhs over exact rationals."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coefficients: Dict[str, Fraction]
    rhs: Fraction = Fraction(0)
    label: str

    @field_validator("coefficients", mode="before")
    @classmethod
    def to_fractions(cls, v: Dict[str, Any]) -> Dict[str, Fraction]:
        return {name: Fraction(c) for name, c in v.items()}

    @field_validator("rhs", mode="before")
    @classmethod
    def rhs_to_fraction(cls, v: Any) -> Fraction:
        return Fraction(v)

    def residual(self, values: Dict[str, Fraction]) -> Fraction:
        total = sum((c * values[name] for name, c in self.coefficients.items()), Fraction(0))
        return total - self.rhs


class ExponentTriple(BaseModel):
    """Exponents (alpha, beta, gamma) of a three-factor product inequality."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha: Fraction
    beta: Fraction
    gamma: Fraction

    def as_tuple(self) -> tuple:
        return self.alpha, self.beta, self.gamma


class ScalingSuiteResult(BaseModel):
    """Empirical constants of one inequality across a family of rescalings."""

    name: InequalityName
    lambdas: List[float]
    constants: List[float]
    reference_constant: float
    max_deviation: float
    tol: float
    passed: bool
    overrides: Optional[Dict[str, float]] = None


class CorpusSummary(BaseModel):
    """Per-inequality maximum of the empirical constant over a field corpus."""

    name: InequalityName
    count: int
    max_constant: float
    argmax_field_id: str
    half_corpus_max: float
    stable: bool = Field(..., description="half-corpus max within 10% of the full-corpus max")
