"""
Field service: weighted norms, support radius, rescaling and initial-data constructors.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from axivort.core.config import numerics
from axivort.core.logging import logger
from axivort.models.field import DipoleParams, HalfPlanePoint, RingParams, VorticityField
from axivort.utils.exceptions import DomainError, UnsupportedDimensionError
from axivort.utils.summation import exact_sum


def bump_profile(rho: np.ndarray, radius: float, amplitude: float) -> np.ndarray:
    """phi(rho) = amplitude * exp(1 - 1 / (1 - (rho/radius)^2)) inside the disc, 0 outside."""
    rho = np.asarray(rho, dtype=float)
    x2 = (rho / radius) ** 2
    inside = x2 < 1.0
    out = np.zeros_like(rho)
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - x2[inside]))
    return out


class FieldService:
    """Service class for norms and construction of vorticity fields."""

    def __init__(self, deadband: float = numerics.SUPPORT_DEADBAND):
        self.deadband = deadband

    @staticmethod
    def _require_elements(field: VorticityField) -> None:
        if field.size == 0:
            raise DomainError("operation needs a non-empty field")

    # Norms

    def lp_norm_rel_vort(self, field: VorticityField, p: float) -> float:
        """
        ||omega / r^(d-2)||_{L^p(R^d)} with the measure sigma r^(d-2) dr dz.

        Args:
            field: Vorticity snapshot
            p: Exponent in [1, inf]

        Returns:
            The norm; for p = inf the max of |q|
        """
        self._require_elements(field)
        if not p >= 1.0:
            raise DomainError(f"L^p norm needs p >= 1, got {p}")
        abs_q = np.abs(field.q)
        if math.isinf(p):
            return float(np.max(abs_q))
        if p == 1.0:
            return exact_sum(abs_q * field.measure)
        return exact_sum(abs_q**p * field.measure) ** (1.0 / p)

    def weighted_l1(self, field: VorticityField, weight_power: int) -> float:
        """||r^k omega||_{L^1(R^d)} for k in {-(d-2), 0, 1}."""
        self._require_elements(field)
        allowed = (-(field.d - 2), 0, 1)
        if weight_power not in allowed:
            raise DomainError(f"weight power must be one of {allowed}, got {weight_power}")
        weights = np.abs(field.q) * field.r ** (field.d - 2 + weight_power)
        return exact_sum(weights * field.measure)

    def omega_max(self, field: VorticityField) -> float:
        """||omega||_{L^inf} = max |q| r^(d-2)."""
        self._require_elements(field)
        return float(np.max(np.abs(field.omega)))

    def _support_mask(self, field: VorticityField) -> np.ndarray:
        abs_q = np.abs(field.q)
        peak = float(np.max(abs_q)) if abs_q.size else 0.0
        if peak == 0.0:
            return np.zeros(abs_q.shape, dtype=bool)
        return abs_q > self.deadband * peak

    def support_radius(self, field: VorticityField) -> float:
        """Largest r over elements whose |q| clears the dead-band; 0 for an all-zero field."""
        self._require_elements(field)
        mask = self._support_mask(field)
        if not np.any(mask):
            return 0.0
        return float(np.max(field.r[mask]))

    def support_volume(self, field: VorticityField) -> float:
        """d-dimensional volume of the support, sum of sigma r^(d-2) area over live elements."""
        self._require_elements(field)
        mask = self._support_mask(field)
        return exact_sum(field.measure[mask])

    def support_box(self, field: VorticityField) -> Optional[Tuple[float, float, float, float]]:
        """(r_min, r_max, z_min, z_max) over live elements, or None for an all-zero field."""
        mask = self._support_mask(field)
        if not np.any(mask):
            return None
        r, z = field.r[mask], field.z[mask]
        return float(r.min()), float(r.max()), float(z.min()), float(z.max())

    def centroid_z(self, field: VorticityField) -> float:
        """|omega|-weighted axial centroid over the half-plane."""
        weights = np.abs(field.circulation)
        total = exact_sum(weights)
        if total == 0.0:
            return 0.0
        return exact_sum(weights * field.z) / total

    def half_plane_moments(self, field: VorticityField) -> Tuple[float, float]:
        """(sum r^2 |omega| area, sum |z omega| area), the plain half-plane integrals."""
        self._require_elements(field)
        abs_w = np.abs(field.circulation)
        return exact_sum(field.r**2 * abs_w), exact_sum(np.abs(field.z) * abs_w)

    def monotone_quantities(self, field: VorticityField) -> Tuple[float, float]:
        """(int r^2 |omega| dr dz, int |z omega| dr dz) on the half-plane; d = 3 only."""
        if field.d != 3:
            raise UnsupportedDimensionError(field.d, allowed="3")
        return self.half_plane_moments(field)

    # Transformations

    def rescale(self, field: VorticityField, lam: float, z0: float = 0.0) -> VorticityField:
        """
        Discrete image of omega -> lam * omega(lam r, lam z + z0).

        Args:
            field: Field to rescale
            lam: Positive scale factor
            z0: Axial shift

        Returns:
            Field with positions (r/lam, (z - z0)/lam), areas lam^-2, q lam^(d-1) and blob
            length delta/lam
        """
        if not lam > 0.0 or not math.isfinite(lam):
            raise DomainError(f"rescale needs lambda > 0, got {lam}")
        return VorticityField(
            field.d,
            field.r / lam,
            (field.z - z0) / lam,
            field.q * lam ** (field.d - 1),
            field.area / lam**2,
            field.delta / lam,
        )

    # Constructors

    def _bump_cells(
        self, center: HalfPlanePoint, radius: float, resolution: int
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        if resolution < numerics.MIN_RESOLUTION:
            raise DomainError(
                f"resolution {resolution} is under-resolved (need >= {numerics.MIN_RESOLUTION})"
            )
        h = 2.0 * radius / resolution
        offsets = -radius + (np.arange(resolution) + 0.5) * h
        dr, dz = np.meshgrid(offsets, offsets, indexing="ij")
        rho = np.hypot(dr, dz).ravel()
        phi = bump_profile(rho, radius, 1.0)
        keep = phi > 0.0
        return (center.r + dr.ravel())[keep], (center.z + dz.ravel())[keep], phi[keep], h

    def make_dipole(self, params: DipoleParams) -> VorticityField:
        """
        Discretise omega_0 = -phi(r, z) + phi(r, -z) on a cell-centred grid.

        Args:
            params: Bump center, radius, amplitude and cells per diameter

        Returns:
            Field odd in z with q <= 0 on the upper half
        """
        r, z, phi, h = self._bump_cells(params.center, params.radius, params.resolution)
        omega_upper = -params.amplitude * phi
        r_all = np.concatenate([r, r])
        z_all = np.concatenate([z, -z])
        omega_all = np.concatenate([omega_upper, -omega_upper])
        q = omega_all / r_all ** (params.d - 2)
        delta = numerics.BLOB_FACTOR * h if params.delta is None else params.delta
        field = VorticityField(params.d, r_all, z_all, q, np.full(r_all.size, h * h), delta)
        logger.debug(f"🌀 Dipole built: {field.size} elements, h={h:.4g}, delta={delta:.4g}")
        return field

    def make_single_ring(
        self,
        center: HalfPlanePoint,
        radius: float,
        amplitude: float,
        resolution: int,
        d: int = 3,
        delta: Optional[float] = None,
    ) -> VorticityField:
        """Single signed bump omega = phi, carried as one vortex ring."""
        params = RingParams(
            center=center, radius=radius, amplitude=amplitude, resolution=resolution, d=d,
            delta=delta,
        )
        return self.make_ring(params)

    def make_ring(self, params: RingParams) -> VorticityField:
        r, z, phi, h = self._bump_cells(params.center, params.radius, params.resolution)
        q = params.amplitude * phi / r ** (params.d - 2)
        delta = numerics.BLOB_FACTOR * h if params.delta is None else params.delta
        return VorticityField(params.d, r, z, q, np.full(r.size, h * h), delta)

    def concat(self, fields: Sequence[VorticityField], delta: float) -> VorticityField:
        """Element-list concatenation with a common blob length."""
        if not fields:
            raise DomainError("nothing to concatenate")
        merged = fields[0].with_delta(delta)
        for extra in fields[1:]:
            merged = merged.concat(extra)
        return merged

    # Random corpora

    def random_ring_field(
        self, rng: np.random.Generator, d: int = 3, resolution: int = 6
    ) -> VorticityField:
        """Sum of 1-5 rings, log-uniform ring radii in [0.2, 5], signed amplitudes."""
        n_rings = int(rng.integers(1, 6))
        rings: List[VorticityField] = []
        cell = math.inf
        for _ in range(n_rings):
            ring_r = math.exp(rng.uniform(math.log(0.2), math.log(5.0)))
            ring_z = rng.uniform(-2.0, 2.0)
            core = ring_r * rng.uniform(0.1, 0.3)
            sign = 1.0 if rng.random() < 0.5 else -1.0
            amplitude = sign * rng.uniform(0.5, 2.0)
            params = RingParams(
                center=HalfPlanePoint(r=ring_r, z=ring_z),
                radius=core,
                amplitude=amplitude,
                resolution=resolution,
                d=d,
            )
            rings.append(self.make_ring(params))
            cell = min(cell, 2.0 * core / resolution)
        return self.concat(rings, numerics.BLOB_FACTOR * cell)

    def random_dipole_field(
        self, rng: np.random.Generator, d: int = 3, resolution: int = 8
    ) -> VorticityField:
        """Dipole with random bump center, radius and amplitude."""
        center_r = rng.uniform(0.6, 2.0)
        center_z = rng.uniform(0.3, 1.5)
        radius = rng.uniform(0.1, 0.8) * min(center_r, center_z)
        params = DipoleParams(
            center=HalfPlanePoint(r=center_r, z=center_z),
            radius=radius,
            amplitude=rng.uniform(0.5, 2.0),
            resolution=resolution,
            d=d,
        )
        return self.make_dipole(params)

    def corpus(
        self, seed: int, size: int, d: int = 3, kind: str = "rings"
    ) -> List[Tuple[str, VorticityField]]:
        """
        Deterministic randomized corpus of (field_id, field) pairs.

        Args:
            seed: Generator seed
            size: Number of fields
            d: Dimension
            kind: "rings" or "dipoles"

        Returns:
            Fields in field_id order; a prefix of a larger corpus with the same seed is
            identical to the smaller corpus
        """
        if kind not in ("rings", "dipoles"):
            raise DomainError(f"unknown corpus kind '{kind}'")
        rng = np.random.default_rng(seed)
        make = self.random_ring_field if kind == "rings" else self.random_dipole_field
        fields = []
        for index in range(size):
            fields.append((f"{kind}-d{d}-s{seed}-{index:04d}", make(rng, d)))
        logger.info(f"🎲 Corpus generated: {size} {kind} fields (d={d}, seed={seed})")
        return fields


# Global service instance
field_service = FieldService()
