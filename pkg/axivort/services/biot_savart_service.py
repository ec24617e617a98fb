"""
Biot-Savart service: velocities, radial-velocity probes and kinetic energy by direct summation.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from axivort.core.config import numerics, settings
from axivort.core.logging import logger
from axivort.models.field import HalfPlanePoint, VorticityField, sphere_measure
from axivort.models.flow import EnergyMethod, EnergyResult, Velocity
from axivort.services.field_service import FieldService, field_service
from axivort.services.kernel_service import KernelService, kernel_service
from axivort.utils.exceptions import DomainError, NegativeEnergyError, SingularityError
from axivort.utils.summation import exact_sum, pairwise_sum

Chunk = Tuple[np.ndarray, np.ndarray]


def _graded_edges(
    lo: float, hi: float, inner_lo: float, inner_hi: float, width: float
) -> np.ndarray:
    """Uniform panels of ``width`` over the inner interval, growing by 1.5x towards lo and hi."""
    inner_lo = max(lo, inner_lo)
    inner_hi = min(hi, inner_hi)
    n_inner = max(1, int(math.ceil((inner_hi - inner_lo) / width)))
    edges = list(np.linspace(inner_lo, inner_hi, n_inner + 1))
    step, x = width, inner_hi
    while x < hi:
        step *= 1.5
        x = min(hi, x + step)
        edges.append(x)
    step, x = width, inner_lo
    left: List[float] = []
    while x > lo:
        step *= 1.5
        x = max(lo, x - step)
        left.append(x)
    return np.array(left[::-1] + edges)


def _panel_nodes(edges: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


class BiotSavartService:
    """Service class for direct-summation Biot-Savart evaluation."""

    def __init__(
        self,
        kernels: KernelService = kernel_service,
        fields: FieldService = field_service,
        backend: str = numerics.KERNEL_BACKEND,
        chunk: int = numerics.TARGET_CHUNK,
    ):
        self.kernels = kernels
        self.fields = fields
        self.backend = backend
        self.chunk = chunk

    def _map_chunks(
        self,
        fn: Callable[[Chunk], Tuple[np.ndarray, ...]],
        r: np.ndarray,
        z: np.ndarray,
        threads: Optional[int],
    ) -> List[Tuple[np.ndarray, ...]]:
        chunks = [
            (r[i : i + self.chunk], z[i : i + self.chunk]) for i in range(0, r.size, self.chunk)
        ]
        workers = settings.AXIVORT_THREADS if threads is None else threads
        if workers <= 1 or len(chunks) <= 1:
            return [fn(c) for c in chunks]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, chunks))

    def induced_velocity(
        self,
        d: int,
        src_r: np.ndarray,
        src_z: np.ndarray,
        weights: np.ndarray,
        delta: float,
        tgt_r: np.ndarray,
        tgt_z: np.ndarray,
        threads: Optional[int] = None,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Velocity induced at targets by sources carrying kernel weights omega_i * area_i.

        Args:
            d: Dimension
            src_r, src_z: Source positions
            weights: omega_i * area_i per source
            delta: Blob length
            tgt_r, tgt_z: Target positions
            threads: Worker count; defaults to AXIVORT_THREADS

        Returns:
            (u^r, u^z) arrays; each target is reduced by its own fixed pairwise fold
        """
        tgt_r = np.asarray(tgt_r, dtype=float).reshape(-1)
        tgt_z = np.asarray(tgt_z, dtype=float).reshape(-1)
        if tgt_r.size == 0 or np.size(src_r) == 0:
            return np.zeros(tgt_r.size), np.zeros(tgt_r.size)
        src_r = np.asarray(src_r, dtype=float)[None, :]
        src_z = np.asarray(src_z, dtype=float)[None, :]
        w = np.asarray(weights, dtype=float)[None, :]

        def evaluate(chunk: Chunk) -> Tuple[np.ndarray, np.ndarray]:
            cr, cz = chunk
            kr, kz = self.kernels.velocity_kernels(
                d, cr[:, None], cz[:, None], src_r, src_z, delta, self.backend
            )
            return pairwise_sum(kr * w, axis=1), pairwise_sum(kz * w, axis=1)

        parts = self._map_chunks(evaluate, tgt_r, tgt_z, threads)
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def velocities(
        self, field: VorticityField, r: np.ndarray, z: np.ndarray, threads: Optional[int] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        return self.induced_velocity(
            field.d, field.r, field.z, field.circulation, field.delta, r, z, threads
        )

    def element_velocities(
        self, field: VorticityField, threads: Optional[int] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        return self.velocities(field, field.r, field.z, threads)

    def velocity_at(self, field: VorticityField, p: HalfPlanePoint) -> Velocity:
        """
        Velocity at one half-plane point.

        Args:
            field: Source field
            p: Target point

        Returns:
            Velocity; on the axis u^r is exactly 0
        """
        if field.size == 0:
            raise DomainError("velocity needs a non-empty field")
        ur, uz = self.velocities(field, np.array([p.r]), np.array([p.z]), threads=1)
        return Velocity(ur=float(ur[0]), uz=float(uz[0]))

    # Probes

    def radial_sup_probe(
        self,
        field: VorticityField,
        n_z: int = numerics.PROBE_NZ,
        z_window: Optional[float] = None,
    ) -> Tuple[float, float]:
        """(sup |u^r(R, z)|, argmax z) over a Chebyshev window refined once around the max."""
        if n_z < 16:
            raise DomainError(f"probe needs n_z >= 16, got {n_z}")
        if field.size == 0 or field.is_zero():
            return 0.0, 0.0
        radius = self.fields.support_radius(field)
        if radius == 0.0:
            return 0.0, 0.0
        z_c = self.fields.centroid_z(field)
        if z_window is None:
            box = self.fields.support_box(field)
            extent = 0.0 if box is None else box[3] - box[2]
            z_window = max(
                numerics.SUP_WINDOW_R_FACTOR * radius, numerics.SUP_WINDOW_EXTENT_FACTOR * extent
            )
        j = np.arange(n_z)
        nodes = z_c + z_window * np.cos(np.pi * (2.0 * j + 1.0) / (2.0 * n_z))[::-1]
        ur, _ = self.velocities(field, np.full(n_z, radius), nodes)
        k = int(np.argmax(np.abs(ur)))
        lo, hi = nodes[max(k - 1, 0)], nodes[min(k + 1, n_z - 1)]
        fine = np.linspace(lo, hi, numerics.PROBE_REFINE_NZ)
        ur_fine, _ = self.velocities(field, np.full(fine.size, radius), fine)
        candidates = np.concatenate([np.abs(ur), np.abs(ur_fine)])
        positions = np.concatenate([nodes, fine])
        best = int(np.argmax(candidates))
        return float(candidates[best]), float(positions[best])

    def max_radial_velocity_on_r(
        self,
        field: VorticityField,
        n_z: int = numerics.PROBE_NZ,
        z_window: Optional[float] = None,
    ) -> float:
        """
        Probe sup_z |u^r(R, z)| at the support radius R.

        Args:
            field: Vorticity snapshot
            n_z: Chebyshev nodes in the window
            z_window: Half-width around the vorticity centroid; default max(3R, 5 z-extent)

        Returns:
            The probed supremum, 0 for a zero field
        """
        return self.radial_sup_probe(field, n_z, z_window)[0]

    def probe_points(
        self,
        field: VorticityField,
        lattice: int = numerics.LATTICE_SIZE,
        dilation: float = numerics.LATTICE_DILATION,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Element positions plus a lattice over the dilated support bounding box."""
        box = self.fields.support_box(field)
        if box is None:
            return field.r.copy(), field.z.copy()
        r_lo, r_hi, z_lo, z_hi = box
        r_mid, z_mid = 0.5 * (r_lo + r_hi), 0.5 * (z_lo + z_hi)
        r_half, z_half = 0.5 * (r_hi - r_lo) * dilation, 0.5 * (z_hi - z_lo) * dilation
        lr = np.linspace(max(0.0, r_mid - r_half), r_mid + r_half, lattice)
        lz = np.linspace(z_mid - z_half, z_mid + z_half, lattice)
        grid_r, grid_z = np.meshgrid(lr, lz, indexing="ij")
        return (
            np.concatenate([field.r, grid_r.ravel()]),
            np.concatenate([field.z, grid_z.ravel()]),
        )

    def velocity_sup(
        self,
        field: VorticityField,
        radial: bool = False,
        candidates: int = numerics.SUP_CANDIDATES,
        levels: int = numerics.SUP_REFINE_LEVELS,
    ) -> Tuple[float, HalfPlanePoint]:
        """
        Sup of |u| (or of |u^r|) over the probe points, refined around the largest values.

        Each candidate is searched on a small stencil whose spacing starts at the cell size
        of the nearest element and halves at every level. All lengths come from the field,
        so the search commutes with rescaling.

        Args:
            field: Vorticity snapshot
            radial: Take |u^r| instead of the speed
            candidates: Probe points kept for refinement
            levels: Refinement levels

        Returns:
            (sup, point where it is attained)
        """
        if field.size == 0:
            raise DomainError("velocity sup needs a non-empty field")
        if field.is_zero():
            return 0.0, HalfPlanePoint(r=float(field.r[0]), z=float(field.z[0]))

        def magnitude(r: np.ndarray, z: np.ndarray) -> np.ndarray:
            ur, uz = self.velocities(field, r, z)
            return np.abs(ur) if radial else np.hypot(ur, uz)

        r, z = self.probe_points(field)
        values = magnitude(r, z)
        top = np.argsort(-values, kind="stable")[:candidates]
        cr, cz, best = r[top], z[top], values[top]
        nearest = np.argmin(
            (cr[:, None] - field.r[None, :]) ** 2 + (cz[:, None] - field.z[None, :]) ** 2, axis=1
        )
        step = np.sqrt(field.area[nearest])
        offsets = np.linspace(-1.0, 1.0, numerics.SUP_STENCIL)
        off_r, off_z = (a.ravel() for a in np.meshgrid(offsets, offsets, indexing="ij"))
        rows = np.arange(cr.size)
        for _ in range(levels):
            grid_r = np.maximum(cr[:, None] + step[:, None] * off_r[None, :], 0.0)
            grid_z = cz[:, None] + step[:, None] * off_z[None, :]
            local = magnitude(grid_r.ravel(), grid_z.ravel()).reshape(grid_r.shape)
            k = np.argmax(local, axis=1)
            improved = local[rows, k] > best
            cr = np.where(improved, grid_r[rows, k], cr)
            cz = np.where(improved, grid_z[rows, k], cz)
            best = np.maximum(best, local[rows, k])
            step = 0.5 * step
        i = int(np.argmax(best))
        return float(best[i]), HalfPlanePoint(r=float(cr[i]), z=float(cz[i]))

    # Energy

    def kinetic_energy(
        self,
        field: VorticityField,
        method: EnergyMethod = EnergyMethod.STREAM_DOUBLE_SUM,
        box_factor: float = numerics.ENERGY_BOX_FACTOR,
        order: int = numerics.ENERGY_PANEL_ORDER,
        threads: Optional[int] = None,
    ) -> EnergyResult:
        """
        Energy norm ||u||_{L^2(R^d)}.

        Args:
            field: Vorticity snapshot
            method: Stream-function double sum (default) or grid quadrature of sigma r^(d-2)|u|^2
            box_factor: Grid quadrature box [0, kR] x [z_c - kR, z_c + kR]
            order: Gauss-Legendre nodes per grid panel
            threads: Worker count

        Returns:
            EnergyResult with the norm and a relative error estimate
        """
        if field.size == 0:
            raise DomainError("energy needs a non-empty field")
        method = EnergyMethod(method)
        if field.is_zero():
            return EnergyResult(value=0.0, method=method, est_error=0.0)
        if method is EnergyMethod.GRID_QUADRATURE:
            return self._grid_energy(field, box_factor, order, threads)
        return self._stream_energy(field, threads)

    def _stream_energy(self, field: VorticityField, threads: Optional[int]) -> EnergyResult:
        gamma = field.circulation
        src_r, src_z, w = field.r[None, :], field.z[None, :], gamma[None, :]

        def rows(chunk: Chunk) -> Tuple[np.ndarray]:
            cr, cz = chunk
            g = self.kernels.stream_kernel(
                field.d, cr[:, None], cz[:, None], src_r, src_z, field.delta, self.backend
            )
            return (pairwise_sum(g * w, axis=1),)

        parts = self._map_chunks(rows, field.r, field.z, threads)
        psi = np.concatenate([p[0] for p in parts])
        squared = field.sigma * exact_sum(gamma * psi)
        if squared < 0.0:
            raise NegativeEnergyError(squared)
        diagonal = self.kernels.stream_kernel(
            field.d, field.r, field.z, field.r, field.z, field.delta, self.backend
        )
        self_part = field.sigma * exact_sum(gamma * gamma * diagonal)
        est = abs(self_part) / squared if squared > 0.0 else 0.0
        return EnergyResult(
            value=math.sqrt(squared), method=EnergyMethod.STREAM_DOUBLE_SUM, est_error=est
        )

    def _grid_energy(
        self, field: VorticityField, box_factor: float, order: int, threads: Optional[int]
    ) -> EnergyResult:
        box = self.fields.support_box(field)
        assert box is not None
        r_lo, r_hi, z_lo, z_hi = box
        radius = r_hi
        z_c = self.fields.centroid_z(field)
        half = box_factor * radius
        extent = max(r_hi - r_lo, z_hi - z_lo)
        pad = max(2.0 * field.delta, 0.25 * extent, 1e-3 * radius)
        inner_r = (r_lo - pad, r_hi + pad)
        inner_z = (z_lo - pad, z_hi + pad)
        width = field.delta if field.delta > 0.0 else extent / 32.0
        width = max(width, (extent + 2.0 * pad) / numerics.ENERGY_PANELS)

        r_edges = _graded_edges(0.0, max(half, inner_r[1]), inner_r[0], inner_r[1], width)
        z_edges = _graded_edges(
            min(z_c - half, inner_z[0]), max(z_c + half, inner_z[1]), inner_z[0], inner_z[1], width
        )
        r_nodes, r_w = _panel_nodes(r_edges, order)
        z_nodes, z_w = _panel_nodes(z_edges, order)
        grid_r, grid_z = np.meshgrid(r_nodes, z_nodes, indexing="ij")
        ur, uz = self.velocities(field, grid_r.ravel(), grid_z.ravel(), threads)
        speed2 = (ur * ur + uz * uz).reshape(grid_r.shape)
        density = field.sigma * grid_r ** (field.d - 2) * speed2
        squared = exact_sum(density * np.outer(r_w, z_w))

        # far field |u| ~ rho^-d beyond the box
        boundary = np.concatenate([speed2[-1, :], speed2[:, 0], speed2[:, -1]])
        rho = min(r_edges[-1], 0.5 * (z_edges[-1] - z_edges[0]))
        tail = sphere_measure(field.d + 1) * float(np.max(boundary)) * rho**field.d / field.d
        logger.debug(
            f"Grid energy: {r_nodes.size}x{z_nodes.size} nodes, tail {tail:.3e} of {squared:.6e}"
        )
        est = tail / (2.0 * squared) if squared > 0.0 else 0.0
        return EnergyResult(
            value=math.sqrt(squared),
            method=EnergyMethod.GRID_QUADRATURE,
            est_error=est,
        )

    # Oracles

    def oracle_3d_ring_velocity(
        self,
        ring_r: float,
        ring_z: float,
        circulation: float,
        p: HalfPlanePoint,
        n_phi: int = 4096,
    ) -> Velocity:
        """
        Trapezoid quadrature over the azimuth of the 3D Biot-Savart integral of a filament.

        Args:
            ring_r: Filament radius
            ring_z: Filament height
            circulation: Filament circulation
            p: Target point in the meridian half-plane
            n_phi: Azimuthal nodes

        Returns:
            Velocity of the singular ring at p
        """
        if n_phi < 64:
            raise DomainError(f"oracle needs n_phi >= 64, got {n_phi}")
        dz = p.z - ring_z
        if (p.r - ring_r) ** 2 + dz**2 <= (1e-12 * max(ring_r, 1.0)) ** 2:
            raise SingularityError(f"point ({p.r}, {p.z}) lies on the filament")
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        cos_phi = np.cos(phi)
        dist3 = (p.r**2 + ring_r**2 - 2.0 * p.r * ring_r * cos_phi + dz**2) ** 1.5
        scale = circulation * ring_r / (4.0 * math.pi) * (2.0 * math.pi / n_phi)
        uz = scale * exact_sum((ring_r - p.r * cos_phi) / dist3)
        ur = 0.0 if p.r == 0.0 else scale * exact_sum(dz * cos_phi / dist3)
        return Velocity(ur=ur, uz=uz)

    def oracle_ring_velocity(
        self, d: int, ring_r: float, ring_z: float, circulation: float, p: HalfPlanePoint
    ) -> Velocity:
        """Velocity of a singular ring in R^d by adaptive quadrature over the S^(d-2) angle."""
        dz = p.z - ring_z
        if (p.r - ring_r) ** 2 + dz**2 == 0.0:
            raise SingularityError(f"point ({p.r}, {p.z}) lies on the filament")
        prefactor = circulation * ring_r ** (d - 2) * sphere_measure(d - 1) / sphere_measure(d + 1)

        def dist(alpha: float) -> float:
            return (p.r**2 + ring_r**2 - 2.0 * p.r * ring_r * math.cos(alpha) + dz**2) ** (d / 2.0)

        def radial(alpha: float) -> float:
            return math.cos(alpha) * math.sin(alpha) ** (d - 3) / dist(alpha)

        def axial(alpha: float) -> float:
            return (p.r * math.cos(alpha) - ring_r) * math.sin(alpha) ** (d - 3) / dist(alpha)

        opts = {"epsabs": 0.0, "epsrel": 1e-12, "limit": 200}
        ur = 0.0
        if p.r != 0.0:
            ur = prefactor * dz * integrate.quad(radial, 0.0, math.pi, **opts)[0]
        uz = -prefactor * integrate.quad(axial, 0.0, math.pi, **opts)[0]
        return Velocity(ur=ur, uz=uz)


# Global service instance
biot_savart_service = BiotSavartService()
