"""Tests for the elliptic kernel service."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axivort.models.field import HalfPlanePoint
from axivort.models.kernel import KernelSpec
from axivort.services.biot_savart_service import BiotSavartService
from axivort.services.kernel_service import (
    STREAM_PREFACTOR,
    KernelEvaluator,
    KernelService,
    KernelTable,
    closed_form_f,
    derivative_factor,
    panel_quadrature,
    sine_moment,
)
from axivort.utils.exceptions import DomainError, KernelTableError, SingularityError


def raw_f4(s: float) -> float:
    return 0.25 * ((2.0 + s) * math.log1p(4.0 / s) - 4.0)


class TestKernelHelpers:
    """Test cases for the kernel helper functions."""

    def test_derivative_factor(self):
        """Test the falling-factorial prefactor of the ell-th derivative."""
        assert derivative_factor(3, 0) == 1.0
        assert derivative_factor(3, 1) == -0.5
        assert derivative_factor(3, 2) == pytest.approx(0.75)
        assert derivative_factor(6, 1) == -2.0

    def test_sine_moment(self):
        """Test W_n = int_0^pi sin^n."""
        assert sine_moment(0) == pytest.approx(math.pi)
        assert sine_moment(1) == pytest.approx(2.0)
        assert sine_moment(2) == pytest.approx(math.pi / 2.0)
        assert sine_moment(3) == pytest.approx(4.0 / 3.0)

    def test_closed_form_rejects_unsupported(self):
        """Test closed forms only cover d in {3, 4} and ell in {0, 1}."""
        with pytest.raises(DomainError):
            closed_form_f(5, 1.0)
        with pytest.raises(DomainError):
            closed_form_f(3, 1.0, ell=2)
        with pytest.raises(DomainError):
            closed_form_f(4, 0.0)

    @pytest.mark.parametrize("s", [1e-3, 0.5, 4.0, 30.0, 64.0])
    def test_d4_closed_form_matches_log_formula(self, s):
        """Test the d = 4 closed form against (1/4)[(2 + s) log(1 + 4/s) - 4]."""
        assert closed_form_f(4, s) == pytest.approx(raw_f4(s), rel=1e-9)


class TestKernelService:
    """Test cases for KernelService."""

    @pytest.fixture
    def kernel_service(self):
        """Create kernel service instance."""
        return KernelService()

    @pytest.mark.parametrize("s", [1e-3, 0.5, 4.0, 30.0])
    def test_quadrature_matches_d4_log_formula(self, kernel_service, s):
        """Test adaptive quadrature against the elementary d = 4 closed form."""
        value = kernel_service.elliptic_f(KernelSpec(d=4), s)
        assert value == pytest.approx(raw_f4(s), rel=1e-8)

    @pytest.mark.parametrize("s", [200.0, 1e4, 1e6])
    def test_quadrature_matches_d4_series_for_large_s(self, kernel_service, s):
        """Test large-s agreement with the series form of the d = 4 kernel."""
        for ell in (0, 1):
            value = kernel_service.elliptic_f(KernelSpec(d=4, ell=ell), s)
            assert value == pytest.approx(closed_form_f(4, s, ell), rel=1e-8)

    @pytest.mark.parametrize("s", [1e-3, 0.1, 1.0, 10.0, 50.0])
    def test_quadrature_matches_d3_elliptic_form(self, kernel_service, s):
        """Test adaptive quadrature against complete elliptic integrals at d = 3."""
        for ell in (0, 1):
            value = kernel_service.elliptic_f(KernelSpec(d=3, ell=ell), s)
            assert value == pytest.approx(closed_form_f(3, s, ell), rel=1e-8)

    @pytest.mark.parametrize("d", [3, 4, 5, 6])
    def test_first_derivative_matches_finite_difference(self, kernel_service, d):
        """Test F' against a centred difference of F."""
        s, h = 1.0, 1e-3
        f = lambda x: kernel_service.elliptic_f(KernelSpec(d=d), x)  # noqa: E731
        numeric = (f(s + h) - f(s - h)) / (2.0 * h)
        exact = kernel_service.elliptic_f(KernelSpec(d=d, ell=1), s)
        assert exact == pytest.approx(numeric, rel=1e-5)

    @pytest.mark.parametrize("s", [0.0, -1.0, math.nan, math.inf])
    def test_invalid_abscissa(self, kernel_service, s):
        """Test that s must be finite and positive."""
        with pytest.raises(DomainError):
            kernel_service.elliptic_f(KernelSpec(d=3), s)

    @settings(max_examples=25, deadline=None)
    @given(log_s=st.floats(min_value=-6.0, max_value=6.0), d=st.integers(min_value=3, max_value=6))
    def test_kernel_is_positive_and_decreasing(self, log_s, d):
        """Test F > 0 and F' < 0 across the range."""
        service = KernelService()
        s = 10.0**log_s
        assert service.elliptic_f(KernelSpec(d=d), s) > 0.0
        assert service.elliptic_f(KernelSpec(d=d, ell=1), s) < 0.0

    @pytest.mark.parametrize("d", [3, 4, 5, 6])
    def test_large_s_decay_rate(self, kernel_service, d):
        """Test F(s) s^(d/2) settles to a constant as s grows."""
        a = kernel_service.elliptic_f(KernelSpec(d=d), 1e6) * 1e6 ** (d / 2.0)
        b = kernel_service.elliptic_f(KernelSpec(d=d), 1e7) * 1e7 ** (d / 2.0)
        assert b == pytest.approx(a, rel=1e-4)

    @pytest.mark.parametrize("d", [5, 6])
    def test_panel_quadrature_matches_adaptive(self, kernel_service, d):
        """Test the fixed-order graded panels against adaptive quadrature."""
        s = np.array([1e-4, 0.3, 7.0, 500.0])
        for ell in (0, 1):
            panels = panel_quadrature(s, d, ell, order=16)
            for si, value in zip(s.tolist(), panels.tolist()):
                reference = kernel_service.elliptic_f(KernelSpec(d=d, ell=ell), si)
                assert value == pytest.approx(reference, rel=1e-7)

    @pytest.mark.parametrize("d", [3, 4])
    def test_auto_backend_matches_quadrature_backend(self, d):
        """Test closed forms and panel quadrature agree inside the evaluator."""
        s = np.array([1e-3, 0.5, 10.0, 100.0, 1e3])
        f_auto, df_auto = KernelEvaluator(d, "auto").f_and_df(s)
        f_quad, df_quad = KernelEvaluator(d, "quadrature").f_and_df(s)
        np.testing.assert_allclose(f_auto, f_quad, rtol=1e-9)
        np.testing.assert_allclose(df_auto, df_quad, rtol=1e-9)

    def test_unknown_backend(self):
        """Test that unknown backends are rejected."""
        with pytest.raises(DomainError):
            KernelEvaluator(3, "fast")

    def test_kernel_table_accuracy(self):
        """Test a dense table validates against quadrature."""
        table = KernelTable(3, nodes=2000, s_min=1e-4, s_max=1e4, validation_tol=1e-4)
        s = np.array([2e-4, 0.37, 55.0, 9e3, 1e5])
        f_tab, df_tab = table.f_and_df(s)
        f_ref, df_ref = KernelEvaluator(3, "quadrature").f_and_df(s)
        np.testing.assert_allclose(f_tab, f_ref, rtol=1e-4)
        np.testing.assert_allclose(df_tab, df_ref, rtol=1e-4)

    def test_kernel_table_rejects_coarse_grid(self):
        """Test a sparse table fails its own validation."""
        with pytest.raises(KernelTableError):
            KernelTable(3, nodes=20, s_min=1e-4, s_max=1e4, validation_tol=1e-8)

    @pytest.mark.parametrize("d", [3, 4, 5, 6])
    def test_vectorised_kernels_match_scalar(self, kernel_service, d):
        """Test the broadcast kernels against the scalar adaptive ones."""
        target = HalfPlanePoint(r=1.2, z=0.3)
        source = HalfPlanePoint(r=0.9, z=-0.1)
        delta = 0.05
        kr, kz = kernel_service.velocity_kernels(
            d, np.array([target.r]), np.array([target.z]), source.r, source.z, delta
        )
        assert kr[0] == pytest.approx(kernel_service.kernel_fr(d, target, source, delta), rel=1e-8)
        assert kz[0] == pytest.approx(
            kernel_service.kernel_fz_stream(d, target, source, delta), rel=1e-8
        )

    def test_elliptic_axial_kernel_matches_stream_derivative(self, kernel_service):
        """Test the d = 3 elliptic form of F^z against the stream-kernel derivative."""
        target = HalfPlanePoint(r=0.7, z=0.2)
        source = HalfPlanePoint(r=1.1, z=-0.4)
        assert kernel_service.kernel_fz(target, source, 0.0) == pytest.approx(
            kernel_service.kernel_fz_stream(3, target, source, 0.0), rel=1e-9
        )

    @pytest.mark.parametrize("d", [3, 5])
    def test_axis_limit(self, kernel_service, d):
        """Test u^r vanishes on the axis and F^z is continuous there."""
        rb, zb, z = 1.0, 0.0, 0.4
        kr0, kz0 = kernel_service.velocity_kernels(d, np.array([0.0]), np.array([z]), rb, zb, 0.0)
        kr1, kz1 = kernel_service.velocity_kernels(d, np.array([1e-7]), np.array([z]), rb, zb, 0.0)
        assert kr0[0] == 0.0
        expected = STREAM_PREFACTOR * (d - 2) * sine_moment(d - 3) * rb ** (d - 1)
        expected /= (rb**2 + z**2) ** (d / 2.0)
        assert kz0[0] == pytest.approx(expected, rel=1e-12)
        assert kz1[0] == pytest.approx(kz0[0], rel=1e-4)

    def test_coincident_points(self, kernel_service):
        """Test coincident points without a blob are singular in the scalar API."""
        p = HalfPlanePoint(r=1.0, z=0.0)
        with pytest.raises(SingularityError):
            kernel_service.kernel_fr(3, p, p, 0.0)
        kr, kz = kernel_service.velocity_kernels(3, np.array([1.0]), np.array([0.0]), 1.0, 0.0, 0.0)
        assert kr[0] == 0.0 and kz[0] == 0.0

    def test_stream_kernel_is_symmetric(self, kernel_service):
        """Test G(x, y) = G(y, x)."""
        a = HalfPlanePoint(r=0.4, z=1.0)
        b = HalfPlanePoint(r=2.0, z=-0.5)
        for d in (3, 6):
            assert kernel_service.kernel_stream_g(d, a, b, 0.01) == pytest.approx(
                kernel_service.kernel_stream_g(d, b, a, 0.01), rel=1e-12
            )

    def test_verify_kernel_bounds(self, kernel_service):
        """Test the decay-bound report on a short log grid."""
        report = kernel_service.verify_kernel_bounds(KernelSpec(d=3, ell=1), 1e-3, 1e3, 25)

        assert len(report.s_grid) == 25
        assert report.comparator == "power"
        assert math.isfinite(report.empirical_constant)
        assert report.empirical_constant > 0.0
        assert 1e-3 <= report.worst_s <= 1e3

    def test_verify_kernel_bounds_rejects_bad_range(self, kernel_service):
        """Test invalid grids are rejected."""
        with pytest.raises(DomainError):
            kernel_service.verify_kernel_bounds(KernelSpec(d=3), 1.0, 0.5, 10)
        with pytest.raises(DomainError):
            kernel_service.verify_kernel_bounds(KernelSpec(d=3), 0.1, 1.0, 1)

    def test_verify_kernel_bounds_compares_closed_forms(self, kernel_service):
        """Test quadrature values agree with the closed forms where those exist."""
        d3 = kernel_service.verify_kernel_bounds(KernelSpec(d=3, ell=1), 1e-3, 1e3, 25)
        d4 = kernel_service.verify_kernel_bounds(KernelSpec(d=4, ell=0), 1e-3, 1e6, 25)
        higher = kernel_service.verify_kernel_bounds(KernelSpec(d=3, ell=2), 1e-3, 1e3, 25)

        assert 0.0 <= d3.oracle_deviation < 1e-6
        assert 0.0 <= d4.oracle_deviation < 1e-6
        assert higher.oracle_deviation is None

    @pytest.mark.parametrize("d", [3, 4, 5, 6])
    def test_radial_kernel_is_odd_in_height(self, kernel_service, d):
        """Test F^r flips sign exactly when the target is mirrored through the source height."""
        source = HalfPlanePoint(r=0.9, z=0.0)
        above = HalfPlanePoint(r=1.3, z=0.35)
        below = HalfPlanePoint(r=1.3, z=-0.35)
        assert kernel_service.kernel_fr(d, above, source, 0.02) == -kernel_service.kernel_fr(
            d, below, source, 0.02
        )

    @pytest.mark.parametrize("d", [3, 4, 5, 6])
    def test_axial_kernel_is_even_in_height(self, kernel_service, d):
        """Test F^z is unchanged when the target is mirrored through the source height."""
        source = HalfPlanePoint(r=0.9, z=0.0)
        above = HalfPlanePoint(r=1.3, z=0.35)
        below = HalfPlanePoint(r=1.3, z=-0.35)
        assert kernel_service.kernel_fz(above, source, 0.02, d) == kernel_service.kernel_fz(
            below, source, 0.02, d
        )
        kr, kz = kernel_service.velocity_kernels(
            d, np.array([1.3, 1.3]), np.array([0.35, -0.35]), source.r, source.z, 0.02
        )
        assert kr[0] == -kr[1]
        assert kz[0] == kz[1]

    @pytest.mark.parametrize("d", [3, 4])
    def test_kernels_are_divergence_free(self, kernel_service, d):
        """Test d/dr(r^(d-2) F^r) + r^(d-2) d/dz F^z = 0 by centred differences."""
        source = HalfPlanePoint(r=0.8, z=-0.2)
        r, z, h = 1.1, 0.3, 1e-3

        def fr(ri, zi):
            return kernel_service.kernel_fr(d, HalfPlanePoint(r=ri, z=zi), source)

        def fz(ri, zi):
            return kernel_service.kernel_fz(HalfPlanePoint(r=ri, z=zi), source, 0.0, d)

        radial = ((r + h) ** (d - 2) * fr(r + h, z) - (r - h) ** (d - 2) * fr(r - h, z)) / (2 * h)
        axial = r ** (d - 2) * (fz(r, z + h) - fz(r, z - h)) / (2 * h)
        assert abs(radial + axial) <= 1e-4 * max(abs(radial), abs(axial))

    def test_kernels_match_filament_integral(self, kernel_service):
        """Test circulation times the unregularised kernels against the 3D filament integral."""
        biot = BiotSavartService(kernels=kernel_service)
        source = HalfPlanePoint(r=1.0, z=0.0)
        circulation = 1.7
        for target in (
            HalfPlanePoint(r=1.5, z=0.5),
            HalfPlanePoint(r=0.4, z=-0.8),
            HalfPlanePoint(r=2.5, z=0.1),
        ):
            oracle = biot.oracle_3d_ring_velocity(source.r, source.z, circulation, target)
            ur = circulation * kernel_service.kernel_fr(3, target, source)
            uz = circulation * kernel_service.kernel_fz(target, source, 0.0)
            assert ur == pytest.approx(oracle.ur, rel=1e-6, abs=1e-12)
            assert uz == pytest.approx(oracle.uz, rel=1e-6, abs=1e-12)
