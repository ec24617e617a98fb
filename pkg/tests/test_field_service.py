"""Tests for vorticity fields and the field service."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from axivort.models.field import (
    DipoleParams,
    HalfPlanePoint,
    VorticityField,
    sphere_measure,
)
from axivort.services.field_service import FieldService, bump_profile
from axivort.utils.exceptions import DomainError, UnsupportedDimensionError


class TestVorticityField:
    """Test cases for the VorticityField snapshot."""

    def test_sphere_measure(self):
        """Test the angular factor of the half-plane measure."""
        assert sphere_measure(3) == pytest.approx(2.0 * math.pi)
        assert sphere_measure(4) == pytest.approx(4.0 * math.pi)
        assert sphere_measure(5) == pytest.approx(2.0 * math.pi**2)

    def test_columns_are_read_only(self, hand_field):
        """Test that snapshots cannot be mutated in place."""
        with pytest.raises(ValueError):
            hand_field.q[0] = 5.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"r": [-0.1], "z": [0.0], "q": [1.0], "area": [0.1]},
            {"r": [1.0], "z": [0.0], "q": [math.nan], "area": [0.1]},
            {"r": [1.0], "z": [0.0], "q": [1.0], "area": [0.0]},
            {"r": [1.0, 2.0], "z": [0.0], "q": [1.0], "area": [0.1]},
        ],
    )
    def test_invalid_elements(self, kwargs):
        """Test construction rejects negative r, non-finite q, empty cells and ragged columns."""
        with pytest.raises(DomainError):
            VorticityField(3, **kwargs)

    def test_unsupported_dimension(self):
        """Test d outside 3..6 is rejected."""
        with pytest.raises(UnsupportedDimensionError):
            VorticityField(7, [1.0], [0.0], [1.0], [0.1])

    def test_elements_round_trip(self, hand_field):
        """Test the element view rebuilds the same field."""
        rebuilt = VorticityField.from_elements(3, hand_field.elements, hand_field.delta)
        np.testing.assert_array_equal(rebuilt.r, hand_field.r)
        np.testing.assert_array_equal(rebuilt.q, hand_field.q)
        assert len(rebuilt) == 2


class TestFieldService:
    """Test cases for FieldService."""

    @pytest.fixture
    def field_service(self):
        """Create field service instance."""
        return FieldService()

    def test_norms_of_hand_field(self, field_service, hand_field):
        """Test every norm against values worked out by hand."""
        assert field_service.lp_norm_rel_vort(hand_field, 1.0) == pytest.approx(math.pi)
        assert field_service.lp_norm_rel_vort(hand_field, math.inf) == 2.0
        assert field_service.lp_norm_rel_vort(hand_field, 2.0) == pytest.approx(
            math.sqrt(1.8 * math.pi)
        )
        assert field_service.weighted_l1(hand_field, 1) == pytest.approx(3.4 * math.pi)
        assert field_service.weighted_l1(hand_field, 0) == pytest.approx(1.8 * math.pi)
        assert field_service.weighted_l1(hand_field, -1) == pytest.approx(math.pi)
        assert field_service.omega_max(hand_field) == 4.0
        assert field_service.support_radius(hand_field) == 2.0

    def test_norm_domain_errors(self, field_service, hand_field):
        """Test p < 1 and unsupported weights are rejected."""
        with pytest.raises(DomainError):
            field_service.lp_norm_rel_vort(hand_field, 0.5)
        with pytest.raises(DomainError):
            field_service.weighted_l1(hand_field, 2)

    def test_empty_field(self, field_service):
        """Test norms of an empty field raise."""
        empty = VorticityField(3, [], [], [], [])
        with pytest.raises(DomainError):
            field_service.lp_norm_rel_vort(empty, 1.0)

    def test_zero_field_support(self, field_service, zero_field):
        """Test a vanishing field has zero support radius and volume."""
        assert field_service.support_radius(zero_field) == 0.0
        assert field_service.support_volume(zero_field) == 0.0
        assert field_service.support_box(zero_field) is None

    def test_norms_are_permutation_invariant(self, field_service, ring_field):
        """Test norms do not depend on element order."""
        order = np.random.default_rng(3).permutation(ring_field.size)
        shuffled = ring_field.permuted(order)
        assert field_service.lp_norm_rel_vort(shuffled, 1.0) == field_service.lp_norm_rel_vort(
            ring_field, 1.0
        )
        assert field_service.weighted_l1(shuffled, 1) == field_service.weighted_l1(ring_field, 1)

    @settings(max_examples=30, deadline=None)
    @given(
        lam=st.floats(min_value=0.05, max_value=20.0),
        d=st.integers(min_value=3, max_value=6),
    )
    def test_rescale_scaling_laws(self, lam, d):
        """Test each norm picks up the expected power of lambda."""
        service = FieldService()
        field = VorticityField(d, [0.5, 1.0, 2.5], [0.0, 0.3, -1.0], [1.0, -0.5, 2.0], [0.1] * 3)
        scaled = service.rescale(field, lam)

        assert service.lp_norm_rel_vort(scaled, math.inf) == pytest.approx(
            lam ** (d - 1) * service.lp_norm_rel_vort(field, math.inf), rel=1e-12
        )
        assert service.lp_norm_rel_vort(scaled, 1.0) == pytest.approx(
            service.lp_norm_rel_vort(field, 1.0) / lam, rel=1e-12
        )
        assert service.weighted_l1(scaled, 1) == pytest.approx(
            lam ** (-d) * service.weighted_l1(field, 1), rel=1e-12
        )
        assert service.omega_max(scaled) == pytest.approx(lam * service.omega_max(field), rel=1e-12)
        assert service.support_radius(scaled) == pytest.approx(service.support_radius(field) / lam)

    def test_rescale_composes(self, field_service, dipole_field):
        """Test two rescalings equal one rescaling by the product with the combined shift."""
        first = field_service.rescale(dipole_field, 2.0, z0=0.3)
        twice = field_service.rescale(first, 3.0, z0=-0.1)
        once = field_service.rescale(dipole_field, 6.0, z0=0.1)

        np.testing.assert_allclose(twice.r, once.r, rtol=1e-12, atol=0.0)
        np.testing.assert_allclose(twice.z, once.z, rtol=0.0, atol=1e-12)
        np.testing.assert_allclose(twice.q, once.q, rtol=1e-12, atol=0.0)
        np.testing.assert_allclose(twice.area, once.area, rtol=1e-12, atol=0.0)
        assert twice.delta == pytest.approx(once.delta, rel=1e-12)

    def test_rescale_rejects_non_positive(self, field_service, hand_field):
        """Test lambda must be positive."""
        with pytest.raises(DomainError):
            field_service.rescale(hand_field, 0.0)

    def test_bump_profile(self):
        """Test the bump equals the amplitude at its centre and vanishes outside."""
        values = bump_profile(np.array([0.0, 0.5, 1.0, 2.0]), 1.0, 3.0)
        assert values[0] == pytest.approx(3.0)
        assert 0.0 < values[1] < 3.0
        assert values[2] == 0.0 and values[3] == 0.0

    def test_make_dipole_is_odd(self, field_service, dipole_field):
        """Test the dipole is odd in z with q <= 0 on the upper half."""
        n = dipole_field.size // 2
        np.testing.assert_array_equal(dipole_field.z[:n], -dipole_field.z[n:])
        np.testing.assert_array_equal(dipole_field.q[:n], -dipole_field.q[n:])
        assert np.all(dipole_field.q[dipole_field.z > 0.0] <= 0.0)
        assert field_service.centroid_z(dipole_field) == 0.0

    def test_make_dipole_relative_vorticity_norm(self, field_service):
        """Test ||w0 / r||_1 of the dipole against 4 pi times the bump integral."""
        params = DipoleParams(resolution=16)
        dipole = field_service.make_dipole(params)

        def integrand(x: float) -> float:
            return 2.0 * math.pi * x * float(bump_profile(np.array([x]), 1.0, 1.0)[0])

        # |q| r^(d-2) = |w| and the measure is 2 pi dr dz on each of the two bumps
        bump = integrate.quad(integrand, 0.0, 1.0)[0] * params.radius**2 * params.amplitude
        expected = 4.0 * math.pi * bump
        assert field_service.lp_norm_rel_vort(dipole, 1.0) == pytest.approx(expected, rel=1e-2)

    def test_make_dipole_rejects_straddling_bump(self):
        """Test a bump crossing z = 0 is rejected."""
        with pytest.raises(ValueError):
            DipoleParams(center=HalfPlanePoint(r=1.0, z=0.2), radius=0.25)

    def test_make_dipole_under_resolved(self, field_service):
        """Test too few cells per diameter is rejected."""
        with pytest.raises(DomainError):
            field_service.make_dipole(DipoleParams(resolution=2))

    def test_make_ring_circulation(self, field_service, ring_params):
        """Test the discrete circulation approximates the bump integral."""
        ring = field_service.make_ring(ring_params.model_copy(update={"resolution": 32}))

        def integrand(x: float) -> float:
            return 2.0 * math.pi * x * float(bump_profile(np.array([x]), 1.0, 1.0)[0])

        expected = integrate.quad(integrand, 0.0, 1.0)[0] * ring_params.radius**2
        assert float(np.sum(ring.circulation)) == pytest.approx(expected, rel=1e-3)
        assert ring.delta == pytest.approx(1.5 * 2.0 * ring_params.radius / 32)

    def test_make_single_ring_matches_params(self, field_service, ring_params, ring_field):
        """Test the keyword constructor and the params constructor agree."""
        ring = field_service.make_single_ring(ring_params.center, 0.1, 1.0, 8)
        np.testing.assert_array_equal(ring.q, ring_field.q)

    def test_monotone_quantities_need_d3(self, field_service):
        """Test the half-plane monotone moments are d = 3 only."""
        field = VorticityField(4, [1.0], [0.5], [1.0], [0.1])
        with pytest.raises(UnsupportedDimensionError):
            field_service.monotone_quantities(field)

    def test_monotone_quantities(self, field_service, hand_field):
        """Test the half-plane moments against hand values."""
        i_r2, i_z = field_service.monotone_quantities(hand_field)
        # |omega| area = (0.1, 0.4)
        assert i_r2 == pytest.approx(0.1 + 4.0 * 0.4)
        assert i_z == 0.0

    def test_corpus_is_deterministic(self, field_service):
        """Test a corpus depends only on its seed and a prefix is stable."""
        small = field_service.corpus(5, 3)
        large = field_service.corpus(5, 6)
        again = field_service.corpus(5, 3)
        for (id_a, f_a), (id_b, f_b), (id_c, f_c) in zip(small, large, again):
            assert id_a == id_b == id_c
            np.testing.assert_array_equal(f_a.r, f_b.r)
            np.testing.assert_array_equal(f_a.q, f_c.q)

    def test_corpus_unknown_kind(self, field_service):
        """Test unknown corpus kinds are rejected."""
        with pytest.raises(DomainError):
            field_service.corpus(0, 2, kind="sheets")
