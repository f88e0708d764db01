import math

import numpy as np
import pytest

import liouville as lv
from liouville.errors import DomainError, InputError

from test_radial import interpolated_ode_residual


class TestHeightMatch:
    def test_equal_heights_identity(self):
        assert lv.height_match(7.0, 7.0, 0.7, 0.7).eta == pytest.approx(1.0)

    def test_direct_value(self):
        h = lv.height_match(10.0, 20.0, 1.0, 0.5)
        assert h.eta == pytest.approx(0.5, rel=1e-14)

    def test_shifted_heights(self):
        h = lv.height_match(12.0, 10.0, 1.0, 1.0)
        assert h.eta == pytest.approx(math.e, rel=1e-14)

    def test_defining_relation(self):
        h = lv.height_match(3.7, 11.3, 0.85, 0.4)
        lhs = 2.0 * h.mu_p * math.log(h.eta)
        rhs = h.mu_p * h.M_p - h.mu_q * h.M_q - 2.0 * math.log(h.mu_p / h.mu_q)
        assert lhs == pytest.approx(rhs, abs=1e-12)
        assert h.eps_p == pytest.approx(math.exp(-h.M_p / 2.0))

    def test_validation(self):
        with pytest.raises(InputError):
            lv.height_match(1.0, 1.0, 1.5, 0.5)
        with pytest.raises(InputError):
            lv.height_match(math.inf, 1.0, 1.0, 0.5)


class TestMuTransform:
    def test_identity(self, f2_profile):
        same = lv.mu_transform(f2_profile, 0.5)
        np.testing.assert_array_equal(same.grid, f2_profile.grid)
        np.testing.assert_array_equal(same.values, f2_profile.values)

    def test_f2_closed_form(self, f2_deep_profile):
        # strength 1/2 -> 1 lands on log(4 / (1 + r^2/2)^2)
        transformed = lv.mu_transform(f2_deep_profile, 1.0)
        assert transformed.spec.singularity.gamma == 0.0
        for r in (0.3, 2.0, 30.0):
            u, _ = lv.evaluate(transformed, r)
            exact = math.log(4.0) - 2.0 * math.log1p(r * r / 2.0)
            assert u[0] == pytest.approx(exact, abs=3e-8)

    def test_solves_target_equation(self, f2_deep_profile):
        # node-level residual under the target-strength equation
        transformed = lv.mu_transform(f2_deep_profile, 1.0)
        mu = transformed.spec.singularity.mu
        a_mat = transformed.spec.matrix.entries
        forcing = np.exp(
            2.0 * mu * transformed.grid[:, None] + transformed.values
        ) @ a_mat.T
        resid = transformed.d2values + forcing
        assert float(np.max(np.abs(resid))) < 1e-7
        # and the dense interpolant behaves like a direct integration
        assert interpolated_ode_residual(transformed, -1.0, 3.0, 0.01) < 1e-3

    def test_energy_ratio(self, f2_summary):
        transformed = lv.extract_summary(lv.mu_transform(f2_summary.profile, 1.0))
        # sigma_tilde * mu_q = sigma_bar * mu_p
        assert abs(
            transformed.sigma[0] * f2_summary.mu - f2_summary.sigma[0] * 1.0
        ) < 1e-8

    def test_initial_gaps_preserved(self, matrix12):
        spec = lv.ProblemSpec(
            matrix12, lv.SingularityProfile(-0.5), np.array([0.0, -0.7])
        )
        profile = lv.integrate(spec, 1e6, 1e-10)
        transformed = lv.mu_transform(profile, 0.8)
        gap_before = profile.spec.alpha0[0] - profile.spec.alpha0[1]
        gap_after = transformed.spec.alpha0[0] - transformed.spec.alpha0[1]
        assert gap_after == pytest.approx(gap_before, abs=1e-15)

    def test_degenerate_strength_rejected(self, f2_profile):
        with pytest.raises(DomainError):
            lv.mu_transform(f2_profile, 0.0)
        with pytest.raises(DomainError):
            lv.mu_transform(f2_profile, 1.5)


class TestHatRescale:
    def test_unit_dilation_identity(self, f2_profile):
        heights = lv.height_match(4.0, 4.0, 0.5, 0.5)
        same = lv.hat_rescale(f2_profile, heights)
        np.testing.assert_array_equal(same.values, f2_profile.values)

    def test_measure_preserving(self, f2_deep_profile):
        transformed = lv.mu_transform(f2_deep_profile, 1.0)
        heights = lv.height_match(10.0, 20.0, 1.0, 0.5)
        rescaled = lv.hat_rescale(transformed, heights)
        s_before = lv.extract_summary(transformed).sigma
        s_after = lv.extract_summary(rescaled).sigma
        np.testing.assert_allclose(s_after, s_before, rtol=1e-10)

    def test_initial_shift(self, f2_deep_profile):
        transformed = lv.mu_transform(f2_deep_profile, 1.0)
        heights = lv.height_match(10.0, 20.0, 1.0, 0.5)
        rescaled = lv.hat_rescale(transformed, heights)
        expected = transformed.spec.alpha0 + 2.0 * 1.0 * math.log(0.5)
        np.testing.assert_allclose(rescaled.spec.alpha0, expected, rtol=1e-14)

    def test_strength_mismatch_rejected(self, f2_profile):
        heights = lv.height_match(10.0, 20.0, 1.0, 0.5)
        with pytest.raises(InputError):
            lv.hat_rescale(f2_profile, heights)  # profile strength is 1/2


class TestDRelation:
    def test_identity_strengths(self, f2_summary):
        resid = lv.d_relation_residual(f2_summary, 0.5, 6.0, 9.0)
        assert np.max(np.abs(resid)) < 1e-8

    def test_f2_to_regular(self, f2_summary):
        resid = lv.d_relation_residual(f2_summary, 1.0, 10.0, 20.0)
        assert np.max(np.abs(resid)) < 1e-6
        # the shifted tail constant lands on log 64
        expected = f2_summary.D[0] + (f2_summary.m[0] / 0.5) * math.log(2.0)
        assert expected == pytest.approx(math.log(64.0), abs=1e-7)

    def test_height_pair_independence(self, f2_summary):
        r1 = lv.d_relation_residual(f2_summary, 1.0, 10.0, 20.0)
        r2 = lv.d_relation_residual(f2_summary, 1.0, 3.7, 11.3)
        assert np.max(np.abs(r1 - r2)) < 1e-9

    def test_multicomponent(self, matrix12):
        spec = lv.ProblemSpec(
            matrix12, lv.SingularityProfile(-0.4), np.array([0.0, -0.5])
        )
        summary = lv.extract_summary(lv.integrate(spec, 1e7, 1e-10))
        resid = lv.d_relation_residual(summary, 0.9, 5.0, 8.0)
        assert np.max(np.abs(resid)) < 1e-6


class TestBubbleDistance:
    def test_own_transform_image(self, f2_summary):
        image = lv.extract_summary(lv.mu_transform(f2_summary.profile, 1.0))
        comp = lv.bubble_distance(image, f2_summary)
        assert np.max(comp.distances) < 1e-8

    def test_scalar_fixtures_agree(self, f1_summary, f2_summary):
        comp = lv.bubble_distance(f1_summary, f2_summary)
        assert comp.distances[0] < 1e-8
        assert comp.reference_scale is None

    def test_perturbation_bounded_by_jacobian(self, matrix12):
        sing = lv.SingularityProfile(0.0)
        base = lv.alpha_to_sigma(matrix12, sing, [0.0])
        moved = lv.alpha_to_sigma(matrix12, sing, [0.1])
        comp = lv.bubble_distance(moved.summary, base.summary)
        jac = lv.shooting_jacobian(matrix12, sing, [0.0])
        bound = 3.0 * abs(jac[0, 0]) * 0.1  # slack for full-vector response
        assert 0.0 < np.max(comp.distances) < bound

    def test_reference_scale(self, f1_summary, f2_summary):
        heights = lv.height_match(10.0, 20.0, 1.0, 0.5)
        comp = lv.bubble_distance(f1_summary, f2_summary, heights)
        expected = heights.eps_p ** (f1_summary.m_min - 2.0 * f1_summary.mu)
        assert comp.reference_scale == pytest.approx(expected, rel=1e-14)
