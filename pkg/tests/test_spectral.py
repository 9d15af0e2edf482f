import math

import numpy as np
import pytest

from heisencalc.errors import (
    CapExceededError,
    DimensionMismatchError,
    DomainError,
    GridError,
    SupportError,
    TruncationError,
)
from heisencalc.families import (
    gaussian_function,
    gaussian_lp_norm,
    gaussian_plancherel_tail,
    gaussian_profile,
    one_mode,
)
from heisencalc.spectral import (
    MAX_M,
    InversePlan,
    RadialFunction,
    RadialProfile,
    RadialQuadrature,
    SpectralGrid,
    check_lemma41,
    edge_share,
    forward_transform,
    inverse_transform,
    multiplier,
    plancherel_norm,
    profile_lp_norm,
    read_profile_csv,
    resolved_entries,
    spectral_power,
    summability,
    unresolved_edge,
    write_profile_csv,
)


@pytest.fixture(scope="module")
def grid():
    return SpectralGrid.build(1, 8, 2.0**-4, 2.0**4, order=16, subdivisions=4)


@pytest.fixture(scope="module")
def gaussian_quadrature():
    return RadialQuadrature.build(1, 8.0, 8.0, 32, 32)


class TestSpectralGrid:
    def test_nodes_are_symmetric(self, grid):
        np.testing.assert_array_equal(grid.lambdas, -grid.lambdas[::-1])
        np.testing.assert_array_equal(grid.weights, grid.weights[::-1])
        assert len(grid.lambdas) == 2 * 8 * grid.nodes_per_octave

    def test_weights_integrate_constants(self, grid):
        positive = grid.weights[grid.n_half :]
        assert positive.sum() == pytest.approx(2.0**4 - 2.0**-4, rel=1e-12)

    def test_joint_spectrum(self, grid):
        mu = grid.joint_spectrum()
        assert mu[3, -1] == pytest.approx(4 * 7 * grid.lambdas[-1])
        assert mu[0, 0] == pytest.approx(4 * abs(grid.lambdas[0]))

    def test_measure_at_d1(self, grid):
        lam = np.abs(grid.lambdas)
        np.testing.assert_allclose(grid.measure()[2], grid.weights * lam / math.pi**2)

    @pytest.mark.parametrize(
        "args, error",
        [
            ((0, 4, 2.0**-4, 2.0**4), DomainError),
            ((1, -1, 2.0**-4, 2.0**4), DomainError),
            ((1, MAX_M + 1, 2.0**-4, 2.0**4), CapExceededError),
            ((1, 4, 1.0, 3.0), GridError),
            ((1, 4, 2.0, 1.0), GridError),
        ],
    )
    def test_invalid_grids(self, args, error):
        with pytest.raises(error):
            SpectralGrid.build(*args)


class TestRadialProfile:
    def test_shape_is_checked(self, grid):
        with pytest.raises(GridError):
            RadialProfile.create(grid, np.zeros((3, 3)))

    def test_values_must_be_finite(self, grid):
        values = np.zeros((grid.m_max + 1, len(grid.lambdas)))
        values[0, 0] = np.nan
        with pytest.raises(DomainError):
            RadialProfile.create(grid, values)

    def test_zero_profile_has_no_support(self, grid):
        zero = RadialProfile.zeros(grid)
        assert zero.is_zero()
        with pytest.raises(SupportError):
            zero.support()
        with pytest.raises(SupportError):
            zero.tau_range()

    def test_support_of_one_mode(self, grid):
        m_hi, lam_lo, lam_hi = one_mode(grid, 2, 1.0).support()
        assert m_hi == 2
        assert 0.2 < lam_lo < 1.0 < lam_hi < 4.0

    def test_gaussian_is_conjugate_symmetric(self, grid):
        assert gaussian_profile(grid, 1.0, 2.0).conjugate_symmetry_defect() == 0.0

    def test_dilation_shifts_octaves(self, grid):
        dilated = one_mode(grid, 0, 1.0).dilate(2)
        expected = one_mode(grid, 0, 4.0).scaled(2.0**-4)
        np.testing.assert_allclose(dilated.values, expected.values, rtol=1e-10, atol=1e-14)

    def test_dilation_needs_power_of_two(self, grid):
        with pytest.raises(DomainError):
            one_mode(grid).dilate(3)

    def test_dilation_off_the_grid(self, grid):
        with pytest.raises(SupportError):
            one_mode(grid, 0, 8.0).dilate(2)

    def test_profiles_on_different_grids_do_not_add(self, grid):
        other = SpectralGrid.build(1, 8, 2.0**-4, 2.0**3, order=16, subdivisions=4)
        with pytest.raises(GridError):
            one_mode(grid) + one_mode(other)


class TestForwardTransform:
    @pytest.mark.parametrize("a, b", [(1.0, 1.0), (0.5, 2.0)])
    def test_gaussian_closed_form(self, grid, gaussian_quadrature, a, b):
        profile = forward_transform(gaussian_function(gaussian_quadrature, a, b), grid)
        closed = gaussian_profile(grid, a, b)
        assert resolved_entries(gaussian_quadrature, grid).all()
        scale = np.max(np.abs(closed.values))
        np.testing.assert_allclose(profile.values, closed.values, atol=1e-8 * scale)

    def test_under_resolved_quadrature(self, grid):
        coarse = RadialQuadrature.build(1, 8.0, 8.0, 8, 8)
        assert coarse.lambda_resolution < grid.lambdas[-1]
        # e^{-lambda^2/8} is still about 1e-3 of the peak where the plane waves stop resolving
        with pytest.raises(TruncationError, match="stops resolving"):
            forward_transform(gaussian_function(coarse, 1.0, 2.0), grid)

    def test_unresolved_tail_below_the_floor(self, grid):
        coarse = RadialQuadrature.build(1, 8.0, 8.0, 8, 8)
        profile = forward_transform(gaussian_function(coarse, 1.0, 2.0), grid, unresolved_floor=1e-2)
        mask = resolved_entries(coarse, grid)
        assert not np.any(profile.values[~mask])
        assert 1e-5 < edge_share(gaussian_profile(grid, 1.0, 2.0).values, mask) < 1e-2

    def test_no_resolved_node(self, grid):
        wide = RadialQuadrature.build(1, 8.0, 2048.0, 8, 8)
        assert wide.lambda_resolution < grid.lambda_min
        with pytest.raises(TruncationError, match="no lambda-node"):
            forward_transform(gaussian_function(wide), grid)

    def test_unresolved_edge(self):
        mask = np.array([[True, True, True], [True, True, False], [True, False, False]])
        expected = np.array([[False, False, True], [False, True, False], [True, False, False]])
        np.testing.assert_array_equal(unresolved_edge(mask), expected)

    def test_function_must_decay(self, grid, gaussian_quadrature):
        constant = RadialFunction.from_callable(gaussian_quadrature, lambda r, s: np.ones_like(r))
        with pytest.raises(TruncationError):
            forward_transform(constant, grid)

    def test_dimension_mismatch(self, gaussian_quadrature):
        other = SpectralGrid.build(2, 2, 2.0**-4, 2.0**4)
        with pytest.raises(DimensionMismatchError):
            forward_transform(gaussian_function(gaussian_quadrature), other)

    def test_zero_function(self, grid, gaussian_quadrature):
        zero = RadialFunction.from_callable(gaussian_quadrature, lambda r, s: 0 * r)
        assert forward_transform(zero, grid).is_zero()


class TestInverseTransform:
    @pytest.mark.parametrize("m0, lambda0", [(0, 1.0), (2, 0.5)])
    def test_forward_recovers_profile(self, grid, m0, lambda0):
        profile = one_mode(grid, m0, lambda0)
        back = forward_transform(inverse_transform(profile), grid)
        support = profile.values != 0
        error = np.max(np.abs(back.values - profile.values)[support])
        assert error <= 1e-6

    def test_s_range_stays_resolved(self, grid):
        quad = RadialQuadrature.for_profile(one_mode(grid, 0, 1.0))
        assert quad.s_max == 64.0

    def test_rule_dilates_with_profile(self, grid):
        profile = one_mode(grid, 0, 0.5)
        quad = RadialQuadrature.for_profile(profile)
        dilated = RadialQuadrature.for_profile(profile.dilate(2))
        expected = quad.dilated(2)
        np.testing.assert_allclose(dilated.r_nodes, expected.r_nodes, rtol=1e-14)
        np.testing.assert_allclose(dilated.s_nodes, expected.s_nodes, rtol=1e-14)
        np.testing.assert_allclose(dilated.r_weights, expected.r_weights, rtol=1e-14)

    def test_truncated_series_is_reported(self, grid):
        with pytest.raises(TruncationError):
            inverse_transform(one_mode(grid, grid.m_max, 1.0), tail_tol=1e-3)

    def test_plan_rejects_wider_profiles(self, grid):
        narrow = one_mode(grid, 0, 1.0)
        plan = InversePlan(narrow, RadialQuadrature.for_profile(narrow))
        with pytest.raises(SupportError):
            plan.apply(one_mode(grid, 1, 1.0))

    def test_plan_matches_direct_inversion(self, grid):
        profile = one_mode(grid, 1, 1.0)
        quad = RadialQuadrature.for_profile(profile)
        plan = InversePlan(profile, quad)
        half = profile.scaled(0.5)
        np.testing.assert_allclose(plan.apply(half).values, inverse_transform(half, quad).values)


class TestPlancherel:
    def test_gaussian_norm(self):
        wide = SpectralGrid.build(1, 256)
        exact = gaussian_lp_norm(1, 1.0, 1.0, 2)
        held = plancherel_norm(gaussian_profile(wide))
        # rows above m_max carry a few 1e-4 of the norm
        assert held != pytest.approx(exact, rel=1e-4)
        assert math.sqrt(held**2 + gaussian_plancherel_tail(wide)) == pytest.approx(exact, rel=1e-4)

    @pytest.mark.parametrize("a, b", [(1.0, 1.0), (2.0, 0.5)])
    def test_tail_of_a_narrow_grid(self, a, b):
        narrow = SpectralGrid.build(1, 32, 2.0**-6, 2.0**6)
        held = plancherel_norm(gaussian_profile(narrow, a, b))
        total = math.sqrt(held**2 + gaussian_plancherel_tail(narrow, a, b))
        assert total == pytest.approx(gaussian_lp_norm(1, a, b, 2), rel=1e-8)

    def test_lp_norm_of_zero(self, grid):
        assert profile_lp_norm(RadialProfile.zeros(grid), 1.0) == 0.0

    def test_lp_norm_needs_p_at_least_one(self, grid):
        with pytest.raises(DomainError):
            profile_lp_norm(one_mode(grid), 0.5)

    def test_l2_norm_agrees_with_inversion(self, grid):
        profile = one_mode(grid, 0, 1.0)
        plan = InversePlan(profile, RadialQuadrature.for_profile(profile))
        assert profile_lp_norm(profile, 2, plan) == pytest.approx(plancherel_norm(profile), rel=1e-6)


class TestMultiplier:
    def test_power_zero_is_identity(self, grid):
        profile = gaussian_profile(grid)
        np.testing.assert_allclose(multiplier(profile, spectral_power(0.0, 1)).values, profile.values)

    def test_power_one_is_joint_spectrum(self, grid):
        profile = gaussian_profile(grid)
        applied = multiplier(profile, spectral_power(1.0, 1))
        np.testing.assert_allclose(applied.values, grid.joint_spectrum() * profile.values)

    def test_infinite_multiplier_on_support(self, grid):
        with pytest.raises(DomainError):
            multiplier(one_mode(grid), lambda m, lam: np.full(np.broadcast(m, lam).shape, np.inf))

    def test_infinite_multiplier_off_support_is_ignored(self, grid):
        profile = one_mode(grid, 0, 1.0)
        applied = multiplier(profile, lambda m, lam: np.where(m > 0, np.inf, 2.0))
        np.testing.assert_allclose(applied.values, 2 * profile.values)


class TestIdentities:
    def test_lambda_derivative_identity(self, grid, gaussian_quadrature):
        report = check_lemma41(gaussian_function(gaussian_quadrature), grid, tol=1e-2)
        assert report.measured["compared"] > 0
        assert report.passed

    def test_summability(self, grid):
        report = summability(gaussian_profile(grid), 2.5)
        assert report.passed
        assert report.measured["sum"] == pytest.approx(report.measured["low"] + report.measured["high"])
        assert "high_bound" in report.measured

    def test_summability_below_the_threshold(self, grid):
        report = summability(gaussian_profile(grid), 1.0)
        assert report.passed
        assert "high_bound" not in report.measured


class TestProfileCsv:
    def test_write_read(self, tmp_path):
        small = SpectralGrid.build(1, 2, 0.5, 2.0, order=4, subdivisions=1)
        profile = gaussian_profile(small).with_values(gaussian_profile(small).values * (1 + 0.5j))
        path = tmp_path / "profile.csv"
        write_profile_csv(path, profile, {"family": "gaussian"})
        back = read_profile_csv(path)
        assert back.grid.same_as(small)
        np.testing.assert_array_equal(back.values, profile.values)

    def test_wrong_kind(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("# kernel d=1\nr,s,h\n0,0,1\n")
        with pytest.raises(GridError):
            read_profile_csv(path)
