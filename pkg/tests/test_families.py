import math

import numpy as np
import pytest

from heisencalc.errors import ConfigError, DomainError
from heisencalc.families import (
    Families,
    build_family,
    gaussian_lp_norm,
    gaussian_profile,
    localized_ring,
    one_mode,
    two_bump,
    zero,
)
from heisencalc.littlewood_paley import sobolev_norm
from heisencalc.spectral import SpectralGrid


@pytest.fixture(scope="module")
def grid():
    return SpectralGrid.build(1, 8, 2.0**-4, 2.0**4, order=16, subdivisions=4)


class TestFamilies:
    def test_names(self):
        assert Families.names() == ["gaussian", "one_mode", "localized_ring", "two_bump", "zero"]

    @pytest.mark.parametrize("name", Families.names())
    def test_every_family_builds(self, grid, name):
        # the default a = 4 pushes the second bump past lambda_max = 16
        params = {"a": 2.0} if name == "two_bump" else {}
        profile = build_family(name, grid, params)
        assert profile.values.shape == (9, len(grid.lambdas))

    def test_hyphenated_names(self, grid):
        np.testing.assert_array_equal(
            build_family("localized-ring", grid).values, localized_ring(grid).values
        )

    def test_unknown_family(self, grid):
        with pytest.raises(ConfigError):
            build_family("bessel", grid)

    def test_unknown_parameter(self, grid):
        with pytest.raises(ConfigError):
            build_family("zero", grid, {"a": 1.0})

    def test_dilate_parameter(self, grid):
        built = build_family("one_mode", grid, {"dilate": 1})
        np.testing.assert_array_equal(built.values, one_mode(grid).dilate(2).values)

    def test_parameters_reach_the_builder(self, grid):
        built = build_family("gaussian", grid, {"a": 2.0, "b": 0.5})
        np.testing.assert_array_equal(built.values, gaussian_profile(grid, 2.0, 0.5).values)


class TestMembers:
    def test_zero(self, grid):
        assert zero(grid).is_zero()

    def test_gaussian_needs_positive_parameters(self, grid):
        with pytest.raises(DomainError):
            gaussian_profile(grid, 0.0, 1.0)

    @pytest.mark.parametrize("p, expected", [(1.0, math.pi**1.5), (math.inf, 1.0)])
    def test_gaussian_lp_norms(self, p, expected):
        assert gaussian_lp_norm(1, 1.0, 1.0, p) == pytest.approx(expected)

    def test_gaussian_rows_decay_in_m(self, grid):
        below_a = (grid.lambdas > 0) & (grid.lambdas < 1.0)
        magnitude = np.abs(gaussian_profile(grid).values[:, below_a])
        assert np.all(np.diff(magnitude, axis=0) < 0)

    @pytest.mark.parametrize("kwargs", [{"m0": 9}, {"lambda0": 0.0}, {"sigma": -1.0}])
    def test_one_mode_arguments(self, grid, kwargs):
        with pytest.raises(DomainError):
            one_mode(grid, **kwargs)

    def test_one_mode_lives_on_one_row(self, grid):
        profile = one_mode(grid, 3, 1.0)
        rows = np.flatnonzero(np.any(profile.values != 0, axis=1))
        assert rows.tolist() == [3]
        assert np.max(np.abs(profile.values)) == pytest.approx(1.0, abs=1e-2)

    def test_seeded_rings_are_reproducible(self, grid):
        first = localized_ring(grid, 0, seed=7)
        np.testing.assert_array_equal(first.values, localized_ring(grid, 0, seed=7).values)
        assert not np.array_equal(first.values, localized_ring(grid, 0, seed=8).values)
        assert not np.any(first.values[3:])

    def test_two_bump_pieces_share_the_seminorm(self, grid):
        base = localized_ring(grid, 0)
        combined = two_bump(base, a=2.0, s=0.5, p=2.0)
        moved = combined.with_values(combined.values - base.values)
        assert sobolev_norm(moved, 0.5, 2) == pytest.approx(sobolev_norm(base, 0.5, 2), rel=1e-12)
