import math

import numpy as np
import pytest

from heisencalc.errors import CapExceededError, DimensionMismatchError, DomainError, GridError
from heisencalc.group_core import (
    Field,
    GridSpec,
    GroupPoint,
    SampledField,
    apply_field,
    convolve,
    dilate,
    gauge,
    gauge_array,
    group_inv,
    group_mul,
    haar_integral,
    left_translate,
    lp_norm,
    read_field_csv,
    s_modes,
    shift_xy,
    schwartz_seminorm,
    sublaplacian_fd,
    write_field_csv,
)
from heisencalc.laguerre import weighted_laguerre_table


def gaussian(a=1.0, b=1.0, x0=0.0, y0=0.0):
    return lambda x, y, s: np.exp(-a * ((x - x0) ** 2 + (y - y0) ** 2) - b * s * s)


def random_point(rng, d=1):
    z = rng.normal(size=d) + 1j * rng.normal(size=d)
    return GroupPoint.of(z, rng.normal())


def assert_points_close(a, b, tol=1e-12):
    np.testing.assert_allclose(a.z, b.z, atol=tol)
    assert a.s == pytest.approx(b.s, abs=tol)


def lattice_profile(f, m_max, k_values):
    """
    R_m(lambda_k) = int f(z, s) e^{i lambda_k s} L_m(2 |lambda_k| |z|^2) e^{-|lambda_k| |z|^2} dz ds
    on the lattice s-frequencies lambda_k, with m on the first axis.
    """
    grid = f.grid
    modes = s_modes(f.values, grid)
    xx, yy = np.meshgrid(grid.x, grid.y, indexing="ij")
    columns = []
    for k in k_values:
        lam = abs(grid.frequencies[k])
        rows = weighted_laguerre_table(m_max, 0, 2 * lam * (xx * xx + yy * yy))
        columns.append(np.tensordot(rows, modes[:, :, k], axes=([1, 2], [0, 1])))
    return np.stack(columns, axis=1) * grid.l_s * grid.h_x * grid.h_y


@pytest.fixture
def grid():
    return GridSpec.build(33, 33, 32, 8.0, 8.0, 8.0)


class TestGroupLaw:
    def test_identity(self):
        w = GroupPoint.of(1.5 - 2j, 0.7)
        assert group_mul(GroupPoint.origin(), w) == w
        assert group_mul(w, GroupPoint.origin()) == w

    def test_hand_evaluated_product(self):
        assert group_mul(GroupPoint.of(1), GroupPoint.of(1j)) == GroupPoint.of(1 + 1j, -2.0)

    def test_inverse(self):
        assert group_inv(GroupPoint.of(1 + 1j, 3)) == GroupPoint.of(-1 - 1j, -3)
        assert group_inv(GroupPoint.origin()) == GroupPoint.origin()
        rng = np.random.default_rng(1)
        for _ in range(10):
            a = random_point(rng, d=3)
            assert_points_close(group_mul(a, group_inv(a)), GroupPoint.origin(3))

    def test_associativity(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            a, b, c = (random_point(rng, d=2) for _ in range(3))
            assert_points_close(group_mul(group_mul(a, b), c), group_mul(a, group_mul(b, c)))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            group_mul(GroupPoint.origin(1), GroupPoint.origin(2))

    def test_not_commutative(self):
        a, b = GroupPoint.of(1), GroupPoint.of(1j)
        assert group_mul(a, b) != group_mul(b, a)


class TestDilate:
    def test_examples(self):
        w = GroupPoint.of(1, 1)
        assert dilate(1.0, w) == w
        assert dilate(2.0, w) == GroupPoint.of(2, 4)

    def test_semigroup_and_automorphism(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            w, v = random_point(rng), random_point(rng)
            a, b = rng.uniform(0.1, 3.0, size=2)
            assert_points_close(dilate(a, dilate(b, w)), dilate(a * b, w))
            assert_points_close(group_mul(dilate(a, w), dilate(a, v)), dilate(a, group_mul(w, v)))

    @pytest.mark.parametrize("a", [0.0, -1.0])
    def test_rejects_nonpositive_factor(self, a):
        with pytest.raises(DomainError):
            dilate(a, GroupPoint.origin())


class TestGauge:
    def test_examples(self):
        assert gauge(GroupPoint.origin()) == 0.0
        assert gauge(GroupPoint.of(1)) == 1.0
        assert gauge(GroupPoint.of(0, 4)) == pytest.approx(2.0)

    def test_homogeneity(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            w = random_point(rng, d=2)
            a = rng.uniform(0.1, 5.0)
            assert gauge(dilate(a, w)) == pytest.approx(a * gauge(w), rel=1e-12)

    def test_array_form(self):
        assert gauge_array(3.0, 4.0, 0.0) == pytest.approx(5.0)
        assert gauge_array(0.0, 0.0, -9.0) == pytest.approx(3.0)


class TestGridSpec:
    def test_axes(self, grid):
        assert grid.h_x == 0.25
        assert grid.s[0] == -4.0
        assert grid.s[16] == 0.0
        assert grid.x[16] == 0.0
        assert grid.cell_volume == pytest.approx(0.25**3)

    def test_rejects_small_and_large_grids(self):
        with pytest.raises(GridError):
            GridSpec.build(2, 5, 5, 1, 1, 1)
        with pytest.raises(GridError):
            GridSpec.build(5, 5, 5, 0, 1, 1)
        with pytest.raises(CapExceededError):
            GridSpec.build(65, 65, 64, 1, 1, 1)

    def test_field_shape_is_checked(self, grid):
        with pytest.raises(GridError):
            SampledField.create(grid, np.zeros((3, 3, 3)))


class TestHaarIntegral:
    def test_zero(self, grid):
        assert haar_integral(SampledField.zeros(grid)) == 0

    def test_gaussian_mass(self):
        grid = GridSpec.build(49, 49, 48, 12.0, 12.0, 12.0)
        f = SampledField.from_function(grid, gaussian())
        assert haar_integral(f).real == pytest.approx(math.pi**1.5, rel=1e-6)

    def test_dilation_jacobian(self):
        grid = GridSpec.build(49, 49, 48, 12.0, 12.0, 12.0)
        a = math.sqrt(2.0)
        f = SampledField.from_function(grid, gaussian())
        dilated = SampledField.from_function(grid, lambda x, y, s: gaussian()(a * x, a * y, a * a * s))
        assert (a**4 * haar_integral(dilated)).real == pytest.approx(haar_integral(f).real, rel=1e-8)


class TestLpNorm:
    def test_zero(self, grid):
        assert lp_norm(SampledField.zeros(grid), 3) == 0.0

    def test_sup_norm(self, grid):
        f = SampledField.from_function(grid, lambda x, y, s: -2.0 * gaussian()(x, y, s))
        assert lp_norm(f, math.inf) == pytest.approx(2.0)

    def test_plateau(self):
        grid = GridSpec.build(41, 41, 40, 10.0, 10.0, 10.0)
        plateau = SampledField.from_function(
            grid,
            lambda x, y, s: ((np.abs(x) <= 2) & (np.abs(y) <= 2) & (np.abs(s) < 2)).astype(float),
        )
        # the box edges fall on nodes, so the lattice sum overshoots by one layer of cells
        assert lp_norm(plateau, 2) == pytest.approx(math.sqrt(4 * 4 * 4), rel=0.15)

    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_dilation_scaling(self, p):
        grid = GridSpec.build(49, 49, 48, 12.0, 12.0, 12.0)
        a = math.sqrt(2.0)
        f = SampledField.from_function(grid, gaussian())
        dilated = SampledField.from_function(grid, lambda x, y, s: gaussian()(a * x, a * y, a * a * s))
        assert lp_norm(dilated, p) == pytest.approx(a ** (-4 / p) * lp_norm(f, p), rel=1e-6)

    def test_rejects_small_exponents(self, grid):
        with pytest.raises(DomainError):
            lp_norm(SampledField.zeros(grid), 0.5)


class TestVectorFields:
    @pytest.mark.parametrize("which", list(Field))
    def test_constant_is_annihilated(self, grid, which):
        f = SampledField.create(grid, np.full(grid.shape, 3.0))
        assert np.max(np.abs(apply_field(which, f).values)) == 0.0

    def test_s_derivative_of_a_plane_wave(self, grid):
        lam = 2 * math.pi / grid.l_s
        f = SampledField.from_function(grid, lambda x, y, s: np.exp(-1j * lam * s) * np.exp(-(x * x + y * y)))
        derivative = apply_field("S", f).values
        error = np.max(np.abs(derivative + 1j * lam * f.values)) / (lam * np.max(np.abs(f.values)))
        assert error <= (lam * grid.h_s) ** 2 / 6 * 1.01

    def test_commutator(self):
        grid = GridSpec.build(49, 49, 64, 6.0, 6.0, 8.0)
        f = SampledField.from_function(grid, gaussian())
        zbar_z = apply_field(Field.ZBAR, apply_field(Field.Z, f)).values
        z_zbar = apply_field(Field.Z, apply_field(Field.ZBAR, f)).values
        expected = 2j * apply_field(Field.S, f).values
        error = np.linalg.norm(zbar_z - z_zbar - expected) / np.linalg.norm(expected)
        assert error <= 5e-2


class TestSublaplacian:
    def test_constant(self, grid):
        f = SampledField.create(grid, np.ones(grid.shape))
        assert np.max(np.abs(sublaplacian_fd(f, "composed").values)) == pytest.approx(0.0, abs=1e-12)
        # the compact stencil continues by zero beyond the planar boundary
        assert np.max(np.abs(sublaplacian_fd(f, "compact").values[1:-1, 1:-1])) == pytest.approx(0.0, abs=1e-12)

    def test_mass_neutrality(self):
        grid = GridSpec.build(49, 49, 32, 12.0, 12.0, 8.0)
        f = SampledField.from_function(grid, gaussian())
        laplacian = sublaplacian_fd(f, "compact")
        assert abs(haar_integral(laplacian)) <= 1e-8 * lp_norm(laplacian, 1)

    def test_stencils_agree_to_second_order(self):
        grid = GridSpec.build(49, 49, 64, 6.0, 6.0, 8.0)
        f = SampledField.from_function(grid, gaussian())
        compact = sublaplacian_fd(f, "compact").values
        composed = sublaplacian_fd(f, "composed").values
        assert np.linalg.norm(compact - composed) <= 0.1 * np.linalg.norm(compact)

    def test_default_composes_the_vector_fields(self, grid):
        f = SampledField.from_function(grid, gaussian(x0=0.5))
        np.testing.assert_array_equal(sublaplacian_fd(f).values, sublaplacian_fd(f, "composed").values)

    def test_unknown_stencil(self, grid):
        with pytest.raises(DomainError):
            sublaplacian_fd(SampledField.zeros(grid), "spectral")


class TestConvolve:
    @pytest.mark.parametrize("method", ["trilinear", "fourier"])
    def test_spike_is_an_identity(self, grid, method):
        f = SampledField.from_function(grid, gaussian(x0=0.5))
        spike = np.zeros(grid.shape)
        spike[16, 16, 16] = 1.0 / grid.cell_volume
        result = convolve(f, SampledField.create(grid, spike), method=method)
        np.testing.assert_allclose(result.values, f.values, atol=1e-10)

    def test_not_commutative(self, grid):
        f = SampledField.from_function(grid, gaussian(x0=1.0))
        g = SampledField.from_function(grid, lambda x, y, s: (1 + x) * gaussian(y0=0.5)(x, y, s))
        fg = convolve(f, g, method="fourier")
        gf = convolve(g, f, method="fourier")
        assert lp_norm(fg.with_values(fg.values - gf.values), 2) > 1e-3 * lp_norm(fg, 2)

    def test_young(self, grid):
        f = SampledField.from_function(grid, gaussian(x0=0.5))
        g = SampledField.from_function(grid, gaussian(a=2.0, b=2.0))
        fg = convolve(f, g, method="fourier")
        assert lp_norm(fg, 1) <= lp_norm(f, 1) * lp_norm(g, 1) * (1 + 1e-4)
        assert lp_norm(fg, 2) <= lp_norm(f, 2) * lp_norm(g, 1) * (1 + 1e-4)

    def test_profile_of_a_convolution_is_the_product(self):
        fine = GridSpec.build(41, 41, 32, 8.0, 8.0, 16.0)
        f = SampledField.from_function(fine, gaussian(a=2.0, b=2.0))
        g = SampledField.from_function(fine, gaussian(a=3.0, b=1.5))
        k_values = [1, 2, 3]
        r_f = lattice_profile(f, 2, k_values)
        r_g = lattice_profile(g, 2, k_values)
        lam = np.abs(fine.frequencies[k_values])
        m = np.arange(3)[:, None]
        closed = math.pi / (2 + lam) * ((2 - lam) / (2 + lam)) ** m * math.sqrt(math.pi / 2) * np.exp(-lam * lam / 8)
        np.testing.assert_allclose(r_f, closed, rtol=1e-6)
        r_fg = lattice_profile(convolve(f, g, method="fourier"), 2, k_values)
        np.testing.assert_allclose(r_fg, r_f * r_g, rtol=1e-5, atol=1e-10)

    @pytest.mark.parametrize("which", list(Field))
    def test_left_invariant_fields_pass_through(self, which):
        fine = GridSpec.build(33, 33, 64, 8.0, 8.0, 16.0)
        f = SampledField.from_function(fine, gaussian(x0=0.5))
        g = SampledField.from_function(fine, gaussian(a=0.5, b=0.5))
        outside = apply_field(which, convolve(f, g, method="fourier")).values
        inside = convolve(f, apply_field(which, g), method="fourier").values
        assert np.linalg.norm(outside - inside) <= 0.1 * np.linalg.norm(inside)

    def test_grid_mismatch(self, grid):
        other = GridSpec.build(33, 33, 32, 8.0, 8.0, 4.0)
        with pytest.raises(GridError):
            convolve(SampledField.zeros(grid), SampledField.zeros(other))

    def test_fourier_needs_odd_planar_counts(self):
        grid = GridSpec.build(32, 33, 32, 8.0, 8.0, 8.0)
        with pytest.raises(GridError):
            convolve(SampledField.zeros(grid), SampledField.zeros(grid), method="fourier")


class TestShiftXY:
    def test_moves_along_the_planar_axes(self):
        values = np.arange(9.0).reshape(3, 3, 1)
        shifted = shift_xy(values, 1, -1)
        np.testing.assert_array_equal(shifted[:, :, 0], [[0, 0, 0], [1, 2, 0], [4, 5, 0]])

    def test_shift_past_the_grid_empties_it(self):
        assert not shift_xy(np.ones((3, 3, 2)), 3, 0).any()


class TestLeftTranslate:
    def test_vertical_lattice_shift_rolls_s(self, grid):
        f = SampledField.from_function(grid, gaussian())
        moved = left_translate(f, 0, 0, grid.h_s)
        np.testing.assert_allclose(moved.values, np.roll(f.values, 1, axis=2), atol=1e-12)

    def test_composition_follows_the_group_law(self, grid):
        f = SampledField.from_function(grid, gaussian(x0=0.5))
        two_steps = left_translate(left_translate(f, 1, 0), 0, 1)
        # (i h_y, 0)(h_x, 0) = (h_x + i h_y, 2 h_x h_y)
        direct = left_translate(f, 1, 1, 2 * grid.h_x * grid.h_y)
        np.testing.assert_allclose(two_steps.values, direct.values, atol=1e-12)

    @pytest.mark.parametrize("p", [2.0, math.inf])
    def test_preserves_norms(self, grid, p):
        f = SampledField.from_function(grid, gaussian())
        moved = left_translate(f, 2, -1, 0.5)
        assert lp_norm(moved, p) == pytest.approx(lp_norm(f, p), rel=1e-3)


class TestSchwartzSeminorm:
    def test_order_zero_is_the_sup(self, grid):
        f = SampledField.from_function(grid, gaussian())
        assert schwartz_seminorm(f, 0) == pytest.approx(1.0)
        assert schwartz_seminorm(SampledField.zeros(grid), 1) == 0.0

    def test_stable_under_refinement(self):
        coarse = GridSpec.build(49, 49, 64, 6.0, 6.0, 8.0)
        fine = GridSpec.build(61, 61, 64, 6.0, 6.0, 8.0)
        values = [schwartz_seminorm(SampledField.from_function(g, gaussian()), 1) for g in (coarse, fine)]
        assert values[0] == pytest.approx(values[1], rel=5e-2)

    def test_caps(self, grid):
        with pytest.raises(CapExceededError):
            schwartz_seminorm(SampledField.zeros(grid), 3)
        with pytest.raises(DomainError):
            schwartz_seminorm(SampledField.zeros(grid), -1)


class TestFieldCsv:
    def test_read_back(self, tmp_path):
        grid = GridSpec.build(3, 4, 5, 1.0, 2.0, 3.0)
        rng = np.random.default_rng(5)
        f = SampledField.create(grid, rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape))
        path = tmp_path / "field.csv"
        write_field_csv(path, f)
        assert path.read_text().startswith("# grid d=1 nx=3 ny=4 ns=5 lx=1 ly=2 ls=3\n")
        back = read_field_csv(path)
        assert back.grid == grid
        assert np.array_equal(back.values, f.values)
