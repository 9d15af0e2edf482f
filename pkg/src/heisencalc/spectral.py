"""
Radial Fourier calculus on H^d.

A radial function f(z, s) = g(|z|, s) is diagonalised by the group Fourier
transform: its transform acts on the Laguerre basis by scalars R_m(lambda),

    R_m(lambda) = C(m+d-1, m)^{-1} int e^{i lambda s} f(z, s) L_m^{(d-1)}(2|lambda||z|^2) e^{-|lambda||z|^2} dz ds,

and f is recovered by

    f(z, s) = (2^{d-1}/pi^{d+1}) sum_m int e^{-i lambda s} R_m(lambda) L_m^{(d-1)}(2|lambda||z|^2) e^{-|lambda||z|^2} |lambda|^d d lambda.

Functions of the sub-Laplacian act on profiles by multiplying R_m(lambda) with a
function of the joint spectrum value 4|lambda|(2m+d).
"""
import logging
import math
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from scipy.special import comb

from heisencalc import csvio
from heisencalc.errors import (
    CapExceededError,
    DimensionMismatchError,
    DomainError,
    GridError,
    SupportError,
    TruncationError,
)
from heisencalc.laguerre import iter_weighted_laguerre
from heisencalc.quadrature import dyadic_rule, panel_rule
from heisencalc.reports import VerificationReport

if TYPE_CHECKING:
    from typing import Any, Callable, Iterator, Mapping, Optional, Tuple

    from numpy.typing import ArrayLike, NDArray

    from heisencalc.csvio import PathLike

    Multiplier = Callable[[NDArray[np.int64], NDArray[np.float64]], ArrayLike]

logger = logging.getLogger(__name__)

MAX_M = 4096
MAX_QUADRATURE_POINTS = 2**23
# cached Laguerre stacks of an inverse plan are kept below this many entries
PLAN_TABLE_LIMIT = 2**24
DECAY_FLOOR = 1e-6
# resolved entries bordering unresolved ones must stay below this share of the peak
UNRESOLVED_FLOOR = 1e-5
# lambda columns below this share of the peak do not limit the s-range of an inversion
SIGNIFICANT_SHARE = 1e-3


def inversion_constant(d: int) -> float:
    """
    The constant 2^{d-1}/pi^{d+1} of the inversion and Plancherel formulas.
    """
    return 2.0 ** (d - 1) / math.pi ** (d + 1)


def sphere_constant(d: int) -> float:
    """
    Surface measure 2 pi^d/(d-1)! of the unit sphere of C^d = R^{2d}.
    """
    return 2 * math.pi**d / math.factorial(d - 1)


def multiplicity(m: "ArrayLike", d: int) -> "NDArray[np.float64]":
    return np.asarray(comb(np.asarray(m) + d - 1, np.asarray(m)), dtype=float)


def homogeneous_dimension(d: int) -> int:
    return 2 * d + 2


def _power_of_two_exponent(a: float) -> int:
    mantissa, exponent = math.frexp(a)
    if a <= 0 or mantissa != 0.5:
        raise DomainError(f"exact dilations need a power of two, got {a}")
    return exponent - 1


class SpectralGrid(NamedTuple):
    """
    Signed dyadic lambda-nodes over [-Lambda, -lambda_min] u [lambda_min, Lambda]
    and Laguerre truncation m <= m_max. Octave k of the positive half carries
    `subdivisions` Gauss-Legendre panels of `order` nodes and is the exact
    2^k-multiple of the first octave.
    """

    d: int
    m_max: int
    lambdas: "NDArray[np.float64]"
    weights: "NDArray[np.float64]"
    lambda_min: float
    lambda_max: float
    order: int
    subdivisions: int

    @classmethod
    def build(
        cls,
        d: int,
        m_max: int,
        lambda_min: float = 2.0**-12,
        lambda_max: float = 2.0**12,
        order: int = 16,
        subdivisions: int = 4,
    ) -> "SpectralGrid":
        if d < 1:
            raise DomainError(f"dimension must be at least 1, got {d}")
        if m_max < 0:
            raise DomainError(f"m_max must be nonnegative, got {m_max}")
        if m_max > MAX_M:
            raise CapExceededError(f"m_max {m_max} exceeds the cap {MAX_M}")
        if not 0 < lambda_min < lambda_max:
            raise GridError(f"need 0 < lambda_min < lambda_max, got {lambda_min}, {lambda_max}")
        octaves = math.log2(lambda_max / lambda_min)
        if octaves != round(octaves):
            raise GridError("lambda_max / lambda_min must be a power of two")
        positive = dyadic_rule(lambda_min, int(round(octaves)), order, subdivisions)
        return cls(
            d=d,
            m_max=m_max,
            lambdas=np.concatenate([-positive.nodes[::-1], positive.nodes]),
            weights=np.concatenate([positive.weights[::-1], positive.weights]),
            lambda_min=float(lambda_min),
            lambda_max=float(lambda_max),
            order=order,
            subdivisions=subdivisions,
        )

    @property
    def n_half(self) -> int:
        return len(self.lambdas) // 2

    @property
    def nodes_per_octave(self) -> int:
        return self.order * self.subdivisions

    @property
    def m(self) -> "NDArray[np.int64]":
        return np.arange(self.m_max + 1)

    def tau(self) -> "NDArray[np.float64]":
        """
        (2m+d)|lambda| for every (m, node); m on the first axis.
        """
        return (2 * self.m[:, None] + self.d) * np.abs(self.lambdas)[None, :]

    def joint_spectrum(self) -> "NDArray[np.float64]":
        """
        The eigenvalue 4|lambda|(2m+d) of -Delta_H on the (m, lambda) mode.
        """
        return 4 * self.tau()

    def measure(self) -> "NDArray[np.float64]":
        """
        Plancherel weights (2^{d-1}/pi^{d+1}) C(m+d-1, m) w_k |lambda_k|^d.
        """
        lam = np.abs(self.lambdas)
        return (
            inversion_constant(self.d)
            * multiplicity(self.m, self.d)[:, None]
            * (self.weights * lam**self.d)[None, :]
        )

    def same_as(self, other: "SpectralGrid") -> bool:
        return (
            self.d == other.d
            and self.m_max == other.m_max
            and len(self.lambdas) == len(other.lambdas)
            and bool(np.all(self.lambdas == other.lambdas))
        )


class RadialProfile(NamedTuple):
    grid: SpectralGrid
    values: "NDArray[np.complex128]"

    @classmethod
    def create(cls, grid: SpectralGrid, values: "ArrayLike") -> "RadialProfile":
        values = np.asarray(values, dtype=complex)
        expected = (grid.m_max + 1, len(grid.lambdas))
        if values.shape != expected:
            raise GridError(f"profile of shape {values.shape} does not match grid {expected}")
        if not np.all(np.isfinite(values)):
            raise DomainError("profile values must be finite")
        return cls(grid, values)

    @classmethod
    def zeros(cls, grid: SpectralGrid) -> "RadialProfile":
        return cls(grid, np.zeros((grid.m_max + 1, len(grid.lambdas)), dtype=complex))

    @classmethod
    def from_function(cls, grid: SpectralGrid, fn: "Multiplier") -> "RadialProfile":
        """
        Tabulate fn(m, lambda), called once with broadcastable m (column) and lambda (row).
        """
        shape = (grid.m_max + 1, len(grid.lambdas))
        values = np.broadcast_to(fn(grid.m[:, None], grid.lambdas[None, :]), shape)
        return cls.create(grid, values)

    def with_values(self, values: "ArrayLike") -> "RadialProfile":
        return RadialProfile.create(self.grid, values)

    def __add__(self, other: "RadialProfile") -> "RadialProfile":  # type: ignore[override]
        if not self.grid.same_as(other.grid):
            raise GridError("profiles live on different spectral grids")
        return self.with_values(self.values + other.values)

    def scaled(self, factor: complex) -> "RadialProfile":
        return self.with_values(factor * self.values)

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def active(self) -> "Tuple[int, NDArray[np.int64]]":
        """
        Highest nonzero Laguerre index and the node indices with a nonzero entry.
        """
        rows = np.flatnonzero(np.any(self.values != 0, axis=1))
        columns = np.flatnonzero(np.any(self.values != 0, axis=0))
        return (int(rows[-1]) if len(rows) else 0), columns

    def support(self) -> "Tuple[int, float, float]":
        """
        (highest m, smallest |lambda|, largest |lambda|) over nonzero entries.
        """
        m_hi, columns = self.active()
        if not len(columns):
            raise SupportError("the zero profile has empty support")
        lam = np.abs(self.grid.lambdas[columns])
        return m_hi, float(lam.min()), float(lam.max())

    def tau_range(self) -> "Tuple[float, float]":
        """
        Extent of (2m+d)|lambda| over nonzero entries.
        """
        tau = self.grid.tau()[self.values != 0]
        if not len(tau):
            raise SupportError("the zero profile has empty support")
        return float(tau.min()), float(tau.max())

    def conjugate_symmetry_defect(self) -> float:
        """
        max |R_m(-lambda) - conj(R_m(lambda))|, zero for real radial functions.
        """
        return float(np.max(np.abs(self.values[:, ::-1] - np.conj(self.values)), initial=0.0))

    def dilate(self, a: float) -> "RadialProfile":
        """
        Profile of u o delta_a for a power of two a: a^{-N} R_m(lambda / a^2).

        On the dyadic grid this is a shift by 2 log2(a) octaves, so no
        interpolation happens and the result is exact.
        """
        k = _power_of_two_exponent(a)
        shift = 2 * k * self.grid.nodes_per_octave
        n_half = self.grid.n_half
        positive = _shift_columns(self.values[:, n_half:], shift)
        negative = _shift_columns(self.values[:, :n_half][:, ::-1], shift)[:, ::-1]
        factor = math.ldexp(1.0, -homogeneous_dimension(self.grid.d) * k)
        return self.with_values(factor * np.concatenate([negative, positive], axis=1))


def _shift_columns(block: "NDArray[Any]", shift: int) -> "NDArray[Any]":
    n = block.shape[1]
    out = np.zeros_like(block)
    if shift == 0:
        return block.copy()
    lost = block[:, n - shift :] if shift > 0 else block[:, : -shift]
    if abs(shift) >= n or np.any(lost != 0):
        raise SupportError("the dilated profile leaves the spectral grid")
    if shift > 0:
        out[:, shift:] = block[:, : n - shift]
    else:
        out[:, : n + shift] = block[:, -shift:]
    return out


def _next_power_of_two(n: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(n, 1.0))))


class RadialQuadrature(NamedTuple):
    """
    Tensor Gauss-Legendre rule on [0, r_max] x [-s_max, s_max] for the measure
    omega_{2d-1} r^{2d-1} dr ds, which integrates radial functions over H^d.
    """

    d: int
    r_nodes: "NDArray[np.float64]"
    r_weights: "NDArray[np.float64]"
    s_nodes: "NDArray[np.float64]"
    s_weights: "NDArray[np.float64]"
    r_max: float
    s_max: float
    r_panels: int
    s_panels: int
    order: int

    @classmethod
    def build(
        cls, d: int, r_max: float, s_max: float, r_panels: int, s_panels: int, order: int = 16
    ) -> "RadialQuadrature":
        if r_panels * s_panels * order * order > MAX_QUADRATURE_POINTS:
            raise CapExceededError(
                f"radial quadrature with {r_panels * s_panels * order * order} points "
                f"exceeds the cap {MAX_QUADRATURE_POINTS}"
            )
        r = panel_rule(np.linspace(0.0, r_max, r_panels + 1), order)
        s = panel_rule(np.linspace(-s_max, s_max, s_panels + 1), order)
        return cls(
            d=d,
            r_nodes=r.nodes,
            r_weights=r.weights * sphere_constant(d) * r.nodes ** (2 * d - 1),
            s_nodes=s.nodes,
            s_weights=s.weights,
            r_max=float(r_max),
            s_max=float(s_max),
            r_panels=r_panels,
            s_panels=s_panels,
            order=order,
        )

    @classmethod
    def fit(
        cls,
        d: int,
        r_extent: float,
        s_extent: float,
        lambda_hi: float,
        m_hi: int,
        order: int = 16,
    ) -> "RadialQuadrature":
        """
        Rule resolving e^{i lambda s} and the Laguerre functions of degree <= m_hi
        up to |lambda| = lambda_hi with at least 8 nodes per oscillation.

        Extents are rounded up to powers of two and panel counts to powers of two,
        so fitting a dilated problem gives the exactly dilated rule.
        """
        r_max = float(_next_power_of_two_real(r_extent))
        s_max = float(_next_power_of_two_real(s_extent))
        wavenumber = 2 * math.sqrt(2 * lambda_hi * (m_hi + d / 2 + 1))
        r_nodes = 8 * wavenumber * r_max / (2 * math.pi) + 4 * order
        s_nodes = 8 * lambda_hi * 2 * s_max / (2 * math.pi)
        r_panels = max(8, _next_power_of_two(r_nodes / order))
        s_panels = max(8, _next_power_of_two(s_nodes / order))
        return cls.build(d, r_max, s_max, r_panels, s_panels, order)

    @classmethod
    def for_profile(
        cls, profile: RadialProfile, s_factor: float = 64.0, order: int = 16
    ) -> "RadialQuadrature":
        """
        Rule covering the inverse transform of a profile: Laguerre functions have
        decayed past y = 2|lambda| r^2 = 4m + 2d + 72 and the s-range is
        s_factor / (smallest |lambda|), capped where the lambda panels carrying
        the bulk of the profile stop resolving e^{-i lambda s}.
        """
        d = profile.grid.d
        if profile.is_zero():
            return cls.build(d, 1.0, 1.0, 8, 8, order)
        m_hi, lam_lo, lam_hi = profile.support()
        r_extent = math.sqrt((4 * m_hi + 2 * d + 72) / (2 * lam_lo))
        s_extent = min(s_factor / lam_lo, _s_resolution(profile))
        return cls.fit(d, r_extent, s_extent, lam_hi, m_hi, order)

    def dilated(self, a: float) -> "RadialQuadrature":
        """
        The rule for functions composed with delta_a, a a power of two.
        """
        _power_of_two_exponent(a)
        return self._replace(
            r_nodes=self.r_nodes / a,
            r_weights=self.r_weights / a ** (2 * self.d),
            s_nodes=self.s_nodes / (a * a),
            s_weights=self.s_weights / (a * a),
            r_max=self.r_max / a,
            s_max=self.s_max / (a * a),
        )

    @property
    def lambda_resolution(self) -> float:
        """
        Largest |lambda| whose plane wave gets 8 nodes per period.
        """
        panel_width = 2 * self.s_max / self.s_panels
        return 2 * math.pi * self.order / (8 * panel_width)

    def m_resolution(self, lam: "ArrayLike") -> "NDArray[np.float64]":
        """
        Largest Laguerre degree resolved in r at each |lambda|.
        """
        panel_width = self.r_max / self.r_panels
        wavenumber = 2 * math.pi * self.order / (8 * panel_width)
        return (wavenumber / 2) ** 2 / (2 * np.abs(np.asarray(lam, dtype=float))) - self.d / 2 - 1

    def mesh(self) -> "Tuple[NDArray[np.float64], NDArray[np.float64]]":
        r, s = np.meshgrid(self.r_nodes, self.s_nodes, indexing="ij")
        return r, s


def _s_resolution(profile: RadialProfile) -> float:
    grid = profile.grid
    column_peak = np.max(np.abs(profile.values), axis=0)
    lam = np.abs(grid.lambdas[column_peak >= SIGNIFICANT_SHARE * column_peak.max()])
    # panels of the octave starting at 2^k lambda_min are 2^k lambda_min / subdivisions wide
    octave = math.ldexp(grid.lambda_min, math.floor(math.log2(lam.max() / grid.lambda_min)))
    limit = grid.order * grid.subdivisions / octave
    return math.ldexp(1.0, math.floor(math.log2(limit)))


def _next_power_of_two_real(x: float) -> float:
    if not x > 0:
        raise DomainError(f"extents must be positive, got {x}")
    return math.ldexp(1.0, math.ceil(math.log2(x)))


class RadialFunction(NamedTuple):
    """
    Samples g(r_i, s_k) of a radial function on a radial quadrature.
    """

    quadrature: RadialQuadrature
    values: "NDArray[np.complex128]"

    @classmethod
    def create(cls, quadrature: RadialQuadrature, values: "ArrayLike") -> "RadialFunction":
        values = np.asarray(values, dtype=complex)
        expected = (len(quadrature.r_nodes), len(quadrature.s_nodes))
        if values.shape != expected:
            raise GridError(f"values of shape {values.shape} do not match quadrature {expected}")
        return cls(quadrature, values)

    @classmethod
    def from_callable(
        cls, quadrature: RadialQuadrature, fn: "Callable[[Any, Any], ArrayLike]"
    ) -> "RadialFunction":
        r, s = quadrature.mesh()
        return cls.create(quadrature, np.broadcast_to(fn(r, s), r.shape))

    def with_values(self, values: "ArrayLike") -> "RadialFunction":
        return RadialFunction.create(self.quadrature, values)

    def weighted_by(self, fn: "Callable[[Any, Any], ArrayLike]") -> "RadialFunction":
        r, s = self.quadrature.mesh()
        return self.with_values(np.asarray(fn(r, s)) * self.values)

    def integral(self) -> complex:
        q = self.quadrature
        return complex(q.r_weights @ self.values @ q.s_weights)

    def lp_norm(self, p: float) -> float:
        if not p >= 1:
            raise DomainError(f"L^p norms need p >= 1, got {p}")
        magnitude = np.abs(self.values)
        if math.isinf(p):
            return float(np.max(magnitude, initial=0.0))
        q = self.quadrature
        return float((q.r_weights @ magnitude**p @ q.s_weights) ** (1 / p))

    def boundary_ratio(self) -> float:
        """
        Largest magnitude on the outermost r panel and s panels relative to the peak.
        """
        q = self.quadrature
        magnitude = np.abs(self.values)
        peak = float(np.max(magnitude, initial=0.0))
        if peak == 0:
            return 0.0
        outer_r = magnitude[-q.order :, :]
        outer_s = np.concatenate([magnitude[:, : q.order], magnitude[:, -q.order :]], axis=1)
        return max(float(outer_r.max()), float(outer_s.max())) / peak


def resolved_entries(quadrature: RadialQuadrature, grid: SpectralGrid) -> "NDArray[np.bool_]":
    """
    Boolean (m, node) mask of transform entries the quadrature resolves.
    """
    lam = np.abs(grid.lambdas)
    within = lam <= quadrature.lambda_resolution
    return (grid.m[:, None] <= quadrature.m_resolution(lam)[None, :]) & within[None, :]


def _iter_laguerre_rows(
    d: int, lam: "NDArray[np.float64]", r: "NDArray[np.float64]", m_hi: int
) -> "Iterator[NDArray[np.float64]]":
    y = 2 * np.abs(lam)[:, None] * (r * r)[None, :]
    return iter_weighted_laguerre(d - 1, y, m_hi)


def unresolved_edge(mask: "NDArray[np.bool_]") -> "NDArray[np.bool_]":
    """
    Resolved entries with an unresolved neighbour in m or in lambda.
    """
    unresolved = ~mask
    edge = np.zeros_like(mask)
    edge[:-1] |= unresolved[1:]
    edge[:, :-1] |= unresolved[:, 1:]
    edge[:, 1:] |= unresolved[:, :-1]
    return edge & mask


def edge_share(values: "NDArray[Any]", mask: "NDArray[np.bool_]") -> float:
    magnitude = np.abs(values)
    peak = float(np.max(magnitude[mask], initial=0.0))
    if peak == 0:
        return 0.0
    return float(np.max(magnitude[unresolved_edge(mask)], initial=0.0)) / peak


def forward_transform(
    f: RadialFunction,
    grid: SpectralGrid,
    decay_floor: float = DECAY_FLOOR,
    unresolved_floor: float = UNRESOLVED_FLOOR,
) -> RadialProfile:
    """
    R_m(lambda) on every grid node the quadrature of f resolves. Unresolved
    entries (plane waves or Laguerre functions oscillating faster than the
    quadrature allows) are set to zero, which is accepted only when the profile
    has fallen below unresolved_floor of its peak on the edge of the resolved
    region.
    """
    q = f.quadrature
    if q.d != grid.d:
        raise DimensionMismatchError(f"function on H^{q.d} and grid for H^{grid.d}")
    ratio = f.boundary_ratio()
    if ratio > decay_floor:
        raise TruncationError(
            f"function does not decay at the quadrature boundary (ratio {ratio:.3g} > {decay_floor:.3g})"
        )
    mask = resolved_entries(q, grid)
    columns = np.flatnonzero(mask[0])
    values = np.zeros((grid.m_max + 1, len(grid.lambdas)), dtype=complex)
    if not np.any(f.values):
        return RadialProfile(grid, values)
    if not len(columns):
        raise TruncationError(
            f"the quadrature resolves no lambda-node (resolution {q.lambda_resolution:.3g})"
        )
    lam = grid.lambdas[columns]
    # s-integral first: F[lambda, r] = sum_s w_s e^{i lambda s} f(r, s)
    phase = np.exp(1j * lam[:, None] * q.s_nodes[None, :]) * q.s_weights[None, :]
    weighted = (phase @ f.values.T) * q.r_weights[None, :]
    for m, laguerre_row in enumerate(_iter_laguerre_rows(grid.d, lam, q.r_nodes, grid.m_max)):
        values[m, columns] = np.sum(weighted * laguerre_row, axis=1) / multiplicity(m, grid.d)
    values[~mask] = 0
    if not mask.all():
        share = edge_share(values, mask)
        logger.info(
            "Forward transform resolves %s of %s entries, edge share %.3g",
            np.count_nonzero(mask),
            mask.size,
            share,
        )
        if share > unresolved_floor:
            raise TruncationError(
                f"transform is still {share:.3g} of its peak where the quadrature stops resolving "
                f"(lambda resolution {q.lambda_resolution:.3g}); refine the quadrature"
            )
    return RadialProfile(grid, values)


class InversePlan:
    """
    Precomputed pieces of the inverse transform for one active (m, lambda)
    support on one radial quadrature: the phases e^{-i lambda s}, the weights
    (2^{d-1}/pi^{d+1}) w |lambda|^d and, when small enough, the Laguerre stack.
    Many multipliers of the same profile are then inverted at the cost of one
    matrix product each.
    """

    def __init__(self, profile: RadialProfile, quadrature: RadialQuadrature) -> None:
        grid = profile.grid
        if quadrature.d != grid.d:
            raise DimensionMismatchError(f"quadrature on H^{quadrature.d} and grid for H^{grid.d}")
        self.grid = grid
        self.quadrature = quadrature
        self.m_hi, self.columns = profile.active()
        lam = grid.lambdas[self.columns]
        self._lam = lam
        self._scale = inversion_constant(grid.d) * grid.weights[self.columns] * np.abs(lam) ** grid.d
        self._phase = np.exp(-1j * lam[:, None] * quadrature.s_nodes[None, :])
        size = (self.m_hi + 1) * len(lam) * len(quadrature.r_nodes)
        self._table = (
            np.stack(list(_iter_laguerre_rows(grid.d, lam, quadrature.r_nodes, self.m_hi)))
            if size <= PLAN_TABLE_LIMIT
            else None
        )

    def _rows(self) -> "Iterator[NDArray[np.float64]]":
        if self._table is not None:
            return iter(self._table)
        return _iter_laguerre_rows(self.grid.d, self._lam, self.quadrature.r_nodes, self.m_hi)

    def covers(self, profile: RadialProfile) -> bool:
        m_hi, columns = profile.active()
        return m_hi <= self.m_hi and bool(np.all(np.isin(columns, self.columns)))

    def apply(self, profile: RadialProfile) -> RadialFunction:
        if not self.grid.same_as(profile.grid):
            raise GridError("profile and plan live on different spectral grids")
        if not self.covers(profile):
            raise SupportError("profile support exceeds the support of the inverse plan")
        active = profile.values[: self.m_hi + 1, self.columns]
        radial = np.zeros((len(self.columns), len(self.quadrature.r_nodes)), dtype=complex)
        for m, laguerre_row in enumerate(self._rows()):
            if np.any(active[m]):
                radial += active[m][:, None] * laguerre_row
        values = (radial * self._scale[:, None]).T @ self._phase
        return RadialFunction(self.quadrature, values)


def _top_mode_share(profile: RadialProfile) -> float:
    total = plancherel_norm(profile)
    if total == 0:
        return 0.0
    top = profile.values.copy()
    top[:-1] = 0
    return plancherel_norm(profile.with_values(top)) / total


def inverse_transform(
    profile: RadialProfile,
    quadrature: "Optional[RadialQuadrature]" = None,
    tail_tol: "Optional[float]" = None,
    plan: "Optional[InversePlan]" = None,
) -> RadialFunction:
    """
    Evaluate the inversion series on a radial quadrature.

    A profile that is still significant in its last Laguerre row has been
    truncated in m; its share of the Plancherel norm is the reported tail and
    must stay below `tail_tol` when one is given.
    """
    share = _top_mode_share(profile)
    if share > 0:
        logger.info("Inverse transform: top Laguerre row carries %.3g of the norm", share)
    if tail_tol is not None and share > tail_tol:
        raise TruncationError(
            f"m-truncation tail {share:.3g} exceeds the tolerance {tail_tol:.3g}"
        )
    if plan is None:
        plan = InversePlan(profile, quadrature or RadialQuadrature.for_profile(profile))
    return plan.apply(profile)


def plancherel_norm(profile: RadialProfile) -> float:
    return float(np.sqrt(np.sum(profile.grid.measure() * np.abs(profile.values) ** 2)))


def multiplier(profile: RadialProfile, phi: "Multiplier") -> RadialProfile:
    """
    Entrywise R_m(lambda) -> phi(m, lambda) R_m(lambda).
    """
    grid = profile.grid
    factor = np.broadcast_to(
        np.asarray(phi(grid.m[:, None], grid.lambdas[None, :])), profile.values.shape
    )
    if not np.all(np.isfinite(factor[profile.values != 0])):
        raise DomainError("multiplier is not finite on the support of the profile")
    return profile.with_values(np.where(profile.values != 0, factor * profile.values, 0))


def spectral_power(rho: float, d: int) -> "Multiplier":
    """
    The multiplier (4|lambda|(2m+d))^rho of (-Delta_H)^rho.
    """

    def phi(m: "NDArray[np.int64]", lam: "NDArray[np.float64]") -> "NDArray[np.float64]":
        return np.asarray((4 * np.abs(lam) * (2 * m + d)) ** rho)

    return phi


def _lambda_derivative(profile: RadialProfile) -> "NDArray[np.complex128]":
    # second-order differences on the non-uniform nodes, per half-line
    grid = profile.grid
    n_half = grid.n_half
    out = np.zeros_like(profile.values)
    for half in (slice(0, n_half), slice(n_half, None)):
        out[:, half] = np.gradient(profile.values[:, half], grid.lambdas[half], axis=1)
    return out


def check_lemma41(
    f: RadialFunction, grid: SpectralGrid, tol: float = 1e-3
) -> VerificationReport:
    """
    Compare the transform of (is - |z|^2) f with the difference-derivative
    expression built from the transform of f:

        lambda > 0: dR_m/dlambda - (m/lambda)(R_m - R_{m-1})
        lambda < 0: dR_m/dlambda - ((m+d)/|lambda|)(R_m - R_{m+1})

    on interior nodes with m < m_max.
    """
    profile = forward_transform(f, grid)
    lhs = forward_transform(f.weighted_by(lambda r, s: 1j * s - r * r), grid).values
    values = profile.values
    derivative = _lambda_derivative(profile)
    lam = grid.lambdas[None, :]
    m = grid.m[:, None]
    lower = np.vstack([np.zeros_like(values[:1]), values[:-1]])
    upper = np.vstack([values[1:], np.zeros_like(values[:1])])
    rhs = np.where(
        lam > 0,
        derivative - m / np.abs(lam) * (values - lower),
        derivative - (m + grid.d) / np.abs(lam) * (values - upper),
    )
    mask = resolved_entries(f.quadrature, grid)
    compared = mask.copy()
    # three-point stencils need resolved neighbours in lambda and in m
    compared[:, 1:] &= mask[:, :-1]
    compared[:, :-1] &= mask[:, 1:]
    compared[1:] &= mask[:-1]
    compared[-1] = False
    for edge in (0, grid.n_half - 1, grid.n_half, len(grid.lambdas) - 1):
        compared[:, edge] = False
    scale = float(np.max(np.abs(lhs[compared]), initial=0.0))
    error = float(np.max(np.abs(lhs - rhs)[compared], initial=0.0))
    discrepancy = error / scale if scale > 0 else error
    return VerificationReport.create(
        "lemma41",
        {"d": grid.d, "m_max": grid.m_max, "nodes": len(grid.lambdas)},
        {"discrepancy": discrepancy, "compared": int(np.count_nonzero(compared))},
        tol=tol,
        passed=discrepancy <= tol,
    )


def summability(profile: RadialProfile, rho: float) -> VerificationReport:
    """
    The absolute sum sum_m C(m+d-1, m) int |R_m(lambda)| |lambda|^d d lambda,
    split at joint spectrum 1. Above it, the high-frequency part is bounded by
    sup |mu^rho R| times sum mu^{-rho}, which converges for rho > N/2.
    """
    grid = profile.grid
    measure = grid.measure() / inversion_constant(grid.d)
    mu = grid.joint_spectrum()
    terms = measure * np.abs(profile.values)
    high = mu >= 1
    measured = {
        "sum": float(terms.sum()),
        "low": float(terms[~high].sum()),
        "high": float(terms[high].sum()),
    }
    passed = True
    n_hom = homogeneous_dimension(grid.d)
    if rho > n_hom / 2:
        sup = float(np.max((np.abs(profile.values) * mu**rho)[high], initial=0.0))
        bound = sup * float(np.sum((measure * mu ** (-rho))[high]))
        measured["high_bound"] = bound
        passed = measured["high"] <= bound * (1 + 1e-12)
    return VerificationReport.create(
        "summability",
        {"rho": rho, "d": grid.d, "m_max": grid.m_max},
        measured,
        tol=0.0,
        passed=passed,
    )


def write_profile_csv(
    path: "PathLike", profile: RadialProfile, extra: "Optional[Mapping[str, Any]]" = None
) -> None:
    grid = profile.grid
    fields = {
        "d": grid.d,
        "mmax": grid.m_max,
        "nodes": len(grid.lambdas),
        "lambda_min": grid.lambda_min,
        "lambda_max": grid.lambda_max,
        "order": grid.order,
        "subdivisions": grid.subdivisions,
    }
    fields.update(extra or {})
    rows = (
        (m, float(grid.lambdas[k]), float(grid.weights[k]), float(v.real), float(v.imag))
        for m in range(grid.m_max + 1)
        for k, v in enumerate(profile.values[m])
    )
    csvio.write_csv(path, "profile", fields, ("m", "lambda", "weight", "re", "im"), rows)


def read_profile_csv(path: "PathLike") -> RadialProfile:
    doc = csvio.read_csv(path)
    if doc.kind != "profile":
        raise GridError(f"{path} holds a {doc.kind!r} table, not a profile")
    grid = SpectralGrid.build(
        int(doc.fields["d"]),
        int(doc.fields["mmax"]),
        float(doc.fields["lambda_min"]),
        float(doc.fields["lambda_max"]),
        int(doc.fields["order"]),
        int(doc.fields["subdivisions"]),
    )
    if int(doc.fields["nodes"]) != len(grid.lambdas):
        raise GridError(f"{path} declares {doc.fields['nodes']} nodes, grid has {len(grid.lambdas)}")
    values = np.zeros((grid.m_max + 1, len(grid.lambdas)), dtype=complex)
    n = len(grid.lambdas)
    for i, (m, lam, _, re, im) in enumerate(doc.rows):
        k = i % n
        if int(m) != i // n or float(lam) != grid.lambdas[k]:
            raise GridError(f"{path} row {i} does not match the spectral grid")
        values[int(m), k] = complex(float(re), float(im))
    return RadialProfile.create(grid, values)


def profile_lp_norm(
    profile: RadialProfile,
    p: float,
    plan: "Optional[InversePlan]" = None,
) -> float:
    """
    L^p norm of the function with the given profile. p = 2 goes through
    Plancherel; other exponents invert the profile on a radial quadrature.
    """
    if not p >= 1:
        raise DomainError(f"L^p norms need p >= 1, got {p}")
    if profile.is_zero():
        return 0.0
    if p == 2 and plan is None:
        return plancherel_norm(profile)
    return inverse_transform(profile, plan=plan).lp_norm(p)
