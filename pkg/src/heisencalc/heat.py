"""
The heat semigroup e^{t Delta_H}.

On profiles the semigroup is the multiplier exp(-4t|lambda|(2m+d)). The heat
kernel h = h_1 is evaluated from its Laguerre series,

    h(r, s) = (2^{d-1}/pi^{d+1}) sum_m int e^{-i lambda s} e^{-4|lambda|(2m+d)} L_m^{(d-1)}(2|lambda|r^2) e^{-|lambda|r^2} |lambda|^d d lambda,

and h_t(r, s) = t^{-(d+1)} h(r/sqrt(t), s/t).
"""
import hashlib
import logging
import math
from pathlib import Path
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.special import gamma, gammaincc, zeta

from heisencalc import csvio
from heisencalc.errors import DomainError, GridError, StabilityError, TruncationError
from heisencalc.group_core import (
    SampledField,
    s_modes,
    s_synthesize,
    sublaplacian_fd,
    sublaplacian_norm_bound,
    twisted_convolve_modes,
)
from heisencalc.laguerre import growth_constant, iter_weighted_laguerre
from heisencalc.quadrature import panel_rule
from heisencalc.spectral import inversion_constant, multiplier

if TYPE_CHECKING:
    from typing import Any, Dict, List, Optional, Tuple

    from numpy.typing import ArrayLike, NDArray

    from heisencalc.csvio import PathLike
    from heisencalc.group_core import GridSpec, GroupPoint
    from heisencalc.spectral import Multiplier, RadialProfile

logger = logging.getLogger(__name__)

CACHE_VERSION = "v2"
CACHE_KIND = f"heatkernel {CACHE_VERSION}"
DEFAULT_LAMBDA_MIN = 2.0**-7
# octaves above lambda_min searched for a band edge
MAX_BAND_OCTAVES = 30
# exp(-40) is far below any tolerance the series is asked for
_DAMPING_EXPONENT = 40.0
_EXPLICIT_TERMS = 4096


def heat_multiplier(t: float, d: int) -> "Multiplier":
    def phi(m: "NDArray[np.int64]", lam: "NDArray[np.float64]") -> "NDArray[np.float64]":
        return np.exp(-t * 4 * np.abs(lam) * (2 * m + d))

    return phi


def heat_apply(profile: "RadialProfile", t: float) -> "RadialProfile":
    if not t > 0:
        raise DomainError(f"heat flow needs t > 0, got {t}")
    return multiplier(profile, heat_multiplier(t, profile.grid.d))


def _mode_sum(
    d: int, t: float, m_from: int, m_to: "Optional[int]", lam_lo: float, lam_hi: float
) -> float:
    """
    Bound on the part m_from <= m <= m_to, lam_lo <= |lambda| <= lam_hi of the kernel
    series, 2 c_d sum_m sup|L_m^{(d-1)} e^{-y/2}| int e^{-4t(2m+d)lambda} lambda^d d lambda,
    using |L_m^{(d-1)}(y) e^{-y/2}| <= C_{d-1} (m+1)^{d-1}. An open range (m_to None)
    sums the first terms explicitly and bounds the rest with a Hurwitz zeta value.
    """
    last = m_from + _EXPLICIT_TERMS - 1 if m_to is None else m_to
    if last < m_from:
        return 0.0
    m = np.arange(m_from, last + 1, dtype=float)
    a = 4 * t * (2 * m + d)
    upper = gammaincc(d + 1, a * lam_hi) if math.isfinite(lam_hi) else 0.0
    pieces = gamma(d + 1) * (gammaincc(d + 1, a * lam_lo) - upper) / a ** (d + 1)
    total = float(np.sum((m + 1) ** (d - 1) * pieces))
    if m_to is None:
        total += gamma(d + 1) / (4 * t) ** (d + 1) * 0.25 * float(zeta(2, last + 1 + d / 2))
    return 2 * inversion_constant(d) * growth_constant(d - 1) * total


def tail_bound(
    m_max: int,
    lambda_max: float,
    lambda_min: float,
    t: float,
    d: int,
    low_remainder: "Optional[float]" = None,
) -> float:
    """
    Upper bound on the mass of the kernel series neglected by truncating to
    m <= m_max and lambda_min <= |lambda| <= lambda_max.

    :param low_remainder: estimate of the error left by a low-frequency
        correction on |lambda| < lambda_min; without it the whole band is bounded.
    """
    if not t > 0:
        raise DomainError(f"tail bounds need t > 0, got {t}")
    if not 0 < lambda_min < lambda_max:
        raise DomainError(f"need 0 < lambda_min < lambda_max, got {lambda_min}, {lambda_max}")
    m_tail = _mode_sum(d, t, m_max + 1, None, lambda_min, math.inf)
    high = _mode_sum(d, t, 0, m_max, lambda_max, math.inf)
    low = _mode_sum(d, t, 0, None, 0.0, lambda_min) if low_remainder is None else low_remainder
    return m_tail + high + low


def origin_value(d: int) -> float:
    """
    Upper estimate of h(0, 0), the largest value of the heat kernel at t = 1;
    exact (1/64) on H^1.
    """
    return _mode_sum(d, 1.0, 0, None, 0.0, math.inf) / growth_constant(d - 1)


def default_m_max(lambda_min: float) -> int:
    """
    Modes kept in the lowest octave, where the low-frequency fit takes its nodes
    and needs the series converged pointwise.
    """
    return math.ceil(_DAMPING_EXPONENT / (8 * lambda_min))


def select_lambda_max(d: int, budget: float, lambda_min: float, m_max: int) -> float:
    """
    Smallest lambda_max = 2^k lambda_min, k >= 1, whose tail bound without the
    low band stays within budget.
    """
    lambda_max = 2 * lambda_min
    for _ in range(MAX_BAND_OCTAVES):
        if tail_bound(m_max, lambda_max, lambda_min, 1.0, d, low_remainder=0.0) <= budget:
            return lambda_max
        lambda_max *= 2
    raise TruncationError(
        f"no lambda_max up to {lambda_max / 2:g} brings the kernel tail below {budget:.3g}; "
        "raise m_max or lambda_min"
    )


class KernelTable(NamedTuple):
    """
    h_t on the tensor sample set r x s (both ascending, nonnegative).
    """

    d: int
    t: float
    r: "NDArray[np.float64]"
    s: "NDArray[np.float64]"
    values: "NDArray[np.float64]"
    m_max: int
    lambda_max: float
    lambda_min: float
    tol: float
    tail: float

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.values)))

    def spline(self, degree: int = 3) -> RectBivariateSpline:
        if min(len(self.r), len(self.s)) <= degree:
            raise GridError(f"a degree {degree} spline needs more than {degree} nodes per axis")
        return RectBivariateSpline(self.r, self.s, self.values, kx=degree, ky=degree)

    def header_fields(self) -> "Dict[str, Any]":
        return {
            "d": self.d,
            "mmax": self.m_max,
            "lambda_max": self.lambda_max,
            "tol": self.tol,
            "lambda_min": self.lambda_min,
            "tail": self.tail,
            "t": self.t,
            "nr": len(self.r),
            "ns": len(self.s),
        }


def _sample_axis(values: "ArrayLike", name: str) -> "NDArray[np.float64]":
    axis = np.asarray(values, dtype=float).reshape(-1)
    if not len(axis) or np.any(axis < 0) or np.any(np.diff(axis) <= 0):
        raise DomainError(f"{name} samples must be nonnegative and strictly increasing")
    return axis


def _octave_panels(lo: float, r_max: float, s_max: float) -> int:
    # oscillations per octave of e^{i lambda s} and of the Laguerre functions in lambda
    waves = lo * s_max / (2 * math.pi) + 0.5 * r_max
    return max(1, math.ceil((waves + 1) / 2))


def _octaves(lambda_min: float, lambda_max: float) -> int:
    octaves = math.log2(lambda_max / lambda_min) if 0 < lambda_min < lambda_max else 0.0
    if octaves < 1 or octaves != round(octaves):
        raise GridError("lambda_max / lambda_min must be a power of two above 1")
    return int(round(octaves))


def _ramp(x: "NDArray[np.float64]") -> "NDArray[np.float64]":
    # (x sin x + cos x - 1) / x^2
    small = np.abs(x) < 1e-2
    safe = np.where(small, 1.0, x)
    exact = (safe * np.sin(safe) + np.cos(safe) - 1) / (safe * safe)
    return np.where(small, 0.5 - x * x / 8 + x**4 / 144, exact)


def _kernel_series(
    d: int,
    r: "NDArray[np.float64]",
    s: "NDArray[np.float64]",
    lambda_min: float,
    lambda_max: float,
    m_max: int,
    order: int,
) -> "Tuple[NDArray[np.float64], float, int]":
    """
    h at t = 1 on r x s, the tail estimate and the largest m used.

    Octave k keeps m <= min(m_max, 40 / (8 lambda_k)); the tail is the bound on
    everything dropped by that cut, by the band edges and by the low-frequency fit.
    """
    octaves = _octaves(lambda_min, lambda_max)
    c = inversion_constant(d)
    r2 = r * r
    h = np.zeros((len(r), len(s)))
    tail = 0.0
    m_used = 0
    smallest: "List[Tuple[float, NDArray[np.float64]]]" = []
    for k in range(octaves):
        lo = math.ldexp(lambda_min, k)
        m_k = min(m_max, default_m_max(lo))
        m_used = max(m_used, m_k)
        panels = _octave_panels(lo, float(r.max()), float(s.max()))
        rule = panel_rule(np.linspace(lo, 2 * lo, panels + 1), order)
        lam = rule.nodes
        y = 2 * lam[:, None] * r2[None, :]
        series = np.zeros_like(y)
        for m, row in enumerate(iter_weighted_laguerre(d - 1, y, m_k)):
            series += np.exp(-4 * lam * (2 * m + d))[:, None] * row
        density = c * lam[:, None] ** d * series
        if k == 0:
            smallest = [(float(lam[0]), density[0]), (float(lam[1]), density[1])]
        # both signs of lambda: e^{-i lambda s} + e^{i lambda s} = 2 cos(lambda s)
        h += 2 * (rule.weights[:, None] * density).T @ np.cos(lam[:, None] * s[None, :])
        tail += _mode_sum(d, 1.0, m_k + 1, None, lo, 2 * lo)
    low, remainder = _low_frequency(d, r2, s, lambda_min, smallest)
    h += low
    tail += _mode_sum(d, 1.0, 0, None, lambda_max, math.inf) + remainder
    return h, tail, m_used


def _low_frequency(
    d: int,
    r2: "NDArray[np.float64]",
    s: "NDArray[np.float64]",
    lambda_min: float,
    smallest: "List[Tuple[float, NDArray[np.float64]]]",
) -> "Tuple[NDArray[np.float64], float]":
    """
    Contribution of |lambda| < lambda_min from the expansion g0 + g1|lambda| of
    the lambda-density, and an estimate of what the expansion leaves out.

    g0 is the s-marginal limit c_d 8^-d e^{-r^2/4}; g1 and the second-order
    coefficient g2 are fitted to the two smallest computed nodes.
    """
    g0 = inversion_constant(d) * 8.0**-d * np.exp(-r2 / 4)
    (l1, v1), (l2, v2) = smallest
    slope1 = (v1 - g0) / l1
    slope2 = (v2 - g0) / l2
    g2 = (slope2 - slope1) / (l2 - l1)
    g1 = slope1 - g2 * l1
    x = lambda_min * s
    low = (
        2 * lambda_min * g0[:, None] * np.sinc(x / np.pi)[None, :]
        + 2 * lambda_min**2 * g1[:, None] * _ramp(x)[None, :]
    )
    remainder = 2 * float(np.max(np.abs(g2))) * lambda_min**3 / 3
    return low, remainder


def kernel_eval(
    r: "ArrayLike",
    s: "ArrayLike",
    t: float = 1.0,
    tol: float = 1e-5,
    d: int = 1,
    lambda_min: float = DEFAULT_LAMBDA_MIN,
    lambda_max: "Optional[float]" = None,
    m_max: "Optional[int]" = None,
    order: int = 16,
) -> KernelTable:
    """
    Tabulate h_t on the tensor sample set r x s.

    The series is evaluated at t = 1 on (r/sqrt(t), s/t) and rescaled. The
    tail estimate, relative to the largest tabulated value of h, must stay
    below tol. Without an explicit lambda_max the band edge is the smallest
    power-of-two multiple of lambda_min whose tail bound spends a quarter of
    that tolerance; m_max defaults to the modes the lowest octave needs.
    """
    if not t > 0:
        raise DomainError(f"heat kernels need t > 0, got {t}")
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    if not lambda_min > 0:
        raise DomainError(f"lambda_min must be positive, got {lambda_min}")
    if lambda_max is not None:
        _octaves(lambda_min, lambda_max)
    if m_max is None:
        m_max = default_m_max(lambda_min)
    elif m_max < 0:
        raise DomainError(f"m_max must be nonnegative, got {m_max}")
    r = _sample_axis(r, "r")
    s = _sample_axis(s, "s")
    r_unit, s_unit = r / math.sqrt(t), s / t
    band = lambda_max
    if band is None:
        band = select_lambda_max(d, tol * origin_value(d) / 4, lambda_min, m_max)
    values, tail, m_used = _kernel_series(d, r_unit, s_unit, lambda_min, band, m_max, order)
    peak = float(np.max(np.abs(values)))
    if lambda_max is None and 0 < peak and tail > tol * peak:
        # samples away from the origin: budget against the tabulated peak instead
        wider = select_lambda_max(d, tol * peak / 4, lambda_min, m_max)
        if wider > band:
            band = wider
            values, tail, m_used = _kernel_series(d, r_unit, s_unit, lambda_min, band, m_max, order)
            peak = float(np.max(np.abs(values)))
    relative = tail / peak if peak > 0 else math.inf
    logger.info(
        "Heat kernel series: m <= %s, lambda in [%s, %s], relative tail %.3g",
        m_used,
        lambda_min,
        band,
        relative,
    )
    if relative > tol:
        raise TruncationError(
            f"kernel series tail {relative:.3g} exceeds the tolerance {tol:.3g}; "
            "lower lambda_min, raise m_max or widen the band"
        )
    scale = t ** -(d + 1)
    return KernelTable(
        d=d,
        t=float(t),
        r=r,
        s=s,
        values=scale * values,
        m_max=m_used,
        lambda_max=float(band),
        lambda_min=float(lambda_min),
        tol=float(tol),
        tail=scale * tail,
    )


def kernel_scaled_array(
    t: float, r: "ArrayLike", s: "ArrayLike", table: KernelTable, degree: int = 3
) -> "NDArray[np.float64]":
    """
    h_t at points (r, s) from a table of h_{t0}:
    h_t(r, s) = (t0/t)^{d+1} h_{t0}(r sqrt(t0/t), |s| t0/t).
    """
    if not t > 0:
        raise DomainError(f"heat kernels need t > 0, got {t}")
    ratio = table.t / t
    rr = np.asarray(r, dtype=float) * math.sqrt(ratio)
    ss = np.abs(np.asarray(s, dtype=float)) * ratio
    if (
        np.any(rr < table.r[0])
        or np.any(rr > table.r[-1])
        or np.any(ss < table.s[0])
        or np.any(ss > table.s[-1])
    ):
        raise GridError(
            f"query leaves the table range r <= {table.r[-1]}, |s| <= {table.s[-1]} at t = {table.t}"
        )
    rr, ss = np.broadcast_arrays(rr, ss)
    values = table.spline(degree).ev(rr, ss)
    return np.asarray(ratio ** (table.d + 1) * values)


def kernel_scaled(t: float, w: "GroupPoint", table: KernelTable, degree: int = 3) -> float:
    if w.d != table.d:
        raise GridError(f"point in H^{w.d} and kernel table for H^{table.d}")
    return float(kernel_scaled_array(t, math.sqrt(w.z_norm_sq), w.s, table, degree))


def write_kernel_csv(
    path: "PathLike", table: KernelTable, extra: "Optional[Dict[str, Any]]" = None
) -> Path:
    fields = table.header_fields()
    fields.update(extra or {})
    rows = (
        (float(r), float(s), float(v))
        for i, r in enumerate(table.r)
        for s, v in zip(table.s, table.values[i])
    )
    return csvio.write_csv(path, CACHE_KIND, fields, ("r", "s", "value"), rows)


def read_kernel_csv(path: "PathLike") -> KernelTable:
    doc = csvio.read_csv(path)
    if doc.kind != CACHE_KIND:
        raise GridError(f"{path} holds a {doc.kind!r} table, not {CACHE_KIND!r}")
    n_r, n_s = int(doc.fields["nr"]), int(doc.fields["ns"])
    data = np.asarray(doc.rows, dtype=float)
    if data.shape != (n_r * n_s, 3):
        raise GridError(f"{path} has {len(doc.rows)} rows, expected {n_r * n_s}")
    return KernelTable(
        d=int(doc.fields["d"]),
        t=float(doc.fields["t"]),
        r=data[::n_s, 0].copy(),
        s=data[:n_s, 1].copy(),
        values=data[:, 2].reshape(n_r, n_s),
        m_max=int(doc.fields["mmax"]),
        lambda_max=float(doc.fields["lambda_max"]),
        lambda_min=float(doc.fields["lambda_min"]),
        tol=float(doc.fields["tol"]),
        tail=float(doc.fields["tail"]),
    )


class KernelCache(NamedTuple):
    """
    Directory of t = 1 kernel tables keyed by every parameter that changes
    their values.
    """

    directory: Path

    @classmethod
    def at(cls, directory: "PathLike") -> "KernelCache":
        return cls(Path(directory))

    def key(
        self,
        d: int,
        m_max: "Optional[int]",
        lambda_max: "Optional[float]",
        tol: float,
        lambda_min: float,
        r: "NDArray[np.float64]",
        s: "NDArray[np.float64]",
    ) -> str:
        digest = hashlib.sha256()
        digest.update(f"{CACHE_VERSION} {d} {m_max} {lambda_max!r} {tol!r} {lambda_min!r}".encode())
        digest.update(np.ascontiguousarray(r, dtype=float).tobytes())
        digest.update(np.ascontiguousarray(s, dtype=float).tobytes())
        return digest.hexdigest()[:16]

    def path_for(self, key: str) -> Path:
        return self.directory / f"heatkernel-{key}.csv"

    def load(self, key: str) -> "Optional[KernelTable]":
        path = self.path_for(key)
        if not path.exists():
            logger.info("Kernel cache miss %s", path)
            return None
        logger.info("Kernel cache hit %s", path)
        return read_kernel_csv(path)

    def store(self, key: str, table: KernelTable) -> Path:
        path = write_kernel_csv(self.path_for(key), table, {"key": key})
        logger.info("Stored kernel table %s", path)
        return path

    def entries(self) -> "List[Path]":
        if not self.directory.is_dir():
            return []
        return sorted(self.directory.glob("heatkernel-*.csv"))

    def clear(self) -> int:
        entries = self.entries()
        for path in entries:
            path.unlink()
        logger.info("Removed %s cached kernel tables from %s", len(entries), self.directory)
        return len(entries)


def cached_kernel_eval(
    cache: "Optional[KernelCache]",
    r: "ArrayLike",
    s: "ArrayLike",
    tol: float = 1e-5,
    d: int = 1,
    lambda_min: float = DEFAULT_LAMBDA_MIN,
    lambda_max: "Optional[float]" = None,
    m_max: "Optional[int]" = None,
) -> KernelTable:
    """
    The t = 1 table on r x s, read from the cache when present.
    """
    r = _sample_axis(r, "r")
    s = _sample_axis(s, "s")
    if cache is None:
        return kernel_eval(r, s, 1.0, tol, d, lambda_min, lambda_max, m_max)
    key = cache.key(d, m_max, lambda_max, tol, lambda_min, r, s)
    table = cache.load(key)
    if table is None:
        table = kernel_eval(r, s, 1.0, tol, d, lambda_min, lambda_max, m_max)
        cache.store(key, table)
    return table


def heat_kernel_modes(grid: "GridSpec", t: float) -> "NDArray[np.complex128]":
    """
    s-Fourier modes (1/l_s) int h_t(z, s) e^{i lambda_k s} ds of the heat kernel
    on the lattice of a d = 1 grid.
    """
    if not t > 0:
        raise DomainError(f"heat kernels need t > 0, got {t}")
    d = grid.d
    xx, yy = np.meshgrid(grid.x, grid.y, indexing="ij")
    r2 = xx * xx + yy * yy
    modes = np.zeros(grid.shape, dtype=complex)
    for k, lam in enumerate(grid.frequencies):
        mu = abs(lam)
        if mu == 0:
            modes[:, :, k] = (4 * math.pi * t) ** -d * np.exp(-r2 / (4 * t))
            continue
        m_hi = math.ceil(37 / (8 * t * mu))
        series = np.zeros_like(r2)
        for m, row in enumerate(iter_weighted_laguerre(d - 1, 2 * mu * r2, m_hi)):
            series += math.exp(-4 * t * mu * (2 * m + d)) * row
        modes[:, :, k] = 2 * math.pi * inversion_constant(d) * mu**d * series
    return modes / grid.l_s


def heat_flow(u0: SampledField, t: float) -> SampledField:
    """
    u0 * h_t on a d = 1 grid with periodic s, exact in s through the s-Fourier
    modes of h_t.
    """
    grid = u0.grid
    kernel = heat_kernel_modes(grid, t)
    modes = twisted_convolve_modes(s_modes(u0.values, grid), kernel, grid)
    return u0.with_values(s_synthesize(modes, grid))


def stable_steps(grid: "GridSpec", t: float) -> int:
    """
    Smallest number of explicit Euler steps reaching t within the stability bound.
    """
    return max(1, math.ceil(t * sublaplacian_norm_bound(grid)))


def fd_heat_oracle(
    u0: SampledField, t: float, steps: "Optional[int]" = None, stencil: str = "compact"
) -> SampledField:
    """
    Explicit Euler steps u <- u + dt Delta_H u with the finite-difference sub-Laplacian.
    """
    if not t > 0:
        raise DomainError(f"heat flow needs t > 0, got {t}")
    grid = u0.grid
    steps = stable_steps(grid, t) if steps is None else steps
    dt = t / steps
    bound = sublaplacian_norm_bound(grid)
    if dt * bound > 1:
        raise StabilityError(
            f"time step {dt:.3g} exceeds the stability limit {1 / bound:.3g}; "
            f"use at least {stable_steps(grid, t)} steps"
        )
    u = u0
    for step in range(steps):
        u = u.with_values(u.values + dt * sublaplacian_fd(u, stencil).values)
        if logger.isEnabledFor(logging.DEBUG):
            peak = float(np.max(np.abs(u.values)))
            logger.debug("Euler step %s/%s: max |u| = %.6g", step + 1, steps, peak)
    return u
