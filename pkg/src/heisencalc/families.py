"""
Built-in radial test functions, declared by their profiles.
"""
import enum
import functools
import logging
import math
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import erf, erfc

from heisencalc.errors import ConfigError, DomainError
from heisencalc.littlewood_paley import make_localized, ring_bump
from heisencalc.spectral import (
    RadialFunction,
    RadialProfile,
    homogeneous_dimension,
    inversion_constant,
    plancherel_norm,
)

if TYPE_CHECKING:
    from typing import Any, List, Mapping, Optional, Tuple

    from heisencalc.spectral import RadialQuadrature, SpectralGrid

logger = logging.getLogger(__name__)

# log-normal bumps are cut where they fall below 1e-16 of their peak
_LOG_NORMAL_CUT = math.sqrt(2 * math.log(1e16))


def gaussian_profile(grid: "SpectralGrid", a: float = 1.0, b: float = 1.0) -> RadialProfile:
    """
    Profile of exp(-a|z|^2 - b s^2):
    pi^d (a+|lambda|)^-d ((a-|lambda|)/(a+|lambda|))^m sqrt(pi/b) exp(-lambda^2/(4b)).
    """
    if not (a > 0 and b > 0):
        raise DomainError(f"Gaussian parameters must be positive, got a={a}, b={b}")
    d = grid.d

    def phi(m: "Any", lam: "Any") -> "Any":
        lam = np.abs(lam)
        return (
            math.pi**d
            * (a + lam) ** (-d)
            * ((a - lam) / (a + lam)) ** m
            * math.sqrt(math.pi / b)
            * np.exp(-lam * lam / (4 * b))
        )

    return RadialProfile.from_function(grid, phi)


def gaussian_function(
    quadrature: "RadialQuadrature", a: float = 1.0, b: float = 1.0
) -> RadialFunction:
    return RadialFunction.from_callable(quadrature, lambda r, s: np.exp(-a * r * r - b * s * s))


def gaussian_plancherel_tail(grid: "SpectralGrid", a: float = 1.0, b: float = 1.0) -> float:
    """
    Squared Plancherel mass of the Gaussian profile that the grid does not hold:
    rows m > m_max on the grid nodes and all rows on |lambda| outside
    [lambda_min, lambda_max].

    Summed over m with multiplicities the rows collapse to
    c_d pi^{2d} (pi/b) (4a)^-d exp(-lambda^2/(2b)), a Gaussian in lambda.
    """
    d = grid.d
    height = inversion_constant(d) * math.pi ** (2 * d) * (math.pi / b) / (4 * a) ** d
    all_rows = float(np.sum(grid.weights * height * np.exp(-grid.lambdas**2 / (2 * b))))
    held = plancherel_norm(gaussian_profile(grid, a, b)) ** 2
    width = math.sqrt(2 * b)
    # both signs of lambda
    outside = 2 * height * math.sqrt(math.pi * b / 2) * (
        float(erf(grid.lambda_min / width)) + float(erfc(grid.lambda_max / width))
    )
    return max(all_rows - held, 0.0) + outside


def gaussian_lp_norm(d: int, a: float, b: float, p: float) -> float:
    if math.isinf(p):
        return 1.0
    return float(((math.pi / (p * a)) ** d * math.sqrt(math.pi / (p * b))) ** (1 / p))


def one_mode(
    grid: "SpectralGrid", m0: int = 0, lambda0: float = 1.0, sigma: float = 0.15
) -> RadialProfile:
    """
    A single Laguerre row m0 carrying a log-normal bump in |lambda| around lambda0.
    """
    if not 0 <= m0 <= grid.m_max:
        raise DomainError(f"mode {m0} is outside 0..{grid.m_max}")
    if not (lambda0 > 0 and sigma > 0):
        raise DomainError(f"need lambda0 > 0 and sigma > 0, got {lambda0}, {sigma}")
    x = np.log(np.abs(grid.lambdas) / lambda0) / sigma
    bump = np.where(np.abs(x) < _LOG_NORMAL_CUT, np.exp(-x * x / 2), 0.0)
    values = np.zeros((grid.m_max + 1, len(grid.lambdas)), dtype=complex)
    values[m0] = bump
    return RadialProfile.create(grid, values)


def localized_ring(
    grid: "SpectralGrid",
    j: int = 0,
    ring: "Tuple[float, float]" = (1.0, 4.0),
    m_cut: int = 2,
    seed: "Optional[int]" = None,
) -> RadialProfile:
    """
    Frequency localized profile built from the ring bump, Laguerre rows up to
    m_cut. A seed draws reproducible positive weights per row.
    """
    profile = make_localized(j, ring, ring_bump(ring), grid, m_cut=min(m_cut, grid.m_max))
    if seed is None:
        return profile
    rng = np.random.default_rng(seed)
    rows = min(m_cut, grid.m_max) + 1
    weights = np.zeros(grid.m_max + 1)
    weights[:rows] = rng.uniform(0.5, 1.5, size=rows)
    return profile.with_values(weights[:, None] * profile.values)


def two_bump(
    base: RadialProfile, a: float = 4.0, s: float = 0.5, p: float = 2.0
) -> RadialProfile:
    """
    u + a^{N/p - s} (u o delta_a): both pieces carry the same W^{s,p} seminorm
    and live at frequencies a apart.
    """
    n_hom = homogeneous_dimension(base.grid.d)
    return base + base.dilate(a).scaled(a ** (n_hom / p - s))


def zero(grid: "SpectralGrid") -> RadialProfile:
    return RadialProfile.zeros(grid)


def _gaussian(grid: "SpectralGrid", a: float = 1.0, b: float = 1.0) -> RadialProfile:
    return gaussian_profile(grid, a, b)


def _one_mode(
    grid: "SpectralGrid", m0: int = 0, lambda0: float = 1.0, sigma: float = 0.15
) -> RadialProfile:
    return one_mode(grid, m0, lambda0, sigma)


def _localized_ring(
    grid: "SpectralGrid",
    j: int = 0,
    r1: float = 1.0,
    r2: float = 4.0,
    m_cut: int = 2,
    seed: "Optional[int]" = None,
) -> RadialProfile:
    return localized_ring(grid, j, (r1, r2), m_cut, seed)


def _two_bump(
    grid: "SpectralGrid",
    j: int = 0,
    a: float = 4.0,
    s: float = 0.5,
    p: float = 2.0,
    m_cut: int = 2,
) -> RadialProfile:
    return two_bump(localized_ring(grid, j, m_cut=m_cut), a, s, p)


def _zero(grid: "SpectralGrid") -> RadialProfile:
    return zero(grid)


class Families(enum.Enum):
    # builders sit behind partial, a bare function would become a method instead of a member
    gaussian = functools.partial(_gaussian)
    one_mode = functools.partial(_one_mode)
    localized_ring = functools.partial(_localized_ring)
    two_bump = functools.partial(_two_bump)
    zero = functools.partial(_zero)

    @staticmethod
    def names() -> "List[str]":
        return [x.name for x in Families]


def build_family(
    name: str, grid: "SpectralGrid", params: "Optional[Mapping[str, Any]]" = None
) -> RadialProfile:
    """
    Build a family member by name. Hyphenated names are accepted
    (`localized-ring`), as is a `dilate` parameter k applying u o delta_{2^k}.
    """
    key = name.replace("-", "_")
    if key not in Families.names():
        raise ConfigError(f"unknown family {name!r}, expected one of {Families.names()}")
    params = dict(params or {})
    k = int(params.pop("dilate", 0))
    try:
        profile: RadialProfile = Families[key].value(grid, **params)
    except TypeError as e:
        raise ConfigError(f"bad parameters {params} for family {name!r}: {e}") from e
    if k:
        profile = profile.dilate(math.ldexp(1.0, k))
    logger.info("Built family %s with %s, dilation 2^%s", key, params, k)
    return profile
