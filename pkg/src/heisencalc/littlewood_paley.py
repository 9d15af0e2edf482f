"""
Littlewood-Paley theory on the joint spectrum.

The base bump chi equals 1 on |tau| <= 1 and vanishes for |tau| >= 4. The ring
R*(tau) = chi(tau/4) - chi(tau) lives in 1 <= |tau| <= 16 and telescopes:
chi(tau) + sum_{j>=0} R*(4^-j tau) = 1. Blocks act on radial profiles through
tau = (2m+d)|lambda|, so Delta_j multiplies R_m(lambda) by R*(4^-j (2m+d)|lambda|).
"""
import logging
import math
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from scipy.special import comb

from heisencalc import csvio
from heisencalc.errors import DomainError, GridError, SupportError, TruncationError
from heisencalc.reports import VerificationReport
from heisencalc.spectral import (
    InversePlan,
    RadialProfile,
    RadialQuadrature,
    homogeneous_dimension,
    multiplier,
    plancherel_norm,
    profile_lp_norm,
    spectral_power,
)

if TYPE_CHECKING:
    from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

    from numpy.typing import ArrayLike, NDArray

    from heisencalc.csvio import PathLike
    from heisencalc.spectral import Multiplier, SpectralGrid

    Shape = Callable[[NDArray[np.float64]], ArrayLike]

logger = logging.getLogger(__name__)

PARTITION_TOL = 1e-12
OUT_OF_RANGE_SHARE = 1e-3
PLATEAU = (4.0, 16.0)


def _glue(x: "NDArray[np.float64]", smoothness: int) -> "NDArray[np.float64]":
    """
    Monotone transition from 0 at x <= 0 to 1 at x >= 1.

    smoothness 0 selects the C-infinity glue built from exp(-1/x); k >= 1 selects
    the polynomial smoothstep of class C^k.
    """
    x = np.clip(x, 0.0, 1.0)
    if smoothness == 0:
        with np.errstate(divide="ignore"):
            a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
            b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
        return np.asarray(a / (a + b))
    k = smoothness
    total = np.zeros_like(x)
    for n in range(k + 1):
        total += comb(k + n, n, exact=True) * comb(2 * k + 1, k - n, exact=True) * (-x) ** n
    return np.asarray(x ** (k + 1) * total)


class BesovParams(NamedTuple):
    s: float
    p: float
    r: float

    @classmethod
    def create(cls, s: float, p: float, r: float) -> "BesovParams":
        if not (p >= 1 and r >= 1):
            raise DomainError(f"Besov exponents need p, r >= 1, got p={p}, r={r}")
        return cls(float(s), float(p), float(r))


class DyadicPartition(NamedTuple):
    smoothness: int
    j_min: int
    j_max: int

    def chi(self, tau: "ArrayLike") -> "NDArray[np.float64]":
        """
        Low-pass bump: 1 on |tau| <= 1, 0 on |tau| >= 4.
        """
        tau = np.abs(np.asarray(tau, dtype=float))
        return _glue((4.0 - tau) / 3.0, self.smoothness)

    def ring(self, tau: "ArrayLike") -> "NDArray[np.float64]":
        tau = np.asarray(tau, dtype=float)
        return self.chi(tau / 4.0) - self.chi(tau)

    def low(self, tau: "ArrayLike") -> "NDArray[np.float64]":
        return self.chi(tau)

    @property
    def blocks(self) -> "range":
        return range(self.j_min, self.j_max + 1)

    def block_symbol(self, j: int, d: int) -> "Multiplier":
        def phi(m: "NDArray[np.int64]", lam: "NDArray[np.float64]") -> "NDArray[np.float64]":
            return self.ring(np.ldexp((2 * m + d) * np.abs(lam), -2 * j))

        return phi

    def low_symbol(self, j: int, d: int) -> "Multiplier":
        def phi(m: "NDArray[np.int64]", lam: "NDArray[np.float64]") -> "NDArray[np.float64]":
            return self.low(np.ldexp((2 * m + d) * np.abs(lam), -2 * j))

        return phi

    def residuals(self, tau: "ArrayLike") -> "Tuple[float, float]":
        """
        Largest deviations from 1 of chi + sum_{j>=0} R*(4^-j .) and of
        sum_{j in Z} R*(4^-j .) over the given nonzero tau.
        """
        tau = np.abs(np.asarray(tau, dtype=float))
        if np.any(tau == 0):
            raise DomainError("partition residuals are evaluated at nonzero tau")
        exponents = np.log(tau) / np.log(4.0)
        j_lo = int(math.floor(exponents.min())) - 3
        j_hi = int(math.ceil(exponents.max())) + 1
        upper = np.zeros_like(tau)
        lower = np.zeros_like(tau)
        for j in range(min(j_lo, 0), j_hi + 1):
            term = self.ring(np.ldexp(tau, -2 * j))
            if j >= 0:
                upper += term
            else:
                lower += term
        telescoped = float(np.max(np.abs(1.0 - self.chi(tau) - upper)))
        homogeneous = float(np.max(np.abs(1.0 - upper - lower)))
        return telescoped, homogeneous

    def covering(self, profile: RadialProfile) -> "DyadicPartition":
        """
        The partition with its block range widened to every block that meets the
        support of the profile.
        """
        if profile.is_zero():
            return self
        tau_lo, tau_hi = profile.tau_range()
        j_lo = int(math.floor(math.log(tau_lo, 4))) - 2
        j_hi = int(math.ceil(math.log(tau_hi, 4)))
        return self._replace(j_min=min(self.j_min, j_lo), j_max=max(self.j_max, j_hi))

    def audit_rows(self, tau: "ArrayLike") -> "Iterable[Tuple[float, float, float]]":
        tau = np.asarray(tau, dtype=float)
        return zip(tau.tolist(), self.chi(tau).tolist(), self.ring(tau).tolist())


def audit_nodes(count: int = 10_000, lo: float = 1e-6, hi: float = 1e6) -> "NDArray[np.float64]":
    return np.geomspace(lo, hi, count)


def build_partition(
    smoothness: int = 0,
    j_range: "Tuple[int, int]" = (0, 4),
    grid: "Optional[SpectralGrid]" = None,
) -> DyadicPartition:
    """
    Build the dyadic partition and validate it.

    :param smoothness: 0 for the C-infinity glue, k >= 1 for a C^k polynomial glue.
    :param j_range: inclusive block range used by Besov sums.
    :param grid: when given, every block in the range must meet the tau-range of the grid.
    :return: the validated partition
    """
    if smoothness < 0:
        raise DomainError(f"smoothness must be nonnegative, got {smoothness}")
    j_min, j_max = j_range
    if j_min > j_max:
        raise DomainError(f"empty block range {j_range}")
    part = DyadicPartition(int(smoothness), int(j_min), int(j_max))
    telescoped, homogeneous = part.residuals(audit_nodes())
    residual = max(telescoped, homogeneous)
    if residual > PARTITION_TOL:
        raise TruncationError(
            f"partition of unity residual {residual:.3g} exceeds {PARTITION_TOL:.0e}"
        )
    if grid is not None:
        tau_lo = grid.d * grid.lambda_min
        tau_hi = (2 * grid.m_max + grid.d) * grid.lambda_max
        if math.ldexp(16.0, 2 * j_min) <= tau_lo or math.ldexp(1.0, 2 * j_max) >= tau_hi:
            raise GridError(
                f"blocks {j_range} reach outside the spectral range [{tau_lo:.3g}, {tau_hi:.3g}]"
            )
    logger.debug("Built partition %s, residual %.3g", part, residual)
    return part


def project_block(profile: RadialProfile, j: int, part: DyadicPartition) -> RadialProfile:
    return multiplier(profile, part.block_symbol(j, profile.grid.d))


def low_pass(profile: RadialProfile, j: int, part: DyadicPartition) -> RadialProfile:
    return multiplier(profile, part.low_symbol(j, profile.grid.d))


def _lr_sum(values: "Sequence[float]", r: float) -> float:
    if not values:
        return 0.0
    if math.isinf(r):
        return max(values)
    return float(sum(v**r for v in values) ** (1 / r))


def norm_plan(profile: RadialProfile, p: float) -> "Optional[InversePlan]":
    if p == 2 or profile.is_zero():
        return None
    return InversePlan(profile, RadialQuadrature.for_profile(profile))


def block_norms(
    profile: RadialProfile,
    p: float,
    blocks: "Iterable[int]",
    part: DyadicPartition,
    plan: "Optional[InversePlan]" = None,
) -> "Dict[int, float]":
    """
    L^p norms of Delta_q u for each requested block.
    """
    if plan is None:
        plan = norm_plan(profile, p)
    norms = {}
    for q in blocks:
        block = project_block(profile, q, part)
        norms[q] = 0.0 if block.is_zero() else profile_lp_norm(block, p, plan=plan)
    return norms


def besov_norm(
    profile: RadialProfile, params: BesovParams, part: DyadicPartition
) -> float:
    """
    l^r over q in the block range of 2^{qs} ||Delta_q u||_{L^p}.

    Blocks outside the range that meet the support are evaluated as well; their
    share of the l^r sum must stay below 0.1%.
    """
    if profile.is_zero():
        return 0.0
    wide = part.covering(profile)
    plan = norm_plan(profile, params.p)
    norms = block_norms(profile, params.p, wide.blocks, part, plan=plan)
    weighted = {q: 2.0 ** (q * params.s) * v for q, v in norms.items()}
    inside = [v for q, v in weighted.items() if part.j_min <= q <= part.j_max]
    outside = [v for q, v in weighted.items() if not part.j_min <= q <= part.j_max]
    total = _lr_sum(list(weighted.values()), params.r)
    missing = _lr_sum(outside, params.r)
    if total > 0 and missing > OUT_OF_RANGE_SHARE * total:
        raise TruncationError(
            f"blocks outside {part.j_min}..{part.j_max} carry {missing / total:.3g} "
            f"of the Besov norm (limit {OUT_OF_RANGE_SHARE:.0e})"
        )
    return _lr_sum(inside, params.r)


def _touches_lowest_node(profile: RadialProfile) -> bool:
    n_half = profile.grid.n_half
    return bool(np.any(profile.values[:, [n_half - 1, n_half]] != 0))


def sobolev_norm(
    profile: RadialProfile, s: float, p: float, plan: "Optional[InversePlan]" = None
) -> float:
    """
    ||(-Delta)^{s/2} f||_{L^p}.
    """
    if s < 0 and _touches_lowest_node(profile):
        raise SupportError(
            f"negative power s={s} of the sub-Laplacian on a profile that reaches lambda_min"
        )
    return profile_lp_norm(multiplier(profile, spectral_power(s / 2, profile.grid.d)), p, plan)


def ring_bump(ring: "Tuple[float, float]") -> "Shape":
    """
    C-infinity bump with peak 1 supported in [sqrt(r1), sqrt(r2)].
    """
    lo, hi = math.sqrt(ring[0]), math.sqrt(ring[1])
    centre = (lo + hi) / 2
    peak = math.exp(-1.0 / ((centre - lo) * (hi - centre)))

    def shape(tau: "NDArray[np.float64]") -> "NDArray[np.float64]":
        tau = np.asarray(tau, dtype=float)
        inside = (tau > lo) & (tau < hi)
        gap = np.where(inside, (tau - lo) * (hi - tau), 1.0)
        return np.where(inside, np.exp(-1.0 / gap) / peak, 0.0)

    return shape


def make_localized(
    j: int,
    ring: "Tuple[float, float]",
    shape: "Shape",
    grid: "SpectralGrid",
    m_cut: "Optional[int]" = None,
) -> RadialProfile:
    """
    Profile R_m(lambda) = shape(4^-j (2m+d)|lambda|) for m <= m_cut, frequency
    localized in 2^j C(sqrt(r1), sqrt(r2)).
    """
    r1, r2 = ring
    if not 0 < r1 < r2:
        raise DomainError(f"ring needs 0 < r1 < r2, got {ring}")
    scaled = np.ldexp(grid.tau(), -2 * j)
    values = np.asarray(np.broadcast_to(shape(scaled), scaled.shape), dtype=complex).copy()
    if m_cut is not None:
        values[m_cut + 1 :] = 0
    outside = (scaled < math.sqrt(r1)) | (scaled > math.sqrt(r2))
    if np.any(values[outside] != 0):
        raise SupportError(f"shape has mass outside the ring [{math.sqrt(r1)}, {math.sqrt(r2)}]")
    return RadialProfile.create(grid, values)


def bernstein_check(
    members: "Callable[[int], Sequence[RadialProfile]]",
    j_values: "Sequence[int]",
    rho: float,
    p: float,
    part: DyadicPartition,
    slack: float = 1.5,
) -> VerificationReport:
    """
    Ratios ||(-Delta)^{rho/2} u||_p / (2^{j rho} ||u||_p) for a family of
    functions frequency localized at 2^j. Passes when the spread max/min over
    the family and over j stays below the slack.

    Each member must be reproduced by the four blocks j-2..j+1 around it; the
    largest deviation is reported as `localization`.
    """
    ratios: "List[float]" = []
    localization = 0.0
    for j in j_values:
        for u in members(j):
            plan = norm_plan(u, p)
            base = profile_lp_norm(u, p, plan)
            if base == 0:
                continue
            power = multiplier(u, spectral_power(rho / 2, u.grid.d))
            ratios.append(profile_lp_norm(power, p, plan) / (2.0 ** (j * rho) * base))
            blocks = [project_block(u, q, part) for q in range(j - 2, j + 2)]
            rebuilt = blocks[0]
            for block in blocks[1:]:
                rebuilt = rebuilt + block
            defect = plancherel_norm(rebuilt.with_values(rebuilt.values - u.values))
            localization = max(localization, defect / plancherel_norm(u))
    lo = min(ratios, default=math.nan)
    hi = max(ratios, default=math.nan)
    spread = hi / lo if ratios else math.nan
    return VerificationReport.create(
        "bernstein",
        {"rho": rho, "p": p, "j": list(j_values)},
        {"min": lo, "max": hi, "spread": spread, "localization": localization},
        tol=slack,
        passed=bool(ratios) and spread <= slack,
        fitted_c=lo,
        fitted_C=hi,
    )


def uniform_boundedness(
    profiles: "Sequence[RadialProfile]",
    j_values: "Sequence[int]",
    p: float,
    part: DyadicPartition,
    cap: "Optional[float]" = None,
) -> VerificationReport:
    """
    ||Delta_j u||_p / ||u||_p over j and the family; one constant must bound all ratios.

    On L^2 the blocks are multipliers with values in [0, 1], so the bound is 1 and
    `cap` may be left out. Other exponents need an explicit cap.
    """
    if cap is None:
        if p != 2:
            raise DomainError(f"uniform boundedness on L^{p} needs an explicit cap")
        cap = 1 + PARTITION_TOL
    ratios = []
    for u in profiles:
        plan = norm_plan(u, p)
        base = profile_lp_norm(u, p, plan)
        if base == 0:
            continue
        norms = block_norms(u, p, j_values, part, plan=plan)
        ratios.extend(v / base for v in norms.values())
    constant = max(ratios, default=math.nan)
    return VerificationReport.create(
        "uniform_boundedness",
        {"p": p, "j": list(j_values), "members": len(profiles)},
        {"max_ratio": constant},
        tol=cap,
        passed=bool(ratios) and constant <= cap,
        fitted_C=constant,
    )


def sobolev_besov_ratio(
    profile: RadialProfile, s: float, part: DyadicPartition, dilation: float = 2.0
) -> VerificationReport:
    """
    Compare the Besov B^s_{2,2} norm with the Sobolev H^s norm for u and u o delta_a.
    The ratio depends on s through the block overlap but does not move under
    dilation.
    """
    ratios = []
    for candidate in (profile, profile.dilate(dilation)):
        wide = part.covering(candidate)
        besov = besov_norm(candidate, BesovParams.create(s, 2, 2), wide)
        ratios.append(besov / sobolev_norm(candidate, s, 2))
    drift = abs(ratios[1] - ratios[0]) / ratios[0]
    return VerificationReport.create(
        "sobolev_besov",
        {"s": s, "dilation": dilation},
        {"ratio": ratios[0], "ratio_dilated": ratios[1], "drift": drift},
        tol=1e-9,
        passed=drift <= 1e-9,
    )


def besov_scaling(
    profile: RadialProfile, params: BesovParams, part: DyadicPartition, dilation: float = 2.0
) -> VerificationReport:
    """
    ||u o delta_a||_B = a^{s - N/p} ||u||_B when the block range follows the dilation.
    """
    n_hom = homogeneous_dimension(profile.grid.d)
    wide = part.covering(profile)
    shift = int(round(math.log2(dilation)))
    base = besov_norm(profile, params, wide)
    shifted = wide._replace(j_min=wide.j_min + shift, j_max=wide.j_max + shift)
    moved = besov_norm(profile.dilate(dilation), params, shifted)
    expected = dilation ** (params.s - n_hom / params.p) * base
    error = abs(moved - expected) / expected if expected else abs(moved)
    return VerificationReport.create(
        "besov_scaling",
        {"s": params.s, "p": params.p, "r": params.r, "dilation": dilation},
        {"norm": base, "dilated": moved, "error": error},
        tol=1e-9,
        passed=error <= 1e-9,
    )


def write_partition_csv(
    path: "PathLike", part: DyadicPartition, tau: "Optional[ArrayLike]" = None
) -> None:
    nodes = audit_nodes(2001, 1e-2, 1e3) if tau is None else np.asarray(tau, dtype=float)
    fields = {"smoothness": part.smoothness, "jmin": part.j_min, "jmax": part.j_max}
    csvio.write_csv(path, "partition", fields, ("tau", "chi", "rstar"), part.audit_rows(nodes))
