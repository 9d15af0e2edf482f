"""
Numerical checks of the heat-flow characterization of Besov spaces, the decay
of frequency localized functions under the heat flow, the refined Sobolev
inequality and the maximal function bounds, collected into named suites.
"""
import enum
import functools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from scipy.special import gamma

from heisencalc.errors import (
    ConfigError,
    DomainError,
    FitError,
    GridError,
    HeisencalcError,
    TruncationError,
)
from heisencalc.families import (
    gaussian_function,
    gaussian_lp_norm,
    gaussian_plancherel_tail,
    gaussian_profile,
    localized_ring,
    one_mode,
    two_bump,
)
from heisencalc.group_core import (
    GridSpec,
    SampledField,
    convolve,
    gauge_array,
    left_translate,
    lp_norm,
    s_synthesize,
    shift_xy,
    sublaplacian_fd,
)
from heisencalc.heat import (
    cached_kernel_eval,
    fd_heat_oracle,
    heat_apply,
    heat_flow,
    heat_kernel_modes,
    kernel_eval,
    kernel_scaled_array,
    KernelCache,
)
from heisencalc.laguerre import laguerre
from heisencalc.littlewood_paley import (
    PLATEAU,
    BesovParams,
    audit_nodes,
    besov_norm,
    besov_scaling,
    bernstein_check,
    build_partition,
    make_localized,
    norm_plan,
    project_block,
    ring_bump,
    sobolev_besov_ratio,
    sobolev_norm,
    uniform_boundedness,
)
from heisencalc.quadrature import log_rule
from heisencalc.reports import VerificationReport
from heisencalc.spectral import (
    InversePlan,
    RadialQuadrature,
    SpectralGrid,
    check_lemma41,
    forward_transform,
    homogeneous_dimension,
    inverse_transform,
    plancherel_norm,
    profile_lp_norm,
    summability,
)

if TYPE_CHECKING:
    from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

    from numpy.typing import ArrayLike, NDArray

    from heisencalc.config import RunConfig
    from heisencalc.littlewood_paley import DyadicPartition
    from heisencalc.spectral import RadialProfile

__all__ = ["VerificationReport"]

logger = logging.getLogger(__name__)

TGRID_TAIL = 1e-4
TAIL_SHARE = 1e-2
USABLE_RATIO = 1e-12
DEFAULT_DILATIONS = range(-2, 3)
PLANCHEREL_TOL = 1e-4
ROUNDTRIP_TOL = 1e-6
EIGEN_TOL = 2e-2
EIGEN_CONVERGENCE = 3.0
PDE_TOL = 5e-2
KERNEL_TOL = 1e-4


class TGrid(NamedTuple):
    """
    Quadrature for L^r(R+, dt/t): one Gauss-Legendre panel in log t per factor
    4 of t, starting at a power of 4 so dilating a profile by 2 moves the
    integrand by exactly one period.
    """

    nodes: "NDArray[np.float64]"
    weights: "NDArray[np.float64]"
    t_min: float
    t_max: float
    order: int

    @classmethod
    def build(cls, t_min: float, t_max: float, order: int = 6) -> "TGrid":
        if not 0 < t_min < t_max:
            raise DomainError(f"need 0 < t_min < t_max, got {t_min}, {t_max}")
        lo = math.floor(math.log(t_min, 4))
        hi = math.ceil(math.log(t_max, 4))
        periods = max(1, hi - lo)
        rule = log_rule(math.ldexp(1.0, 2 * lo), 2, periods, order)
        return cls(
            rule.nodes, rule.weights, math.ldexp(1.0, 2 * lo), math.ldexp(1.0, 2 * (lo + periods)), order
        )

    @classmethod
    def for_spectrum(
        cls,
        mu_min: float,
        mu_max: float,
        s: float,
        r: float = math.inf,
        tail: float = TGRID_TAIL,
        order: int = 6,
        blocks: "Optional[Tuple[int, int]]" = None,
    ) -> "TGrid":
        """
        Size the grid for t^s ||e^{t Delta} u|| with the spectrum of u in [mu_min, mu_max]:
        below t_min the integrand is under tail^{1/r} of its size, above t_max
        the exponential has killed it.

        :param blocks: block range (j_min, j_max) the grid must also cover,
            i.e. [4^-(j_max+2), 4^-(j_min-2)].
        """
        if not 0 < mu_min <= mu_max:
            raise DomainError(f"need 0 < mu_min <= mu_max, got {mu_min}, {mu_max}")
        if not s > 0:
            raise DomainError(f"the t-weight exponent must be positive, got {s}")
        exponent = s if math.isinf(r) else s * r
        t_min = tail ** (1 / exponent) / mu_max
        t_max = (2 * math.log(1 / tail) + 4 * s) / mu_min
        if blocks is not None:
            t_min = min(t_min, 4.0 ** -(blocks[1] + 2))
            t_max = max(t_max, 4.0 ** -(blocks[0] - 2))
        return cls.build(t_min, t_max, order)

    def covers(self, j_min: int, j_max: int) -> bool:
        return self.t_min <= 4.0 ** -(j_max + 2) and self.t_max >= 4.0 ** -(j_min - 2)

    def norm(self, values: "ArrayLike", r: float) -> float:
        values = np.asarray(values, dtype=float)
        if math.isinf(r):
            return float(np.max(values, initial=0.0))
        return float(np.sum(self.weights * values**r) ** (1 / r))

    def tail_share(self, values: "ArrayLike", r: float) -> float:
        """
        Share of the first and last period in the L^r(dt/t) norm.
        """
        values = np.asarray(values, dtype=float)
        ends = np.zeros(len(values), dtype=bool)
        ends[: self.order] = True
        ends[-self.order :] = True
        if math.isinf(r):
            peak = float(np.max(values, initial=0.0))
            return float(np.max(values[ends], initial=0.0)) / peak if peak > 0 else 0.0
        powers = self.weights * values**r
        total = float(np.sum(powers))
        return float(np.sum(powers[ends])) / total if total > 0 else 0.0


def spectrum_range(profiles: "Iterable[RadialProfile]") -> "Tuple[float, float]":
    """
    Extent of the joint spectrum 4(2m+d)|lambda| over the supports of nonzero profiles.
    """
    ranges = [u.tau_range() for u in profiles if not u.is_zero()]
    if not ranges:
        raise DomainError("spectrum range of an empty family")
    return 4 * min(lo for lo, _ in ranges), 4 * max(hi for _, hi in ranges)


def _heat_norms_plancherel(profile: "RadialProfile", nodes: "NDArray[np.float64]") -> "NDArray[np.float64]":
    support = profile.values != 0
    weights = profile.grid.measure()[support] * np.abs(profile.values[support]) ** 2
    mu = profile.grid.joint_spectrum()[support]
    return np.asarray(np.sqrt(np.exp(-2 * nodes[:, None] * mu[None, :]) @ weights))


def heat_norm(
    profile: "RadialProfile",
    s: float,
    p: float,
    r: float,
    tgrid: TGrid,
    plan: "Optional[InversePlan]" = None,
) -> float:
    """
    || t^s ||e^{t Delta} u||_{L^p} ||_{L^r(dt/t)} on the t-grid.

    For r = infinity nodes are visited from large t downwards and the walk stops
    once the contraction bound t^s ||u||_p falls below the running maximum.
    Raises TruncationError when the end periods carry more than 1% of the norm.
    """
    if profile.is_zero():
        return 0.0
    nodes = tgrid.nodes
    if p == 2 and plan is None:
        values = nodes**s * _heat_norms_plancherel(profile, nodes)
    elif math.isinf(r):
        base = profile_lp_norm(profile, p, plan)
        values = nodes**s * base
        best = 0.0
        for i in range(len(nodes) - 1, -1, -1):
            if values[i] <= best:
                break
            values[i] = nodes[i] ** s * profile_lp_norm(heat_apply(profile, nodes[i]), p, plan)
            best = max(best, values[i])
    else:
        values = np.array(
            [t**s * profile_lp_norm(heat_apply(profile, t), p, plan) for t in nodes]
        )
    share = tgrid.tail_share(values, r)
    if share > TAIL_SHARE:
        raise TruncationError(
            f"the ends of the t-grid [{tgrid.t_min:.3g}, {tgrid.t_max:.3g}] carry "
            f"{share:.3g} of the heat-flow norm (limit {TAIL_SHARE:.0e})"
        )
    return tgrid.norm(values, r)


def _dilates(profile: "RadialProfile", dilations: "Iterable[int]") -> "List[RadialProfile]":
    return [profile.dilate(math.ldexp(1.0, k)) for k in dilations]


def decay_reports(
    j_values: "Sequence[int]",
    ring: "Tuple[float, float]",
    p: float,
    part: "DyadicPartition",
    grid: SpectralGrid,
    m_cut: int = 2,
    uniformity_tol: float = 1.2,
) -> "List[VerificationReport]":
    """
    Heat decay of u_j, frequency localized in the ring scaled by 2^j.

    For every j the ratio ||e^{t Delta} u_j||_p / ||u_j||_p is sampled at
    t = x 4^-j, x = 1/8, ..., 2, and log ratio is fitted linearly in x. One
    `decay_rate` report per j is followed by the `decay` summary, which passes
    when max c_j / min c_j stays below the uniformity tolerance.
    """
    x = 0.125 * np.arange(1, 17)
    reports = []
    rates: "Dict[int, float]" = {}
    samples: "Dict[int, NDArray[np.float64]]" = {}
    localization = 0.0
    for j in j_values:
        u = make_localized(j, ring, ring_bump(ring), grid, m_cut=min(m_cut, grid.m_max))
        plan = norm_plan(u, p)
        base = profile_lp_norm(u, p, plan)
        ratios = np.array(
            [profile_lp_norm(heat_apply(u, math.ldexp(xi, -2 * j)), p, plan) / base for xi in x]
        )
        usable = ratios > USABLE_RATIO
        if np.count_nonzero(usable) < 4:
            raise FitError(f"only {np.count_nonzero(usable)} usable t-nodes for block {j}")
        slope, intercept = np.polyfit(x[usable], np.log(ratios[usable]), 1)
        rates[j] = -float(slope)
        samples[j] = ratios
        rebuilt = sum((project_block(u, q, part).values for q in range(j - 2, j + 2)), np.zeros_like(u.values))
        localization = max(localization, plancherel_norm(u.with_values(rebuilt - u.values)) / plancherel_norm(u))
        reports.append(
            VerificationReport.create(
                "decay_rate",
                {"j": j, "p": p, "ring": list(ring)},
                {"c": rates[j], "intercept": float(intercept)},
                tol=math.nan,
                passed=rates[j] > 0,
                fitted_c=rates[j],
            )
        )
    c = min(rates.values())
    uniformity = max(rates.values()) / c if c > 0 else math.inf
    constant = max(float(np.max(ratios * np.exp(c * x))) for ratios in samples.values())
    reports.append(
        VerificationReport.create(
            "decay",
            {"j": list(j_values), "p": p, "ring": list(ring)},
            {"uniformity": uniformity, "localization": localization},
            tol=uniformity_tol,
            passed=c > 0 and uniformity <= uniformity_tol,
            fitted_c=c,
            fitted_C=constant,
        )
    )
    return reports


def decay_check(
    j_values: "Sequence[int]",
    ring: "Tuple[float, float]",
    p: float,
    part: "DyadicPartition",
    grid: SpectralGrid,
    m_cut: int = 2,
    uniformity_tol: float = 1.2,
) -> VerificationReport:
    return decay_reports(j_values, ring, p, part, grid, m_cut, uniformity_tol)[-1]


def heat_characterization(
    family: "Sequence[RadialProfile]",
    s: float,
    p: float,
    r: float,
    part: "DyadicPartition",
    tgrid: "Optional[TGrid]" = None,
    dilations: "Iterable[int]" = DEFAULT_DILATIONS,
    drift_tol: float = 1e-3,
) -> VerificationReport:
    """
    Ratio of || t^s ||e^{t Delta} u||_p ||_{L^r(dt/t)} to the B^{-2s}_{p,r} norm over a
    family and its dilates u o delta_{2^k}.

    :return: report with the single constant C0 bounding every ratio in
        [1/C0, C0] and the largest relative drift of the ratio under dilation
    """
    if not s > 0:
        raise DomainError(f"heat characterization needs s > 0, got {s}")
    params = BesovParams.create(-2 * s, p, r)
    dilations = list(dilations)
    members = [_dilates(u, dilations) for u in family if not u.is_zero()]
    if not members:
        raise DomainError("heat characterization of an empty family")
    if tgrid is None:
        mu_lo, mu_hi = spectrum_range(v for group in members for v in group)
        tgrid = TGrid.for_spectrum(mu_lo, mu_hi, s, r, blocks=(part.j_min, part.j_max))
    if not tgrid.covers(part.j_min, part.j_max):
        raise TruncationError(
            f"t-grid [{tgrid.t_min:.3g}, {tgrid.t_max:.3g}] does not cover blocks {part.j_min}..{part.j_max}"
        )
    ratios: "List[float]" = []
    drift = 0.0
    for group in members:
        group_ratios = []
        for v in group:
            lhs = besov_norm(v, params, part)
            rhs = heat_norm(v, s, p, r, tgrid, norm_plan(v, p))
            group_ratios.append(rhs / lhs)
        logger.info("Heat characterization s=%s p=%s r=%s: ratios %s", s, p, r, group_ratios)
        drift = max(drift, (max(group_ratios) - min(group_ratios)) / min(group_ratios))
        ratios.extend(group_ratios)
    constant = max(max(ratios), 1 / min(ratios))
    return VerificationReport.create(
        "heat_characterization",
        {"s": s, "p": p, "r": r, "members": len(members), "dilations": dilations},
        {"min_ratio": min(ratios), "max_ratio": max(ratios), "drift": drift},
        tol=drift_tol,
        passed=drift <= drift_tol,
        fitted_C=constant,
    )


def tgrid_self_test(
    profile: "RadialProfile",
    j: int,
    s: float,
    part: "DyadicPartition",
    tgrid: "Optional[TGrid]" = None,
    tol: float = 1e-3,
) -> VerificationReport:
    """
    Reproducing formula Delta_j u = Gamma(s+1)^-1 int t^s (-Delta)^{s+1} e^{t Delta} Delta_j u dt
    on the t-grid: the multiplier sum_i w_i (t_i mu)^{s+1} e^{-t_i mu} / Gamma(s+1)
    must equal 1 on the support of the block.
    """
    if not s > 0:
        raise DomainError(f"the reproducing formula needs s > 0, got {s}")
    block = project_block(profile, j, part)
    if block.is_zero():
        raise DomainError(f"block {j} of the profile is empty")
    if tgrid is None:
        mu_lo, mu_hi = spectrum_range([block])
        tgrid = TGrid.for_spectrum(mu_lo, mu_hi, s + 1, 1.0)
    support = block.values != 0
    mu = block.grid.joint_spectrum()[support]
    tm = tgrid.nodes[:, None] * mu[None, :]
    reproduced = tgrid.weights @ (tm ** (s + 1) * np.exp(-tm)) / gamma(s + 1)
    error = float(np.max(np.abs(reproduced - 1)))
    rebuilt = np.zeros_like(block.values)
    rebuilt[support] = reproduced * block.values[support]
    profile_error = plancherel_norm(block.with_values(rebuilt - block.values)) / plancherel_norm(block)
    return VerificationReport.create(
        "tgrid_self_test",
        {"j": j, "s": s, "t_min": tgrid.t_min, "t_max": tgrid.t_max, "nodes": len(tgrid.nodes)},
        {"multiplier_error": error, "profile_error": profile_error},
        tol=tol,
        passed=error <= tol,
    )


def _exponent_check(s: float, p: float, n_hom: int) -> float:
    if not 0 < s < n_hom / p:
        raise DomainError(f"need 0 < s < N/p = {n_hom / p}, got s={s}")
    return p * n_hom / (n_hom - p * s)


class RefinedSobolevTerms(NamedTuple):
    lq: float
    sobolev: float
    besov: float
    theta: float

    @property
    def ratio(self) -> float:
        """
        ||f||_q / (||f||_W^{1-theta} ||f||_B^theta).
        """
        return self.lq / (self.sobolev ** (1 - self.theta) * self.besov**self.theta)

    @property
    def gain(self) -> float:
        """
        Refined right-hand side over the plain Sobolev one, (B/W)^theta.
        """
        return (self.besov / self.sobolev) ** self.theta


def refined_sobolev_terms(
    profile: "RadialProfile", s: float, p: float, tgrid: "Optional[TGrid]" = None
) -> RefinedSobolevTerms:
    """
    ||f||_{L^q}, ||f||_{W^{s,p}} and the B^{s-N/p}_{inf,inf} norm in its heat-flow
    form sup_t t^{(N/p-s)/2} ||e^{t Delta} f||_inf, with q = pN/(N-ps).
    """
    n_hom = homogeneous_dimension(profile.grid.d)
    q = _exponent_check(s, p, n_hom)
    if profile.is_zero():
        raise DomainError("refined Sobolev terms of the zero function")
    sigma = (n_hom / p - s) / 2
    if tgrid is None:
        tgrid = TGrid.for_spectrum(*spectrum_range([profile]), sigma)
    plan = InversePlan(profile, RadialQuadrature.for_profile(profile))
    lq = profile_lp_norm(profile, q, plan)
    sobolev = sobolev_norm(profile, s, p, None if p == 2 else plan)
    besov = heat_norm(profile, sigma, math.inf, math.inf, tgrid, plan)
    return RefinedSobolevTerms(lq, sobolev, besov, s * p / n_hom)


def refined_sobolev_check(
    family: "Sequence[RadialProfile]",
    s: float,
    p: float,
    tgrid: "Optional[TGrid]" = None,
    dilations: "Iterable[int]" = (-1, 0, 1),
    drift_tol: float = 1e-2,
) -> VerificationReport:
    """
    The refined Sobolev ratio over a family and its dilates: one constant bounds
    it and dilation leaves it unchanged.
    """
    n_hom = homogeneous_dimension(family[0].grid.d) if family else 4
    q = _exponent_check(s, p, n_hom)
    dilations = list(dilations)
    members = [_dilates(u, dilations) for u in family if not u.is_zero()]
    if not members:
        raise DomainError("refined Sobolev check of an empty family")
    if tgrid is None:
        mu_lo, mu_hi = spectrum_range(v for group in members for v in group)
        tgrid = TGrid.for_spectrum(mu_lo, mu_hi, (n_hom / p - s) / 2)
    ratios = []
    gains = []
    drift = 0.0
    for group in members:
        group_terms = [refined_sobolev_terms(v, s, p, tgrid) for v in group]
        group_ratios = [terms.ratio for terms in group_terms]
        drift = max(drift, (max(group_ratios) - min(group_ratios)) / min(group_ratios))
        ratios.extend(group_ratios)
        gains.append(group_terms[0].gain)
    constant = max(ratios)
    return VerificationReport.create(
        "refined_sobolev",
        {"s": s, "p": p, "q": q, "members": len(members), "dilations": dilations},
        {"max_ratio": constant, "min_gain": min(gains), "drift": drift},
        tol=drift_tol,
        passed=drift <= drift_tol,
        fitted_C=constant,
    )


def two_bump_gain(
    base: "RadialProfile", s: float, p: float, a: float = 4.0, tgrid: "Optional[TGrid]" = None
) -> VerificationReport:
    """
    Splitting the W^{s,p} mass of u over two frequency scales keeps the Besov
    factor and raises the Sobolev one, so the refined bound gains on u + a^{N/p-s} u o delta_a.
    """
    pair = two_bump(base, a, s, p)
    n_hom = homogeneous_dimension(base.grid.d)
    if tgrid is None:
        tgrid = TGrid.for_spectrum(*spectrum_range([base, pair]), (n_hom / p - s) / 2)
    single = refined_sobolev_terms(base, s, p, tgrid).gain
    double = refined_sobolev_terms(pair, s, p, tgrid).gain
    return VerificationReport.create(
        "two_bump_gain",
        {"s": s, "p": p, "a": a},
        {"single": single, "two_bump": double},
        tol=0.0,
        passed=double < single,
    )


def embedding_check(
    family: "Sequence[RadialProfile]",
    p: float,
    tgrid: "Optional[TGrid]" = None,
    dilations: "Iterable[int]" = (-1, 0, 1),
    drift_tol: float = 1e-2,
) -> VerificationReport:
    """
    sup_t t^{N/2p} ||e^{t Delta} u||_inf <= C ||u||_p, the embedding of L^p into
    B^{-N/p}_{inf,inf}; the ratio is dilation invariant.
    """
    if not 1 <= p < math.inf:
        raise DomainError(f"the embedding check needs 1 <= p < inf, got {p}")
    dilations = list(dilations)
    members = [_dilates(u, dilations) for u in family if not u.is_zero()]
    if not members:
        raise DomainError("embedding check of an empty family")
    sigma = homogeneous_dimension(family[0].grid.d) / (2 * p)
    if tgrid is None:
        mu_lo, mu_hi = spectrum_range(v for group in members for v in group)
        tgrid = TGrid.for_spectrum(mu_lo, mu_hi, sigma)
    ratios: "List[float]" = []
    drift = 0.0
    for group in members:
        group_ratios = []
        for v in group:
            plan = InversePlan(v, RadialQuadrature.for_profile(v))
            besov = heat_norm(v, sigma, math.inf, math.inf, tgrid, plan)
            group_ratios.append(besov / profile_lp_norm(v, p, None if p == 2 else plan))
        drift = max(drift, (max(group_ratios) - min(group_ratios)) / min(group_ratios))
        ratios.extend(group_ratios)
    constant = max(ratios)
    return VerificationReport.create(
        "embedding",
        {"p": p, "members": len(members), "dilations": dilations},
        {"max_ratio": constant, "min_ratio": min(ratios), "drift": drift},
        tol=drift_tol,
        passed=drift <= drift_tol,
        fitted_C=constant,
    )


def translation_check(
    f: SampledField,
    shift: "Tuple[int, int, float]",
    q: float,
    sigma: float,
    t_values: "Sequence[float]" = (0.25, 0.5, 1.0),
    tol: float = 1e-2,
) -> VerificationReport:
    """
    ||f||_q and sup_t t^sigma ||e^{t Delta} f||_inf against the same quantities of
    f(w0^-1 .); both are left invariant.
    """
    moved = left_translate(f, *shift)

    def heat_sup(g: SampledField) -> float:
        return max(t**sigma * lp_norm(heat_flow(g, t), math.inf) for t in t_values)

    lq_change = abs(lp_norm(moved, q) - lp_norm(f, q)) / lp_norm(f, q)
    heat_change = abs(heat_sup(moved) - heat_sup(f)) / heat_sup(f)
    return VerificationReport.create(
        "translation",
        {"shift": list(shift), "q": q, "sigma": sigma, "t": list(t_values)},
        {"lq_change": lq_change, "heat_change": heat_change},
        tol=tol,
        passed=max(lq_change, heat_change) <= tol,
    )


def resolution(grid: GridSpec) -> float:
    """
    Smallest gauge step of the lattice.
    """
    return min(grid.h_x, grid.h_y, math.sqrt(grid.h_s))


def default_radii(grid: GridSpec) -> "List[float]":
    """
    Geometric ladder 2^{k/2} h_min, k >= 1, up to half the smaller planar extent.
    """
    h_min = resolution(grid)
    top = min(grid.l_x, grid.l_y) / 2
    count = int(math.floor(2 * math.log2(top / h_min)))
    return [h_min * 2 ** (k / 2) for k in range(1, count + 1)]


def _ball_offsets(grid: GridSpec, radius: float) -> "Iterable[Tuple[int, int, float]]":
    # planar lattice offsets inside the ball with the s half-width sqrt(R^4 - |delta|^4)
    r4 = radius**4
    for a in range(-int(radius / grid.h_x), int(radius / grid.h_x) + 1):
        for b in range(-int(radius / grid.h_y), int(radius / grid.h_y) + 1):
            delta4 = ((a * grid.h_x) ** 2 + (b * grid.h_y) ** 2) ** 2
            if delta4 < r4:
                yield a, b, math.sqrt(r4 - delta4)


def ball_volume(grid: GridSpec, radius: float) -> float:
    """
    m(B(w, R)) counted on the lattice through a node w, times the cell volume.
    """
    if grid.d != 1:
        raise GridError("ball volumes are counted on d = 1 grids")
    count = 0
    for _, _, half in _ball_offsets(grid, radius):
        count += 2 * (math.ceil(half / grid.h_s) - 1) + 1
    return count * grid.cell_volume


def _periodic_prefix(
    prefix: "NDArray[np.float64]", k: "NDArray[np.int64]", n: int
) -> "NDArray[np.float64]":
    # S(k) = sum_{j<k} g_j for the s-periodic extension of g
    total = prefix[:, :, -1:]
    return np.asarray((k // n) * total + np.take_along_axis(prefix, k % n, axis=2))


def maximal_function(f: SampledField, radii: "Optional[Sequence[float]]" = None) -> SampledField:
    """
    Mf(w) = max over R of the mean of |f| over the lattice nodes of B(w, R) that
    lie on the grid, with B(w, R) = {w' : rho(w^-1 w') < R} tested exactly:
    w' = (z + delta, s') is inside when |delta|^4 + (s' - s - 2 Im(z conj(delta)))^2 < R^4.
    """
    grid = f.grid
    if grid.d != 1:
        raise GridError("maximal functions are computed on d = 1 grids")
    radii = sorted(default_radii(grid) if radii is None else radii)
    if not radii or radii[0] <= resolution(grid):
        raise GridError(
            f"smallest radius {radii[0] if radii else None} is below the grid resolution "
            f"{resolution(grid):.3g}"
        )
    n_s = grid.n_s
    magnitude = np.abs(f.values)
    prefix = np.concatenate(
        [np.zeros(grid.shape[:2] + (1,)), np.cumsum(magnitude, axis=2)], axis=2
    )
    inside_planar = np.ones(grid.shape[:2])
    x = grid.x[:, None, None]
    y = grid.y[None, :, None]
    position = (grid.s[None, None, :] - grid.s[0]) / grid.h_s
    best = np.zeros(grid.shape)
    for radius in radii:
        sums = np.zeros(grid.shape)
        counts = np.zeros(grid.shape)
        for a, b, half in _ball_offsets(grid, radius):
            # values at z + delta, zero off the grid
            shifted = shift_xy(prefix, -a, -b)
            present = shift_xy(inside_planar, -a, -b)[:, :, None]
            centre = position + 2 * (y * a * grid.h_x - x * b * grid.h_y) / grid.h_s
            lo = np.floor(centre - half / grid.h_s).astype(np.int64) + 1
            hi = np.ceil(centre + half / grid.h_s).astype(np.int64) - 1
            count = np.maximum(hi - lo + 1, 0)
            window = _periodic_prefix(shifted, np.maximum(hi + 1, lo), n_s) - _periodic_prefix(
                shifted, lo, n_s
            )
            sums += window
            counts += count * present
        best = np.maximum(best, np.where(counts > 0, sums / np.maximum(counts, 1), 0.0))
    return f.with_values(best)


def radial_majorant(values: "ArrayLike", gauge: "ArrayLike") -> "NDArray[np.float64]":
    """
    psi(w) = max of |values| over nodes w' with rho(w') >= rho(w).
    """
    magnitude = np.abs(np.asarray(values)).reshape(-1)
    rho = np.asarray(gauge, dtype=float).reshape(-1)
    levels, inverse = np.unique(rho, return_inverse=True)
    per_level = np.zeros(len(levels))
    np.maximum.at(per_level, inverse, magnitude)
    suffix = np.maximum.accumulate(per_level[::-1])[::-1]
    return np.asarray(suffix[inverse].reshape(np.shape(values)))


def maximal_convolution_check(
    f: SampledField,
    phi: SampledField,
    radii: "Optional[Sequence[float]]" = None,
    tol: float = 1e-2,
) -> VerificationReport:
    """
    |f * phi| <= ||psi||_1 Mf at every node, psi the radially decreasing majorant
    of phi. psi is bounded by the staircase sum_k (v_k - v_{k+1}) 1_{B(0, R_k)},
    v_k = psi(R_{k-1}), whose integral is what the bound uses.
    """
    grid = f.grid
    radii = sorted(default_radii(grid) if radii is None else radii)
    rho = gauge_array(*grid.mesh())
    magnitude = np.abs(phi.values)
    peak = float(np.max(magnitude))
    majorant = radial_majorant(magnitude, rho)
    edges = [0.0] + list(radii)
    levels = np.array([float(np.max(majorant[rho >= edge], initial=0.0)) for edge in edges])
    tail = levels[-1] / peak if peak > 0 else 0.0
    if tail > tol:
        raise TruncationError(
            f"majorant of phi is {tail:.3g} of its peak beyond R = {radii[-1]:.3g}; "
            "it is not integrable on the grid range"
        )
    steps = levels[:-1] - np.append(levels[1:-1], 0.0)
    volumes = np.array([ball_volume(grid, radius) for radius in radii])
    psi_norm = float(steps @ volumes)
    lhs = np.abs(convolve(f, phi, method="fourier").values)
    rhs = psi_norm * maximal_function(f, radii).values.real
    scale = float(np.max(rhs))
    slack = float(np.min(rhs - lhs)) / scale if scale > 0 else 0.0
    return VerificationReport.create(
        "maximal_convolution",
        {"radii": len(radii), "grid": list(grid.shape)},
        {
            "psi_norm": psi_norm,
            "phi_norm": lp_norm(phi, 1),
            "slack": slack,
            "majorant_tail": tail,
        },
        tol=tol,
        passed=slack >= -tol,
        fitted_C=psi_norm,
    )


def maximal_bound(p: float, n_hom: int) -> float:
    """
    Hardy-Littlewood bound ||Mf||_p <= 2 (3^N p/(p-1))^{1/p} ||f||_p: the Vitali
    covering gives the weak (1,1) constant 3^N and Marcinkiewicz interpolates
    against the trivial L^inf bound.
    """
    if not p > 1:
        raise DomainError(f"the maximal function is bounded on L^p only for p > 1, got {p}")
    if math.isinf(p):
        return 1.0
    return 2 * (3**n_hom * p / (p - 1)) ** (1 / p)


def maximal_lp_check(
    fields: "Sequence[SampledField]",
    p: float,
    radii: "Optional[Sequence[float]]" = None,
) -> VerificationReport:
    if not fields:
        raise DomainError("maximal L^p check of an empty family")
    bound = maximal_bound(p, homogeneous_dimension(1))
    ratios = [lp_norm(maximal_function(f, radii), p) / lp_norm(f, p) for f in fields]
    constant = max(ratios)
    return VerificationReport.create(
        "maximal_lp",
        {"p": p, "members": len(fields)},
        {"max_ratio": constant, "min_ratio": min(ratios), "bound": bound},
        tol=bound,
        passed=constant <= bound,
        fitted_C=constant,
    )


def eigen_error(grid: GridSpec, m: int = 0, k: int = 1, stencil: str = "compact") -> float:
    """
    Relative L^2 error of the finite-difference sub-Laplacian on the mode
    e^{-i lambda s} L_m(2|lambda||z|^2) e^{-|lambda||z|^2}, lambda = 2 pi k / l_s,
    against the eigenvalue -4|lambda|(2m+1).
    """
    lam = 2 * math.pi * k / grid.l_s
    mu = 4 * abs(lam) * (2 * m + 1)

    def mode(x: "NDArray[np.float64]", y: "NDArray[np.float64]", s: "NDArray[np.float64]") -> "NDArray[np.complex128]":
        y2 = 2 * abs(lam) * (x * x + y * y)
        return np.exp(-1j * lam * s) * laguerre(m, 0, y2) * np.exp(-y2 / 2)

    f = SampledField.from_function(grid, mode)
    residual = f.with_values(sublaplacian_fd(f, stencil).values + mu * f.values)
    return lp_norm(residual, 2) / (mu * lp_norm(f, 2))


def _sampled_gaussian(grid: GridSpec, a: float = 0.5, b: float = 0.25) -> SampledField:
    return SampledField.from_function(grid, lambda x, y, s: np.exp(-a * (x * x + y * y) - b * s * s))


def spectral_grid(config: "RunConfig") -> SpectralGrid:
    return SpectralGrid.build(
        config.d,
        config.m_max,
        config.lambda_min,
        config.lambda_max,
        config.panel_order,
        config.panel_subdivisions,
    )


def physical_grid(config: "RunConfig") -> GridSpec:
    return GridSpec.build(config.n_x, config.n_y, config.n_s, config.l_x, config.l_y, config.l_s)


def _timed(name: str, check: "Callable[[], VerificationReport]") -> VerificationReport:
    start = time.perf_counter()
    try:
        report = check()
    except HeisencalcError as e:
        logger.warning("Check %s failed with %s: %s", name, type(e).__name__, e)
        report = VerificationReport.create(
            name, {"error": f"{type(e).__name__}: {e}"}, {}, tol=math.nan, passed=False
        )
    return report._replace(runtime=time.perf_counter() - start)


def _timed_many(
    name: str, check: "Callable[[], List[VerificationReport]]"
) -> "List[VerificationReport]":
    start = time.perf_counter()
    try:
        reports = check()
    except HeisencalcError as e:
        logger.warning("Check %s failed with %s: %s", name, type(e).__name__, e)
        reports = [
            VerificationReport.create(
                name, {"error": f"{type(e).__name__}: {e}"}, {}, tol=math.nan, passed=False
            )
        ]
    elapsed = (time.perf_counter() - start) / len(reports)
    return [report._replace(runtime=elapsed) for report in reports]


def _partition_suite(config: "RunConfig") -> "List[VerificationReport]":
    def partition() -> VerificationReport:
        part = build_partition(0, (config.j_min, config.j_max), spectral_grid(config))
        tau = audit_nodes()
        telescoped, homogeneous = part.residuals(tau)
        overlap = 0.0
        for j in range(-3, 4):
            for k in range(j + 2, j + 5):
                product = part.ring(np.ldexp(tau, -2 * j)) * part.ring(np.ldexp(tau, -2 * k))
                overlap = max(overlap, float(np.max(np.abs(product))))
        plateau = np.geomspace(*PLATEAU, 1001)
        # Delta_j + Delta_{j+1} on 4^j [4, 16], taken at j = 0
        pair = part.ring(plateau) + part.ring(plateau / 4)
        plateau_error = float(np.max(np.abs(pair - 1)))
        residual = max(telescoped, homogeneous, plateau_error)
        return VerificationReport.create(
            "partition",
            {"nodes": len(tau), "smoothness": part.smoothness},
            {
                "telescoped": telescoped,
                "homogeneous": homogeneous,
                "plateau": plateau_error,
                "overlap": overlap,
            },
            tol=1e-12,
            passed=residual <= 1e-12 and overlap == 0.0,
        )

    return [_timed("partition", partition)]


_GAUSSIAN_FAMILY = (
    (1.0, 1.0),
    (0.5, 0.5),
    (2.0, 1.0),
    (1.0, 2.0),
    (1.0, 0.25),
    (0.25, 1.0),
    (2.0, 2.0),
    (4.0, 1.0),
    (1.0, 4.0),
    (0.5, 2.0),
)


def _gaussian_quadrature(d: int, a: float, b: float, m_hi: int) -> RadialQuadrature:
    # exp(-40) is below every tolerance; e^{-lambda^2/4b} likewise beyond lambda = 2 sqrt(40 b)
    return RadialQuadrature.fit(
        d, math.sqrt(40 / a), math.sqrt(40 / b), 2 * math.sqrt(40 * b), m_hi
    )


def plancherel_check(
    grid: SpectralGrid, a: float, b: float, tol: float = PLANCHEREL_TOL
) -> VerificationReport:
    """
    Plancherel norm of the computed transform of exp(-a|z|^2 - b s^2) against its
    closed-form L^2 norm. The mass the grid cannot hold (rows above m_max and
    |lambda| outside the grid range) is added from the closed form before comparing.
    """
    quad = _gaussian_quadrature(grid.d, a, b, grid.m_max)
    profile = forward_transform(gaussian_function(quad, a, b), grid)
    exact = gaussian_lp_norm(grid.d, a, b, 2)
    closed = gaussian_profile(grid, a, b)
    tail = gaussian_plancherel_tail(grid, a, b)
    computed = plancherel_norm(profile)
    error = abs(math.sqrt(computed**2 + tail) - exact) / exact
    uncorrected = abs(computed - exact) / exact
    entry_error = float(np.max(np.abs(profile.values - closed.values)) / np.max(np.abs(closed.values)))
    return VerificationReport.create(
        "plancherel",
        {"a": a, "b": b, "d": grid.d, "m_max": grid.m_max},
        {"error": error, "uncorrected": uncorrected, "tail": tail, "entry_error": entry_error},
        tol=tol,
        passed=error <= tol,
    )


def _plancherel_suite(config: "RunConfig") -> "List[VerificationReport]":
    grid = spectral_grid(config)
    family = _GAUSSIAN_FAMILY[:3] if config.quick else _GAUSSIAN_FAMILY
    reports = [_timed("plancherel", functools.partial(plancherel_check, grid, a, b)) for a, b in family]
    quad = _gaussian_quadrature(grid.d, 1.0, 1.0, grid.m_max)
    reports.append(
        _timed("lemma41", lambda: check_lemma41(gaussian_function(quad, 1.0, 1.0), grid))
    )
    reports.append(_timed("summability", lambda: summability(gaussian_profile(grid), 2.5)))
    return reports


def roundtrip_check(profile: "RadialProfile", tol: float = ROUNDTRIP_TOL) -> VerificationReport:
    """
    forward(inverse(R)) = R on the support of a band-limited profile.
    """
    f = inverse_transform(profile)
    back = forward_transform(f, profile.grid)
    support = profile.values != 0
    scale = float(np.max(np.abs(profile.values)))
    error = float(np.max(np.abs(back.values - profile.values)[support])) / scale
    outside = float(np.max(np.abs(back.values[~support]), initial=0.0)) / scale
    return VerificationReport.create(
        "roundtrip",
        {"support": int(np.count_nonzero(support))},
        {"error": error, "outside": outside},
        tol=tol,
        passed=error <= tol,
    )


def _seeded_modes(grid: SpectralGrid, seed: int) -> "RadialProfile":
    rng = np.random.default_rng(seed)
    low, high = rng.uniform(0.5, 1.5, size=2)
    return one_mode(grid, 0, 1.0).scaled(low) + one_mode(grid, min(1, grid.m_max), 1.0).scaled(high)


def _roundtrip_suite(config: "RunConfig") -> "List[VerificationReport]":
    grid = spectral_grid(config)
    # log-normal bumps decay in s inside the window the lambda panels resolve
    builders = [
        lambda: one_mode(grid, 0, 1.0),
        lambda: one_mode(grid, min(2, grid.m_max), 0.5),
        lambda: one_mode(grid, min(1, grid.m_max), 2.0),
    ]
    if config.seed is not None:
        builders.append(lambda: _seeded_modes(grid, config.seed))
    if config.quick:
        builders = builders[:2]
    return [_timed("roundtrip", lambda build=build: roundtrip_check(build())) for build in builders]


EIGEN_EXTENTS = (12.0, 12.0, 8 * math.pi)
EIGEN_BASE = (33, 33, 32)
EIGEN_FINE = (65, 65, 62)


def eigen_check(quick: bool = False, m: int = 0, k: int = 1) -> VerificationReport:
    """
    Finite-difference eigenrelation at lambda = 1/4 and its O(h^2) convergence.
    """
    base = eigen_error(GridSpec.build(*EIGEN_BASE, *EIGEN_EXTENTS), m, k)
    measured = {"error": base}
    passed = base <= EIGEN_TOL
    if not quick:
        fine = eigen_error(GridSpec.build(*EIGEN_FINE, *EIGEN_EXTENTS), m, k)
        measured.update({"error_refined": fine, "convergence": base / fine})
        passed = passed and base / fine >= EIGEN_CONVERGENCE
    return VerificationReport.create(
        "eigen", {"m": m, "k": k, "lambda": 2 * math.pi * k / EIGEN_EXTENTS[2]}, measured, tol=EIGEN_TOL, passed=passed
    )


def _eigen_suite(config: "RunConfig") -> "List[VerificationReport]":
    return [_timed("eigen", lambda: eigen_check(config.quick))]


def semigroup_check(profile: "RadialProfile", t: float = 0.25, u: float = 0.5) -> VerificationReport:
    """
    e^{t Delta} e^{u Delta} = e^{(t+u) Delta} on a profile.
    """
    composed = heat_apply(heat_apply(profile, t), u)
    direct = heat_apply(profile, t + u)
    error = plancherel_norm(composed.with_values(composed.values - direct.values)) / plancherel_norm(direct)
    return VerificationReport.create(
        "semigroup", {"t": t, "u": u}, {"error": error}, tol=1e-12, passed=error <= 1e-12
    )


def kernel_checks(
    cache: "Optional[KernelCache]",
    tol: float = 1e-5,
    check_tol: float = KERNEL_TOL,
    degree: int = 3,
) -> "List[VerificationReport]":
    """
    Mass, positivity and self-similarity of the heat kernel.
    """
    # mass of h on Gauss panels; h decays like e^{-r^2/4} in r and e^{-pi|s|/4} in s
    quad = RadialQuadrature.build(1, 8.0, 16.0, 8, 16, 8)
    r_nodes = quad.r_nodes
    s_half = quad.s_nodes[quad.s_nodes > 0]
    mass_table = kernel_eval(r_nodes, s_half, 1.0, tol)
    s_weights = quad.s_weights[quad.s_nodes > 0]
    mass = 2 * float(quad.r_weights @ mass_table.values @ s_weights)
    table = cached_kernel_eval(cache, np.linspace(0, 6, 97), np.linspace(0, 12, 193), tol)
    r_q = np.linspace(0, 4, 33)
    s_q = np.linspace(0, 6, 49)
    direct = kernel_eval(r_q, s_q, 0.5, tol)
    scaled = kernel_scaled_array(0.5, r_q[:, None], s_q[None, :], table, degree)
    scaling_error = float(np.max(np.abs(scaled - direct.values))) / direct.peak
    negative = float(-min(0.0, float(np.min(table.values)))) / table.peak
    return [
        VerificationReport.create(
            "kernel_mass", {"tol": tol}, {"defect": abs(mass - 1)}, tol=check_tol, passed=abs(mass - 1) <= check_tol
        ),
        VerificationReport.create(
            "kernel_positivity", {"tol": tol}, {"negative": negative}, tol=1e-6, passed=negative <= 1e-6
        ),
        VerificationReport.create(
            "kernel_scaling",
            {"t": 0.5, "degree": degree},
            {"error": scaling_error},
            tol=check_tol,
            passed=scaling_error <= check_tol,
        ),
    ]


def _semigroup_suite(config: "RunConfig") -> "List[VerificationReport]":
    grid = spectral_grid(config)
    cache = KernelCache.at(config.cache_dir) if config.cache_dir else None
    reports = [_timed("semigroup", lambda: semigroup_check(localized_ring(grid, 0)))]
    reports.extend(_timed_many("kernel", lambda: kernel_checks(cache, config.kernel_tol, config.tol)))
    return reports


def pde_check(grid: GridSpec, t: float) -> VerificationReport:
    """
    Explicit Euler heat evolution against the convolution with h_t.
    """
    u0 = _sampled_gaussian(grid)
    fd = fd_heat_oracle(u0, t)
    exact = heat_flow(u0, t)
    error = lp_norm(fd.with_values(fd.values - exact.values), 2) / lp_norm(exact, 2)
    return VerificationReport.create(
        "pde", {"t": t, "grid": list(grid.shape)}, {"error": error}, tol=PDE_TOL, passed=error <= PDE_TOL
    )


def _pde_suite(config: "RunConfig") -> "List[VerificationReport]":
    grid = physical_grid(config)
    times = (0.05,) if config.quick else (0.05, 0.1)
    return [_timed("pde", functools.partial(pde_check, grid, t)) for t in times]


def _ring_members(grid: SpectralGrid, seed: "Optional[int]") -> "Callable[[int], List[RadialProfile]]":
    def members(j: int) -> "List[RadialProfile]":
        found = [localized_ring(grid, j)]
        if seed is not None:
            found.append(localized_ring(grid, j, seed=seed))
        return found

    return members


def _bernstein_suite(config: "RunConfig") -> "List[VerificationReport]":
    grid = spectral_grid(config)
    part = build_partition(0, (config.j_min, config.j_max), grid)
    members = _ring_members(grid, config.seed)
    exponents = (2.0,) if config.quick else (2.0, math.inf)
    return [
        _timed(
            "bernstein",
            functools.partial(
                bernstein_check, members, list(config.j_range), rho, p, part, config.bernstein_slack
            ),
        )
        for rho in (1.0, 2.0)
        for p in exponents
    ]


def _decay_suite(config: "RunConfig") -> "List[VerificationReport]":
    grid = spectral_grid(config)
    part = build_partition(0, (config.j_min, config.j_max), grid)
    exponents = (2.0,) if config.quick else (2.0, math.inf)
    reports = []
    for p in exponents:
        reports.extend(
            _timed_many(
                "decay",
                functools.partial(
                    decay_reports,
                    list(config.j_range),
                    (1.0, 4.0),
                    p,
                    part,
                    grid,
                    uniformity_tol=config.decay_uniformity,
                ),
            )
        )
    return reports


_HEAT_TRIPLES = ((0.5, 2.0, 2.0), (1.0, 2.0, math.inf), (0.5, math.inf, math.inf))


def _besov_suite(config: "RunConfig") -> "List[VerificationReport]":
    grid = spectral_grid(config)
    part = build_partition(0, (config.j_min, config.j_max), grid)
    ring = localized_ring(grid, 1)
    family_j = range(0, 2) if config.quick else range(-1, 4)
    dilations = range(-1, 2) if config.quick else DEFAULT_DILATIONS
    family = [localized_ring(grid, j) for j in family_j]
    reports = [
        _timed(
            "uniform_boundedness",
            functools.partial(
                uniform_boundedness,
                [ring, one_mode(grid)],
                list(config.j_range),
                2.0,
                part,
            ),
        ),
        _timed("sobolev_besov", functools.partial(sobolev_besov_ratio, ring, 1.0, part)),
        _timed("besov_scaling", functools.partial(besov_scaling, ring, BesovParams.create(0.5, 2, 2), part)),
    ]
    for s, p, r in _HEAT_TRIPLES:
        if config.quick and math.isinf(p):
            continue
        dilated = [v for u in family for v in _dilates(u, dilations)]
        mu_lo, mu_hi = spectrum_range(dilated)
        tgrid = TGrid.for_spectrum(mu_lo, mu_hi, s, r, blocks=(part.j_min, part.j_max))
        reports.append(_timed("tgrid_self_test", functools.partial(tgrid_self_test, ring, 1, s, part, tgrid)))
        reports.append(
            _timed(
                "heat_characterization",
                functools.partial(
                    heat_characterization,
                    family,
                    s,
                    p,
                    r,
                    part,
                    tgrid,
                    dilations,
                    config.dilation_drift,
                ),
            )
        )
    return reports


def _sobolev_suite(config: "RunConfig") -> "List[VerificationReport]":
    grid = spectral_grid(config)
    base = localized_ring(grid, 0)
    family = [base, one_mode(grid, min(1, grid.m_max)), two_bump(base)]
    if config.seed is not None:
        family.append(localized_ring(grid, 0, seed=config.seed))
    dilations = (0, 1) if config.quick else (-1, 0, 1)
    s, p = 0.5, 2.0
    field = _sampled_gaussian(physical_grid(config))
    n_hom = homogeneous_dimension(1)
    return [
        _timed(
            "refined_sobolev",
            functools.partial(
                refined_sobolev_check,
                family,
                s,
                p,
                None,
                dilations,
                config.sobolev_drift,
            ),
        ),
        _timed("two_bump_gain", functools.partial(two_bump_gain, base, s, p)),
        _timed(
            "embedding",
            functools.partial(
                embedding_check, family[:2], p, None, dilations, config.sobolev_drift
            ),
        ),
        _timed(
            "translation",
            functools.partial(
                translation_check,
                field,
                (2, -1, 0.5),
                _exponent_check(s, p, n_hom),
                (n_hom / p - s) / 2,
                tol=config.sobolev_drift,
            ),
        ),
    ]


def heat_kernel_field(grid: GridSpec, t: float) -> SampledField:
    """
    h_t on a d = 1 grid, periodized in s.
    """
    return SampledField.create(grid, s_synthesize(heat_kernel_modes(grid, t), grid).real)


def ball_ratio_check(grid: GridSpec, radius: float, tol: float = 0.1) -> VerificationReport:
    """
    m(B(0, 2R)) / m(B(0, R)) against 2^N.
    """
    ratio = ball_volume(grid, 2 * radius) / ball_volume(grid, radius)
    expected = 2.0 ** homogeneous_dimension(grid.d)
    error = abs(ratio - expected) / expected
    return VerificationReport.create(
        "ball_volume", {"radius": radius}, {"ratio": ratio, "error": error}, tol=tol, passed=error <= tol
    )


def _maximal_suite(config: "RunConfig") -> "List[VerificationReport]":
    grid = physical_grid(config)
    f = _sampled_gaussian(grid)
    spike = np.zeros(grid.shape)
    spike[grid.n_x // 2, grid.n_y // 2, grid.n_s // 2] = 1.0 / grid.cell_volume
    fields = [f, SampledField.create(grid, spike)]
    radius = min(grid.l_x, grid.l_y) / 4
    reports = [
        _timed("ball_volume", functools.partial(ball_ratio_check, grid, radius)),
        _timed(
            "maximal_convolution",
            lambda: maximal_convolution_check(f, heat_kernel_field(grid, 0.5)),
        ),
    ]
    exponents = (2.0,) if config.quick else (2.0, 4.0)
    reports.extend(_timed("maximal_lp", functools.partial(maximal_lp_check, fields, p)) for p in exponents)
    return reports


class Suites(enum.Enum):
    # partial keeps each suite runner an enum member
    partition = functools.partial(_partition_suite)
    plancherel = functools.partial(_plancherel_suite)
    roundtrip = functools.partial(_roundtrip_suite)
    eigen = functools.partial(_eigen_suite)
    semigroup = functools.partial(_semigroup_suite)
    pde = functools.partial(_pde_suite)
    bernstein = functools.partial(_bernstein_suite)
    decay = functools.partial(_decay_suite)
    besov = functools.partial(_besov_suite)
    sobolev = functools.partial(_sobolev_suite)
    maximal = functools.partial(_maximal_suite)

    @staticmethod
    def names() -> "List[str]":
        return [x.name for x in Suites]


def parse_suites(selection: str) -> "List[str]":
    """
    Comma separated suite names; `all` selects every suite.
    """
    names: "List[str]" = []
    for name in (part.strip() for part in selection.split(",")):
        if not name:
            continue
        if name == "all":
            candidates = Suites.names()
        elif name in Suites.names():
            candidates = [name]
        else:
            raise ConfigError(f"unknown suite {name!r}, expected 'all' or one of {Suites.names()}")
        names.extend(c for c in candidates if c not in names)
    if not names:
        raise ConfigError("the suite selection is empty")
    return names


def run_suite(name: str, config: "RunConfig") -> "List[VerificationReport]":
    logger.info("Running suite %s", name)
    start = time.perf_counter()
    reports: "List[VerificationReport]" = Suites[name].value(config)
    logger.info(
        "Suite %s finished in %.1fs, %s/%s checks passed",
        name,
        time.perf_counter() - start,
        sum(r.passed for r in reports),
        len(reports),
    )
    return reports


def run_suites(config: "RunConfig") -> "List[VerificationReport]":
    """
    Run the selected suites on up to `config.threads` workers; reports come back
    in suite order.
    """
    names = parse_suites(config.suites)
    if config.threads == 1 or len(names) == 1:
        results = [run_suite(name, config) for name in names]
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(lambda name: run_suite(name, config), names))
    return [report for reports in results for report in reports]
