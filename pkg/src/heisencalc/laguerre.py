"""
Generalized Laguerre polynomials L_m^(p) and the weighted functions L_m^(p)(y) e^(-y/2).

The three-term recurrence is the production path. The alternating sum
definition is kept as an oracle for tests only, it cancels catastrophically for
large arguments.
"""
import functools
import logging
import math
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from heisencalc.errors import CapExceededError, DomainError

if TYPE_CHECKING:
    from typing import Iterator, Union

    from numpy.typing import ArrayLike, NDArray

    FloatOrArray = Union[float, "NDArray[np.float64]"]

logger = logging.getLogger(__name__)

DEFAULT_M_CAP = 512
DEFAULT_P_CAP = 64

# rescale the carried pair once it leaves [1e-100, 1e100]
_RESCALE_ABOVE = 1e100


class LaguerreRequest(NamedTuple):
    m: int
    p: int
    t: "ArrayLike"

    def validated(
        self, m_cap: int = DEFAULT_M_CAP, p_cap: int = DEFAULT_P_CAP
    ) -> "NDArray[np.float64]":
        """
        Check degree, order and argument; return the argument as a float array.
        """
        if self.m < 0 or self.p < 0:
            raise DomainError(f"degree and order must be nonnegative, got m={self.m}, p={self.p}")
        if self.m > m_cap:
            raise CapExceededError(f"Laguerre degree {self.m} exceeds the cap {m_cap}")
        if self.p > p_cap:
            raise CapExceededError(f"Laguerre order {self.p} exceeds the cap {p_cap}")
        t = np.asarray(self.t, dtype=float)
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise DomainError("Laguerre arguments must be finite and nonnegative")
        return t


def _scalar_or_array(value: "NDArray[np.float64]") -> "FloatOrArray":
    return float(value) if value.ndim == 0 else value


def laguerre(
    m: int, p: int, t: "ArrayLike", m_cap: int = DEFAULT_M_CAP, p_cap: int = DEFAULT_P_CAP
) -> "FloatOrArray":
    """
    Value of L_m^(p)(t) by the recurrence
    (k+1) L_{k+1} = (2k+p+1-t) L_k - (k+p) L_{k-1}, L_0 = 1, L_1 = 1+p-t.
    """
    t = LaguerreRequest(m, p, t).validated(m_cap, p_cap)
    prev = np.ones_like(t)
    if m == 0:
        return _scalar_or_array(prev)
    cur = 1.0 + p - t
    for k in range(1, m):
        prev, cur = cur, ((2 * k + p + 1 - t) * cur - (k + p) * prev) / (k + 1)
    return _scalar_or_array(cur)


def laguerre_sum(m: int, p: int, t: "ArrayLike") -> "FloatOrArray":
    """
    The defining alternating sum: sum_k (-1)^k C(m+p, m-k) t^k / k!.
    """
    t = LaguerreRequest(m, p, t).validated(m_cap=10**6, p_cap=10**6)
    total = np.zeros_like(t)
    for k in range(m + 1):
        total = total + (-1) ** k * math.comb(m + p, m - k) * t**k / math.factorial(k)
    return _scalar_or_array(total)


def iter_weighted_laguerre(p: int, y: "ArrayLike", m_max: int) -> "Iterator[NDArray[np.float64]]":
    """
    Yield L_m^(p)(y) e^(-y/2) for m = 0..m_max, elementwise over y.

    The recurrence carries the pair (L_{m-1}, L_m) divided by exp(scale); the
    scale absorbs growth so that neither the polynomial nor e^(-y/2) over- or
    underflows before they are combined.
    """
    y = np.asarray(y, dtype=float)
    prev = np.ones_like(y)
    scale = np.zeros_like(y)
    yield np.exp(-y / 2)
    if m_max == 0:
        return
    cur = 1.0 + p - y
    yield cur * np.exp(-y / 2)
    for k in range(1, m_max):
        prev, cur = cur, ((2 * k + p + 1 - y) * cur - (k + p) * prev) / (k + 1)
        big = np.maximum(np.abs(prev), np.abs(cur))
        rescale = big > _RESCALE_ABOVE
        if np.any(rescale):
            factor = np.where(rescale, big, 1.0)
            prev = prev / factor
            cur = cur / factor
            scale = scale + np.log(factor)
        yield cur * np.exp(scale - y / 2)


def weighted_laguerre(
    m: int, p: int, y: "ArrayLike", m_cap: int = DEFAULT_M_CAP, p_cap: int = DEFAULT_P_CAP
) -> "FloatOrArray":
    """
    Value of L_m^(p)(y) e^(-y/2), evaluated with the rescaled recurrence.
    """
    y = LaguerreRequest(m, p, y).validated(m_cap, p_cap)
    value = y
    for value in iter_weighted_laguerre(p, y, m):
        pass
    return _scalar_or_array(value)


def weighted_laguerre_table(
    m_max: int, p: int, y: "ArrayLike", m_cap: int = DEFAULT_M_CAP, p_cap: int = DEFAULT_P_CAP
) -> "NDArray[np.float64]":
    """
    Stack of L_m^(p)(y) e^(-y/2) for m = 0..m_max, with m on the first axis.
    """
    y = LaguerreRequest(m_max, p, y).validated(m_cap, p_cap)
    return np.stack(list(iter_weighted_laguerre(p, y, m_max)))


@functools.lru_cache(maxsize=None)
def growth_constant(p: int, m_max: int = DEFAULT_M_CAP, y_max: float = 1e3) -> float:
    """
    Empirical constant C_p of |L_m^(p)(y) e^(-y/2)| <= C_p (m+1)^p.

    The supremum over m <= m_max and a dense sample of y in [0, y_max] is taken
    once per (p, m_max, y_max) and doubled as a safety factor. The sample
    contains y = 0, where m = 0 gives 1, so C_p >= 2; every degree satisfies
    |L_m^(p)(y) e^(-y/2)| <= binom(m+p, m) <= (m+1)^p, and the constant holds
    beyond m_max as well.
    """
    y = np.concatenate([np.linspace(0.0, 10.0, 2001), np.geomspace(10.0, y_max, 4001)])
    sup = 0.0
    for m, values in enumerate(iter_weighted_laguerre(p, y, m_max)):
        sup = max(sup, float(np.max(np.abs(values))) / (m + 1) ** p)
    logger.debug("Calibrated Laguerre growth constant C_%s = %.6g", p, 2 * sup)
    return 2 * sup
