"""
Gauss-Legendre panel rules.

Every rule in heisencalc is a concatenation of fixed-order Gauss-Legendre
panels. Dyadic rules are built so that multiplying all nodes by a power of two
maps octaves onto octaves bit-for-bit, which keeps dilation checks exact.
"""
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from heisencalc.errors import CapExceededError, DomainError

if TYPE_CHECKING:
    from typing import Sequence

    from numpy.typing import NDArray

MAX_ORDER = 128


class Rule(NamedTuple):
    nodes: "NDArray[np.float64]"
    weights: "NDArray[np.float64]"


def gauss_legendre(a: float, b: float, order: int) -> Rule:
    """
    Gauss-Legendre rule of the given order on [a, b].
    """
    if order < 1 or order > MAX_ORDER:
        raise CapExceededError(f"panel order must be in [1, {MAX_ORDER}], got {order}")
    y, w = leggauss(order)
    # Convert from interval [-1, 1] to [a, b]
    nodes = 0.5 * (y + 1) * (b - a) + a
    weights = (b - a) / 2 * w
    return Rule(nodes, weights)


def panel_rule(edges: "Sequence[float]", order: int) -> Rule:
    """
    Concatenate Gauss-Legendre panels of equal order over consecutive edges.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise DomainError("panel edges must be a strictly increasing sequence")
    panels = [gauss_legendre(a, b, order) for a, b in zip(edges[:-1], edges[1:])]
    return Rule(
        np.concatenate([p.nodes for p in panels]),
        np.concatenate([p.weights for p in panels]),
    )


def dyadic_rule(lo: float, octaves: int, order: int, subdivisions: int = 1) -> Rule:
    """
    Rule on [lo, lo * 2**octaves] with `subdivisions` equal panels per octave.

    Nodes of octave k are ldexp(node of octave 0, k), so scaling the rule by
    4**n shifts it by 2n octaves without rounding.
    """
    if lo <= 0:
        raise DomainError(f"lower end of a dyadic rule must be positive, got {lo}")
    if octaves < 1 or subdivisions < 1:
        raise DomainError("a dyadic rule needs at least one octave and one panel")
    base = panel_rule(1.0 + np.arange(subdivisions + 1) / subdivisions, order)
    first_nodes = lo * base.nodes
    first_weights = lo * base.weights
    k = np.repeat(np.arange(octaves), len(first_nodes))
    return Rule(
        np.ldexp(np.tile(first_nodes, octaves), k),
        np.ldexp(np.tile(first_weights, octaves), k),
    )


def log_rule(lo: float, ratio_log2: int, periods: int, order: int) -> Rule:
    """
    Rule for the measure dt/t on [lo, lo * 2**(ratio_log2 * periods)].

    Each period spans a factor 2**ratio_log2 and carries one Gauss-Legendre panel
    in log t; weights are those of dt/t, i.e. of d(log t).
    """
    if lo <= 0:
        raise DomainError(f"lower end of a logarithmic rule must be positive, got {lo}")
    u = gauss_legendre(0.0, ratio_log2 * np.log(2.0), order)
    first_nodes = lo * np.exp(u.nodes)
    k = np.repeat(np.arange(periods) * ratio_log2, order)
    return Rule(
        np.ldexp(np.tile(first_nodes, periods), k),
        np.tile(u.weights, periods),
    )
