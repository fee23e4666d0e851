"""
Continuum references: Gaussian free field correlators, the variance
constant σ², scale separation and the regularity envelope.
"""

import math
from collections.abc import Iterator, Sequence

from ..transfer.params import ModelParams
from ..utils.errors import InvariantViolationError
from ..utils.logger import get_logger
from .correlation import PointQuad

logger = get_logger("sixvlab.gff")

Point = tuple[float, float]


def pairings(items: Sequence[int]) -> Iterator[list[tuple[int, int]]]:
    """All perfect matchings of ``items`` (none when the count is odd)."""
    items = list(items)
    if not items:
        yield []
        return
    if len(items) % 2:
        return
    first, rest = items[0], items[1:]
    for i, partner in enumerate(rest):
        for tail in pairings(rest[:i] + rest[i + 1 :]):
            yield [(first, partner), *tail]


def green_function(x: Point, y: Point) -> float:
    """
    Full-plane Green function G(x, y) = -(1/2π) log|y - x|.

    Raises:
        ValueError: If x == y
    """
    d = math.dist(x, y)
    if d == 0:
        raise ValueError(f"Green function is singular at coincident points {x}")
    return -math.log(d) / (2 * math.pi)


def sigma_squared(params: ModelParams | float) -> float:
    """
    Variance constant σ² = 2/arccos(Δ) = 1/arcsin(c/2).

    Both closed forms are evaluated and compared.

    Args:
        params: Model parameters or the weight c itself

    Returns:
        σ²

    Raises:
        ValueError: If c is outside (0, 2]
        InvariantViolationError: If the two forms disagree
    """
    c = params.c if isinstance(params, ModelParams) else float(params)
    if not 0 < c <= 2:
        raise ValueError(f"σ² is defined for 0 < c <= 2, got c={c}")
    delta = 1.0 - c * c / 2.0
    via_delta = 2.0 / math.acos(delta)
    via_c = 1.0 / math.asin(c / 2.0)
    # arccos loses digits as Δ -> 1
    tol = 1e-14 if c >= 1 else 1e-10
    if abs(via_delta - via_c) > tol * via_c:
        raise InvariantViolationError(
            f"σ² closed forms disagree at c={c}: {via_delta!r} vs {via_c!r}"
        )
    return via_c


def gff_k_point(quad: PointQuad, sigma2: float) -> float:
    """
    k-point function of the free field with variance σ²,

        σ^k Σ_{a, π} (-1)^{#unprimed a_i} Π_{ij∈π} G(a_i, a_j),

    where a_i ranges over {u_i, u_i'} and π over pairings of the k pairs.

    Raises:
        ValueError: If points of two different pairs coincide
    """
    pairs = quad.pairs
    k = len(pairs)
    for i in range(k):
        for j in range(i + 1, k):
            if set(pairs[i]) & set(pairs[j]):
                raise ValueError(f"Pairs {i} and {j} share a point; G is singular there")
    if k % 2:
        return 0.0

    matchings = list(pairings(range(k)))
    total = 0.0
    for choice in range(1 << k):
        # bit i set: a_i = u_i' (sign +), else a_i = u_i (sign -)
        a = [pairs[i][1] if (choice >> i) & 1 else pairs[i][0] for i in range(k)]
        sign = (-1) ** (k - choice.bit_count())
        for pi in matchings:
            total += sign * math.prod(green_function(a[i], a[j]) for i, j in pi)
    return sigma2 ** (k / 2) * total


def scale_separation(
    pair1: tuple[Point, Point], pair2: tuple[Point, Point]
) -> tuple[float, float]:
    """
    Scale separation S and its discrete variant S'.

    S = log(dist / m) and S' = log((1 ∨ dist) / m), with dist the distance
    between the two sets and m the shorter pair length.

    Raises:
        ValueError: If either pair has zero length
    """
    m = min(math.dist(*pair1), math.dist(*pair2))
    if m == 0:
        raise ValueError("Scale separation needs two pairs of distinct points")
    dist = min(math.dist(p, q) for p in pair1 for q in pair2)
    s = math.log(dist / m) if dist > 0 else -math.inf
    s_prime = math.log(max(1.0, dist) / m)
    return s, s_prime


def regularity_envelope(
    quad: PointQuad, k: int | None = None, C_k: float = 10.0, alpha_k: float = 0.1
) -> float:
    """
    Right-hand side of the regularity bound for a quad of k pairs.

    Each matched pair ij contributes e^{-α_k S} when S >= 20k², and
    1 ∨ (-S') otherwise.

    Args:
        quad: Points u_1, u_1', ..., u_k, u_k'
        k: Number of pairs (taken from the quad when omitted)
        C_k: Probe prefactor
        alpha_k: Probe decay exponent

    Returns:
        Envelope value (0 for an odd number of pairs)
    """
    pairs = quad.pairs
    k = len(pairs) if k is None else k
    if k != len(pairs):
        raise ValueError(f"Quad has {len(pairs)} pairs, expected {k}")
    threshold = 20 * k * k

    def factor(i: int, j: int) -> float:
        s, s_prime = scale_separation(pairs[i], pairs[j])
        if s >= threshold:
            return math.exp(-alpha_k * s)
        return max(1.0, -s_prime)

    total = sum(math.prod(factor(i, j) for i, j in pi) for pi in pairings(range(k)))
    return C_k * total
