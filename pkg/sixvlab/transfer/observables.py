"""
Height observables on the cylinder as operator chains.

Faces are integer pairs (x, y) with y taken modulo L. Face (x, y) has its
lower-left corner at vertex (x, y); the column state x holds the horizontal
arrows κ^x_j on the lower edges of faces (x, j) and the vertical line k
holds the arrows α^k_j on the left edges of faces (k, j). Crossing an arrow,
the face on its left is higher by one, which gives

    h(x, y+1) - h(x, y) = +κ^x_{y+1}
    h(x+1, y) - h(x, y) = -α^{x+1}_y

A product of height differences is expanded into arrow monomials, and the
expectation of each monomial is a chain of diagonal (state) and line
operators evaluated between Perron-Frobenius vectors.
"""

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from itertools import product

import numpy as np

from ..utils.limits import Limits
from ..utils.logger import get_logger
from .transfer import EigenSystem, TransferOperators

logger = get_logger("sixvlab.observables")

Face = tuple[int, int]
FacePair = tuple[Face, Face]


class HeightConvention(Enum):
    """Sign of a rightward horizontal height step relative to the crossed α."""

    LEFT_HIGHER = -1
    RIGHT_HIGHER = 1


DEFAULT_CONVENTION = HeightConvention.LEFT_HIGHER


@dataclass(frozen=True, order=True)
class ArrowVar:
    """
    A single arrow variable.

    Attributes:
        kind: ``"h"`` for the horizontal arrow κ^x_row of column state x,
            ``"v"`` for the vertical arrow α^x_row of vertical line x
        x: Column state or line index
        row: Row index modulo L
    """

    kind: str
    x: int
    row: int

    @property
    def first_state(self) -> int:
        """Leftmost column state the variable touches."""
        return self.x if self.kind == "h" else self.x - 1


Monomial = frozenset[ArrowVar]


def height_steps(
    u: Face,
    v: Face,
    L: int,
    convention: HeightConvention = DEFAULT_CONVENTION,
) -> list[tuple[int, ArrowVar]]:
    """
    Decompose h(v) - h(u) into signed unit steps.

    The path runs horizontally along row y(u) first, then vertically along
    column x(v). Rows are taken modulo L.

    Args:
        u: Start face
        v: End face
        L: Circumference
        convention: Horizontal sign convention

    Returns:
        List of (sign, arrow) with h(v) - h(u) = Σ sign·arrow
    """
    (x0, y0), (x1, y1) = u, v
    s = convention.value
    steps: list[tuple[int, ArrowVar]] = []
    if x1 >= x0:
        for x in range(x0, x1):
            steps.append((s, ArrowVar("v", x + 1, y0 % L)))
    else:
        for x in range(x0 - 1, x1 - 1, -1):
            steps.append((-s, ArrowVar("v", x + 1, y0 % L)))
    if y1 >= y0:
        for y in range(y0, y1):
            steps.append((1, ArrowVar("h", x1, (y + 1) % L)))
    else:
        for y in range(y0 - 1, y1 - 1, -1):
            steps.append((-1, ArrowVar("h", x1, (y + 1) % L)))
    return steps


def expand_height_product(
    pairs: Sequence[FacePair],
    L: int,
    convention: HeightConvention = DEFAULT_CONVENTION,
) -> dict[Monomial, float]:
    """
    Expand Π_i (h(u_i') - h(u_i)) into arrow monomials.

    Arrows square to one, so each monomial keeps the variables of odd
    multiplicity only.

    Returns:
        Mapping monomial -> coefficient, zero coefficients dropped
    """
    expansions = [height_steps(u, v, L, convention) for u, v in pairs]
    if any(not e for e in expansions):
        return {}
    terms: dict[Monomial, float] = {}
    for choice in product(*expansions):
        coeff = 1
        counts: Counter[ArrowVar] = Counter()
        for sign, var in choice:
            coeff *= sign
            counts[var] += 1
        mono = frozenset(var for var, k in counts.items() if k % 2)
        terms[mono] = terms.get(mono, 0) + coeff
    return {m: float(c) for m, c in terms.items() if c != 0}


def _group(monomial: Monomial) -> tuple[dict[int, list[int]], dict[int, list[int]]]:
    states: dict[int, list[int]] = {}
    lines: dict[int, list[int]] = {}
    for var in monomial:
        target = states if var.kind == "h" else lines
        target.setdefault(var.x, []).append(var.row)
    return states, lines


class ChainEvaluator:
    """
    Cylinder expectations of arrow monomials.

    The expectation is v_0ᵀ (chain) v_0 where the chain multiplies, from
    left to right, the diagonal operators of the column states and
    t/λ_0 or the vertical-arrow operator /λ_0 for each line in between.
    Results are cached per horizontally translated monomial.
    """

    def __init__(self, system: EigenSystem):
        self.system = system
        self.ops: TransferOperators = system.operators
        self.v0 = system.v0
        self.lam0 = system.lam0
        self._cache: dict[Monomial, float] = {}
        self.logger = get_logger("sixvlab.chain")

    def _normalized(self, monomial: Monomial) -> Monomial:
        shift = min(var.first_state for var in monomial)
        return frozenset(ArrowVar(v.kind, v.x - shift, v.row) for v in monomial)

    def propagate(
        self,
        vec: np.ndarray,
        monomial: Monomial,
        start: int,
        stop: int,
        include_start: bool = True,
    ) -> np.ndarray:
        """
        Move a left vector from column state ``start`` to ``stop`` through
        the operators of ``monomial``.

        Args:
            vec: Vector living at state ``start``
            monomial: Arrow variables; those outside [start, stop] are ignored
            start: First column state
            stop: Last column state (>= start)
            include_start: Whether to apply the diagonal operator at ``start``

        Returns:
            Vector at state ``stop`` (all diagonal operators applied)
        """
        states, lines = _group(monomial)
        out = np.array(vec, dtype=np.float64)
        if include_start and start in states:
            out = out * self.ops.diagonal(states[start])
        for x in range(start + 1, stop + 1):
            out = self.ops.line(lines.get(x, ())) @ out / self.lam0
            if x in states:
                out = out * self.ops.diagonal(states[x])
        return out

    def propagate_back(
        self, vec: np.ndarray, monomial: Monomial, start: int, stop: int
    ) -> np.ndarray:
        """
        Transposed chain: move a right vector from state ``start`` down to
        ``stop`` (< start), applying diagonal operators at both ends.
        """
        states, lines = _group(monomial)
        out = np.array(vec, dtype=np.float64)
        if start in states:
            out = out * self.ops.diagonal(states[start])
        for x in range(start, stop, -1):
            out = self.ops.line(lines.get(x, ())).T @ out / self.lam0
            if x - 1 in states:
                out = out * self.ops.diagonal(states[x - 1])
        return out

    def expectation(self, monomial: Monomial) -> float:
        """Cylinder expectation of a product of arrows."""
        if not monomial:
            return 1.0
        key = self._normalized(monomial)
        if key not in self._cache:
            start = min(v.first_state for v in key)
            stop = max(v.x for v in key)
            vec = self.propagate(self.v0, key, start, stop)
            self._cache[key] = float(self.v0 @ vec)
        return self._cache[key]

    def height_product(
        self,
        pairs: Sequence[FacePair],
        convention: HeightConvention = DEFAULT_CONVENTION,
    ) -> float:
        """E[Π_i (h(u_i') - h(u_i))] on the infinite cylinder."""
        terms = expand_height_product(pairs, self.system.L, convention)
        return float(sum(c * self.expectation(m) for m, c in terms.items()))

    def cache_size(self) -> int:
        return len(self._cache)


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class SlabObservable:
    """
    Product of height differences between faces of a slab of ``width``
    columns touching the reflection line x = 0.

    Left slabs cover faces with -width <= x <= 0, right slabs faces with
    0 <= x <= width. An empty product is the constant observable 1.
    """

    pairs: tuple[FacePair, ...]
    side: Side
    width: int

    def __post_init__(self):
        Limits.validate_slab_width(self.width)
        lo, hi = (-self.width, 0) if self.side is Side.LEFT else (0, self.width)
        for pair in self.pairs:
            for x, _ in pair:
                if not lo <= x <= hi:
                    raise ValueError(
                        f"Face x={x} lies outside the {self.side.value} slab [{lo}, {hi}]"
                    )

    @classmethod
    def constant(cls, side: Side = Side.LEFT, width: int = 0) -> "SlabObservable":
        return cls(pairs=(), side=side, width=width)

    def reflected(self) -> "SlabObservable":
        """Mirror image under (x, y) -> (-x, y), on the opposite side."""
        pairs = tuple(((-u[0], u[1]), (-v[0], v[1])) for u, v in self.pairs)
        side = Side.RIGHT if self.side is Side.LEFT else Side.LEFT
        return SlabObservable(pairs=pairs, side=side, width=self.width)

    def widened(self, extra: int = 1) -> "SlabObservable":
        return SlabObservable(pairs=self.pairs, side=self.side, width=self.width + extra)

    def translated(self, dx: int) -> tuple[FacePair, ...]:
        """Face pairs moved by dx columns (no longer a slab observable)."""
        return tuple(((u[0] + dx, u[1]), (v[0] + dx, v[1])) for u, v in self.pairs)


def slab_embedding(
    obs: SlabObservable,
    system: EigenSystem,
    convention: HeightConvention = DEFAULT_CONVENTION,
    eigenbasis: bool = False,
    evaluator: ChainEvaluator | None = None,
) -> np.ndarray:
    """
    Embed a slab observable as a vector at column state 0.

    Left observables give ℰ⁻(X) = 𝔒_X v_0 (the chain from state -width to 0
    applied to v_0); right observables give ℰ⁺(Y) = (v_0ᵀ 𝔒_Y)ᵀ through the
    transposed chain from state width down to 0. Both include their state-0
    diagonal operators, so that E[X·τ_k Y] = ℰ⁺(Y)ᵀ (t/λ_0)^k ℰ⁻(X).

    Args:
        obs: Slab observable
        system: EigenSystem of the cylinder
        convention: Height sign convention
        eigenbasis: Return coordinates V† ℰ in the joint eigenbasis instead of
            configuration-basis entries
        evaluator: Chain evaluator to reuse

    Returns:
        Real vector in the configuration basis, or complex coordinates in the
        eigenbasis
    """
    chain = evaluator or ChainEvaluator(system)
    terms = expand_height_product(obs.pairs, system.L, convention)

    vec = np.zeros(system.n)
    for mono, coeff in terms.items():
        if obs.side is Side.LEFT:
            vec += coeff * chain.propagate(system.v0, mono, -obs.width, 0)
        else:
            vec += coeff * chain.propagate_back(system.v0, mono, obs.width, 0)

    if eigenbasis:
        return system.vectors.conj().T @ vec
    return vec
