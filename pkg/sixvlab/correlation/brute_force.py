"""
Exact torus oracles.

``torus_brute_force`` enumerates arrow configurations of the M x L torus
directly and reads heights off the geometry of the arrows, with no use of
transfer operators. ``torus_trace_expectation`` computes the same
expectations as traces of operator chains on the balanced sector. Agreement
of the two fixes the sign convention of horizontal height steps.
"""

import math
from collections.abc import Callable, Sequence
from functools import lru_cache
from itertools import product

import numpy as np
from scipy import linalg

from ..basis.basis import enumerate_balanced
from ..transfer.observables import (
    ArrowVar,
    FacePair,
    HeightConvention,
    expand_height_product,
)
from ..transfer.params import ModelParams
from ..transfer.transfer import TransferOperators, build_operators
from ..utils.errors import MethodDisagreementError
from ..utils.limits import Limits
from ..utils.logger import get_logger

logger = get_logger("sixvlab.brute_force")

# Observable on a torus configuration: kappas[x] is column state x, alphas[k]
# is vertical line k, which sits between states k-1 and k (indices mod M).
TorusObservable = Callable[[np.ndarray, np.ndarray], float]

CALIBRATION_PAIRS: tuple[FacePair, ...] = (((0, 0), (1, 1)), ((0, 0), (1, 1)))


@lru_cache(maxsize=4096)
def _line_choices(kappa: tuple[int, ...], kappa_prime: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    """All vertical lines α compatible with the ice rule between two columns."""
    L = len(kappa)
    found = []
    for alpha in product((1, -1), repeat=L):
        if all(
            kappa[j] + alpha[j - 1] == kappa_prime[j] + alpha[j] for j in range(L)
        ):
            found.append(alpha)
    return tuple(found)


def _crossing_step(arrow: tuple[int, int], move: tuple[int, int]) -> int:
    """Height change when crossing an arrow: +1 when moving onto its left side."""
    cross = arrow[0] * move[1] - arrow[1] * move[0]
    return 1 if cross > 0 else -1


def torus_height_difference(
    u: tuple[int, int], v: tuple[int, int], kappas: np.ndarray, alphas: np.ndarray
) -> int:
    """
    h(v) - h(u) along the path that runs horizontally along row y(u), then
    vertically along column x(v), from the arrow geometry alone.
    """
    M, L = kappas.shape
    (x0, y0), (x1, y1) = u, v
    total = 0
    x = x0
    while x != x1:
        step = 1 if x1 > x else -1
        # the left edge of face (x+1, y0) when moving right, of (x, y0) when moving left
        line = (x + 1) if step == 1 else x
        arrow = (0, int(alphas[line % M, y0 % L]))
        total += _crossing_step(arrow, (step, 0))
        x += step
    y = y0
    while y != y1:
        step = 1 if y1 > y else -1
        row = (y + 1) if step == 1 else y
        arrow = (int(kappas[x1 % M, row % L]), 0)
        total += _crossing_step(arrow, (0, step))
        y += step
    return total


def height_product_observable(pairs: Sequence[FacePair]) -> TorusObservable:
    """Torus observable Π_i (h(v_i) - h(u_i)) for the given face pairs."""
    pairs = tuple(pairs)

    def observable(kappas: np.ndarray, alphas: np.ndarray) -> float:
        return float(
            math.prod(torus_height_difference(u, v, kappas, alphas) for u, v in pairs)
        )

    return observable


def _torus_configurations(M: int, L: int, c: float):
    """Yield (weight, kappas, alphas) over all balanced ice configurations."""
    signs = [tuple(int(s) for s in row) for row in enumerate_balanced(L).signs]
    for states in product(signs, repeat=M):
        weight = 1.0
        per_line = []
        for k in range(M):
            left, right = states[k - 1], states[k]
            choices = _line_choices(left, right)
            if not choices:
                break
            flips = sum(a != b for a, b in zip(left, right, strict=True))
            weight *= c**flips
            per_line.append(choices)
        else:
            kappas = np.array(states, dtype=np.int8)
            for lines in product(*per_line):
                yield weight, kappas, np.array(lines, dtype=np.int8)


def torus_partition_function(M: int, L: int, params: ModelParams) -> float:
    """Weighted count of balanced ice configurations on the M x L torus."""
    M, L = Limits.validate_torus(M, L)
    return float(sum(w for w, _, _ in _torus_configurations(M, L, params.c)))


def torus_brute_force(
    M: int,
    L: int,
    params: ModelParams,
    observable: TorusObservable | Sequence[FacePair] | None = None,
    zero_winding: bool = False,
) -> float:
    """
    Exact expectation on the M x L torus conditioned on balanced columns.

    Args:
        M: Number of columns
        L: Circumference (rows)
        params: Model parameters
        observable: A callable on (kappas, alphas), face pairs for a product
            of height differences, or None for the constant 1
        zero_winding: Also require zero horizontal height winding, the
            sector explored by the Monte Carlo sampler on a torus

    Returns:
        Σ weight·observable / Σ weight

    Raises:
        CapExceededError: If the torus is above the enumeration caps
    """
    M, L = Limits.validate_torus(M, L)
    if observable is None:
        func: TorusObservable = lambda kappas, alphas: 1.0  # noqa: E731
    elif callable(observable):
        func = observable
    else:
        func = height_product_observable(observable)

    z = 0.0
    acc = 0.0
    count = 0
    for weight, kappas, alphas in _torus_configurations(M, L, params.c):
        if zero_winding and int(alphas[:, 0].sum()) != 0:
            continue
        z += weight
        acc += weight * func(kappas, alphas)
        count += 1
    logger.debug(f"Brute force on {M}x{L} torus: {count} configurations, Z={z:.12g}")
    return acc / z


def _reduce_mod(monomial, M: int) -> frozenset[ArrowVar]:
    odd: dict[ArrowVar, int] = {}
    for var in monomial:
        key = ArrowVar(var.kind, var.x % M, var.row)
        odd[key] = odd.get(key, 0) ^ 1
    return frozenset(k for k, parity in odd.items() if parity)


def torus_trace_expectation(
    M: int,
    L: int,
    params: ModelParams,
    pairs: Sequence[FacePair] = (),
    convention: HeightConvention = HeightConvention.LEFT_HIGHER,
    operators: TransferOperators | None = None,
) -> float:
    """
    Torus expectation of a height product as Tr(chain)/Tr(t^M).

    Lines are normalized by the top eigenvalue of t so that large M stays
    finite; as M grows the value converges to the cylinder expectation.

    Args:
        M: Number of columns (any M >= 1, no enumeration cap)
        L: Circumference
        params: Model parameters
        pairs: Face pairs of the height product
        convention: Horizontal step sign convention
        operators: Pre-built operators to reuse

    Returns:
        Exact finite-M expectation
    """
    if M < 1:
        raise ValueError(f"M must be positive, got {M}")
    ops = operators or build_operators(L, params)
    lam0 = float(linalg.eigvalsh(ops.t)[-1])

    def trace_of(monomial: frozenset[ArrowVar]) -> float:
        states: dict[int, list[int]] = {}
        lines: dict[int, list[int]] = {}
        for var in monomial:
            (states if var.kind == "h" else lines).setdefault(var.x, []).append(var.row)
        mat = np.diag(ops.diagonal(states.get(0, ())))
        for x in range(1, M):
            mat = ops.line(lines.get(x, ())) @ mat / lam0
            mat = ops.diagonal(states.get(x, ()))[:, None] * mat
        mat = ops.line(lines.get(0, ())) @ mat / lam0
        return float(np.trace(mat))

    terms = expand_height_product(pairs, L, convention) if pairs else {frozenset(): 1.0}
    reduced: dict[frozenset[ArrowVar], float] = {}
    for mono, coeff in terms.items():
        key = _reduce_mod(mono, M)
        reduced[key] = reduced.get(key, 0.0) + coeff
    z = trace_of(frozenset())
    return sum(coeff * trace_of(mono) for mono, coeff in reduced.items() if coeff) / z


def calibrate_height_convention(
    M: int = 4, L: int = 4, params: ModelParams | None = None, tol: float = 1e-10
) -> HeightConvention:
    """
    Pick the horizontal step sign under which operator chains reproduce the
    brute-force torus.

    Raises:
        MethodDisagreementError: If no convention or both conventions match
    """
    params = params or ModelParams(c=math.sqrt(3))
    reference = torus_brute_force(M, L, params, CALIBRATION_PAIRS)
    ops = build_operators(L, params)
    matches = []
    for convention in HeightConvention:
        value = torus_trace_expectation(M, L, params, CALIBRATION_PAIRS, convention, ops)
        logger.debug(f"{convention.name}: chain {value:.15g}, brute force {reference:.15g}")
        if abs(value - reference) <= tol * max(1.0, abs(reference)):
            matches.append(convention)
    if len(matches) != 1:
        msg = f"Height convention calibration matched {[m.name for m in matches]}"
        logger.error(msg)
        raise MethodDisagreementError(msg)
    logger.info(f"Height convention calibrated: {matches[0].name}")
    return matches[0]
