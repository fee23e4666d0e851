"""
Two-point height correlators on the cylinder: the spectral formula and the
direct operator chain.
"""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..spectral.spectral import SpectralMeasure
from ..transfer.observables import DEFAULT_CONVENTION, ChainEvaluator, HeightConvention
from ..transfer.transfer import EigenSystem
from ..utils.errors import InvariantViolationError
from ..utils.logger import get_logger

logger = get_logger("sixvlab.correlation")


class Method(Enum):
    SPECTRAL = "spectral"
    DIRECT = "direct"
    BRUTE = "brute"
    GFF = "gff"
    MC = "mc"


@dataclass(frozen=True)
class PointQuad:
    """
    Points u_1, u_1', ..., u_k, u_k' (integer faces or plane points).

    The steps are (x_i, y_i) = u_i' - u_i and (x_i', y_i') = u_{i+1} - u_i'.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.points) == 0 or len(self.points) % 2:
            raise ValueError(f"A quad needs an even, positive number of points, got {len(self.points)}")
        object.__setattr__(self, "points", tuple(tuple(p) for p in self.points))

    @classmethod
    def of(cls, *points) -> "PointQuad":
        return cls(tuple(points))

    @property
    def k(self) -> int:
        return len(self.points) // 2

    @property
    def pairs(self) -> list[tuple[tuple, tuple]]:
        return [(self.points[2 * i], self.points[2 * i + 1]) for i in range(self.k)]

    @property
    def steps(self) -> list[tuple[float, float]]:
        """(x_i, y_i) = u_i' - u_i."""
        return [(v[0] - u[0], v[1] - u[1]) for u, v in self.pairs]

    @property
    def gaps(self) -> list[tuple[float, float]]:
        """(x_i', y_i') = u_{i+1} - u_i', for i < k."""
        pairs = self.pairs
        return [
            (pairs[i + 1][0][0] - pairs[i][1][0], pairs[i + 1][0][1] - pairs[i][1][1])
            for i in range(self.k - 1)
        ]

    @property
    def is_integer(self) -> bool:
        return all(float(c).is_integer() for p in self.points for c in p)

    @property
    def is_horizontally_ordered(self) -> bool:
        return all(x >= 0 for x, _ in self.steps) and all(x >= 0 for x, _ in self.gaps)

    def swapped(self, i: int) -> "PointQuad":
        """Exchange u_i and u_i' (negates the correlator)."""
        pts = list(self.points)
        pts[2 * i], pts[2 * i + 1] = pts[2 * i + 1], pts[2 * i]
        return PointQuad(tuple(pts))

    def permuted(self, order: Sequence[int]) -> "PointQuad":
        """Reorder the pairs."""
        pairs = self.pairs
        return PointQuad(tuple(p for i in order for p in pairs[i]))

    def face_pairs(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        if not self.is_integer:
            raise ValueError(f"Quad {self.points} is not on the lattice")
        return [
            ((int(u[0]), int(u[1])), (int(v[0]), int(v[1]))) for u, v in self.pairs
        ]


@dataclass
class CorrelatorValue:
    """One correlator evaluation, as written to result files."""

    value: float
    method: Method
    quad: PointQuad
    L: int | None = None
    c: float | None = None
    stderr: float | None = None

    def to_row(self) -> dict:
        row = {"method": self.method.value, "L": self.L, "c": self.c}
        for i, (x, y) in enumerate(self.quad.points):
            row[f"x{i}"] = x
            row[f"y{i}"] = y
        row["value"] = self.value
        row["stderr"] = self.stderr
        return row


def chi_discrete(quad: PointQuad, a, b):
    """
    Spectral kernel of the two-point function,

        ((1-a)^{x_2} e^{-iby_2} - 1) (1-a)^{x_1'} e^{-iby_1'} (1 - (1-a)^{x_1} e^{-iby_1}).

    Vectorized over ``a`` and ``b``.

    Raises:
        ValueError: If the quad does not have exactly two pairs
    """
    if quad.k != 2:
        raise ValueError(f"χ is defined for two pairs, got {quad.k}")
    (x1, y1), (x2, y2) = quad.steps
    ((x1p, y1p),) = quad.gaps
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    r = 1.0 - a
    first = r**x2 * np.exp(-1j * b * y2) - 1.0
    middle = r**x1p * np.exp(-1j * b * y1p)
    last = 1.0 - r**x1 * np.exp(-1j * b * y1)
    return first * middle * last


def _check_spectral_quad(quad: PointQuad) -> None:
    if quad.k != 2:
        raise ValueError(f"Two-point correlators need two pairs, got {quad.k}")
    if not quad.is_integer:
        raise ValueError(f"Quad {quad.points} is not on the lattice")
    if not quad.is_horizontally_ordered:
        raise ValueError(
            f"Spectral formula requires a horizontally ordered quad, got {quad.points}"
        )


def cylinder_two_point_spectral(
    measure: SpectralMeasure, quad: PointQuad, tol: float = 1e-10
) -> float:
    """
    Φ_{C_L,2}(u) = ∫ χ_u(a, b) dμ_L(a, b).

    Args:
        measure: Spectral measure of the cylinder
        quad: Horizontally ordered integer quad with two pairs
        tol: Allowed imaginary part, relative to max(1, |value|)

    Returns:
        Real correlator value

    Raises:
        ValueError: If the quad is not horizontally ordered or not integral
        InvariantViolationError: If the imaginary part is not negligible
    """
    _check_spectral_quad(quad)
    if len(measure) == 0:
        return 0.0
    value = complex(np.sum(measure.weight * chi_discrete(quad, measure.a, measure.b)))
    if abs(value.imag) > tol * max(1.0, abs(value.real)):
        raise InvariantViolationError(
            f"Spectral correlator has imaginary part {value.imag:.3e} for {quad.points}"
        )
    return value.real


def cylinder_two_point_direct(
    system: EigenSystem,
    quad: PointQuad,
    convention: HeightConvention = DEFAULT_CONVENTION,
    evaluator: ChainEvaluator | None = None,
) -> float:
    """
    E[Π_i (h(u_i') - h(u_i))] on the infinite cylinder through operator chains.

    Each height difference is split into unit arrow steps and every arrow
    monomial is evaluated as v_0ᵀ (chain) v_0.
    """
    chain = evaluator or ChainEvaluator(system)
    return chain.height_product(quad.face_pairs(), convention)


def regularity_families(
    measure: SpectralMeasure,
    ks: Iterable[int],
    ells: Iterable[int] = (1, 2),
) -> list[dict]:
    """
    Cylinder correlators of the two regularity families.

    ``collinear`` rows hold Φ((0,0),(k,0),(2k,0),(3k,0)); ``rectangle`` rows
    hold Φ((0,0),(0,ℓ),(k,0),(k,ℓ)) together with whether (k, ℓ) lies in
    the range 0 < ℓ <= min(8k, L/2) where its decay bound applies.
    """
    rows = []
    ks = list(ks)
    for k in ks:
        quad = PointQuad.of((0, 0), (k, 0), (2 * k, 0), (3 * k, 0))
        rows.append(
            {
                "family": "collinear",
                "L": measure.L,
                "k": k,
                "ell": 0,
                "value": cylinder_two_point_spectral(measure, quad),
                "in_range": True,
            }
        )
    for ell in ells:
        for k in ks:
            quad = PointQuad.of((0, 0), (0, ell), (k, 0), (k, ell))
            rows.append(
                {
                    "family": "rectangle",
                    "L": measure.L,
                    "k": k,
                    "ell": ell,
                    "value": cylinder_two_point_spectral(measure, quad),
                    "in_range": 0 < ell <= min(8 * k, measure.L // 2),
                }
            )
    logger.debug(f"Regularity families at L={measure.L}: {len(rows)} rows")
    return rows
