"""
Heat-bath dynamics for six-vertex height functions.

The target law gives a height function h the weight c^{#A(h)}, where A(h)
is the set of agreement diagonals (diagonal neighbours of equal height).
A face can only move when its four adjacent faces share one value m; it then
picks m + 1 or m - 1 according to how many of its diagonal neighbours sit
at each candidate.
"""

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real

import numpy as np

from ..transfer.params import ModelParams
from ..utils.errors import CapExceededError, InvariantViolationError
from ..utils.limits import Limits
from ..utils.logger import get_logger
from .geometry import OUTSIDE, Face, Geometry

logger = get_logger("sixvlab.sampler")


@dataclass
class HeightField:
    """
    Integer height per face of a geometry.

    Attributes:
        geometry: Faces and adjacency
        heights: (N,) heights indexed like ``geometry.faces``
        seed: Entropy of the generator that produced the field, if any
        sweeps: Number of sweeps performed so far
    """

    geometry: Geometry
    heights: np.ndarray
    seed: int | None = None
    sweeps: int = 0

    @classmethod
    def flat(cls, geometry: Geometry, seed: int | None = None) -> "HeightField":
        """The 0/1 field: 0 on even faces, 1 on odd faces."""
        return cls(geometry, (~geometry.is_even).astype(np.int64), seed=seed)

    def __getitem__(self, face: Face) -> int:
        return int(self.heights[self.geometry.locate(face)])

    def difference(self, u: Face, v: Face) -> int:
        """h(v) - h(u)."""
        return self[v] - self[u]

    def copy(self) -> "HeightField":
        return HeightField(self.geometry, self.heights.copy(), self.seed, self.sweeps)

    def as_grid(self, fill: int = 0) -> np.ndarray:
        """Heights on the bounding box, ``fill`` outside the geometry."""
        grid = np.full(self.geometry.shape, fill, dtype=np.int64)
        xs, ys = self.geometry.faces.T
        grid[xs, ys] = self.heights
        return grid

    def agreement_count(self) -> int:
        """#A(h), counting every diagonal edge of the geometry once."""
        diag = self.geometry.diagonals
        valid = diag != OUTSIDE
        other = self.heights[np.where(valid, diag, 0)]
        return int(np.sum(valid & (other == self.heights[:, None]))) // 2

    def validate(self) -> None:
        """
        Check that the field is a height function on its geometry.

        Raises:
            InvariantViolationError: On a parity mismatch, a step other than
                ±1 between adjacent faces, or a nonzero boundary value
        """
        geo = self.geometry
        if np.any((self.heights % 2 == 0) != geo.is_even):
            raise InvariantViolationError("Height parity does not match face parity")
        nb = geo.neighbors
        valid = nb != OUTSIDE
        steps = np.abs(self.heights[np.where(valid, nb, 0)] - self.heights[:, None])
        if np.any(valid & (steps != 1)):
            raise InvariantViolationError("Adjacent faces differ by more than one")
        if np.any(self.heights[geo.fixed] != 0):
            raise InvariantViolationError("Boundary circuit is not at height 0")


def heat_bath_probability(n_plus: int, n_minus: int, c: Real) -> Real:
    """
    Probability that a movable face picks m + 1.

    Exact when ``c`` is an int or a Fraction.

    Args:
        n_plus: Diagonal neighbours currently at m + 1
        n_minus: Diagonal neighbours currently at m - 1
        c: Vertex weight

    Returns:
        c^{n₊} / (c^{n₊} + c^{n₋})
    """
    if isinstance(c, int):
        c = Fraction(c)
    up, down = c**n_plus, c**n_minus
    return up / (up + down)


class HeatBathSampler:
    """
    Sweeps the four face sublattices in turn, updating each one at once.

    Faces in one sublattice are neither adjacent nor diagonal, so their
    conditional laws do not interact.
    """

    def __init__(self, geometry: Geometry, params: ModelParams, rng: np.random.Generator):
        self.logger = get_logger("sixvlab.sampler")
        self.geometry = geometry
        self.params = params
        self.rng = rng
        self._classes = [cls for cls in geometry.sublattices() if len(cls)]

    def _update(self, h: np.ndarray, idx: np.ndarray) -> None:
        geo = self.geometry
        nb = h[geo.neighbors[idx]]
        m = nb[:, 0]
        movable = np.all(nb == m[:, None], axis=1)
        if not movable.any():
            return
        idx, m = idx[movable], m[movable]

        diag = geo.diagonals[idx]
        valid = diag != OUTSIDE
        dh = h[np.where(valid, diag, 0)]
        n_plus = np.sum(valid & (dh == (m + 1)[:, None]), axis=1)
        n_minus = np.sum(valid & (dh == (m - 1)[:, None]), axis=1)
        up = self.params.c**n_plus
        p = up / (up + self.params.c**n_minus)

        h[idx] = np.where(self.rng.random(len(idx)) < p, m + 1, m - 1)

    def sweep(self, hf: HeightField, n: int = 1) -> HeightField:
        """Run ``n`` sweeps in place."""
        for _ in range(n):
            for cls in self._classes:
                self._update(hf.heights, cls)
        hf.sweeps += n
        return hf


def heat_bath_sampler(
    geometry: Geometry,
    params: ModelParams,
    sweeps: int,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
    start: HeightField | None = None,
) -> HeightField:
    """
    Run the heat bath from the flat field (or ``start``).

    Args:
        geometry: Even domain or torus
        params: Model parameters (any c > 0)
        sweeps: Number of full sweeps
        seed: Seed for a Philox generator, ignored when ``rng`` is given
        rng: Generator to draw from
        start: Initial field, copied

    Returns:
        The field after ``sweeps`` sweeps
    """
    if sweeps < 0:
        raise ValueError(f"sweeps must be nonnegative, got {sweeps}")
    if rng is None:
        rng = np.random.Generator(np.random.Philox(seed))
    hf = start.copy() if start is not None else HeightField.flat(geometry, seed=seed)
    HeatBathSampler(geometry, params, rng).sweep(hf, sweeps)
    logger.debug(f"Heat bath: {sweeps} sweeps on {geometry.kind.value} {geometry.shape}")
    return hf


@dataclass
class ExactHeightDistribution:
    """
    Law of the height function on a small even domain, by enumeration.

    Attributes:
        geometry: The domain
        c: Vertex weight
        configurations: (K, N) every admissible height function
        probabilities: (K,) normalized weights c^{#A(h)} / Z
        partition_function: Z
    """

    geometry: Geometry
    c: float
    configurations: np.ndarray
    probabilities: np.ndarray
    partition_function: float
    _cache: dict = field(default_factory=dict, repr=False)

    def marginal(self, face: Face) -> dict[int, float]:
        """Distribution of h at one face."""
        i = self.geometry.locate(face)
        if i not in self._cache:
            values = self.configurations[:, i]
            self._cache[i] = {
                int(v): float(self.probabilities[values == v].sum()) for v in np.unique(values)
            }
        return self._cache[i]

    def expectation(self, face_pairs) -> float:
        """E[Π (h(v) - h(u))] over the given face pairs."""
        prod = np.ones(len(self.probabilities))
        for u, v in face_pairs:
            i, j = self.geometry.locate(u), self.geometry.locate(v)
            prod *= self.configurations[:, j] - self.configurations[:, i]
        return float(prod @ self.probabilities)


def _enumeration_order(geometry: Geometry) -> list[int]:
    seen = set(geometry.circuit)
    order: list[int] = []
    queue = deque(geometry.circuit)
    while queue:
        i = queue.popleft()
        for j in geometry.neighbors[i]:
            if j != OUTSIDE and j not in seen:
                seen.add(j)
                order.append(int(j))
                queue.append(int(j))
    return order


def exact_height_distribution(geometry: Geometry, params: ModelParams) -> ExactHeightDistribution:
    """
    Enumerate all height functions that vanish on the boundary circuit.

    Raises:
        ValueError: On a torus
        CapExceededError: If there are more free faces than ``Limits.MAX_EXACT_FACES``
    """
    if geometry.is_torus:
        raise ValueError("Exact enumeration needs an even domain")
    order = _enumeration_order(geometry)
    if len(order) > Limits.MAX_EXACT_FACES:
        raise CapExceededError(
            f"{len(order)} free faces exceed the enumeration cap {Limits.MAX_EXACT_FACES}"
        )

    h = np.zeros(geometry.n_faces, dtype=np.int64)
    assigned = np.zeros(geometry.n_faces, dtype=bool)
    assigned[list(geometry.circuit)] = True
    found: list[np.ndarray] = []

    def extend(pos: int) -> None:
        if pos == len(order):
            found.append(h.copy())
            return
        i = order[pos]
        known = [int(h[j]) for j in geometry.neighbors[i] if j != OUTSIDE and assigned[j]]
        for value in (known[0] - 1, known[0] + 1):
            if all(abs(value - k) == 1 for k in known):
                h[i] = value
                assigned[i] = True
                extend(pos + 1)
                assigned[i] = False

    extend(0)
    configs = np.array(found, dtype=np.int64)
    counts = np.array(
        [HeightField(geometry, row).agreement_count() for row in configs], dtype=np.float64
    )
    # shift by the minimum count before exponentiating
    weights = params.c ** (counts - counts.min())
    z = float(weights.sum())
    logger.info(f"Enumerated {len(configs)} height functions on {len(order)} free faces")
    return ExactHeightDistribution(
        geometry=geometry,
        c=params.c,
        configurations=configs,
        probabilities=weights / z,
        partition_function=z * params.c ** counts.min(),
    )
