"""
Face geometries for height-function sampling.

Faces are addressed by their integer centres (x, y); a face is even when
x + y is even. Each lattice vertex is the corner shared by the 2x2 block of
faces whose lower-left member is (cx, cy). Its two diagonals join the even
pair and the odd pair of that block and are dual to each other.
"""

import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..utils.errors import InvariantViolationError
from ..utils.logger import get_logger
from ..utils.union_find import UnionFind

logger = get_logger("sixvlab.geometry")

Face = tuple[int, int]

NEIGHBOR_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))
DIAGONAL_STEPS = ((1, 1), (-1, 1), (1, -1), (-1, -1))
OUTSIDE = -1
OUTER = "outer"

# Sublattices updated together: no two faces of a class are adjacent or diagonal.
SUBLATTICE_ORDER = ((0, 0), (1, 1), (0, 1), (1, 0))


class GeometryKind(Enum):
    EVEN_DOMAIN = "even_domain"
    TORUS = "torus"


def _corner(face: Face, step: tuple[int, int]) -> Face:
    """Lower-left face of the block whose corner a diagonal step crosses."""
    return (face[0] + min(step[0], 0), face[1] + min(step[1], 0))


@dataclass(eq=False)
class Geometry:
    """
    Faces, adjacency tables and diagonal edges of an even domain or a torus.

    Attributes:
        kind: Even domain or torus
        shape: Bounding box (W + 1, H + 1) of the domain, or (M, L)
        faces: (N, 2) integer face centres
        fixed: Faces pinned at height 0 (the boundary circuit)
        neighbors: (N, 4) indices of the adjacent faces, ``OUTSIDE`` if absent
        diagonals: (N, 4) indices of diagonal neighbours joined by an edge of
            the geometry, ``OUTSIDE`` otherwise
        even_edges: (E, 2) endpoints of the even diagonal edges
        edge_duals: (E, 2) endpoints of the dual odd edges, ``OUTSIDE`` when
            the dual edge leaves the geometry
        boundary_edges: (E,) mask of the edges on the boundary circuit
        circuit: Boundary circuit as face indices, in order
    """

    kind: GeometryKind
    shape: tuple[int, int]
    faces: np.ndarray
    fixed: np.ndarray
    neighbors: np.ndarray
    diagonals: np.ndarray
    even_edges: np.ndarray
    edge_duals: np.ndarray
    boundary_edges: np.ndarray
    circuit: tuple[int, ...]
    index: dict[Face, int] = field(repr=False)
    odd_links: tuple[tuple[int, int, int], ...] = field(repr=False)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.even_edges)

    @property
    def is_torus(self) -> bool:
        return self.kind is GeometryKind.TORUS

    @property
    def is_even(self) -> np.ndarray:
        return (self.faces.sum(axis=1) % 2) == 0

    @property
    def free_faces(self) -> np.ndarray:
        return np.flatnonzero(~self.fixed)

    @property
    def odd_faces(self) -> np.ndarray:
        return np.flatnonzero(~self.is_even)

    def sublattices(self) -> list[np.ndarray]:
        """Free faces split into the four classes updated simultaneously."""
        free = self.free_faces
        xs, ys = self.faces[free, 0] % 2, self.faces[free, 1] % 2
        return [free[(xs == a) & (ys == b)] for a, b in SUBLATTICE_ORDER]

    def normalize(self, face: Iterable[int]) -> Face:
        x, y = (int(v) for v in face)
        if self.is_torus:
            return (x % self.shape[0], y % self.shape[1])
        return (x, y)

    def contains(self, face: Iterable[int]) -> bool:
        return self.normalize(face) in self.index

    def locate(self, face: Iterable[int]) -> int:
        """
        Index of a face.

        Raises:
            ValueError: If the face is not part of the geometry
        """
        key = self.normalize(face)
        try:
            return self.index[key]
        except KeyError:
            raise ValueError(f"Face {tuple(face)} is not in the {self.kind.value}") from None

    def boundary_distance(self, face: Iterable[int]) -> float:
        """L∞ distance to the boundary circuit (infinite on a torus)."""
        if self.is_torus or not self.circuit:
            return math.inf
        x, y = self.normalize(face)
        pts = self.faces[list(self.circuit)]
        return float(np.max(np.abs(pts - (x, y)), axis=1).min())

    def odd_cell_components(self, blocked: np.ndarray) -> UnionFind:
        """
        Connected components of the plane minus a set of even edges.

        Each component is labelled through the odd faces it contains; two odd
        faces are joined when the even edge separating them is not blocked.
        On an even domain everything outside the boundary circuit is merged
        into the single element ``OUTER``.

        Args:
            blocked: (E,) mask over ``even_edges``

        Returns:
            UnionFind over odd face indices (and ``OUTER``)
        """
        items: list = self.odd_faces.tolist()
        if not self.is_torus:
            items.append(OUTER)
        uf = UnionFind(items)
        for a, b, edge in self.odd_links:
            if edge != OUTSIDE and blocked[edge]:
                continue
            uf.union(a, OUTER if b == OUTSIDE else b)
        return uf

    def validate(self) -> None:
        """
        Check the structural invariants.

        Raises:
            InvariantViolationError: On a malformed boundary circuit or a free
                face with a missing neighbour
        """
        for i in self.free_faces:
            if np.any(self.neighbors[i] == OUTSIDE):
                raise InvariantViolationError(
                    f"Free face {tuple(self.faces[i])} has a neighbour outside the domain"
                )
        if self.is_torus:
            if any(n % 2 for n in self.shape):
                raise InvariantViolationError(f"Torus dimensions must be even, got {self.shape}")
            return
        if len(set(self.circuit)) != len(self.circuit):
            raise InvariantViolationError("Boundary circuit is not self-avoiding")
        pts = self.faces[list(self.circuit)]
        if np.any(pts.sum(axis=1) % 2):
            raise InvariantViolationError("Boundary circuit contains an odd face")
        steps = np.abs(np.roll(pts, -1, axis=0) - pts)
        if np.any(steps != 1):
            raise InvariantViolationError("Boundary circuit makes a non-diagonal step")


def _build(
    kind: GeometryKind,
    shape: tuple[int, int],
    faces: list[Face],
    circuit: list[Face],
) -> Geometry:
    wrap = shape if kind is GeometryKind.TORUS else None
    index = {f: i for i, f in enumerate(faces)}

    def lookup(x: int, y: int) -> int:
        if wrap:
            x, y = x % wrap[0], y % wrap[1]
        return index.get((x, y), OUTSIDE)

    def norm(face: Face) -> Face:
        return (face[0] % wrap[0], face[1] % wrap[1]) if wrap else face

    n = len(faces)
    circuit_idx = tuple(index[f] for f in circuit)
    fixed = np.zeros(n, dtype=bool)
    fixed[list(circuit_idx)] = True
    circuit_pairs = {
        frozenset((circuit_idx[i], circuit_idx[(i + 1) % len(circuit_idx)]))
        for i in range(len(circuit_idx))
    }

    neighbors = np.array(
        [[lookup(x + dx, y + dy) for dx, dy in NEIGHBOR_STEPS] for x, y in faces],
        dtype=np.int64,
    ).reshape(n, 4)

    edges: list[tuple[int, int]] = []
    duals: list[tuple[int, int]] = []
    on_circuit: list[bool] = []
    corner_edge: dict[Face, int] = {}
    for i, (x, y) in enumerate(faces):
        if (x + y) % 2:
            continue
        for step in ((1, 1), (-1, 1)):
            j = lookup(x + step[0], y + step[1])
            if j == OUTSIDE:
                continue
            pair = frozenset((i, j))
            if fixed[i] and fixed[j] and pair not in circuit_pairs:
                continue
            d1, d2 = lookup(x + step[0], y), lookup(x, y + step[1])
            if OUTSIDE in (d1, d2):
                d1 = d2 = OUTSIDE
            corner_edge[norm(_corner((x, y), step))] = len(edges)
            edges.append((i, j))
            duals.append((d1, d2))
            on_circuit.append(pair in circuit_pairs)

    diagonals = np.full((n, 4), OUTSIDE, dtype=np.int64)
    links: list[tuple[int, int, int]] = []
    for i, (x, y) in enumerate(faces):
        even = (x + y) % 2 == 0
        for k, step in enumerate(DIAGONAL_STEPS):
            j = lookup(x + step[0], y + step[1])
            corner = norm(_corner((x, y), step))
            if even:
                if j != OUTSIDE and corner in corner_edge:
                    diagonals[i, k] = j
                continue
            if j != OUTSIDE:
                diagonals[i, k] = j
            if j == OUTSIDE or i < j:
                links.append((i, j, corner_edge.get(corner, OUTSIDE)))

    geometry = Geometry(
        kind=kind,
        shape=shape,
        faces=np.array(faces, dtype=np.int64).reshape(n, 2),
        fixed=fixed,
        neighbors=neighbors,
        diagonals=diagonals,
        even_edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        edge_duals=np.array(duals, dtype=np.int64).reshape(-1, 2),
        boundary_edges=np.array(on_circuit, dtype=bool),
        circuit=circuit_idx,
        index=index,
        odd_links=tuple(links),
    )
    geometry.validate()
    logger.debug(
        f"Built {kind.value} {shape}: {n} faces, {len(edges)} even edges, "
        f"{len(circuit_idx)} boundary faces"
    )
    return geometry


def boundary_circuit(width: int, height: int) -> list[Face]:
    """
    Zigzag circuit of even faces hugging the box [0, width] x [0, height].

    The box corners are cut off, so the circuit turns at (1, 1),
    (width-1, 1), (width-1, height-1) and (1, height-1).
    """
    path: list[Face] = []
    path += [(x, 1 if x % 2 else 0) for x in range(1, width)]
    path += [(width - 1 if y % 2 else width, y) for y in range(2, height)]
    path += [(x, height - 1 if x % 2 else height) for x in range(width - 1, 0, -1)][1:]
    path += [(1 if y % 2 else 0, y) for y in range(height - 2, 1, -1)]
    return path


def even_domain(width: int, height: int) -> Geometry:
    """
    Largest even domain inside the box of faces [0, width] x [0, height].

    Args:
        width: Even box width, at least 4
        height: Even box height, at least 4

    Returns:
        Geometry whose boundary circuit is pinned at height 0

    Raises:
        ValueError: If a side is odd or shorter than 4
    """
    for name, side in (("width", width), ("height", height)):
        if int(side) != side or side < 4 or side % 2:
            raise ValueError(f"Box {name} must be an even integer >= 4, got {side}")
    width, height = int(width), int(height)
    circuit = boundary_circuit(width, height)
    on_circuit = set(circuit)
    inner = [
        (x, y) for x in range(1, width) for y in range(1, height) if (x, y) not in on_circuit
    ]
    return _build(GeometryKind.EVEN_DOMAIN, (width + 1, height + 1), circuit + inner, circuit)


def torus(M: int, L: int) -> Geometry:
    """
    M x L torus of faces.

    Raises:
        ValueError: If M or L is odd or smaller than 2
    """
    for name, side in (("M", M), ("L", L)):
        if int(side) != side or side < 2 or side % 2:
            raise ValueError(f"Torus {name} must be an even integer >= 2, got {side}")
    M, L = int(M), int(L)
    faces = [(x, y) for x in range(M) for y in range(L)]
    return _build(GeometryKind.TORUS, (M, L), faces, [])
